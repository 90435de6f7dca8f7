#pragma once

#include <cstdint>
#include <vector>

#include "laesim/common.hpp"

namespace laesim::rl {

struct MaddpgConfig {
  double gamma = 0.99;
  double tau = 0.005;
  double lr_actor = 1e-4;
  double lr_critic = 1e-3;
  int batch = 128;
  int buffer_capacity = 100000;
  int warmup = 1000;  // transitions before updates start
  double noise_sigma_start = 0.2;
  double noise_sigma_end = 0.02;  // linear decay over the episode budget
  int update_every = 1;           // env steps per update once warmed up
  int episodes = 500;
  std::uint64_t seed = 1;
  std::vector<int> actor_hidden{128, 128};
  std::vector<int> critic_hidden{256, 256};

  void validate() const {
    if (!(gamma >= 0.0 && gamma < 1.0)) throw ValidationError("rl: gamma in [0,1)");
    if (!(tau > 0.0 && tau <= 1.0)) throw ValidationError("rl: tau in (0,1]");
    if (!(lr_actor > 0.0) || !(lr_critic > 0.0)) throw ValidationError("rl: learning rates > 0");
    if (batch < 1) throw ValidationError("rl: batch >= 1");
    if (batch > buffer_capacity) throw ValidationError("rl: batch <= buffer_capacity");
    if (warmup < 0) throw ValidationError("rl: warmup >= 0");
    if (noise_sigma_start < 0.0 || noise_sigma_end < 0.0)
      throw ValidationError("rl: noise sigmas >= 0");
    if (update_every < 1) throw ValidationError("rl: update_every >= 1");
    if (episodes < 1) throw ValidationError("rl: episodes >= 1");
    for (int h : actor_hidden)
      if (h < 1) throw ValidationError("rl: actor hidden sizes >= 1");
    for (int h : critic_hidden)
      if (h < 1) throw ValidationError("rl: critic hidden sizes >= 1");
  }

  bool operator==(const MaddpgConfig& o) const {
    return gamma == o.gamma && tau == o.tau && lr_actor == o.lr_actor &&
           lr_critic == o.lr_critic && batch == o.batch && buffer_capacity == o.buffer_capacity &&
           warmup == o.warmup && noise_sigma_start == o.noise_sigma_start &&
           noise_sigma_end == o.noise_sigma_end && update_every == o.update_every &&
           episodes == o.episodes && seed == o.seed && actor_hidden == o.actor_hidden &&
           critic_hidden == o.critic_hidden;
  }
};

}  // namespace laesim::rl
