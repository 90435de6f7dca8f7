#pragma once

#include <cstdint>
#include <vector>

#include "laesim/rng.hpp"
#include "laesim/scenario.hpp"

namespace laesim::world {

/// Builds the reference scenario: a 1000 x 1000 m densely built urban area on
/// a 5 m grid, ~60 rectangular buildings 20-80 m tall from a seeded draw,
/// 4 delivery agents leaving a shared staging zone, 3 ground radio sites.
/// Staging, targets, and site masts are kept clear of buildings.
inline ScenarioConfig build_reference_scenario(std::uint64_t seed = 42) {
  ScenarioConfig cfg;
  cfg.profile = "delivery";
  cfg.seed = 7;
  cfg.nx = 200;
  cfg.ny = 200;
  cfg.cell_size = 5.0;
  cfg.origin = {0.0, 0.0};

  cfg.mission.start_zone = Box3{20.0, 120.0, 20.0, 120.0, 55.0, 65.0};
  cfg.mission.targets = {Vec3{850.0, 850.0, 60.0}, Vec3{870.0, 480.0, 60.0},
                         Vec3{480.0, 870.0, 60.0}, Vec3{850.0, 140.0, 60.0}};
  cfg.mission.mission_area = Box2{0.0, 1000.0, 0.0, 1000.0};
  cfg.mission.z_min = 10.0;
  cfg.mission.z_max = 150.0;
  cfg.mission.reach_tolerance = 15.0;
  cfg.mission.max_steps = 80;

  cfg.sites = {radio::RadioSite{1, Vec3{300.0, 420.0, 30.0}, 35.0, 5.0},
               radio::RadioSite{2, Vec3{640.0, 700.0, 30.0}, 35.0, 5.0},
               radio::RadioSite{3, Vec3{700.0, 260.0, 30.0}, 35.0, 5.0}};
  cfg.radio_params.fading_seed = 1234;

  // building field, rejected around the staging zone, targets, and masts
  Rng rng(mix_seed({seed, 0x57524c44ull}));  // "WRLD"
  const Box2 keepout_start{0.0, 140.0, 0.0, 140.0};
  auto clear_of = [&](const Building& b) {
    const Box2 fp{b.x_min, b.x_max, b.y_min, b.y_max};
    auto overlaps = [&](const Box2& box, double margin) {
      return fp.x_min < box.x_max + margin && fp.x_max > box.x_min - margin &&
             fp.y_min < box.y_max + margin && fp.y_max > box.y_min - margin;
    };
    if (overlaps(keepout_start, 10.0)) return false;
    for (const auto& t : cfg.mission.targets) {
      if (overlaps(Box2{t.x, t.x, t.y, t.y}, 30.0)) return false;
    }
    for (const auto& s : cfg.sites) {
      if (overlaps(Box2{s.position.x, s.position.x, s.position.y, s.position.y}, 20.0))
        return false;
    }
    return true;
  };
  std::vector<Building> buildings;
  const int target_count = 60;
  int attempts = 0;
  while (static_cast<int>(buildings.size()) < target_count && attempts < 10000) {
    ++attempts;
    const double w = rng.uniform(30.0, 80.0);
    const double h = rng.uniform(30.0, 80.0);
    const double x = rng.uniform(0.0, 1000.0 - w);
    const double y = rng.uniform(0.0, 1000.0 - h);
    const double height = rng.uniform(20.0, 80.0);
    Building b{x, y, x + w, y + h, height};
    if (!clear_of(b)) continue;
    buildings.push_back(b);
  }
  cfg.map = rasterize(buildings, cfg.nx, cfg.ny, cfg.cell_size, cfg.origin);
  cfg.buildings = std::move(buildings);

  cfg.rl.episodes = 2000;
  cfg.rl.seed = 7;

  cfg.validate();
  return cfg;
}

}  // namespace laesim::world
