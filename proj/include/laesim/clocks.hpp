#pragma once

#include <cstdint>

#include "laesim/common.hpp"

namespace laesim::ric {

/// Dual-timescale contract: the Non-RT loop publishes at seconds and above,
/// the Near-RT loop runs inside the 10 ms .. 1 s band.
struct ClockConfig {
  std::int64_t t_a1_ms = 10000;
  std::int64_t t_e2_ms = 100;
  std::int64_t inference_latency_ms = 50;
  std::int64_t control_deadline_ms = 500;

  void validate() const {
    if (t_a1_ms < 1000) throw ValidationError("clocks: t_a1_ms >= 1000");
    if (t_e2_ms < 10 || t_e2_ms > 1000) throw ValidationError("clocks: t_e2_ms in [10, 1000]");
    if (inference_latency_ms < 0) throw ValidationError("clocks: inference_latency_ms >= 0");
    if (control_deadline_ms <= 0) throw ValidationError("clocks: control_deadline_ms > 0");
  }

  bool operator==(const ClockConfig& o) const {
    return t_a1_ms == o.t_a1_ms && t_e2_ms == o.t_e2_ms &&
           inference_latency_ms == o.inference_latency_ms &&
           control_deadline_ms == o.control_deadline_ms;
  }
};

}  // namespace laesim::ric
