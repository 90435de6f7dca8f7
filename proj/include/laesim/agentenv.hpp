#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "laesim/common.hpp"
#include "laesim/radio.hpp"
#include "laesim/semantics.hpp"
#include "laesim/worldmodel.hpp"

namespace laesim::env {

/// Per-tick action bounds: heading turn, climb, travel distance.
inline constexpr double kDHeadingMax = kPi / 4.0;
inline constexpr double kDAltMax = 5.0;
inline constexpr double kDistMax = 20.0;

struct Action {
  double d_heading = 0.0;  // radians in [-pi/4, +pi/4]
  double d_alt = 0.0;      // meters in [-5, +5]
  double dist = 0.0;       // meters in [0, 20]
};

/// Normalized action triple in [-1,1]^3 as emitted by an actor net.
using ActionVec = std::array<double, 3>;

/// Maps a normalized triple onto the physical bounds; tanh(0) lands on the
/// midpoint of each range.
inline Action scale_action(const ActionVec& a) {
  Action out;
  out.d_heading = clamp(a[0], -1.0, 1.0) * kDHeadingMax;
  out.d_alt = clamp(a[1], -1.0, 1.0) * kDAltMax;
  out.dist = (clamp(a[2], -1.0, 1.0) + 1.0) * 0.5 * kDistMax;
  return out;
}

inline ActionVec unscale_action(const Action& a) {
  return {clamp(a.d_heading / kDHeadingMax, -1.0, 1.0), clamp(a.d_alt / kDAltMax, -1.0, 1.0),
          clamp(a.dist / kDistMax * 2.0 - 1.0, -1.0, 1.0)};
}

/// The normalized hold action: no turn, no climb, zero travel.
inline constexpr ActionVec kHoldAction{0.0, 0.0, -1.0};

struct AgentState {
  Vec3 position{};
  double heading = 0.0;  // radians in (-pi, pi]
  bool reached = false;
  bool alive = true;

  bool done() const { return reached || !alive; }
};

struct RewardWeights {
  double w_progress = 1.0;
  double w_sinr = 0.5;
  double w_alt = 0.1;
  double c_col = 5.0;
  double c_obs = 10.0;
  double c_area = 1.0;
  double b_reach = 10.0;
  double c_unreach = 5.0;
  double s_qos_db = 0.0;
  double s_hi_db = 30.0;
  double dist_norm_m = 20.0;

  void validate() const {
    for (double v : {w_progress, w_sinr, w_alt, c_col, c_obs, c_area, b_reach, c_unreach}) {
      if (v < 0.0) throw ValidationError("reward weights: all >= 0");
    }
    if (!(s_hi_db > s_qos_db)) throw ValidationError("reward weights: s_hi > s_qos");
    if (!(dist_norm_m > 0.0)) throw ValidationError("reward weights: dist_norm > 0");
  }

  bool operator==(const RewardWeights& o) const {
    return w_progress == o.w_progress && w_sinr == o.w_sinr && w_alt == o.w_alt &&
           c_col == o.c_col && c_obs == o.c_obs && c_area == o.c_area && b_reach == o.b_reach &&
           c_unreach == o.c_unreach && s_qos_db == o.s_qos_db && s_hi_db == o.s_hi_db &&
           dist_norm_m == o.dist_norm_m;
  }
};

/// Observation layout knobs. Disabling include_sinr removes that entry from
/// the vector; disabling semantics zeroes the patch and the gate flag.
struct ObsParams {
  int patch_k = 5;     // semantic patch is patch_k x patch_k coarse cells
  int neighbors = 3;   // nearest-neighbor slots
  double sinr_lo_db = -20.0;
  double sinr_hi_db = 30.0;
  double h_scale_m = 100.0;        // height normalization for patch features
  double neighbor_range_m = 100.0; // relative-position normalization
  bool include_sinr = true;
  bool semantics_enabled = true;

  void validate() const {
    if (patch_k < 1) throw ValidationError("obs: patch_k >= 1");
    if (neighbors < 0) throw ValidationError("obs: neighbors >= 0");
    if (!(sinr_hi_db > sinr_lo_db)) throw ValidationError("obs: sinr_hi > sinr_lo");
    if (!(h_scale_m > 0.0)) throw ValidationError("obs: h_scale > 0");
    if (!(neighbor_range_m > 0.0)) throw ValidationError("obs: neighbor_range > 0");
  }

  int dim() const { return 3 + 4 + (include_sinr ? 1 : 0) + 1 + patch_k * patch_k * 4 + neighbors * 3; }

  /// Index of the SINR entry when present (after position and target blocks).
  int sinr_index() const { return 7; }

  bool operator==(const ObsParams& o) const {
    return patch_k == o.patch_k && neighbors == o.neighbors && sinr_lo_db == o.sinr_lo_db &&
           sinr_hi_db == o.sinr_hi_db && h_scale_m == o.h_scale_m &&
           neighbor_range_m == o.neighbor_range_m && include_sinr == o.include_sinr &&
           semantics_enabled == o.semantics_enabled;
  }
};

/// Additive reward decomposition; total is the exact component sum.
struct RewardBreakdown {
  double progress = 0.0;
  double sinr = 0.0;
  double collision = 0.0;
  double altitude = 0.0;
  double area = 0.0;
  double obstacle = 0.0;
  double terminal = 0.0;
  double total = 0.0;

  static RewardBreakdown sum(double progress, double sinr, double collision, double altitude,
                             double area, double obstacle, double terminal) {
    RewardBreakdown r;
    r.progress = progress;
    r.sinr = sinr;
    r.collision = collision;
    r.altitude = altitude;
    r.area = area;
    r.obstacle = obstacle;
    r.terminal = terminal;
    r.total = progress + sinr + collision + altitude + area + obstacle + terminal;
    return r;
  }
};

struct StepFlags {
  bool obstacle_strike = false;
  bool separation_violation = false;
  bool reached_now = false;
  bool out_of_area = false;
  bool clamped = false;
  bool truncated = false;
};

struct StepResult {
  RewardBreakdown reward;
  StepFlags flags;
  bool done = false;  // agent-level: reached or dead
};

/// Per-agent reward for one transition. sinr_db is sampled at the new
/// position; flags carry the constraint events of the step.
inline RewardBreakdown reward(const Vec3& prev, const Vec3& next, const Vec3& target,
                              const Action& action, double sinr_db, const StepFlags& flags,
                              const RewardWeights& w) {
  const double dist_prev = distance(prev, target);
  const double dist_next = distance(next, target);
  const double progress = w.w_progress * (dist_prev - dist_next) / w.dist_norm_m;
  const double sinr =
      w.w_sinr * clamp((sinr_db - w.s_qos_db) / (w.s_hi_db - w.s_qos_db), -1.0, 1.0);
  const double collision = flags.separation_violation ? -w.c_col : 0.0;
  const double altitude = -w.w_alt * std::abs(action.d_alt) / kDAltMax;
  const double area = flags.out_of_area ? -w.c_area : 0.0;
  const double obstacle = flags.obstacle_strike ? -w.c_obs : 0.0;
  double terminal = 0.0;
  if (flags.reached_now) terminal += w.b_reach;
  if (flags.truncated) terminal -= w.c_unreach;
  return RewardBreakdown::sum(progress, sinr, collision, altitude, area, obstacle, terminal);
}

struct ActionApplication {
  Vec3 candidate{};
  double heading = 0.0;
  bool clamped = false;
};

/// Turn, then advance dist along the new heading and climb d_alt. Altitude is
/// clamped to the mission band; horizontal motion is never clamped
/// (out-of-area is penalized, not prevented).
inline ActionApplication apply_action(const AgentState& state, const Action& raw, double z_min,
                                      double z_max) {
  Action a;
  a.d_heading = clamp(raw.d_heading, -kDHeadingMax, kDHeadingMax);
  a.d_alt = clamp(raw.d_alt, -kDAltMax, kDAltMax);
  a.dist = clamp(raw.dist, 0.0, kDistMax);
  bool clamped = a.d_heading != raw.d_heading || a.d_alt != raw.d_alt || a.dist != raw.dist;

  ActionApplication out;
  out.heading = wrap_angle(state.heading + a.d_heading);
  out.candidate = state.position;
  out.candidate.x += a.dist * std::cos(out.heading);
  out.candidate.y += a.dist * std::sin(out.heading);
  const double z_raw = state.position.z + a.d_alt;
  out.candidate.z = clamp(z_raw, z_min, z_max);
  if (out.candidate.z != z_raw) clamped = true;
  out.clamped = clamped;
  return out;
}

/// Everything build_observation needs for one agent.
struct ObsContext {
  const world::MissionSpec* mission = nullptr;
  const ObsParams* params = nullptr;
  std::span<const AgentState> states;
  std::span<const radio::SinrSample> sinr;          // latest sample per agent
  const sem::SemanticFeatureMap* a1_map = nullptr;  // latest snapshot, may be null
  const world::WorldMap* map = nullptr;
};

/// Assembles the fixed-layout observation vector for agent i. Every entry is
/// finite and inside [-1, 1].
inline std::vector<double> build_observation(const ObsContext& ctx, int i) {
  const auto& mission = *ctx.mission;
  const auto& p = *ctx.params;
  const auto& self = ctx.states[static_cast<std::size_t>(i)];
  std::vector<double> obs;
  obs.reserve(static_cast<std::size_t>(p.dim()));

  const Box2& area = mission.mission_area;
  const double half_w = 0.5 * area.width();
  const double half_h = 0.5 * area.height();
  obs.push_back(clamp((self.position.x - area.center_x()) / half_w, -1.0, 1.0));
  obs.push_back(clamp((self.position.y - area.center_y()) / half_h, -1.0, 1.0));
  const double z_mid = 0.5 * (mission.z_min + mission.z_max);
  const double z_half = 0.5 * (mission.z_max - mission.z_min);
  obs.push_back(clamp((self.position.z - z_mid) / z_half, -1.0, 1.0));

  const Vec3 target = mission.targets[static_cast<std::size_t>(i)];
  const Vec3 delta = target - self.position;
  const double dist = delta.norm();
  const double diag =
      std::sqrt(area.width() * area.width() + area.height() * area.height() +
                (mission.z_max - mission.z_min) * (mission.z_max - mission.z_min));
  if (self.reached || dist == 0.0) {
    obs.insert(obs.end(), {0.0, 0.0, 0.0, 0.0});
  } else {
    obs.push_back(delta.x / dist);
    obs.push_back(delta.y / dist);
    obs.push_back(delta.z / dist);
    obs.push_back(clamp(dist / diag, 0.0, 1.0));
  }

  if (p.include_sinr) {
    const double s = ctx.sinr[static_cast<std::size_t>(i)].sinr_db;
    obs.push_back(clamp(2.0 * (s - p.sinr_lo_db) / (p.sinr_hi_db - p.sinr_lo_db) - 1.0, -1.0, 1.0));
  }

  // semantic patch around the agent's coarse cell; zeros where gated closed,
  // out of map, or semantics disabled
  const sem::SemanticFeatureMap* fm =
      p.semantics_enabled && ctx.a1_map != nullptr ? ctx.a1_map : nullptr;
  bool any_gate_open = false;
  std::vector<double> patch;
  patch.reserve(static_cast<std::size_t>(p.patch_k) * p.patch_k * 4);
  const int half_k = p.patch_k / 2;
  int ccx = 0, ccy = 0;
  if (fm != nullptr && ctx.map != nullptr) {
    const double coarse_size = ctx.map->cell_size * fm->k;
    ccx = static_cast<int>(std::floor((self.position.x - ctx.map->origin.x) / coarse_size));
    ccy = static_cast<int>(std::floor((self.position.y - ctx.map->origin.y) / coarse_size));
  }
  for (int dy = -half_k; dy <= half_k + (p.patch_k % 2 == 0 ? -1 : 0); ++dy) {
    for (int dx = -half_k; dx <= half_k + (p.patch_k % 2 == 0 ? -1 : 0); ++dx) {
      if (fm == nullptr || !fm->in_grid(ccx + dx, ccy + dy)) {
        patch.insert(patch.end(), {0.0, 0.0, 0.0, 0.0});
        continue;
      }
      const auto& cell = fm->at(ccx + dx, ccy + dy);
      if (!cell.gate_open) {
        patch.insert(patch.end(), {0.0, 0.0, 0.0, 0.0});
        continue;
      }
      any_gate_open = true;
      patch.push_back(clamp(cell.density, 0.0, 1.0));
      patch.push_back(clamp(cell.mean_height / p.h_scale_m, 0.0, 1.0));
      patch.push_back(clamp(cell.max_height / p.h_scale_m, 0.0, 1.0));
      patch.push_back(clamp(cell.occlusion, 0.0, 1.0));
    }
  }
  obs.push_back(any_gate_open ? 1.0 : 0.0);
  obs.insert(obs.end(), patch.begin(), patch.end());

  // M nearest alive neighbors by 3D distance (ties by index), zero-padded
  std::vector<std::pair<double, int>> order;
  for (int j = 0; j < static_cast<int>(ctx.states.size()); ++j) {
    if (j == i || !ctx.states[static_cast<std::size_t>(j)].alive) continue;
    order.emplace_back(distance(ctx.states[static_cast<std::size_t>(j)].position, self.position), j);
  }
  std::sort(order.begin(), order.end());
  for (int m = 0; m < p.neighbors; ++m) {
    if (m < static_cast<int>(order.size())) {
      const Vec3 rel = ctx.states[static_cast<std::size_t>(order[m].second)].position - self.position;
      obs.push_back(clamp(rel.x / p.neighbor_range_m, -1.0, 1.0));
      obs.push_back(clamp(rel.y / p.neighbor_range_m, -1.0, 1.0));
      obs.push_back(clamp(rel.z / p.neighbor_range_m, -1.0, 1.0));
    } else {
      obs.insert(obs.end(), {0.0, 0.0, 0.0});
    }
  }
  return obs;
}

/// The constrained-MDP swarm environment. Single-owner mutable state; one
/// logical writer steps it.
class SwarmEnv {
 public:
  SwarmEnv(const world::WorldMap& map, const world::MissionSpec& mission,
           std::vector<radio::RadioSite> sites, const radio::RadioParams& radio_params,
           const RewardWeights& weights, const ObsParams& obs_params, double d_safe,
           bool obstacle_terminal = true)
      : map_(&map),
        mission_(&mission),
        sites_(std::move(sites)),
        radio_params_(radio_params),
        weights_(weights),
        obs_params_(obs_params),
        d_safe_(d_safe),
        obstacle_terminal_(obstacle_terminal) {}

  int agent_count() const { return mission_->agent_count(); }
  int tick() const { return tick_; }
  bool episode_done() const { return done_; }
  long collision_events() const { return collision_events_; }
  const std::vector<AgentState>& states() const { return states_; }
  const std::vector<radio::SinrSample>& sinr_samples() const { return sinr_; }
  const world::MissionSpec& mission() const { return *mission_; }
  const world::WorldMap& map() const { return *map_; }
  const ObsParams& obs_params() const { return obs_params_; }
  const RewardWeights& weights() const { return weights_; }

  /// Spawns agents (deterministic per seed), headings toward their targets.
  void reset(std::uint64_t seed) {
    const auto positions = world::spawn_agents(*mission_, agent_count(), d_safe_, seed);
    states_.clear();
    sinr_.clear();
    for (int i = 0; i < agent_count(); ++i) {
      AgentState s;
      s.position = positions[static_cast<std::size_t>(i)];
      const Vec3 d = mission_->targets[static_cast<std::size_t>(i)] - s.position;
      s.heading = (d.x == 0.0 && d.y == 0.0) ? 0.0 : std::atan2(d.y, d.x);
      states_.push_back(s);
      sinr_.push_back(radio::sinr_at(s.position, sites_, *map_, radio_params_));
    }
    tick_ = 0;
    done_ = false;
  }

  std::vector<double> observation(const sem::SemanticFeatureMap* a1_map, int i) const {
    ObsContext ctx;
    ctx.mission = mission_;
    ctx.params = &obs_params_;
    ctx.states = states_;
    ctx.sinr = sinr_;
    ctx.a1_map = a1_map;
    ctx.map = map_;
    return build_observation(ctx, i);
  }

  /// Simultaneous joint step. Check order per agent: obstacle strike, then
  /// inter-UAV separation over the motion segments, then target reach.
  std::vector<StepResult> step(const std::vector<Action>& actions) {
    if (done_) throw ValidationError("step: episode already terminated");
    if (actions.size() != states_.size())
      throw ValidationError("step: one action per agent");
    const int n = agent_count();
    std::vector<StepResult> results(static_cast<std::size_t>(n));
    std::vector<Vec3> prev(static_cast<std::size_t>(n));
    std::vector<Vec3> next(static_cast<std::size_t>(n));
    std::vector<Action> applied(static_cast<std::size_t>(n));
    std::vector<bool> active(static_cast<std::size_t>(n));

    for (int i = 0; i < n; ++i) {
      const auto& st = states_[static_cast<std::size_t>(i)];
      prev[static_cast<std::size_t>(i)] = st.position;
      next[static_cast<std::size_t>(i)] = st.position;
      active[static_cast<std::size_t>(i)] = st.alive && !st.reached;
      if (!active[static_cast<std::size_t>(i)]) continue;
      Action a = actions[static_cast<std::size_t>(i)];
      ActionApplication app = apply_action(st, a, mission_->z_min, mission_->z_max);
      applied[static_cast<std::size_t>(i)] = Action{clamp(a.d_heading, -kDHeadingMax, kDHeadingMax),
                                                    clamp(a.d_alt, -kDAltMax, kDAltMax),
                                                    clamp(a.dist, 0.0, kDistMax)};
      results[static_cast<std::size_t>(i)].flags.clamped = app.clamped;
      states_[static_cast<std::size_t>(i)].heading = app.heading;
      next[static_cast<std::size_t>(i)] = app.candidate;
    }

    // (1) obstacle: candidate at or below the local surface kills the agent
    for (int i = 0; i < n; ++i) {
      if (!active[static_cast<std::size_t>(i)]) continue;
      const Vec3& c = next[static_cast<std::size_t>(i)];
      const double surface = world::height_at(*map_, c.x, c.y).value_or(0.0);
      if (surface > 0.0 && c.z <= surface) {
        results[static_cast<std::size_t>(i)].flags.obstacle_strike = true;
        if (obstacle_terminal_) {
          states_[static_cast<std::size_t>(i)].alive = false;
          active[static_cast<std::size_t>(i)] = false;
        }
      }
    }

    // (2) separation: endpoints plus 3 interpolated points along the motion
    // segments of agents still active
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        if (!active[static_cast<std::size_t>(i)] || !active[static_cast<std::size_t>(j)]) continue;
        bool violated = false;
        for (int s = 0; s <= 4; ++s) {
          const double t = s / 4.0;
          const Vec3 pi = prev[static_cast<std::size_t>(i)] +
                          (next[static_cast<std::size_t>(i)] - prev[static_cast<std::size_t>(i)]) * t;
          const Vec3 pj = prev[static_cast<std::size_t>(j)] +
                          (next[static_cast<std::size_t>(j)] - prev[static_cast<std::size_t>(j)]) * t;
          if (distance(pi, pj) < d_safe_) {
            violated = true;
            break;
          }
        }
        if (violated) {
          results[static_cast<std::size_t>(i)].flags.separation_violation = true;
          results[static_cast<std::size_t>(j)].flags.separation_violation = true;
          ++collision_events_;
        }
      }
    }

    // commit positions and (3) reach
    ++tick_;
    const bool truncating = tick_ >= mission_->max_steps;
    int n_done = 0;
    for (int i = 0; i < n; ++i) {
      auto& st = states_[static_cast<std::size_t>(i)];
      auto& res = results[static_cast<std::size_t>(i)];
      const bool was_active =
          active[static_cast<std::size_t>(i)] || res.flags.obstacle_strike;
      if (was_active) {
        st.position = next[static_cast<std::size_t>(i)];
        res.flags.out_of_area =
            !mission_->mission_area.contains(st.position.x, st.position.y);
        if (st.alive && !st.reached &&
            distance(st.position, mission_->targets[static_cast<std::size_t>(i)]) <=
                mission_->reach_tolerance) {
          st.reached = true;
          res.flags.reached_now = true;
        }
        if (truncating && st.alive && !st.reached) res.flags.truncated = true;
        sinr_[static_cast<std::size_t>(i)] =
            radio::sinr_at(st.position, sites_, *map_, radio_params_);
        res.reward = reward(prev[static_cast<std::size_t>(i)], st.position,
                            mission_->targets[static_cast<std::size_t>(i)],
                            applied[static_cast<std::size_t>(i)],
                            sinr_[static_cast<std::size_t>(i)].sinr_db, res.flags, weights_);
      }
      res.done = st.done();
      if (res.done) ++n_done;
    }
    done_ = n_done == n || truncating;
    return results;
  }

 private:
  const world::WorldMap* map_;
  const world::MissionSpec* mission_;
  std::vector<radio::RadioSite> sites_;
  radio::RadioParams radio_params_;
  RewardWeights weights_;
  ObsParams obs_params_;
  double d_safe_;
  bool obstacle_terminal_;

  std::vector<AgentState> states_;
  std::vector<radio::SinrSample> sinr_;
  int tick_ = 0;
  bool done_ = false;
  long collision_events_ = 0;
};

}  // namespace laesim::env
