#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "laesim/common.hpp"
#include "laesim/maddpg.hpp"
#include "laesim/ricbus.hpp"
#include "laesim/scenario.hpp"
#include "laesim/version.hpp"

namespace laesim::eval {

enum class BaselineKind { Full, ShortestPath, NonSemanticRl, NonSinrSemanticRl };

inline const char* baseline_name(BaselineKind k) {
  switch (k) {
    case BaselineKind::Full: return "full";
    case BaselineKind::ShortestPath: return "shortest_path";
    case BaselineKind::NonSemanticRl: return "non_semantic_rl";
    case BaselineKind::NonSinrSemanticRl: return "non_sinr_semantic_rl";
  }
  return "?";
}

inline BaselineKind baseline_from_name(const std::string& s) {
  if (s == "full") return BaselineKind::Full;
  if (s == "shortest_path" || s == "shortest") return BaselineKind::ShortestPath;
  if (s == "non_semantic_rl" || s == "nosem") return BaselineKind::NonSemanticRl;
  if (s == "non_sinr_semantic_rl" || s == "nosinr") return BaselineKind::NonSinrSemanticRl;
  throw ValidationError("unknown baseline kind: " + s);
}

inline bool baseline_needs_model(BaselineKind k) { return k != BaselineKind::ShortestPath; }

/// Applies a baseline's observation/reward transform to a scenario.
///   non_semantic_rl:      semantic inputs disabled (gate forced closed);
///   non_sinr_semantic_rl: SINR entry removed from observations and w_sinr=0.
inline world::ScenarioConfig baseline_scenario(const world::ScenarioConfig& base,
                                               BaselineKind kind) {
  world::ScenarioConfig cfg = base;
  switch (kind) {
    case BaselineKind::Full:
    case BaselineKind::ShortestPath:
      break;
    case BaselineKind::NonSemanticRl:
      cfg.env.obs.semantics_enabled = false;
      break;
    case BaselineKind::NonSinrSemanticRl:
      cfg.env.obs.include_sinr = false;
      cfg.env.weights.w_sinr = 0.0;
      break;
  }
  return cfg;
}

/// Straight-line flight: turn toward the target (clamped), fly the remaining
/// horizontal distance up to the step bound, climb the vertical residual.
/// Ignores SINR, semantics, and obstacles entirely.
inline env::Action shortest_path_action(const env::AgentState& state, const Vec3& target) {
  env::Action a;
  const double dx = target.x - state.position.x;
  const double dy = target.y - state.position.y;
  const double horizontal = std::hypot(dx, dy);
  if (horizontal > 0.0) {
    const double bearing = std::atan2(dy, dx);
    a.d_heading = clamp(wrap_angle(bearing - state.heading), -env::kDHeadingMax, env::kDHeadingMax);
  }
  a.dist = std::min(env::kDistMax, horizontal);
  a.d_alt = clamp(target.z - state.position.z, -env::kDAltMax, env::kDAltMax);
  return a;
}

class ShortestPathPolicy : public ric::Policy {
 public:
  std::vector<env::ActionVec> act(const ric::DecisionContext& ctx) override {
    std::vector<env::ActionVec> out;
    const auto& states = *ctx.states;
    out.reserve(states.size());
    for (std::size_t i = 0; i < states.size(); ++i) {
      if (states[i].done()) {
        out.push_back(env::kHoldAction);
        continue;
      }
      out.push_back(env::unscale_action(
          shortest_path_action(states[i], ctx.mission->targets[i])));
    }
    return out;
  }
};

/// Frozen-parameter inference wrapper around a trained model.
class ModelPolicy : public ric::Policy {
 public:
  explicit ModelPolicy(rl::Trainer& trainer) : trainer_(&trainer) { trainer_->explore = false; }
  std::vector<env::ActionVec> act(const ric::DecisionContext& ctx) override {
    return trainer_->select_actions(*ctx.observations, /*with_noise=*/false);
  }

 private:
  rl::Trainer* trainer_;
};

/// Per-run mission metrics.
struct MetricsRow {
  std::string kind;
  std::string label;  // seed or "mean"
  double reach_rate = 0.0;
  double obstacle_intersections = 0.0;  // ticks with any agent inside a building volume
  double collision_events = 0.0;
  double min_separation = 0.0;
  double mean_sinr_db = 0.0;
  double p5_sinr_db = 0.0;
  double path_length_ratio = 0.0;  // mean over reached agents; NaN if none reached
  double out_of_area_steps = 0.0;
  double altitude_change_total = 0.0;
  double deadline_violations = 0.0;
};

inline bool position_in_building(const world::WorldMap& map, const Vec3& p) {
  const double h = world::height_at(map, p.x, p.y).value_or(0.0);
  return h > 0.0 && p.z <= h;
}

/// Computes the metrics of one episode log against the world it ran in.
inline MetricsRow metrics(const ric::EpisodeLog& log, const world::WorldMap& map) {
  if (log.ticks.empty() && log.env_steps > 0)
    throw ValidationError("metrics: log has no per-tick records");
  MetricsRow row;
  const int n = static_cast<int>(log.reached.size());

  long reached = 0;
  for (auto r : log.reached) reached += r;
  row.reach_rate = n > 0 ? static_cast<double>(reached) / n : 0.0;

  // group records by tick
  std::map<int, std::vector<const ric::TickAgentRecord*>> by_tick;
  for (const auto& rec : log.ticks) by_tick[rec.tick].push_back(&rec);

  long in_building_ticks = 0;
  double min_sep = std::numeric_limits<double>::infinity();
  std::vector<double> sinr_samples;
  std::vector<double> path_len(static_cast<std::size_t>(n), 0.0);
  std::vector<Vec3> last_pos = log.start_positions;
  std::vector<std::uint8_t> moving(static_cast<std::size_t>(n), 1);
  double alt_total = 0.0;
  long out_of_area = 0;

  for (const auto& [tick, recs] : by_tick) {
    bool any_inside = false;
    for (const auto* rec : recs) {
      const auto i = static_cast<std::size_t>(rec->agent);
      if (position_in_building(map, rec->position)) any_inside = true;
      sinr_samples.push_back(rec->sinr_db);
      if (moving[i]) {
        path_len[i] += distance(last_pos[i], rec->position);
        alt_total += std::abs(rec->position.z - last_pos[i].z);
        last_pos[i] = rec->position;
        if (rec->flags.reached_now || rec->flags.obstacle_strike) moving[i] = 0;
      }
      if (rec->flags.out_of_area) ++out_of_area;
    }
    if (any_inside) ++in_building_ticks;
    for (std::size_t i = 0; i < recs.size(); ++i) {
      for (std::size_t j = i + 1; j < recs.size(); ++j) {
        min_sep = std::min(min_sep, distance(recs[i]->position, recs[j]->position));
      }
    }
  }
  row.obstacle_intersections = static_cast<double>(in_building_ticks);
  row.collision_events = static_cast<double>(log.collision_events);
  row.min_separation = std::isinf(min_sep) ? std::numeric_limits<double>::quiet_NaN() : min_sep;

  if (!sinr_samples.empty()) {
    double sum = 0.0;
    for (double s : sinr_samples) sum += s;
    row.mean_sinr_db = sum / static_cast<double>(sinr_samples.size());
    std::sort(sinr_samples.begin(), sinr_samples.end());
    const auto rank = static_cast<std::size_t>(
        std::max<long>(0, static_cast<long>(
                              std::ceil(0.05 * static_cast<double>(sinr_samples.size()))) - 1));
    row.p5_sinr_db = sinr_samples[rank];
  }

  // path length ratio per reached agent vs the straight start->target line
  double ratio_sum = 0.0;
  long ratio_count = 0;
  for (int i = 0; i < n; ++i) {
    if (!log.reached[static_cast<std::size_t>(i)]) continue;
    const double straight =
        distance(log.start_positions[static_cast<std::size_t>(i)],
                 log.targets[static_cast<std::size_t>(i)]);
    if (straight <= 0.0) continue;
    ratio_sum += std::max(1.0, path_len[static_cast<std::size_t>(i)] / straight);
    ++ratio_count;
  }
  row.path_length_ratio =
      ratio_count > 0 ? ratio_sum / ratio_count : std::numeric_limits<double>::quiet_NaN();
  row.out_of_area_steps = static_cast<double>(out_of_area);
  row.altitude_change_total = alt_total;
  row.deadline_violations = static_cast<double>(log.deadline_violations);
  return row;
}

inline MetricsRow mean_row(const std::vector<MetricsRow>& rows, const std::string& kind) {
  MetricsRow m;
  m.kind = kind;
  m.label = "mean";
  if (rows.empty()) return m;
  auto acc = [&](auto getter) {
    double sum = 0.0;
    long count = 0;
    for (const auto& r : rows) {
      const double v = getter(r);
      if (std::isnan(v)) continue;
      sum += v;
      ++count;
    }
    return count > 0 ? sum / count : std::numeric_limits<double>::quiet_NaN();
  };
  m.reach_rate = acc([](const MetricsRow& r) { return r.reach_rate; });
  m.obstacle_intersections = acc([](const MetricsRow& r) { return r.obstacle_intersections; });
  m.collision_events = acc([](const MetricsRow& r) { return r.collision_events; });
  m.min_separation = acc([](const MetricsRow& r) { return r.min_separation; });
  m.mean_sinr_db = acc([](const MetricsRow& r) { return r.mean_sinr_db; });
  m.p5_sinr_db = acc([](const MetricsRow& r) { return r.p5_sinr_db; });
  m.path_length_ratio = acc([](const MetricsRow& r) { return r.path_length_ratio; });
  m.out_of_area_steps = acc([](const MetricsRow& r) { return r.out_of_area_steps; });
  m.altitude_change_total = acc([](const MetricsRow& r) { return r.altitude_change_total; });
  m.deadline_violations = acc([](const MetricsRow& r) { return r.deadline_violations; });
  return m;
}

/// Runs one baseline over paired episode seeds. Learned kinds evaluate the
/// supplied trainer (whose nets must match the transformed scenario).
inline std::vector<ric::EpisodeLog> run_baseline(BaselineKind kind,
                                                 const world::ScenarioConfig& base,
                                                 rl::Trainer* model,
                                                 const std::vector<std::uint64_t>& seeds) {
  if (baseline_needs_model(kind) && model == nullptr)
    throw ValidationError(std::string("baseline ") + baseline_name(kind) + " requires a model");
  world::ScenarioConfig cfg = baseline_scenario(base, kind);
  std::vector<ric::EpisodeLog> logs;
  logs.reserve(seeds.size());
  for (std::uint64_t seed : seeds) {
    if (kind == BaselineKind::ShortestPath) {
      // pass-through mode: strikes are counted, not terminal
      ShortestPathPolicy policy;
      logs.push_back(ric::run_mission(cfg, policy, ric::RunMode::Eval, nullptr, seed,
                                      /*detailed_log=*/true, /*obstacle_terminal=*/false));
    } else {
      ModelPolicy policy(*model);
      logs.push_back(ric::run_mission(cfg, policy, ric::RunMode::Eval, nullptr, seed,
                                      /*detailed_log=*/true));
    }
  }
  return logs;
}

inline std::string csv_cell(double v) {
  if (std::isnan(v)) return "nan";
  return fmt_double(v);
}

inline void write_metrics_header(std::ostream& os, const std::string& scenario_digest) {
  os << "# scenario_digest=" << scenario_digest << " tool_version=" << kToolVersion << '\n';
  os << "kind,seed,reach_rate,obstacle_intersections,collision_events,min_separation,"
        "mean_sinr_db,p5_sinr_db,path_length_ratio,out_of_area_steps,altitude_change_total,"
        "deadline_violations\n";
}

inline void write_metrics_row(std::ostream& os, const MetricsRow& r) {
  os << r.kind << ',' << r.label << ',' << csv_cell(r.reach_rate) << ','
     << csv_cell(r.obstacle_intersections) << ',' << csv_cell(r.collision_events) << ','
     << csv_cell(r.min_separation) << ',' << csv_cell(r.mean_sinr_db) << ','
     << csv_cell(r.p5_sinr_db) << ',' << csv_cell(r.path_length_ratio) << ','
     << csv_cell(r.out_of_area_steps) << ',' << csv_cell(r.altitude_change_total) << ','
     << csv_cell(r.deadline_violations) << '\n';
}

/// Paired comparison across baseline kinds: one row per (kind, seed) plus a
/// mean row per kind. Bit-stable across reruns.
inline void compare(std::ostream& os, const world::ScenarioConfig& scenario,
                    const std::vector<BaselineKind>& kinds,
                    const std::map<BaselineKind, rl::Trainer*>& models,
                    const std::vector<std::uint64_t>& seeds) {
  write_metrics_header(os, world::scenario_digest(scenario));
  for (BaselineKind kind : kinds) {
    rl::Trainer* model = nullptr;
    if (auto it = models.find(kind); it != models.end()) model = it->second;
    const auto logs = run_baseline(kind, scenario, model, seeds);
    std::vector<MetricsRow> rows;
    for (std::size_t i = 0; i < logs.size(); ++i) {
      MetricsRow row = metrics(logs[i], scenario.map);
      row.kind = baseline_name(kind);
      row.label = std::to_string(seeds[i]);
      rows.push_back(row);
      write_metrics_row(os, rows.back());
    }
    write_metrics_row(os, mean_row(rows, baseline_name(kind)));
  }
}

/// "agent,t_ms,x,y,z,sinr_db" rows for Fig-style trajectory rendering.
inline void export_trajectories(std::ostream& os, const ric::EpisodeLog& log,
                                const std::string& scenario_digest) {
  os << "# scenario_digest=" << scenario_digest << " tool_version=" << kToolVersion << '\n';
  os << "agent,t_ms,x,y,z,sinr_db\n";
  for (const auto& rec : log.ticks) {
    os << rec.agent << ',' << rec.t_ms << ',' << fmt_double(rec.position.x) << ','
       << fmt_double(rec.position.y) << ',' << fmt_double(rec.position.z) << ','
       << fmt_double(rec.sinr_db) << '\n';
  }
}

}  // namespace laesim::eval
