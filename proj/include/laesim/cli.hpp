#pragma once

#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "laesim/common.hpp"
#include "laesim/evalharness.hpp"
#include "laesim/maddpg.hpp"
#include "laesim/radio.hpp"
#include "laesim/ricbus.hpp"
#include "laesim/scenario.hpp"
#include "laesim/tinynet.hpp"
#include "laesim/version.hpp"

namespace laesim::cli {

namespace fs = std::filesystem;
using nlohmann::json;

struct CommonFlags {
  std::string scenario_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_given = false;
  int episodes = 0;
  bool episodes_given = false;
  bool quiet = false;
};

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Flags > scenario file > LAE_SIM_SEED env > built-in default, with
/// provenance recorded for the audit manifest.
inline void resolve_seed(world::ScenarioConfig& cfg, const CommonFlags& flags) {
  if (flags.seed_given) {
    cfg.seed = flags.seed;
    cfg.rl.seed = flags.seed;
    cfg.provenance.push_back("seed: flag");
    return;
  }
  bool file_had_seed = true;
  for (const auto& p : cfg.provenance) {
    if (p == "scenario.seed: defaulted") file_had_seed = false;
  }
  if (!file_had_seed) {
    if (const char* env_seed = std::getenv("LAE_SIM_SEED")) {
      cfg.seed = std::strtoull(env_seed, nullptr, 10);
      cfg.rl.seed = cfg.seed;
      cfg.provenance.push_back("seed: env(LAE_SIM_SEED)");
    }
  }
}

class OutputSink {
 public:
  OutputSink(std::string out_dir, bool quiet) : dir_(std::move(out_dir)), quiet_(quiet) {
    if (!dir_.empty()) fs::create_directories(dir_);
  }

  fs::path path(const std::string& name) const { return fs::path(dir_) / name; }

  std::ofstream open(const std::string& name) {
    const fs::path p = path(name);
    std::ofstream out(p);
    if (!out) throw ParseError("cannot write output file: " + p.string());
    announce(p.string());
    return out;
  }

  void announce(const std::string& p) {
    outputs_.push_back(p);
    std::cout << "wrote " << p << '\n';
  }

  void progress(const std::string& line) const {
    if (!quiet_) std::cout << line << '\n';
  }

  void write_manifest(const std::string& subcommand, const world::ScenarioConfig* cfg) {
    if (dir_.empty()) return;
    json m{{"tool_version", kToolVersion},
           {"subcommand", subcommand},
           {"timestamp_utc", utc_timestamp()},
           {"outputs", outputs_}};
    if (cfg != nullptr) {
      m["scenario_digest"] = world::scenario_digest(*cfg);
      m["seed"] = cfg->seed;
      m["config_provenance"] = cfg->provenance;
    }
    const fs::path p = path("manifest.json");
    std::ofstream out(p);
    out << m.dump(2) << '\n';
    std::cout << "wrote " << p.string() << '\n';
  }

 private:
  std::string dir_;
  bool quiet_;
  std::vector<std::string> outputs_;
};

inline std::vector<std::uint64_t> eval_seeds(std::uint64_t base, int episodes) {
  std::vector<std::uint64_t> seeds;
  seeds.reserve(static_cast<std::size_t>(episodes));
  for (int i = 0; i < episodes; ++i) seeds.push_back(base + static_cast<std::uint64_t>(i));
  return seeds;
}

inline int cmd_train(const CommonFlags& flags, const std::string& baseline) {
  world::ScenarioConfig cfg = world::load_scenario(flags.scenario_path);
  resolve_seed(cfg, flags);
  if (flags.episodes_given) {
    cfg.rl.episodes = flags.episodes;
    cfg.provenance.push_back("rl.episodes: flag");
  }
  const eval::BaselineKind kind = eval::baseline_from_name(baseline);
  if (kind == eval::BaselineKind::ShortestPath)
    throw ValidationError("train: shortest_path is scripted, nothing to train");
  const world::ScenarioConfig train_cfg = eval::baseline_scenario(cfg, kind);

  OutputSink sink(flags.out_dir, flags.quiet);
  rl::Trainer trainer(train_cfg.rl, train_cfg.agent_count(), train_cfg.env.obs.dim());
  const auto t0 = std::chrono::steady_clock::now();
  rl::TrainingReport report =
      rl::train(train_cfg, trainer, [&](int ep, int total, double ret) {
        if ((ep + 1) % 50 == 0 || ep + 1 == total) {
          const double secs =
              std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
          sink.progress("episode " + std::to_string(ep + 1) + "/" + std::to_string(total) +
                        " return=" + fmt_double(ret) + " elapsed=" + fmt_double(secs) + "s");
        }
      });

  {
    auto out = sink.open("model.json");
    out << trainer.to_model_json(eval::baseline_name(kind)).dump() << '\n';
  }
  {
    auto out = sink.open("training_report.json");
    out << rl::report_to_json(report).dump() << '\n';
  }
  sink.write_manifest("train", &cfg);
  return 0;
}

inline int cmd_eval(const CommonFlags& flags, const std::string& policy_path) {
  world::ScenarioConfig cfg = world::load_scenario(flags.scenario_path);
  resolve_seed(cfg, flags);
  const int episodes = flags.episodes_given ? flags.episodes : 20;
  const eval::BaselineKind kind = eval::baseline_from_name(rl::model_kind(policy_path));
  const world::ScenarioConfig run_cfg = eval::baseline_scenario(cfg, kind);

  rl::Trainer trainer(run_cfg.rl, run_cfg.agent_count(), run_cfg.env.obs.dim());
  rl::load_model(trainer, policy_path);

  OutputSink sink(flags.out_dir, flags.quiet);
  const auto seeds = eval_seeds(cfg.seed, episodes);
  const auto logs = eval::run_baseline(kind, cfg, &trainer, seeds);

  std::vector<eval::MetricsRow> rows;
  {
    auto out = sink.open("metrics.csv");
    eval::write_metrics_header(out, world::scenario_digest(cfg));
    for (std::size_t i = 0; i < logs.size(); ++i) {
      eval::MetricsRow row = eval::metrics(logs[i], cfg.map);
      row.kind = eval::baseline_name(kind);
      row.label = std::to_string(seeds[i]);
      rows.push_back(row);
      eval::write_metrics_row(out, row);
    }
    eval::write_metrics_row(out, eval::mean_row(rows, eval::baseline_name(kind)));
  }
  {
    auto out = sink.open("trajectories.csv");
    eval::export_trajectories(out, logs.front(), world::scenario_digest(cfg));
  }
  {
    auto out = sink.open("episode0.jsonl");
    logs.front().write_jsonl(out);
  }
  sink.write_manifest("eval", &cfg);
  return 0;
}

inline int cmd_compare(const CommonFlags& flags, const std::string& baselines,
                       const std::string& policy_dir) {
  world::ScenarioConfig cfg = world::load_scenario(flags.scenario_path);
  resolve_seed(cfg, flags);
  const int episodes = flags.episodes_given ? flags.episodes : 20;

  std::vector<eval::BaselineKind> kinds;
  std::string token;
  for (std::size_t i = 0; i <= baselines.size(); ++i) {
    if (i == baselines.size() || baselines[i] == ',') {
      if (!token.empty()) kinds.push_back(eval::baseline_from_name(token));
      token.clear();
    } else {
      token += baselines[i];
    }
  }
  if (kinds.empty()) throw ValidationError("compare: no baseline kinds given");

  std::map<eval::BaselineKind, std::unique_ptr<rl::Trainer>> owned;
  std::map<eval::BaselineKind, rl::Trainer*> models;
  for (const auto kind : kinds) {
    if (!eval::baseline_needs_model(kind)) continue;
    const fs::path model_path = fs::path(policy_dir) / (std::string(eval::baseline_name(kind)) + ".json");
    if (!fs::exists(model_path))
      throw ValidationError(std::string("compare: missing model for ") +
                            eval::baseline_name(kind) + " at " + model_path.string());
    const world::ScenarioConfig run_cfg = eval::baseline_scenario(cfg, kind);
    auto trainer =
        std::make_unique<rl::Trainer>(run_cfg.rl, run_cfg.agent_count(), run_cfg.env.obs.dim());
    rl::load_model(*trainer, model_path.string());
    models[kind] = trainer.get();
    owned[kind] = std::move(trainer);
  }

  OutputSink sink(flags.out_dir, flags.quiet);
  {
    auto out = sink.open("compare.csv");
    eval::compare(out, cfg, kinds, models, eval_seeds(cfg.seed, episodes));
  }
  sink.write_manifest("compare", &cfg);
  return 0;
}

inline int cmd_map(const CommonFlags& flags, double altitude, double resolution) {
  world::ScenarioConfig cfg = world::load_scenario(flags.scenario_path);
  resolve_seed(cfg, flags);
  if (altitude < cfg.mission.z_min || altitude > cfg.mission.z_max)
    throw ValidationError("map: altitude within [z_min, z_max]");
  OutputSink sink(flags.out_dir, flags.quiet);
  const radio::SinrSurface surf = radio::export_sinr_surface(
      altitude, resolution, cfg.sites, cfg.map, cfg.radio_params, cfg.mission.mission_area);
  {
    auto out = sink.open("sinr_surface.csv");
    radio::write_surface_csv(out, surf);
  }
  sink.write_manifest("map", &cfg);
  return 0;
}

inline int cmd_gradcheck(std::uint64_t seed, bool quiet) {
  const nn::GradcheckReport rep = nn::gradcheck_suite(seed);
  if (!quiet) {
    std::cout << "gradcheck: " << rep.nets << " nets, max rel err mixed=" <<
        fmt_double(rep.max_rel_error_mixed)
              << " tanh=" << fmt_double(rep.max_rel_error_tanh) << '\n';
  }
  if (!rep.pass) {
    std::cerr << "gradcheck FAILED (thresholds: mixed < 1e-4, tanh < 1e-6)\n";
    return 1;
  }
  std::cout << "gradcheck OK\n";
  return 0;
}

inline int cmd_validate(const CommonFlags& flags) {
  world::ScenarioConfig cfg = world::load_scenario(flags.scenario_path);
  std::cout << "scenario OK: " << flags.scenario_path << '\n';
  std::cout << "digest: " << world::scenario_digest(cfg) << '\n';
  std::cout << "agents: " << cfg.agent_count() << ", sites: " << cfg.sites.size()
            << ", grid: " << cfg.nx << "x" << cfg.ny << " @ " << cfg.cell_size << " m\n";
  for (const auto& p : cfg.provenance) std::cout << "provenance: " << p << '\n';
  return 0;
}

/// Entry point behind main(). Exit codes: 0 success, 1 runtime failure,
/// 2 usage error.
inline int run_cli(int argc, const char* const* argv) {
  CLI::App app{"O-RAN-enabled LAE swarm trajectory simulator"};
  app.require_subcommand(1);

  CommonFlags flags;
  std::string baseline = "full";
  std::string policy_path;
  std::string policy_dir;
  std::string baselines = "full,shortest_path,non_semantic_rl,non_sinr_semantic_rl";
  double altitude = 60.0;
  double resolution = 5.0;

  auto add_common = [&](CLI::App* sub, bool needs_scenario, bool needs_out) {
    auto* s = sub->add_option("--scenario", flags.scenario_path, "scenario JSON file");
    if (needs_scenario) s->required();
    auto* o = sub->add_option("--out", flags.out_dir, "output directory");
    if (needs_out) o->required();
    sub->add_option("--seed", flags.seed, "seed override (wins over file and env)")
        ->each([&](const std::string&) { flags.seed_given = true; });
    sub->add_option("--episodes", flags.episodes, "episode count")
        ->each([&](const std::string&) { flags.episodes_given = true; });
    sub->add_flag("--quiet", flags.quiet, "suppress progress output");
  };

  CLI::App* train = app.add_subcommand("train", "train a MADDPG policy on a scenario");
  add_common(train, true, true);
  train->add_option("--baseline", baseline,
                    "configuration to train: full, non_semantic_rl, non_sinr_semantic_rl");

  CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a trained policy");
  add_common(eval_cmd, true, true);
  eval_cmd->add_option("--policy", policy_path, "trained model file")->required();

  CLI::App* compare = app.add_subcommand("compare", "paired baseline comparison table");
  add_common(compare, true, true);
  compare->add_option("--baselines", baselines, "comma list of kinds");
  compare->add_option("--policy", policy_dir, "directory holding <kind>.json models");

  CLI::App* map_cmd = app.add_subcommand("map", "export the SINR surface of a scenario");
  add_common(map_cmd, true, true);
  map_cmd->add_option("--altitude", altitude, "slice altitude in meters");
  map_cmd->add_option("--resolution", resolution, "cell size in meters");

  CLI::App* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient suite");
  gradcheck->add_option("--seed", flags.seed, "suite seed")
      ->each([&](const std::string&) { flags.seed_given = true; });
  gradcheck->add_flag("--quiet", flags.quiet, "suppress detail output");

  CLI::App* validate = app.add_subcommand("validate", "load a scenario and report invariants");
  validate->add_option("--scenario", flags.scenario_path, "scenario JSON file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);  // prints usage, exit 0
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (train->parsed()) return cmd_train(flags, baseline);
    if (eval_cmd->parsed()) return cmd_eval(flags, policy_path);
    if (compare->parsed()) return cmd_compare(flags, baselines, policy_dir);
    if (map_cmd->parsed()) return cmd_map(flags, altitude, resolution);
    if (gradcheck->parsed()) return cmd_gradcheck(flags.seed_given ? flags.seed : 1, flags.quiet);
    if (validate->parsed()) return cmd_validate(flags);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace laesim::cli
