#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "laesim/agentenv.hpp"
#include "laesim/clocks.hpp"
#include "laesim/common.hpp"
#include "laesim/maddpg_config.hpp"
#include "laesim/radio.hpp"
#include "laesim/semantics.hpp"
#include "laesim/version.hpp"
#include "laesim/worldmodel.hpp"

namespace laesim::world {

using nlohmann::json;

/// Environment knobs that sit outside the paper-facing blocks: safety
/// separation, reward weights, observation layout.
struct EnvParams {
  double d_safe_m = 10.0;
  env::RewardWeights weights;
  env::ObsParams obs;

  void validate() const {
    if (!(d_safe_m >= 0.0)) throw ValidationError("env: d_safe >= 0");
    weights.validate();
    obs.validate();
  }

  bool operator==(const EnvParams& o) const {
    return d_safe_m == o.d_safe_m && weights == o.weights && obs == o.obs;
  }
};

/// Full simulation scenario. Immutable after load; safe to share across
/// concurrent readers.
struct ScenarioConfig {
  std::string profile = "delivery";
  std::uint64_t seed = 1;

  // world source form (buildings preferred; raster accepted)
  int nx = 0, ny = 0;
  double cell_size = 0.0;
  Vec2 origin{0.0, 0.0};
  std::optional<std::vector<Building>> buildings;
  std::optional<std::vector<double>> terrain;  // per-cell offsets
  WorldMap map;                                // derived raster

  MissionSpec mission;
  radio::RadioParams radio_params;
  std::vector<radio::RadioSite> sites;
  sem::SemanticsParams semantics;
  rl::MaddpgConfig rl;
  ric::ClockConfig clocks;
  EnvParams env;

  std::vector<std::string> provenance;  // "<path>: defaulted" entries

  int agent_count() const { return mission.agent_count(); }

  void validate() const {
    map.validate();
    mission.validate();
    radio_params.validate();
    if (sites.empty()) throw ValidationError("radio: at least one site");
    std::set<int> ids;
    for (const auto& s : sites) {
      s.validate();
      if (!ids.insert(s.id).second)
        throw ValidationError("radio: site id " + std::to_string(s.id) + " not unique");
    }
    semantics.validate();
    rl.validate();
    clocks.validate();
    env.validate();
  }

  bool operator==(const ScenarioConfig& o) const {
    return profile == o.profile && seed == o.seed && map == o.map && mission == o.mission &&
           radio_params == o.radio_params && sites == o.sites && semantics == o.semantics &&
           rl == o.rl && clocks == o.clocks && env == o.env;
  }
};

namespace detail {

inline void check_keys(const json& j, const std::set<std::string>& allowed,
                       const std::string& path) {
  for (const auto& [key, _] : j.items()) {
    if (!allowed.count(key)) throw ValidationError("unknown field: " + path + "." + key);
  }
}

/// Fetches j[key] or marks the path defaulted.
inline const json* opt_node(const json& j, const std::string& key, const std::string& path,
                            std::vector<std::string>& prov) {
  if (j.contains(key)) return &j.at(key);
  prov.push_back(path + "." + key + ": defaulted");
  return nullptr;
}

template <typename T>
T opt_value(const json& j, const std::string& key, T fallback, const std::string& path,
            std::vector<std::string>& prov) {
  if (j.contains(key)) return j.at(key).get<T>();
  prov.push_back(path + "." + key + ": defaulted");
  return fallback;
}

inline Box2 box2_from(const json& j, const std::string& path) {
  check_keys(j, {"x_min", "x_max", "y_min", "y_max"}, path);
  return Box2{j.at("x_min").get<double>(), j.at("x_max").get<double>(),
              j.at("y_min").get<double>(), j.at("y_max").get<double>()};
}

inline Box3 box3_from(const json& j, const std::string& path) {
  check_keys(j, {"x_min", "x_max", "y_min", "y_max", "z_min", "z_max"}, path);
  return Box3{j.at("x_min").get<double>(), j.at("x_max").get<double>(),
              j.at("y_min").get<double>(), j.at("y_max").get<double>(),
              j.at("z_min").get<double>(), j.at("z_max").get<double>()};
}

inline Vec3 vec3_from(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 3) throw ValidationError(path + ": expected [x, y, z]");
  return Vec3{j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

inline std::int64_t profile_deadline_ms(const std::string& profile) {
  if (profile == "delivery") return 500;   // path recalibration budget
  if (profile == "uam") return 10;
  if (profile == "emergency") return 20;
  if (profile == "surveillance") return 30;
  if (profile == "inspection") return 20;
  if (profile == "agriculture") return 1000;
  throw ValidationError("unknown profile: " + profile);
}

}  // namespace detail

inline ScenarioConfig parse_scenario(const json& j) {
  using detail::check_keys;
  using detail::opt_node;
  using detail::opt_value;

  if (!j.is_object()) throw ParseError("scenario: top level must be an object");
  if (!j.contains("schema_version")) throw VersionError("scenario: schema_version missing");
  const int version = j.at("schema_version").get<int>();
  if (version != kScenarioSchemaVersion)
    throw VersionError("scenario: schema_version " + std::to_string(version) +
                       " unsupported (expected " + std::to_string(kScenarioSchemaVersion) + ")");
  check_keys(j, {"schema_version", "profile", "seed", "world", "mission", "radio", "semantics",
                 "rl", "clocks", "env"},
             "scenario");

  ScenarioConfig cfg;
  auto& prov = cfg.provenance;
  cfg.profile = opt_value<std::string>(j, "profile", "delivery", "scenario", prov);
  cfg.seed = opt_value<std::uint64_t>(j, "seed", 1, "scenario", prov);

  // ---- world ----
  if (!j.contains("world")) throw ValidationError("scenario: world block required");
  const json& w = j.at("world");
  check_keys(w, {"grid", "buildings", "heights", "terrain"}, "world");
  if (!w.contains("grid")) throw ValidationError("world: grid required");
  const json& g = w.at("grid");
  check_keys(g, {"nx", "ny", "cell_size", "origin"}, "world.grid");
  cfg.nx = g.at("nx").get<int>();
  cfg.ny = g.at("ny").get<int>();
  cfg.cell_size = g.at("cell_size").get<double>();
  if (g.contains("origin")) {
    const auto& o = g.at("origin");
    if (!o.is_array() || o.size() != 2) throw ValidationError("world.grid.origin: expected [x, y]");
    cfg.origin = Vec2{o[0].get<double>(), o[1].get<double>()};
  } else {
    prov.push_back("world.grid.origin: defaulted");
  }
  if (w.contains("heights") && w.contains("buildings"))
    throw ValidationError("world: give either heights or buildings, not both");
  if (w.contains("heights")) {
    cfg.map.nx = cfg.nx;
    cfg.map.ny = cfg.ny;
    cfg.map.cell_size = cfg.cell_size;
    cfg.map.origin = cfg.origin;
    cfg.map.height = w.at("heights").get<std::vector<double>>();
  } else {
    std::vector<Building> buildings;
    if (w.contains("buildings")) {
      for (const auto& bj : w.at("buildings")) {
        check_keys(bj, {"x_min", "y_min", "x_max", "y_max", "height"}, "world.buildings[]");
        buildings.push_back(Building{bj.at("x_min").get<double>(), bj.at("y_min").get<double>(),
                                     bj.at("x_max").get<double>(), bj.at("y_max").get<double>(),
                                     bj.at("height").get<double>()});
      }
    } else {
      prov.push_back("world.buildings: defaulted");
    }
    cfg.map = rasterize(buildings, cfg.nx, cfg.ny, cfg.cell_size, cfg.origin);
    cfg.buildings = std::move(buildings);
  }
  if (w.contains("terrain")) {
    auto terrain = w.at("terrain").get<std::vector<double>>();
    if (terrain.size() != cfg.map.height.size())
      throw ValidationError("world.terrain: size equals nx*ny");
    for (std::size_t i = 0; i < terrain.size(); ++i) cfg.map.height[i] += terrain[i];
    cfg.terrain = std::move(terrain);
  }

  // ---- mission ----
  if (!j.contains("mission")) throw ValidationError("scenario: mission block required");
  const json& m = j.at("mission");
  check_keys(m, {"start_zone", "targets", "mission_area", "z_min", "z_max", "reach_tolerance",
                 "max_steps"},
             "mission");
  cfg.mission.start_zone = detail::box3_from(m.at("start_zone"), "mission.start_zone");
  for (const auto& tj : m.at("targets"))
    cfg.mission.targets.push_back(detail::vec3_from(tj, "mission.targets[]"));
  cfg.mission.mission_area = detail::box2_from(m.at("mission_area"), "mission.mission_area");
  cfg.mission.z_min = m.at("z_min").get<double>();
  cfg.mission.z_max = m.at("z_max").get<double>();
  cfg.mission.reach_tolerance = opt_value<double>(m, "reach_tolerance", 15.0, "mission", prov);
  cfg.mission.max_steps = opt_value<int>(m, "max_steps", 100, "mission", prov);

  // ---- radio ----
  if (!j.contains("radio")) throw ValidationError("scenario: radio block required");
  const json& r = j.at("radio");
  check_keys(r, {"params", "sites"}, "radio");
  if (const json* pj = opt_node(r, "params", "radio", prov)) {
    check_keys(*pj,
               {"pl0_db", "d0_m", "n_los", "n_nlos", "nlos_extra_db", "shadow_sigma_los_db",
                "shadow_sigma_nlos_db", "shadow_corr_len_m", "noise_power_dbm", "fading_seed"},
               "radio.params");
    auto& p = cfg.radio_params;
    p.pl0_db = opt_value<double>(*pj, "pl0_db", p.pl0_db, "radio.params", prov);
    p.d0_m = opt_value<double>(*pj, "d0_m", p.d0_m, "radio.params", prov);
    p.n_los = opt_value<double>(*pj, "n_los", p.n_los, "radio.params", prov);
    p.n_nlos = opt_value<double>(*pj, "n_nlos", p.n_nlos, "radio.params", prov);
    p.nlos_extra_db = opt_value<double>(*pj, "nlos_extra_db", p.nlos_extra_db, "radio.params", prov);
    p.shadow_sigma_los_db =
        opt_value<double>(*pj, "shadow_sigma_los_db", p.shadow_sigma_los_db, "radio.params", prov);
    p.shadow_sigma_nlos_db = opt_value<double>(*pj, "shadow_sigma_nlos_db", p.shadow_sigma_nlos_db,
                                               "radio.params", prov);
    p.shadow_corr_len_m =
        opt_value<double>(*pj, "shadow_corr_len_m", p.shadow_corr_len_m, "radio.params", prov);
    p.noise_power_dbm =
        opt_value<double>(*pj, "noise_power_dbm", p.noise_power_dbm, "radio.params", prov);
    p.fading_seed =
        opt_value<std::uint64_t>(*pj, "fading_seed", p.fading_seed, "radio.params", prov);
  }
  if (!r.contains("sites")) throw ValidationError("radio: sites required");
  for (const auto& sj : r.at("sites")) {
    check_keys(sj, {"id", "position", "tx_power_dbm", "antenna_gain_db"}, "radio.sites[]");
    radio::RadioSite s;
    s.id = sj.at("id").get<int>();
    s.position = detail::vec3_from(sj.at("position"), "radio.sites[].position");
    if (sj.contains("tx_power_dbm")) s.tx_power_dbm = sj.at("tx_power_dbm").get<double>();
    if (sj.contains("antenna_gain_db")) s.antenna_gain_db = sj.at("antenna_gain_db").get<double>();
    cfg.sites.push_back(s);
  }

  // ---- semantics ----
  if (const json* sj = opt_node(j, "semantics", "scenario", prov)) {
    check_keys(*sj,
               {"noise_sigma_m", "dropout_frac", "coarse_factor", "h_built_m", "sigma_ref_m",
                "gate_threshold"},
               "semantics");
    auto& s = cfg.semantics;
    s.noise_sigma_m = opt_value<double>(*sj, "noise_sigma_m", s.noise_sigma_m, "semantics", prov);
    s.dropout_frac = opt_value<double>(*sj, "dropout_frac", s.dropout_frac, "semantics", prov);
    s.coarse_factor = opt_value<int>(*sj, "coarse_factor", s.coarse_factor, "semantics", prov);
    s.h_built_m = opt_value<double>(*sj, "h_built_m", s.h_built_m, "semantics", prov);
    s.sigma_ref_m = opt_value<double>(*sj, "sigma_ref_m", s.sigma_ref_m, "semantics", prov);
    s.gate_threshold =
        opt_value<double>(*sj, "gate_threshold", s.gate_threshold, "semantics", prov);
  }

  // ---- rl ----
  if (const json* rj = opt_node(j, "rl", "scenario", prov)) {
    check_keys(*rj,
               {"gamma", "tau", "lr_actor", "lr_critic", "batch", "buffer_capacity", "warmup",
                "noise_sigma_start", "noise_sigma_end", "update_every", "episodes", "seed",
                "actor_hidden", "critic_hidden"},
               "rl");
    auto& c = cfg.rl;
    c.gamma = opt_value<double>(*rj, "gamma", c.gamma, "rl", prov);
    c.tau = opt_value<double>(*rj, "tau", c.tau, "rl", prov);
    c.lr_actor = opt_value<double>(*rj, "lr_actor", c.lr_actor, "rl", prov);
    c.lr_critic = opt_value<double>(*rj, "lr_critic", c.lr_critic, "rl", prov);
    c.batch = opt_value<int>(*rj, "batch", c.batch, "rl", prov);
    c.buffer_capacity = opt_value<int>(*rj, "buffer_capacity", c.buffer_capacity, "rl", prov);
    c.warmup = opt_value<int>(*rj, "warmup", c.warmup, "rl", prov);
    c.noise_sigma_start =
        opt_value<double>(*rj, "noise_sigma_start", c.noise_sigma_start, "rl", prov);
    c.noise_sigma_end = opt_value<double>(*rj, "noise_sigma_end", c.noise_sigma_end, "rl", prov);
    c.update_every = opt_value<int>(*rj, "update_every", c.update_every, "rl", prov);
    c.episodes = opt_value<int>(*rj, "episodes", c.episodes, "rl", prov);
    c.seed = opt_value<std::uint64_t>(*rj, "seed", cfg.seed, "rl", prov);
    c.actor_hidden = opt_value<std::vector<int>>(*rj, "actor_hidden", c.actor_hidden, "rl", prov);
    c.critic_hidden =
        opt_value<std::vector<int>>(*rj, "critic_hidden", c.critic_hidden, "rl", prov);
  } else {
    cfg.rl.seed = cfg.seed;
  }

  // ---- clocks ----
  cfg.clocks.control_deadline_ms = detail::profile_deadline_ms(cfg.profile);
  if (const json* cj = opt_node(j, "clocks", "scenario", prov)) {
    check_keys(*cj, {"t_a1_ms", "t_e2_ms", "inference_latency_ms", "control_deadline_ms"},
               "clocks");
    auto& c = cfg.clocks;
    c.t_a1_ms = opt_value<std::int64_t>(*cj, "t_a1_ms", c.t_a1_ms, "clocks", prov);
    c.t_e2_ms = opt_value<std::int64_t>(*cj, "t_e2_ms", c.t_e2_ms, "clocks", prov);
    c.inference_latency_ms =
        opt_value<std::int64_t>(*cj, "inference_latency_ms", c.inference_latency_ms, "clocks", prov);
    if (cj->contains("control_deadline_ms")) {
      c.control_deadline_ms = cj->at("control_deadline_ms").get<std::int64_t>();
    } else {
      prov.push_back("clocks.control_deadline_ms: profile(" + cfg.profile + ")");
    }
  }

  // ---- env ----
  if (const json* ej = opt_node(j, "env", "scenario", prov)) {
    check_keys(*ej, {"d_safe_m", "weights", "obs"}, "env");
    cfg.env.d_safe_m = opt_value<double>(*ej, "d_safe_m", cfg.env.d_safe_m, "env", prov);
    if (const json* wj = opt_node(*ej, "weights", "env", prov)) {
      check_keys(*wj,
                 {"w_progress", "w_sinr", "w_alt", "c_col", "c_obs", "c_area", "b_reach",
                  "c_unreach", "s_qos_db", "s_hi_db", "dist_norm_m"},
                 "env.weights");
      auto& ww = cfg.env.weights;
      ww.w_progress = opt_value<double>(*wj, "w_progress", ww.w_progress, "env.weights", prov);
      ww.w_sinr = opt_value<double>(*wj, "w_sinr", ww.w_sinr, "env.weights", prov);
      ww.w_alt = opt_value<double>(*wj, "w_alt", ww.w_alt, "env.weights", prov);
      ww.c_col = opt_value<double>(*wj, "c_col", ww.c_col, "env.weights", prov);
      ww.c_obs = opt_value<double>(*wj, "c_obs", ww.c_obs, "env.weights", prov);
      ww.c_area = opt_value<double>(*wj, "c_area", ww.c_area, "env.weights", prov);
      ww.b_reach = opt_value<double>(*wj, "b_reach", ww.b_reach, "env.weights", prov);
      ww.c_unreach = opt_value<double>(*wj, "c_unreach", ww.c_unreach, "env.weights", prov);
      ww.s_qos_db = opt_value<double>(*wj, "s_qos_db", ww.s_qos_db, "env.weights", prov);
      ww.s_hi_db = opt_value<double>(*wj, "s_hi_db", ww.s_hi_db, "env.weights", prov);
      ww.dist_norm_m = opt_value<double>(*wj, "dist_norm_m", ww.dist_norm_m, "env.weights", prov);
    }
    if (const json* oj = opt_node(*ej, "obs", "env", prov)) {
      check_keys(*oj,
                 {"patch_k", "neighbors", "sinr_lo_db", "sinr_hi_db", "h_scale_m",
                  "neighbor_range_m", "include_sinr"},
                 "env.obs");
      auto& oo = cfg.env.obs;
      oo.patch_k = opt_value<int>(*oj, "patch_k", oo.patch_k, "env.obs", prov);
      oo.neighbors = opt_value<int>(*oj, "neighbors", oo.neighbors, "env.obs", prov);
      oo.sinr_lo_db = opt_value<double>(*oj, "sinr_lo_db", oo.sinr_lo_db, "env.obs", prov);
      oo.sinr_hi_db = opt_value<double>(*oj, "sinr_hi_db", oo.sinr_hi_db, "env.obs", prov);
      oo.h_scale_m = opt_value<double>(*oj, "h_scale_m", oo.h_scale_m, "env.obs", prov);
      oo.neighbor_range_m =
          opt_value<double>(*oj, "neighbor_range_m", oo.neighbor_range_m, "env.obs", prov);
      oo.include_sinr = opt_value<bool>(*oj, "include_sinr", oo.include_sinr, "env.obs", prov);
    }
  }

  cfg.validate();
  return cfg;
}

/// Loads and fully validates a scenario file. Defaults are filled for absent
/// optional fields and recorded in the provenance list.
inline ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open scenario file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ParseError("scenario parse error in " + path + ": " + e.what());
  }
  try {
    return parse_scenario(j);
  } catch (const json::exception& e) {
    throw ValidationError("scenario field error in " + path + ": " + e.what());
  }
}

inline json save_scenario(const ScenarioConfig& cfg) {
  json w{{"grid",
          {{"nx", cfg.nx}, {"ny", cfg.ny}, {"cell_size", cfg.cell_size},
           {"origin", {cfg.origin.x, cfg.origin.y}}}}};
  if (cfg.buildings.has_value()) {
    json bl = json::array();
    for (const auto& b : *cfg.buildings) {
      bl.push_back({{"x_min", b.x_min}, {"y_min", b.y_min}, {"x_max", b.x_max},
                    {"y_max", b.y_max}, {"height", b.height}});
    }
    w["buildings"] = std::move(bl);
  } else {
    w["heights"] = cfg.map.height;
  }
  if (cfg.terrain.has_value()) w["terrain"] = *cfg.terrain;

  json targets = json::array();
  for (const auto& t : cfg.mission.targets) targets.push_back({t.x, t.y, t.z});

  json sites = json::array();
  for (const auto& s : cfg.sites) {
    sites.push_back({{"id", s.id}, {"position", {s.position.x, s.position.y, s.position.z}},
                     {"tx_power_dbm", s.tx_power_dbm}, {"antenna_gain_db", s.antenna_gain_db}});
  }

  const auto& z = cfg.mission.start_zone;
  return json{
      {"schema_version", kScenarioSchemaVersion},
      {"profile", cfg.profile},
      {"seed", cfg.seed},
      {"world", std::move(w)},
      {"mission",
       {{"start_zone",
         {{"x_min", z.x_min}, {"x_max", z.x_max}, {"y_min", z.y_min}, {"y_max", z.y_max},
          {"z_min", z.z_min}, {"z_max", z.z_max}}},
        {"targets", std::move(targets)},
        {"mission_area",
         {{"x_min", cfg.mission.mission_area.x_min}, {"x_max", cfg.mission.mission_area.x_max},
          {"y_min", cfg.mission.mission_area.y_min}, {"y_max", cfg.mission.mission_area.y_max}}},
        {"z_min", cfg.mission.z_min},
        {"z_max", cfg.mission.z_max},
        {"reach_tolerance", cfg.mission.reach_tolerance},
        {"max_steps", cfg.mission.max_steps}}},
      {"radio",
       {{"params",
         {{"pl0_db", cfg.radio_params.pl0_db}, {"d0_m", cfg.radio_params.d0_m},
          {"n_los", cfg.radio_params.n_los}, {"n_nlos", cfg.radio_params.n_nlos},
          {"nlos_extra_db", cfg.radio_params.nlos_extra_db},
          {"shadow_sigma_los_db", cfg.radio_params.shadow_sigma_los_db},
          {"shadow_sigma_nlos_db", cfg.radio_params.shadow_sigma_nlos_db},
          {"shadow_corr_len_m", cfg.radio_params.shadow_corr_len_m},
          {"noise_power_dbm", cfg.radio_params.noise_power_dbm},
          {"fading_seed", cfg.radio_params.fading_seed}}},
        {"sites", std::move(sites)}}},
      {"semantics",
       {{"noise_sigma_m", cfg.semantics.noise_sigma_m},
        {"dropout_frac", cfg.semantics.dropout_frac},
        {"coarse_factor", cfg.semantics.coarse_factor},
        {"h_built_m", cfg.semantics.h_built_m},
        {"sigma_ref_m", cfg.semantics.sigma_ref_m},
        {"gate_threshold", cfg.semantics.gate_threshold}}},
      {"rl",
       {{"gamma", cfg.rl.gamma}, {"tau", cfg.rl.tau}, {"lr_actor", cfg.rl.lr_actor},
        {"lr_critic", cfg.rl.lr_critic}, {"batch", cfg.rl.batch},
        {"buffer_capacity", cfg.rl.buffer_capacity}, {"warmup", cfg.rl.warmup},
        {"noise_sigma_start", cfg.rl.noise_sigma_start},
        {"noise_sigma_end", cfg.rl.noise_sigma_end}, {"update_every", cfg.rl.update_every},
        {"episodes", cfg.rl.episodes}, {"seed", cfg.rl.seed},
        {"actor_hidden", cfg.rl.actor_hidden}, {"critic_hidden", cfg.rl.critic_hidden}}},
      {"clocks",
       {{"t_a1_ms", cfg.clocks.t_a1_ms}, {"t_e2_ms", cfg.clocks.t_e2_ms},
        {"inference_latency_ms", cfg.clocks.inference_latency_ms},
        {"control_deadline_ms", cfg.clocks.control_deadline_ms}}},
      {"env",
       {{"d_safe_m", cfg.env.d_safe_m},
        {"weights",
         {{"w_progress", cfg.env.weights.w_progress}, {"w_sinr", cfg.env.weights.w_sinr},
          {"w_alt", cfg.env.weights.w_alt}, {"c_col", cfg.env.weights.c_col},
          {"c_obs", cfg.env.weights.c_obs}, {"c_area", cfg.env.weights.c_area},
          {"b_reach", cfg.env.weights.b_reach}, {"c_unreach", cfg.env.weights.c_unreach},
          {"s_qos_db", cfg.env.weights.s_qos_db}, {"s_hi_db", cfg.env.weights.s_hi_db},
          {"dist_norm_m", cfg.env.weights.dist_norm_m}}},
        {"obs",
         {{"patch_k", cfg.env.obs.patch_k}, {"neighbors", cfg.env.obs.neighbors},
          {"sinr_lo_db", cfg.env.obs.sinr_lo_db}, {"sinr_hi_db", cfg.env.obs.sinr_hi_db},
          {"h_scale_m", cfg.env.obs.h_scale_m},
          {"neighbor_range_m", cfg.env.obs.neighbor_range_m},
          {"include_sinr", cfg.env.obs.include_sinr}}}}}};
}

/// Digest over the canonical saved form; identical configs digest equal
/// regardless of source file formatting.
inline std::string scenario_digest(const ScenarioConfig& cfg) {
  return hex64(fnv1a64_str(save_scenario(cfg).dump()));
}

inline void write_scenario(const ScenarioConfig& cfg, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write scenario file: " + path);
  out << save_scenario(cfg).dump(2) << '\n';
}

}  // namespace laesim::world
