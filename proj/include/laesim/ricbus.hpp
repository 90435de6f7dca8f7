#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <queue>
#include <string>
#include <vector>

#include <json.hpp>

#include "laesim/agentenv.hpp"
#include "laesim/clocks.hpp"
#include "laesim/common.hpp"
#include "laesim/scenario.hpp"
#include "laesim/semantics.hpp"
#include "laesim/version.hpp"

namespace laesim::ric {

using nlohmann::json;

/// Event priorities at equal timestamps; realizes the rApp -> xApp -> RAN ->
/// swarm flow as a strict total order.
enum class EventKind : int {
  A1Publish = 0,
  E2Kpm = 1,
  XappDecide = 2,
  E2Control = 3,
  EnvStep = 4,
};

inline const char* event_kind_name(EventKind k) {
  switch (k) {
    case EventKind::A1Publish: return "a1_publish";
    case EventKind::E2Kpm: return "e2_kpm";
    case EventKind::XappDecide: return "xapp_decide";
    case EventKind::E2Control: return "e2_control";
    case EventKind::EnvStep: return "env_step";
  }
  return "?";
}

struct Event {
  std::int64_t time_ms = 0;
  EventKind kind = EventKind::A1Publish;
  std::uint64_t seq = 0;  // insertion order; breaks (time, kind) ties
  int agent = -1;
  int tick = -1;
};

/// Deterministic discrete-event queue: pop order is exactly
/// (time, priority, sequence) ascending. Scheduling into the past throws.
class EventQueue {
 public:
  void schedule(Event ev) {
    if (ev.time_ms < now_)
      throw ValidationError("schedule: event at " + std::to_string(ev.time_ms) +
                            " ms is before current time " + std::to_string(now_) + " ms");
    ev.seq = next_seq_++;
    heap_.push(ev);
  }

  bool empty() const { return heap_.empty(); }
  std::int64_t now() const { return now_; }

  Event next_event() {
    if (heap_.empty()) throw ValidationError("next_event: queue empty");
    Event ev = heap_.top();
    heap_.pop();
    now_ = ev.time_ms;
    return ev;
  }

 private:
  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      if (a.time_ms != b.time_ms) return a.time_ms > b.time_ms;
      if (a.kind != b.kind) return static_cast<int>(a.kind) > static_cast<int>(b.kind);
      return a.seq > b.seq;
    }
  };
  std::priority_queue<Event, std::vector<Event>, Later> heap_;
  std::int64_t now_ = 0;
  std::uint64_t next_seq_ = 0;
};

/// KPM report carried over E2: SINR and UAV position.
struct E2KpmReport {
  int version = kMessageSchemaVersion;
  int agent = 0;
  std::int64_t timestamp_ms = 0;
  Vec3 position{};
  int serving_id = -1;
  double sinr_db = 0.0;

  bool operator==(const E2KpmReport& o) const {
    return version == o.version && agent == o.agent && timestamp_ms == o.timestamp_ms &&
           position == o.position && serving_id == o.serving_id && sinr_db == o.sinr_db;
  }
};

/// Control command issued by the xApp in response to one KPM report.
struct E2ControlMessage {
  int version = kMessageSchemaVersion;
  int agent = 0;
  env::Action action{};
  std::int64_t kpm_timestamp_ms = 0;
  std::int64_t issue_timestamp_ms = 0;

  bool operator==(const E2ControlMessage& o) const {
    return version == o.version && agent == o.agent && action.d_heading == o.action.d_heading &&
           action.d_alt == o.action.d_alt && action.dist == o.action.dist &&
           kpm_timestamp_ms == o.kpm_timestamp_ms && issue_timestamp_ms == o.issue_timestamp_ms;
  }
};

inline json kpm_to_json(const E2KpmReport& m) {
  return json{{"version", m.version},
              {"type", "kpm"},
              {"agent", m.agent},
              {"t_ms", m.timestamp_ms},
              {"position", {m.position.x, m.position.y, m.position.z}},
              {"serving_id", m.serving_id},
              {"sinr_db", m.sinr_db}};
}

inline void check_message_version(const json& j, const char* what) {
  const int v = j.at("version").get<int>();
  if (v != kMessageSchemaVersion)
    throw VersionError(std::string(what) + ": version " + std::to_string(v) +
                       " unsupported (expected " + std::to_string(kMessageSchemaVersion) + ")");
}

inline E2KpmReport kpm_from_json(const json& j) {
  check_message_version(j, "kpm");
  E2KpmReport m;
  m.agent = j.at("agent").get<int>();
  m.timestamp_ms = j.at("t_ms").get<std::int64_t>();
  const auto& p = j.at("position");
  if (!p.is_array() || p.size() != 3) throw ParseError("kpm: position must be [x, y, z]");
  m.position = Vec3{p[0].get<double>(), p[1].get<double>(), p[2].get<double>()};
  m.serving_id = j.at("serving_id").get<int>();
  m.sinr_db = j.at("sinr_db").get<double>();
  return m;
}

inline json control_to_json(const E2ControlMessage& m) {
  return json{{"version", m.version},
              {"type", "control"},
              {"agent", m.agent},
              {"action", {{"dh", m.action.d_heading}, {"dz", m.action.d_alt}, {"dist", m.action.dist}}},
              {"kpm_t_ms", m.kpm_timestamp_ms},
              {"issue_t_ms", m.issue_timestamp_ms}};
}

inline E2ControlMessage control_from_json(const json& j) {
  check_message_version(j, "control");
  E2ControlMessage m;
  m.agent = j.at("agent").get<int>();
  const auto& a = j.at("action");
  m.action = env::Action{a.at("dh").get<double>(), a.at("dz").get<double>(),
                         a.at("dist").get<double>()};
  m.kpm_timestamp_ms = j.at("kpm_t_ms").get<std::int64_t>();
  m.issue_timestamp_ms = j.at("issue_t_ms").get<std::int64_t>();
  if (m.issue_timestamp_ms < m.kpm_timestamp_ms)
    throw ValidationError("control: issue timestamp before kpm timestamp");
  return m;
}

/// Bytes-on-the-wire helpers shared by every message type.
template <typename Msg, typename ToJson>
std::string serialize_message(const Msg& m, ToJson&& to_json_fn) {
  return to_json_fn(m).dump();
}

template <typename FromJson>
auto deserialize_message(const std::string& bytes, FromJson&& from_json_fn) {
  json j;
  try {
    j = json::parse(bytes);
  } catch (const json::exception& e) {
    throw ParseError(std::string("message parse error: ") + e.what());
  }
  try {
    return from_json_fn(j);
  } catch (const json::out_of_range& e) {
    throw ParseError(std::string("message field missing: ") + e.what());
  } catch (const json::type_error& e) {
    throw ParseError(std::string("message field type error: ") + e.what());
  }
}

/// One stored swarm transition: joint observations and actions, per-agent
/// rewards and done flags.
struct Transition {
  std::vector<std::vector<double>> obs;       // per agent
  std::vector<env::ActionVec> actions;        // normalized, per agent
  std::vector<double> rewards;                // per agent
  std::vector<std::vector<double>> next_obs;  // per agent
  std::vector<std::uint8_t> dones;            // per agent (reached or dead)
  bool done_all = false;
};

/// What the xApp sees when it must act.
struct DecisionContext {
  int tick = 0;
  std::int64_t t_ms = 0;
  const std::vector<env::AgentState>* states = nullptr;
  const world::MissionSpec* mission = nullptr;
  const std::vector<std::vector<double>>* observations = nullptr;
};

class Policy {
 public:
  virtual ~Policy() = default;
  virtual std::vector<env::ActionVec> act(const DecisionContext& ctx) = 0;
};

/// Training-side hooks; the runner pushes each completed transition.
class TrainHooks {
 public:
  virtual ~TrainHooks() = default;
  virtual void on_transition(const Transition& t) = 0;
};

enum class RunMode { Train, Eval };

struct TickAgentRecord {
  std::int64_t t_ms = 0;
  int tick = 0;
  int agent = 0;
  Vec3 position{};
  double heading = 0.0;
  double sinr_db = 0.0;
  int serving_id = -1;
  env::Action action{};
  env::RewardBreakdown reward{};
  env::StepFlags flags{};
};

/// Complete, ordered record of one mission run.
struct EpisodeLog {
  std::uint64_t episode_seed = 0;
  std::vector<Vec3> start_positions;
  std::vector<Vec3> targets;
  std::vector<TickAgentRecord> ticks;  // per tick per agent, in event order
  std::vector<std::string> message_lines;  // interleaved message summaries (eval detail)

  long env_steps = 0;
  long a1_publishes = 0;
  long kpm_reports = 0;
  long control_messages = 0;
  long deadline_violations = 0;
  long collision_events = 0;
  long obstacle_strikes = 0;
  long out_of_area_steps = 0;

  double episode_return = 0.0;  // sum over steps of the team-mean reward
  std::vector<double> agent_returns;
  std::vector<std::uint8_t> reached;
  bool truncated = false;

  void write_jsonl(std::ostream& os) const {
    std::size_t mi = 0;
    // message lines carry their own t_ms; interleave by walking both streams
    auto msg_time = [&](std::size_t i) {
      const auto j = json::parse(message_lines[i]);
      return j.at("t_ms").get<std::int64_t>();
    };
    for (const auto& r : ticks) {
      while (mi < message_lines.size() && msg_time(mi) <= r.t_ms) os << message_lines[mi++] << '\n';
      os << json{{"t_ms", r.t_ms},
                 {"tick", r.tick},
                 {"agent", r.agent},
                 {"x", r.position.x},
                 {"y", r.position.y},
                 {"z", r.position.z},
                 {"heading", r.heading},
                 {"sinr_db", r.sinr_db},
                 {"serving_id", r.serving_id},
                 {"action", {{"dh", r.action.d_heading}, {"dz", r.action.d_alt}, {"dist", r.action.dist}}},
                 {"reward",
                  {{"progress", r.reward.progress}, {"sinr", r.reward.sinr},
                   {"collision", r.reward.collision}, {"altitude", r.reward.altitude},
                   {"area", r.reward.area}, {"obstacle", r.reward.obstacle},
                   {"terminal", r.reward.terminal}, {"total", r.reward.total}}},
                 {"flags",
                  {{"obstacle", r.flags.obstacle_strike}, {"collision", r.flags.separation_violation},
                   {"reached", r.flags.reached_now}, {"out_of_area", r.flags.out_of_area},
                   {"clamped", r.flags.clamped}, {"truncated", r.flags.truncated}}}}
                    .dump()
         << '\n';
    }
    while (mi < message_lines.size()) os << message_lines[mi++] << '\n';
  }
};

/// Executes the closed control loop over simulated A1/E2 interfaces: the
/// Non-RT pipeline publishes gated semantics at each A1 tick; at each E2 tick
/// the xApp turns KPM reports and the latest A1 snapshot into control
/// commands, which the environment applies one step per period. Control
/// issued later than the deadline budget is counted, not dropped.
inline EpisodeLog run_mission(const world::ScenarioConfig& scenario, Policy& policy, RunMode mode,
                              TrainHooks* hooks = nullptr, std::uint64_t episode_seed = 0,
                              bool detailed_log = true, bool obstacle_terminal = true) {
  const auto& clocks = scenario.clocks;
  clocks.validate();

  env::SwarmEnv sim(scenario.map, scenario.mission, scenario.sites, scenario.radio_params,
                    scenario.env.weights, scenario.env.obs, scenario.env.d_safe_m,
                    obstacle_terminal);
  sim.reset(mix_seed({scenario.seed, episode_seed}));

  EpisodeLog log;
  log.episode_seed = episode_seed;
  log.targets = scenario.mission.targets;
  log.agent_returns.assign(static_cast<std::size_t>(sim.agent_count()), 0.0);
  for (const auto& s : sim.states()) log.start_positions.push_back(s.position);

  EventQueue queue;
  const int n = sim.agent_count();
  for (int k = 0; k < scenario.mission.max_steps; ++k) {
    const std::int64_t t = k * clocks.t_e2_ms;
    for (int a = 0; a < n; ++a)
      queue.schedule(Event{t, EventKind::E2Kpm, 0, a, k});
    queue.schedule(Event{t, EventKind::XappDecide, 0, -1, k});
  }
  queue.schedule(Event{0, EventKind::A1Publish, 0, -1, -1});

  std::optional<sem::A1Message> latest_a1;
  long a1_index = 0;
  bool done = false;

  // decisions keyed by tick; with inference latency above t_e2 several can be
  // in flight at once
  struct DecidedTick {
    std::vector<std::vector<double>> obs;
    std::vector<env::ActionVec> actions;
  };
  std::map<int, DecidedTick> decisions;

  auto push_message = [&](json j) {
    if (detailed_log) log.message_lines.push_back(j.dump());
  };

  while (!queue.empty()) {
    const Event ev = queue.next_event();
    if (done) continue;
    switch (ev.kind) {
      case EventKind::A1Publish: {
        const std::uint64_t seed =
            mix_seed({scenario.seed, episode_seed, static_cast<std::uint64_t>(a1_index),
                      0x41315055ull});  // "A1PU"
        latest_a1 = sem::run_rapp(scenario.map, scenario.semantics, seed, ev.time_ms);
        ++a1_index;
        ++log.a1_publishes;
        push_message(json{{"t_ms", ev.time_ms},
                          {"type", "a1_publish"},
                          {"digest", hex64(latest_a1->digest)},
                          {"gate_threshold", latest_a1->map.gate_threshold}});
        queue.schedule(Event{ev.time_ms + clocks.t_a1_ms, EventKind::A1Publish, 0, -1, -1});
        break;
      }
      case EventKind::E2Kpm: {
        const auto& st = sim.states()[static_cast<std::size_t>(ev.agent)];
        const auto& sample = sim.sinr_samples()[static_cast<std::size_t>(ev.agent)];
        E2KpmReport kpm;
        kpm.agent = ev.agent;
        kpm.timestamp_ms = ev.time_ms;
        kpm.position = st.position;
        kpm.serving_id = sample.serving_id;
        kpm.sinr_db = sample.sinr_db;
        ++log.kpm_reports;
        push_message(kpm_to_json(kpm));
        break;
      }
      case EventKind::XappDecide: {
        const sem::SemanticFeatureMap* a1_map = latest_a1 ? &latest_a1->map : nullptr;
        std::vector<std::vector<double>> obs;
        obs.reserve(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) obs.push_back(sim.observation(a1_map, i));
        DecisionContext ctx;
        ctx.tick = ev.tick;
        ctx.t_ms = ev.time_ms;
        ctx.states = &sim.states();
        ctx.mission = &scenario.mission;
        ctx.observations = &obs;
        std::vector<env::ActionVec> actions = policy.act(ctx);
        if (static_cast<int>(actions.size()) != n)
          throw ValidationError("policy: one action per agent");
        const std::int64_t issue = ev.time_ms + clocks.inference_latency_ms;
        for (int i = 0; i < n; ++i) {
          ++log.control_messages;
          if (issue - ev.time_ms > clocks.control_deadline_ms) ++log.deadline_violations;
          queue.schedule(Event{issue, EventKind::E2Control, 0, i, ev.tick});
        }
        decisions[ev.tick] = DecidedTick{std::move(obs), std::move(actions)};
        queue.schedule(Event{issue, EventKind::EnvStep, 0, -1, ev.tick});
        break;
      }
      case EventKind::E2Control: {
        auto it = decisions.find(ev.tick);
        if (detailed_log && it != decisions.end()) {
          E2ControlMessage ctrl;
          ctrl.agent = ev.agent;
          ctrl.action =
              env::scale_action(it->second.actions[static_cast<std::size_t>(ev.agent)]);
          ctrl.kpm_timestamp_ms = static_cast<std::int64_t>(ev.tick) * clocks.t_e2_ms;
          ctrl.issue_timestamp_ms = ev.time_ms;
          json cj = control_to_json(ctrl);
          cj["t_ms"] = ev.time_ms;
          push_message(std::move(cj));
        }
        break;
      }
      case EventKind::EnvStep: {
        auto decision_it = decisions.find(ev.tick);
        if (decision_it == decisions.end())
          throw ValidationError("env step without a matching decision");
        DecidedTick decided = std::move(decision_it->second);
        decisions.erase(decision_it);
        std::vector<env::Action> phys;
        phys.reserve(static_cast<std::size_t>(n));
        for (const auto& a : decided.actions) phys.push_back(env::scale_action(a));
        const auto results = sim.step(phys);
        ++log.env_steps;

        double team_reward = 0.0;
        for (int i = 0; i < n; ++i) {
          const auto& res = results[static_cast<std::size_t>(i)];
          const auto& st = sim.states()[static_cast<std::size_t>(i)];
          team_reward += res.reward.total;
          log.agent_returns[static_cast<std::size_t>(i)] += res.reward.total;
          if (res.flags.obstacle_strike) ++log.obstacle_strikes;
          if (res.flags.out_of_area) ++log.out_of_area_steps;
          if (detailed_log || mode == RunMode::Eval) {
            TickAgentRecord rec;
            rec.t_ms = ev.time_ms;
            rec.tick = ev.tick;
            rec.agent = i;
            rec.position = st.position;
            rec.heading = st.heading;
            rec.sinr_db = sim.sinr_samples()[static_cast<std::size_t>(i)].sinr_db;
            rec.serving_id = sim.sinr_samples()[static_cast<std::size_t>(i)].serving_id;
            rec.action = phys[static_cast<std::size_t>(i)];
            rec.reward = res.reward;
            rec.flags = res.flags;
            log.ticks.push_back(rec);
          }
        }
        team_reward /= n;
        log.episode_return += team_reward;

        if (hooks != nullptr) {
          Transition tr;
          tr.obs = std::move(decided.obs);
          tr.actions = decided.actions;
          for (int i = 0; i < n; ++i) {
            const auto& st = sim.states()[static_cast<std::size_t>(i)];
            tr.rewards.push_back(results[static_cast<std::size_t>(i)].reward.total);
            tr.dones.push_back(st.done() ? 1 : 0);
          }
          tr.done_all = true;
          for (auto d : tr.dones) tr.done_all = tr.done_all && d != 0;
          const sem::SemanticFeatureMap* a1_map = latest_a1 ? &latest_a1->map : nullptr;
          for (int i = 0; i < n; ++i) tr.next_obs.push_back(sim.observation(a1_map, i));
          hooks->on_transition(tr);
        }

        if (sim.episode_done()) {
          done = true;
          log.truncated = sim.tick() >= scenario.mission.max_steps;
        }
        break;
      }
    }
  }

  log.collision_events = sim.collision_events();
  for (const auto& s : sim.states()) log.reached.push_back(s.reached ? 1 : 0);
  return log;
}

}  // namespace laesim::ric
