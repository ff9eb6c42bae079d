#include "chainplan/spem.hpp"

#include <algorithm>
#include <cmath>
#include <condition_variable>
#include <deque>
#include <mutex>
#include <thread>

#include "chainplan/artobj.hpp"

namespace chainplan::spem {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

pddl::Atom atom_from_text(const std::string& text) {
  const std::string body = trim(text);
  if (body.size() < 2 || body.front() != '(' || body.back() != ')')
    throw std::invalid_argument("expected \"(predicate args...)\": " + text);
  std::vector<std::string> tokens;
  std::string tok;
  for (char c : body.substr(1, body.size() - 2)) {
    if (c == ' ' || c == '\t') {
      if (!tok.empty()) tokens.push_back(std::move(tok)), tok.clear();
    } else if (c == '(' || c == ')') {
      throw std::invalid_argument("nested forms are not atoms: " + text);
    } else {
      tok += c;
    }
  }
  if (!tok.empty()) tokens.push_back(std::move(tok));
  if (tokens.empty()) throw std::invalid_argument("empty atom: " + text);
  pddl::Atom a;
  a.predicate = pddl::normalize_symbol(tokens[0]);
  for (std::size_t i = 1; i < tokens.size(); ++i)
    a.args.push_back(pddl::obj(pddl::normalize_symbol(tokens[i])));
  return a;
}

pddl::Literal literal_from_text(const std::string& text) {
  const std::string body = trim(text);
  if (body.rfind("(not", 0) == 0 && body.size() > 5 && body.back() == ')') {
    pddl::Literal lit;
    lit.atom = atom_from_text(body.substr(4, body.size() - 5));
    lit.negated = true;
    return lit;
  }
  return {atom_from_text(body), false};
}

}  // namespace

DisturbanceSchedule schedule_from_json(const nlohmann::json& j) {
  DisturbanceSchedule schedule;
  for (const auto& entry : j) {
    Disturbance d;
    d.after = entry.value("after", std::size_t{0});
    for (const auto& s : entry.value("set", nlohmann::json::array()))
      d.set.push_back(atom_from_text(s.get<std::string>()));
    for (const auto& s : entry.value("unset", nlohmann::json::array()))
      d.unset.push_back(atom_from_text(s.get<std::string>()));
    if (entry.contains("goal")) {
      pddl::Condition goal;
      for (const auto& s : entry["goal"])
        goal.literals.push_back(literal_from_text(s.get<std::string>()));
      d.new_goal = std::move(goal);
    }
    schedule.push_back(std::move(d));
  }
  return schedule;
}

nlohmann::json schedule_to_json(const DisturbanceSchedule& schedule) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& d : schedule) {
    nlohmann::json entry;
    entry["after"] = d.after;
    entry["set"] = nlohmann::json::array();
    for (const auto& a : d.set) entry["set"].push_back(pddl::render_atom(a));
    entry["unset"] = nlohmann::json::array();
    for (const auto& a : d.unset)
      entry["unset"].push_back(pddl::render_atom(a));
    if (d.new_goal) {
      entry["goal"] = nlohmann::json::array();
      for (const auto& lit : d.new_goal->literals)
        entry["goal"].push_back(pddl::render_literal(lit));
    }
    j.push_back(std::move(entry));
  }
  return j;
}

const char* event_name(EventKind k) {
  switch (k) {
    case EventKind::action_executed:
      return "action_executed";
    case EventKind::spem_reject:
      return "spem_reject";
    case EventKind::replan_started:
      return "replan_started";
    case EventKind::replan_ready:
      return "replan_ready";
    case EventKind::disturbance:
      return "disturbance";
    case EventKind::goal_reached:
      return "goal_reached";
    case EventKind::failure:
      return "failure";
  }
  return "unknown";
}

std::size_t ExecutionTrace::count(EventKind kind) const {
  return static_cast<std::size_t>(
      std::count_if(events.begin(), events.end(),
                    [&](const Event& e) { return e.kind == kind; }));
}

nlohmann::json ExecutionTrace::to_json() const {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& e : events)
    j.push_back({{"t", e.t}, {"event", event_name(e.kind)}, {"detail", e.detail}});
  return j;
}

nlohmann::json EpisodeMetrics::to_json() const {
  nlohmann::json j;
  j["wait_before_first_action"] = wait_before_first_action;
  j["makespan"] = makespan;
  j["replans"] = replans;
  j["replan_waits"] = replan_waits;
  return j;
}

nlohmann::json EpisodeResult::to_json() const {
  nlohmann::json j;
  j["goal_reached"] = goal_reached;
  j["trace"] = trace.to_json();
  j["metrics"] = metrics.to_json();
  j["final_state"] = final_state;
  j["executed"] = executed;
  return j;
}

CheckResult spem_check(sem::GroundContext& ctx, const WorldState& world,
                       const pddl::Condition& goal_at_plan_time,
                       const pddl::PlanStep& next) {
  if (pddl::condition_key(world.goal) !=
      pddl::condition_key(goal_at_plan_time))
    return {false, "goal-changed", {}};

  const pddl::ActionSchema* schema = ctx.domain().find_action(next.name);
  if (schema == nullptr) return {false, "unknown-action", {next.name}};
  sem::GroundAction ga;
  try {
    ga = ctx.ground(*schema, next.args);
  } catch (const std::invalid_argument& e) {
    return {false, "unknown-action", {e.what()}};
  }

  if (sem::applicable(world.state, ga)) return {true, "", {}};

  CheckResult r;
  r.reason = "precondition";
  if (ga.impossible) {
    r.failing_atoms.push_back("statically impossible binding");
    return r;
  }
  for (auto id : ga.pre_pos)
    if (!sem::contains(world.state, id))
      r.failing_atoms.push_back(pddl::render_atom(ctx.atom(id)));
  for (auto id : ga.pre_neg)
    if (sem::contains(world.state, id))
      r.failing_atoms.push_back("(not " + pddl::render_atom(ctx.atom(id)) +
                                ")");
  return r;
}

namespace {

// FIFO handoff between the stream feeder thread and the executor.
class ActionBuffer {
 public:
  void push(pddl::PlanStep step) {
    {
      std::lock_guard<std::mutex> lk(mu_);
      queue_.push_back(std::move(step));
    }
    cv_.notify_all();
  }

  void close() {
    {
      std::lock_guard<std::mutex> lk(mu_);
      closed_ = true;
    }
    cv_.notify_all();
  }

  // Blocks until an action arrives or the feeder closed the buffer.
  std::optional<pddl::PlanStep> pop() {
    std::unique_lock<std::mutex> lk(mu_);
    cv_.wait(lk, [&] { return !queue_.empty() || closed_; });
    if (queue_.empty()) return std::nullopt;
    pddl::PlanStep step = std::move(queue_.front());
    queue_.pop_front();
    return step;
  }

  void clear() {
    std::lock_guard<std::mutex> lk(mu_);
    queue_.clear();
  }

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<pddl::PlanStep> queue_;
  bool closed_ = false;
};

}  // namespace

EpisodeResult run_episode(const pddl::DomainDef& domain,
                          const pddl::ProblemDef& problem,
                          provider::Provider& prov,
                          const neuro::PlannerConfig& planner_cfg,
                          const DisturbanceSchedule& schedule,
                          const ExecConfig& exec) {
  sem::GroundContext ctx(domain, problem);
  WorldState world{ctx.init(), problem.goal};

  EpisodeResult result;
  const auto t0 = std::chrono::steady_clock::now();
  auto since_start = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
  };
  auto note = [&](EventKind kind, std::string detail = "") {
    result.trace.events.push_back({since_start(), kind, std::move(detail)});
  };
  auto finalize = [&](bool reached) -> EpisodeResult& {
    result.goal_reached = reached;
    result.metrics.makespan = since_start();
    result.metrics.replans = static_cast<int>(
        result.trace.count(EventKind::replan_started));
    result.final_state = ctx.render_state(world.state);
    return result;
  };

  std::size_t executed_count = 0;
  std::vector<bool> fired(schedule.size(), false);
  auto apply_disturbances = [&] {
    for (std::size_t i = 0; i < schedule.size(); ++i) {
      if (fired[i] || executed_count < schedule[i].after) continue;
      fired[i] = true;
      const Disturbance& d = schedule[i];
      for (const auto& a : d.unset) {
        if (auto id = ctx.find(a)) {
          auto it = std::lower_bound(world.state.begin(), world.state.end(), *id);
          if (it != world.state.end() && *it == *id) world.state.erase(it);
        }
      }
      for (const auto& a : d.set) {
        const sem::AtomId id = ctx.intern(a);
        auto it = std::lower_bound(world.state.begin(), world.state.end(), id);
        if (it == world.state.end() || *it != id) world.state.insert(it, id);
      }
      if (d.new_goal) world.goal = *d.new_goal;
      note(EventKind::disturbance,
           "after=" + std::to_string(d.after));
    }
  };

  bool first_action_seen = false;
  int rounds = 0;

  while (true) {
    apply_disturbances();
    if (ctx.holds(world.state, world.goal)) {
      note(EventKind::goal_reached);
      return finalize(true);
    }

    if (rounds > 0) {
      if (rounds > exec.replan_limit) {
        note(EventKind::failure, "replan limit exceeded");
        return finalize(false);
      }
      note(EventKind::replan_started);
    }
    const auto round_start = std::chrono::steady_clock::now();
    ++rounds;

    // plan from the current state and goal
    pddl::ProblemDef now = problem;
    now.init.clear();
    for (auto id : world.state) now.init.push_back(ctx.atom(id));
    now.goal = world.goal;
    const pddl::Condition goal_at_plan_time = world.goal;

    std::unique_ptr<neuro::ActionStream> stream =
        neuro::plan_streaming(domain, now, prov, planner_cfg);
    ActionBuffer buffer;
    std::thread feeder([&] {
      while (auto step = stream->next()) buffer.push(*step);
      buffer.close();
    });
    auto stop_round = [&] {
      stream->cancel_provider();
      feeder.join();
      buffer.clear();
    };

    bool round_first_pop = false;
    bool want_replan = false;

    while (true) {
      apply_disturbances();
      if (ctx.holds(world.state, world.goal)) {
        stop_round();
        note(EventKind::goal_reached);
        return finalize(true);
      }

      std::optional<pddl::PlanStep> step = buffer.pop();
      if (!step) break;  // feeder closed: inspect the planning outcome below

      if (!round_first_pop) {
        round_first_pop = true;
        if (!first_action_seen) {
          first_action_seen = true;
          result.metrics.wait_before_first_action = since_start();
        }
        if (rounds > 1) {
          result.metrics.replan_waits.push_back(
              std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                            round_start)
                  .count());
          note(EventKind::replan_ready);
        }
      }

      CheckResult check = spem_check(ctx, world, goal_at_plan_time, *step);
      if (!check.pass) {
        note(EventKind::spem_reject, check.reason);
        stop_round();
        want_replan = true;
        break;
      }

      if (exec.action_ms > 0)
        std::this_thread::sleep_for(std::chrono::milliseconds(exec.action_ms));
      const pddl::ActionSchema* schema = ctx.domain().find_action(step->name);
      sem::GroundAction ga = ctx.ground(*schema, step->args);
      world.state = sem::apply(world.state, ga);
      ++executed_count;
      result.executed.push_back(ga.signature());
      note(EventKind::action_executed, ga.signature());
    }

    if (want_replan) continue;

    // the stream ended on its own
    feeder.join();
    const neuro::PlanningOutcome& outcome = stream->outcome();
    switch (outcome.status) {
      case neuro::PlanStatus::valid:
      case neuro::PlanStatus::invalid:
      case neuro::PlanStatus::truncated:
        // loop around: either the goal now holds or we replan (bounded)
        break;
      case neuro::PlanStatus::provider_error:
        note(EventKind::failure, "provider error: " + outcome.detail);
        return finalize(false);
    }
  }
}

std::map<std::string, ConditionSummary> summarize(
    const std::vector<EpisodeRecord>& records) {
  std::map<std::string, std::vector<const EpisodeRecord*>> groups;
  for (const auto& r : records) groups[r.condition].push_back(&r);

  std::map<std::string, ConditionSummary> out;
  for (const auto& [condition, group] : groups) {
    ConditionSummary s;
    s.episodes = group.size();
    const double n = static_cast<double>(group.size());

    std::size_t valid = 0;
    for (const auto* r : group)
      if (r->valid) ++valid;
    s.validity_pct = 100.0 * static_cast<double>(valid) / n;

    std::size_t with_plan = 0;
    double length_sum = 0.0;
    for (const auto* r : group) {
      if (!r->has_plan) continue;
      ++with_plan;
      length_sum += static_cast<double>(r->plan_length);
      s.max_plan_length = std::max(s.max_plan_length, r->plan_length);
    }
    if (with_plan > 0)
      s.mean_plan_length = length_sum / static_cast<double>(with_plan);

    double t_sum = 0.0;
    for (const auto* r : group) {
      s.t_max = std::max(s.t_max, r->total_time);
      t_sum += r->total_time;
    }
    s.t_avg = t_sum / n;
    double t_var = 0.0;
    for (const auto* r : group) {
      const double d = r->total_time - s.t_avg;
      t_var += d * d;
    }
    s.t_std = std::sqrt(t_var / n);

    double fa_sum = 0.0;
    for (const auto* r : group) fa_sum += r->time_to_first_action;
    s.first_action_avg = fa_sum / n;
    double fa_var = 0.0;
    for (const auto* r : group) {
      const double d = r->time_to_first_action - s.first_action_avg;
      fa_var += d * d;
    }
    s.first_action_std = std::sqrt(fa_var / n);

    out.emplace(condition, std::move(s));
  }
  return out;
}

double wait_reduction(const ConditionSummary& streaming,
                      const ConditionSummary& end_to_end) {
  if (end_to_end.t_avg <= 0.0) return 0.0;
  return 1.0 - streaming.first_action_avg / end_to_end.t_avg;
}

nlohmann::json ConditionSummary::to_json() const {
  nlohmann::json j;
  j["episodes"] = episodes;
  j["validity_pct"] = validity_pct;
  j["mean_plan_length"] = mean_plan_length;
  j["max_plan_length"] = max_plan_length;
  j["t_max"] = t_max;
  j["t_avg"] = t_avg;
  j["t_std"] = t_std;
  j["first_action_avg"] = first_action_avg;
  j["first_action_std"] = first_action_std;
  return j;
}

nlohmann::json summary_to_json(
    const std::map<std::string, ConditionSummary>& summary) {
  nlohmann::json j;
  for (const auto& [condition, s] : summary) j[condition] = s.to_json();
  return j;
}

}  // namespace chainplan::spem
