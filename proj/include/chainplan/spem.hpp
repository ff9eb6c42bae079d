// Simultaneous Planning and Execution Monitor.
//
// A feeder thread moves actions from the planner's stream into a FIFO buffer;
// the executor pops them one at a time and gates each on two checks before
// execution: (a) the goal has not changed since planning started, (b) the
// action's preconditions hold in the current world. A failed check cancels
// the stream, clears the buffer atomically, and replans from the current
// state and goal, up to a replan limit. Disturbances mutate the world between
// actions, triggered by executed-action counts. The episode stops early as
// soon as the goal holds.

#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "chainplan/neuroplanner.hpp"
#include "chainplan/pddl.hpp"
#include "chainplan/provider.hpp"
#include "chainplan/semantics.hpp"

namespace chainplan::spem {

struct Disturbance {
  std::size_t after = 0;  // fires once the executed-action count reaches this
  std::vector<pddl::Atom> set;
  std::vector<pddl::Atom> unset;
  std::optional<pddl::Condition> new_goal;
};

using DisturbanceSchedule = std::vector<Disturbance>;

DisturbanceSchedule schedule_from_json(const nlohmann::json& j);
nlohmann::json schedule_to_json(const DisturbanceSchedule& schedule);

struct ExecConfig {
  int action_ms = 250;  // simulated action duration; 0 for logic-only tests
  int replan_limit = 5;
};

enum class EventKind {
  action_executed,
  spem_reject,
  replan_started,
  replan_ready,
  disturbance,
  goal_reached,
  failure,
};

const char* event_name(EventKind k);

struct Event {
  double t = 0.0;  // seconds since episode start
  EventKind kind = EventKind::failure;
  std::string detail;
};

struct ExecutionTrace {
  std::vector<Event> events;

  std::size_t count(EventKind kind) const;
  nlohmann::json to_json() const;
};

struct EpisodeMetrics {
  double wait_before_first_action = 0.0;
  double makespan = 0.0;
  int replans = 0;
  std::vector<double> replan_waits;

  nlohmann::json to_json() const;
};

struct EpisodeResult {
  bool goal_reached = false;
  ExecutionTrace trace;
  EpisodeMetrics metrics;
  std::vector<std::string> final_state;  // rendered, sorted
  std::vector<std::string> executed;     // action signatures in order

  nlohmann::json to_json() const;
};

struct WorldState {
  sem::State state;
  pddl::Condition goal;
};

struct CheckResult {
  bool pass = false;
  std::string reason;  // "goal-changed" | "precondition" | "unknown-action"
  std::vector<std::string> failing_atoms;
};

// Check (a) dominates: a changed goal rejects even when preconditions hold.
CheckResult spem_check(sem::GroundContext& ctx, const WorldState& world,
                       const pddl::Condition& goal_at_plan_time,
                       const pddl::PlanStep& next);

EpisodeResult run_episode(const pddl::DomainDef& domain,
                          const pddl::ProblemDef& problem,
                          provider::Provider& prov,
                          const neuro::PlannerConfig& planner_cfg,
                          const DisturbanceSchedule& schedule,
                          const ExecConfig& exec);

// -- metrics arithmetic ------------------------------------------------------

struct EpisodeRecord {
  std::string condition;
  bool valid = false;
  bool has_plan = false;
  std::size_t plan_length = 0;
  double total_time = 0.0;
  double time_to_first_action = 0.0;
  int replans = 0;
};

struct ConditionSummary {
  std::size_t episodes = 0;
  double validity_pct = 0.0;      // over all episodes
  double mean_plan_length = 0.0;  // over episodes with a parsed plan
  std::size_t max_plan_length = 0;
  double t_max = 0.0;  // over total_time, all episodes
  double t_avg = 0.0;
  double t_std = 0.0;  // population standard deviation
  double first_action_avg = 0.0;
  double first_action_std = 0.0;

  nlohmann::json to_json() const;
};

std::map<std::string, ConditionSummary> summarize(
    const std::vector<EpisodeRecord>& records);

// 1 - mean(first-action wait) / mean(full-plan wait)
double wait_reduction(const ConditionSummary& streaming,
                      const ConditionSummary& end_to_end);

nlohmann::json summary_to_json(
    const std::map<std::string, ConditionSummary>& summary);

}  // namespace chainplan::spem
