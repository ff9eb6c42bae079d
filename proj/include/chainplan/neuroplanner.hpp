// The planner facade over a completion provider: render a problem into a
// prompt, collect or stream the completion, parse it as a plan, validate.
//
// Streaming treats every completed line as one action (the END line
// terminates the stream and is not an action); a malformed line aborts the
// stream as invalid. The facade never retries — replanning policy belongs to
// the caller.

#pragma once

#include <chrono>
#include <cstdint>
#include <deque>
#include <memory>
#include <optional>
#include <string>

#include <json.hpp>

#include "chainplan/pddl.hpp"
#include "chainplan/provider.hpp"

namespace chainplan::neuro {

enum class PlanStatus { valid, invalid, truncated, provider_error };

const char* status_name(PlanStatus s);

struct PlanningOutcome {
  PlanStatus status = PlanStatus::provider_error;
  pddl::Plan plan;     // parsed steps; possibly partial when truncated
  bool parsed = false; // some plan text was parsed into steps
  std::string detail;
  double time_to_first_action = 0.0;  // seconds
  double total_time = 0.0;

  nlohmann::json to_json() const;
};

struct PlannerConfig {
  provider::CompletionRequest request;  // prompt is overwritten per call
  bool no_macro_tag = false;
};

// Compact prompt for a problem: optional domain tag, dynamic init and goal,
// prompt terminator.
std::string make_prompt(const pddl::ProblemDef& problem, bool no_macro_tag);

PlanningOutcome plan_end_to_end(const pddl::DomainDef& domain,
                                const pddl::ProblemDef& problem,
                                provider::Provider& prov,
                                const PlannerConfig& cfg = {});

// Single-consumer incremental action stream. outcome() is complete once
// next() has returned nullopt (or the stream was cancelled).
class ActionStream {
 public:
  ActionStream(const pddl::DomainDef& domain, const pddl::ProblemDef& problem,
               provider::StreamPtr stream);

  std::optional<pddl::PlanStep> next();
  void cancel();
  // Thread-safe, unlike next()/cancel(): cancels only the underlying provider
  // stream so a next() blocked on another thread unblocks and winds down
  // there. All other state stays owned by the consuming thread.
  void cancel_provider();
  const PlanningOutcome& outcome() const { return outcome_; }

 private:
  void finish();
  bool take_line(const std::string& line);

  pddl::DomainDef domain_;
  pddl::ProblemDef problem_;
  provider::StreamPtr stream_;
  std::string linebuf_;
  std::deque<pddl::PlanStep> ready_;
  pddl::Plan collected_;
  std::int64_t prev_ticks_ = -1;
  bool finished_ = false;
  bool end_line_ = false;   // an explicit END line arrived as text
  bool malformed_ = false;  // a line failed to parse as an action
  std::chrono::steady_clock::time_point start_;
  std::optional<std::chrono::steady_clock::time_point> first_action_;
  PlanningOutcome outcome_;
};

std::unique_ptr<ActionStream> plan_streaming(const pddl::DomainDef& domain,
                                             const pddl::ProblemDef& problem,
                                             provider::Provider& prov,
                                             const PlannerConfig& cfg = {});

}  // namespace chainplan::neuro
