#include "chainplan/neuroplanner.hpp"

#include "chainplan/artobj.hpp"
#include "chainplan/dataset.hpp"
#include "chainplan/semantics.hpp"

namespace chainplan::neuro {

namespace {

double secs_between(std::chrono::steady_clock::time_point a,
                    std::chrono::steady_clock::time_point b) {
  return std::chrono::duration<double>(b - a).count();
}

std::string trimmed(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

}  // namespace

const char* status_name(PlanStatus s) {
  switch (s) {
    case PlanStatus::valid:
      return "valid";
    case PlanStatus::invalid:
      return "invalid";
    case PlanStatus::truncated:
      return "truncated";
    case PlanStatus::provider_error:
      return "provider_error";
  }
  return "unknown";
}

nlohmann::json PlanningOutcome::to_json() const {
  nlohmann::json j;
  j["status"] = status_name(status);
  j["parsed"] = parsed;
  j["detail"] = detail;
  j["time_to_first_action"] = time_to_first_action;
  j["total_time"] = total_time;
  j["plan"] = nlohmann::json::array();
  for (const auto& step : plan.steps)
    j["plan"].push_back(pddl::render_step(step));
  return j;
}

std::string make_prompt(const pddl::ProblemDef& problem, bool no_macro_tag) {
  std::string prompt;
  if (no_macro_tag) {
    prompt = artobj::kNoMacroTag;
    prompt += '\n';
  }
  prompt += artobj::strip_statics(problem);
  prompt += dataset::kPromptTerminator;
  return prompt;
}

ActionStream::ActionStream(const pddl::DomainDef& domain,
                           const pddl::ProblemDef& problem,
                           provider::StreamPtr stream)
    : domain_(domain),
      problem_(problem),
      stream_(std::move(stream)),
      start_(std::chrono::steady_clock::now()) {}

bool ActionStream::take_line(const std::string& line) {
  const std::string body = trimmed(line);
  if (body.empty()) return true;
  if (body == "END") {
    end_line_ = true;
    return false;
  }

  pddl::PlanParse pp;
  try {
    pp = pddl::parse_plan(body);
  } catch (const pddl::ParseError& e) {
    malformed_ = true;
    outcome_.detail = std::string("malformed action line: ") + e.what();
    return false;
  }
  if (pp.plan.steps.size() != 1 || pp.end_sentinel) {
    malformed_ = true;
    outcome_.detail = "malformed action line: expected one timestamped action";
    return false;
  }
  pddl::PlanStep step = std::move(pp.plan.steps[0]);
  if (step.ticks <= prev_ticks_) {
    malformed_ = true;
    outcome_.detail = "malformed action line: non-increasing timestamp";
    return false;
  }
  prev_ticks_ = step.ticks;
  if (!first_action_) first_action_ = std::chrono::steady_clock::now();
  collected_.steps.push_back(step);
  ready_.push_back(std::move(step));
  return true;
}

void ActionStream::finish() {
  if (finished_) return;
  finished_ = true;

  const auto now = std::chrono::steady_clock::now();
  outcome_.total_time = secs_between(start_, now);
  outcome_.time_to_first_action =
      first_action_ ? secs_between(start_, *first_action_)
                    : outcome_.total_time;
  outcome_.parsed = !collected_.steps.empty();
  outcome_.plan = collected_;

  if (malformed_) {
    outcome_.status = PlanStatus::invalid;
    return;
  }

  const provider::StreamStatus s = end_line_
                                       ? provider::StreamStatus::stopped
                                       : stream_->status();
  switch (s) {
    case provider::StreamStatus::stopped: {
      sem::ValidationReport report =
          sem::validate_plan(domain_, problem_, collected_);
      if (report.valid()) {
        outcome_.status = PlanStatus::valid;
        outcome_.detail = "";
      } else {
        outcome_.status = PlanStatus::invalid;
        outcome_.detail = report.verdict_text() + ": " + report.reason;
      }
      break;
    }
    case provider::StreamStatus::truncated:
      outcome_.status = PlanStatus::truncated;
      outcome_.detail = "completion cut off by the token budget";
      break;
    case provider::StreamStatus::cancelled:
      outcome_.status = PlanStatus::provider_error;
      outcome_.detail = "cancelled";
      break;
    case provider::StreamStatus::error:
    case provider::StreamStatus::pending:
      outcome_.status = PlanStatus::provider_error;
      outcome_.detail = stream_->error_detail();
      break;
  }
}

std::optional<pddl::PlanStep> ActionStream::next() {
  if (!ready_.empty()) {
    pddl::PlanStep step = std::move(ready_.front());
    ready_.pop_front();
    return step;
  }
  while (!finished_) {
    std::optional<provider::Chunk> chunk = stream_->next();
    if (!chunk) {
      // a cleanly stopped stream may leave one unterminated final line
      if (!end_line_ && !malformed_ &&
          stream_->status() == provider::StreamStatus::stopped)
        take_line(linebuf_);
      linebuf_.clear();
      finish();
      break;
    }
    linebuf_ += chunk->text;
    bool keep_reading = true;
    std::size_t eol;
    while (keep_reading && (eol = linebuf_.find('\n')) != std::string::npos) {
      const std::string line = linebuf_.substr(0, eol);
      linebuf_.erase(0, eol + 1);
      keep_reading = take_line(line);
    }
    if (!keep_reading) {
      stream_->cancel();  // END or a malformed line: nothing more to read
      finish();
      break;
    }
    if (!ready_.empty()) break;
  }
  if (!ready_.empty()) {
    pddl::PlanStep step = std::move(ready_.front());
    ready_.pop_front();
    return step;
  }
  return std::nullopt;
}

void ActionStream::cancel() {
  stream_->cancel();
  ready_.clear();
  finish();
}

void ActionStream::cancel_provider() { stream_->cancel(); }

PlanningOutcome plan_end_to_end(const pddl::DomainDef& domain,
                                const pddl::ProblemDef& problem,
                                provider::Provider& prov,
                                const PlannerConfig& cfg) {
  provider::CompletionRequest req = cfg.request;
  req.prompt = make_prompt(problem, cfg.no_macro_tag);
  req.stream = false;
  ActionStream actions(domain, problem, prov.complete(req));
  while (actions.next()) {
  }
  return actions.outcome();
}

std::unique_ptr<ActionStream> plan_streaming(const pddl::DomainDef& domain,
                                             const pddl::ProblemDef& problem,
                                             provider::Provider& prov,
                                             const PlannerConfig& cfg) {
  provider::CompletionRequest req = cfg.request;
  req.prompt = make_prompt(problem, cfg.no_macro_tag);
  req.stream = true;
  return std::make_unique<ActionStream>(domain, problem, prov.complete(req));
}

}  // namespace chainplan::neuro
