// Fine-tuning dataset pipeline: problem/plan pairs rendered into prompt and
// completion strings with fixed terminators, split management with
// contamination checks, JSONL serialization, and a re-validating audit.
//
// Sample format (byte-exact):
//   prompt     = [tag line] + compact problem text + "\n\n###\n\n"
//   completion = " " + one timestamped action per line + "\nEND"

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "chainplan/artobj.hpp"
#include "chainplan/pddl.hpp"
#include "chainplan/solver.hpp"

namespace chainplan::dataset {

inline constexpr const char* kPromptTerminator = "\n\n###\n\n";
inline constexpr const char* kCompletionEnd = "\nEND";
inline constexpr std::size_t kDefaultTokenBudget = 2048;

// Crude but monotone: the provider-side rule of thumb that one token is about
// four characters; used only for budget gating.
std::size_t estimate_tokens(std::string_view text);

struct TrainingSample {
  std::string prompt;
  std::string completion;
  std::string problem_id;  // bookkeeping only; not serialized

  bool operator==(const TrainingSample& other) const {
    return prompt == other.prompt && completion == other.completion;
  }
};

struct SampleOverBudget : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SampleSpec {
  std::optional<std::string> domain_tag;  // e.g. artobj::kNoMacroTag
  std::size_t token_budget = kDefaultTokenBudget;
};

// Throws SampleOverBudget when the combined token estimate exceeds the
// budget. The plan is re-stamped onto the canonical timestamp stride.
TrainingSample build_sample(const artobj::GeneratedProblem& gp,
                            const pddl::Plan& plan,
                            const SampleSpec& spec = {});

struct BuildConfig {
  std::size_t n_total = 500;
  double train_ratio = 0.8;
  double validation_ratio = 0.1;
  double test_ratio = 0.1;
  std::uint64_t seed = 1;
  artobj::ChainConfig chain;  // tag is attached iff !chain.use_macros
  int walk_min = 1;
  int walk_max = 5;
  solver::SearchBudget budget;
  std::size_t token_budget = kDefaultTokenBudget;
  std::vector<std::size_t> staged_sizes;  // nested train prefixes to emit
};

struct DropRecord {
  std::string problem_id;
  std::string split;
  std::string reason;  // "solver-failure" | "over-budget" | "duplicate"
};

struct BuildReport {
  std::size_t requested = 0;
  std::size_t kept = 0;
  std::size_t failures = 0;  // solver failures only, as in the source counts
  std::vector<DropRecord> drops;

  nlohmann::json to_json() const;
};

struct DatasetSplits {
  std::vector<TrainingSample> train;
  std::vector<TrainingSample> validation;
  std::vector<TrainingSample> test;
};

struct BuildResult {
  DatasetSplits splits;
  BuildReport report;
};

using SolveFn = std::function<solver::SolveResult(
    sem::GroundContext&, const sem::State&, const pddl::Condition&,
    const solver::SearchBudget&)>;

// Generates n_total problems, assigns them to splits by index range, solves
// each and drops failures from their split (so a failing solver shrinks the
// split, it does not shift the boundaries), builds samples, and de-duplicates
// prompts across splits. Deterministic for a fixed config.
BuildResult build_splits(const BuildConfig& cfg, SolveFn solve = {});

void write_jsonl(const std::vector<TrainingSample>& split,
                 const std::string& path);
std::vector<TrainingSample> read_jsonl(const std::string& path);

// Nested train prefixes at the requested sizes; sizes beyond the split are
// skipped (a prefix is only meaningful when it is a strict subset or the
// whole split).
std::vector<std::pair<std::size_t, std::vector<TrainingSample>>>
staged_prefixes(const std::vector<TrainingSample>& train,
                const std::vector<std::size_t>& sizes);

struct Violation {
  std::string sample_id;
  std::string kind;  // "terminator" | "validation" | "contamination" | ...
  std::string detail;
};

struct AuditReport {
  std::size_t samples_checked = 0;
  std::vector<Violation> violations;

  bool clean() const { return violations.empty(); }
  nlohmann::json to_json() const;
  static AuditReport from_json(const nlohmann::json& j);
};

// Re-validates every completion against its reconstituted problem, checks
// terminators byte-exactly, the tag (present on every prompt iff expect_tag),
// the token budget, and cross-split prompt duplicates.
AuditReport audit_dataset(const DatasetSplits& splits,
                          const pddl::DomainDef& domain,
                          const artobj::ChainConfig& cfg, bool expect_tag,
                          std::size_t token_budget = kDefaultTokenBudget);

}  // namespace chainplan::dataset
