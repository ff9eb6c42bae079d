// Articulated-chain manipulation domains and problem generation.
//
// Two domain variants are emitted from one ChainConfig: the atomic variant
// ("no-macro") exposes link-to-central-grasp / rotate / release-links
// operators, the macro variant replaces the triple with compound
// grasp-<rotate>-release operators whose net effect touches angles only.
// Rotating a joint shifts every joint with a strictly greater index by the
// same increment (absolute angle representation), encoded as universally
// quantified conditional effects.
//
// Both variants share one domain name, one object universe and one dynamic
// predicate vocabulary, so a generated problem file is solvable under either.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "chainplan/pddl.hpp"
#include "chainplan/semantics.hpp"

namespace chainplan::artobj {

struct ChainConfig {
  int n_joints = 3;
  int angle_step_deg = 15;
  std::vector<int> rotation_increments_deg = {45};
  int central_joint = 2;  // 1-based
  bool use_macros = true;
  std::uint64_t seed = 0;

  void validate() const;  // throws std::invalid_argument
  std::string domain_name() const;
};

// Prompt line that marks a query against the atomic domain variant.
inline constexpr const char* kNoMacroTag = "\n--NO-MACRO";

// Predicates kept in compact prompts; everything else in :init is static
// scaffolding (connectivity, downstream relation, angle successorship).
const std::vector<std::string>& dynamic_predicates();

pddl::DomainDef make_domain(const ChainConfig& cfg);

struct GeneratedProblem {
  pddl::ProblemDef problem;
  pddl::Plan witness;
  std::string compact_prompt;
};

// Renders only the dynamic init atoms and the goal, in the fixed prompt
// layout (angles one per line, then in-centre, then gripper atoms).
std::string strip_statics(const pddl::ProblemDef& problem);

struct PromptParse {
  pddl::ProblemDef problem;
  bool no_macro_tag = false;
};

// Inverse of strip_statics: re-attaches the object universe and static atoms
// implied by cfg. Accepts a leading domain tag and a trailing prompt
// terminator, both stripped before parsing.
PromptParse parse_prompt(const std::string& prompt, const ChainConfig& cfg);

// Grounds the domain once and stamps out problems against it; the per-problem
// cost is just the random walk. Deterministic: one seed, one problem.
class Generator {
 public:
  explicit Generator(const ChainConfig& cfg);

  const ChainConfig& config() const { return cfg_; }
  const pddl::DomainDef& domain() const { return domain_; }
  sem::GroundContext& context() { return ctx_; }

  GeneratedProblem generate(std::uint64_t seed, int walk_len);

 private:
  ChainConfig cfg_;
  pddl::DomainDef domain_;
  pddl::ProblemDef template_problem_;
  sem::GroundContext ctx_;
};

// One-shot convenience wrapper around Generator.
GeneratedProblem generate_problem(const pddl::DomainDef& domain,
                                  const ChainConfig& cfg, int walk_len);

}  // namespace chainplan::artobj
