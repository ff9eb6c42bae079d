// Ground state-transition semantics: atom interning, action grounding with
// quantified conditional effects, applicability/apply, and plan validation.
//
// States are closed-world: a ground atom absent from the state is false.
// Static predicates (those no action effect ever touches) keep their init
// truth value forever; grounding uses that to prune dead bindings and dead
// conditional branches up front.
//
// All query operations are pure; a GroundContext interns atoms on demand and
// is therefore single-threaded, but independent contexts never share state,
// so validating different plans in parallel just means one context each.

#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "chainplan/pddl.hpp"

namespace chainplan::sem {

using AtomId = std::int32_t;

// Sorted, duplicate-free vector of interned atom ids.
using State = std::vector<AtomId>;

bool contains(const State& state, AtomId id);

struct GroundBranch {
  std::vector<AtomId> when_pos;
  std::vector<AtomId> when_neg;
  std::vector<AtomId> adds;
  std::vector<AtomId> dels;
};

struct GroundAction {
  std::string name;
  std::vector<std::string> args;
  // set when a static or equality precondition already failed at grounding
  // time; such an action can never become applicable
  bool impossible = false;
  std::vector<AtomId> pre_pos;
  std::vector<AtomId> pre_neg;
  std::vector<AtomId> adds;
  std::vector<AtomId> dels;
  std::vector<GroundBranch> branches;

  std::string signature() const;  // "(name arg1 arg2 ...)"
};

class GroundContext {
 public:
  GroundContext(const pddl::DomainDef& domain, const pddl::ProblemDef& problem);

  const pddl::DomainDef& domain() const { return domain_; }
  const pddl::ProblemDef& problem() const { return problem_; }
  const State& init() const { return init_; }

  AtomId intern(const pddl::Atom& ground_atom);
  std::optional<AtomId> find(const pddl::Atom& ground_atom) const;
  const pddl::Atom& atom(AtomId id) const { return atoms_[id]; }
  std::size_t atom_count() const { return atoms_.size(); }

  bool holds(const State& state, const pddl::Condition& cond);
  bool goal_holds(const State& state);

  bool is_static(const std::string& predicate) const;
  bool object_is(const std::string& object, const std::string& type) const;
  const std::vector<std::string>& objects_of(const std::string& type);

  // Grounds one binding: substitutes args, expands the quantified conditional
  // effects over all type-compatible tuples, and drops branches whose static
  // or equality guards are already false. Throws std::invalid_argument on
  // arity or type errors.
  GroundAction ground(const pddl::ActionSchema& schema,
                      const std::vector<std::string>& args);

  // Exhaustive grounding over the whole object universe with static
  // precondition pruning; cached, ordered lexicographically by signature.
  const std::vector<GroundAction>& all_actions();

  // Replaces the dynamic part of the initial state; statics are kept. Used by
  // generators that reuse one grounded context across many inits.
  State make_state(const std::vector<pddl::Atom>& atoms);

  std::vector<std::string> render_state(const State& state) const;

 private:
  void enumerate_bindings(const pddl::ActionSchema& schema, std::size_t param,
                          std::vector<std::string>& binding,
                          std::vector<GroundAction>& out);
  bool static_literal_false_in_init(const pddl::Literal& ground_lit);

  pddl::DomainDef domain_;
  pddl::ProblemDef problem_;
  std::vector<pddl::Atom> atoms_;
  std::unordered_map<std::string, AtomId> index_;
  std::unordered_map<std::string, std::string> object_type_;
  std::unordered_map<std::string, std::vector<std::string>> by_type_;
  std::set<std::string> static_predicates_;
  State init_;
  std::vector<GroundAction> all_actions_;
  bool all_actions_ready_ = false;
};

bool applicable(const State& state, const GroundAction& action);

// Pre-state semantics: every effect condition is evaluated against the input
// state, deletes are applied before adds (an atom both deleted and added in
// the same step survives). Throws std::logic_error if the action is not
// applicable — callers are expected to gate on applicable() or spem_check.
State apply(const State& state, const GroundAction& action);

struct ValidationReport {
  enum class Verdict { valid, invalid, unsolved_goal };

  Verdict verdict = Verdict::valid;
  std::optional<std::size_t> failed_step;
  std::string reason;
  std::vector<std::string> failing_atoms;  // rendered literals that failed
  std::vector<std::string> final_state;    // rendered, sorted

  bool valid() const { return verdict == Verdict::valid; }
  std::string verdict_text() const;
  nlohmann::json to_json() const;
};

ValidationReport validate_plan(const pddl::DomainDef& domain,
                               const pddl::ProblemDef& problem,
                               const pddl::Plan& plan);

// Same, but reusing an existing context (and an explicit start state), so
// batch callers do not pay for re-grounding. The goal comes from `goal`.
ValidationReport validate_plan(GroundContext& ctx, const State& start,
                               const pddl::Condition& goal,
                               const pddl::Plan& plan);

}  // namespace chainplan::sem
