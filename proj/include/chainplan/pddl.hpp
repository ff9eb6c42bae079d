// PDDL 2.1 subset: abstract syntax, parsing, and canonical printing for
// domain files, problem files, and IPC-format plan files.
//
// Supported requirements: :strips :typing :equality :conditional-effects
// :universal-preconditions. Everything else is a hard error. Input is
// case-insensitive; the canonical form is lowercase. All types here are
// immutable values once constructed and safe to share across threads.
#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace chainplan::pddl {

// Error with source location, thrown by every parser entry point.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::string message, int line, int col)
      : std::runtime_error("line " + std::to_string(line) + ", col " +
                           std::to_string(col) + ": " + message),
        line_(line),
        col_(col) {}

  int line() const { return line_; }
  int col() const { return col_; }

 private:
  int line_;
  int col_;
};

// A term is either an object symbol or a variable (name stored without '?').
struct Term {
  std::string name;
  bool is_var = false;

  friend bool operator==(const Term&, const Term&) = default;
  friend auto operator<=>(const Term&, const Term&) = default;
};

inline Term var(std::string name) { return Term{std::move(name), true}; }
inline Term obj(std::string name) { return Term{std::move(name), false}; }

struct Atom {
  std::string predicate;
  std::vector<Term> args;

  bool ground() const {
    for (const auto& t : args)
      if (t.is_var) return false;
    return true;
  }

  friend bool operator==(const Atom&, const Atom&) = default;
  friend auto operator<=>(const Atom&, const Atom&) = default;
};

struct Literal {
  Atom atom;
  bool negated = false;

  friend bool operator==(const Literal&, const Literal&) = default;
  friend auto operator<=>(const Literal&, const Literal&) = default;
};

// Conjunction of literals. Negation appears only at the literal level.
struct Condition {
  std::vector<Literal> literals;

  bool empty() const { return literals.empty(); }

  friend bool operator==(const Condition&, const Condition&) = default;
};

struct TypedVar {
  std::string name;  // without the leading '?'
  std::string type;

  friend bool operator==(const TypedVar&, const TypedVar&) = default;
};

// (forall (vars) (when cond (and lits))); vars may be empty for a bare when.
struct CondEffect {
  std::vector<TypedVar> vars;
  Condition when;
  std::vector<Literal> then;

  friend bool operator==(const CondEffect&, const CondEffect&) = default;
};

struct Effect {
  std::vector<Literal> literals;       // unconditional adds/deletes
  std::vector<CondEffect> conditional;

  friend bool operator==(const Effect&, const Effect&) = default;
};

struct ActionSchema {
  std::string name;
  std::vector<TypedVar> params;
  Condition precondition;
  Effect effect;

  friend bool operator==(const ActionSchema&, const ActionSchema&) = default;
};

struct TypeDecl {
  std::string name;
  std::string parent;  // "object" when unstated

  friend bool operator==(const TypeDecl&, const TypeDecl&) = default;
};

struct PredicateDecl {
  std::string name;
  std::vector<TypedVar> params;

  friend bool operator==(const PredicateDecl&, const PredicateDecl&) = default;
};

struct DomainDef {
  std::string name;
  std::vector<std::string> requirements;
  std::vector<TypeDecl> types;
  std::vector<PredicateDecl> predicates;
  std::vector<ActionSchema> actions;

  const ActionSchema* find_action(const std::string& name) const;
  const PredicateDecl* find_predicate(const std::string& name) const;

  friend bool operator==(const DomainDef&, const DomainDef&) = default;
};

struct TypedObject {
  std::string name;
  std::string type;

  friend bool operator==(const TypedObject&, const TypedObject&) = default;
};

struct ProblemDef {
  std::string name;
  std::string domain_name;
  std::vector<TypedObject> objects;
  std::vector<Atom> init;  // ground, deduplicated, insertion order
  Condition goal;          // ground

  friend bool operator==(const ProblemDef&, const ProblemDef&) = default;
};

// Plan timestamps are stored in ticks of 1e-5 s so that the 5-decimal IPC
// format round-trips exactly.
constexpr std::int64_t kTicksPerSecond = 100000;
constexpr std::int64_t kFirstStepTicks = 100;   // 0.00100
constexpr std::int64_t kStepStrideTicks = 200;  // 0.00200

struct PlanStep {
  std::int64_t ticks = 0;
  std::string name;
  std::vector<std::string> args;

  friend bool operator==(const PlanStep&, const PlanStep&) = default;
};

struct Plan {
  std::vector<PlanStep> steps;

  std::size_t size() const { return steps.size(); }
  bool empty() const { return steps.empty(); }

  friend bool operator==(const Plan&, const Plan&) = default;
};

// parse_plan result; the trailing END sentinel is stripped but remembered.
struct PlanParse {
  Plan plan;
  bool end_sentinel = false;

  friend bool operator==(const PlanParse&, const PlanParse&) = default;
};

DomainDef parse_domain(const std::string& text);
ProblemDef parse_problem(const std::string& text, const DomainDef& domain);

// Tolerates blank lines, leading/trailing whitespace, and a trailing END
// sentinel so raw completion text can be fed directly.
PlanParse parse_plan(const std::string& text);

std::string render_domain(const DomainDef& domain);
std::string render_problem(const ProblemDef& problem);
std::string render_plan(const Plan& plan);

// One plan step per line without a trailing newline: "<t>: (<name> <args>)".
std::string render_step(const PlanStep& step);
std::string render_atom(const Atom& atom);
std::string render_literal(const Literal& lit);
std::string render_ticks(std::int64_t ticks);

// Canonical timestamps: step k at 0.00100 + 0.00200 * k.
Plan restamped(const Plan& plan);
std::int64_t canonical_ticks(std::size_t step_index);

// Deterministic key for goal-change comparison and state-independent lookups.
std::string condition_key(const Condition& cond);

// Lowercases and validates an identifier against [a-z][a-z0-9_-]*.
std::string normalize_symbol(const std::string& raw);

}  // namespace chainplan::pddl
