// Forward state-space search: a satisficing greedy best-first planner (the
// training-data workhorse) and a breadth-first optimal oracle for small
// instances. Both are deterministic: successors are generated in
// lexicographic ground-action order and ties break last-in first-out.

#pragma once

#include <cstddef>
#include <string>

#include "chainplan/pddl.hpp"
#include "chainplan/semantics.hpp"

namespace chainplan::solver {

struct SearchBudget {
  std::size_t max_expanded_states = 200000;
  double max_wall_secs = 30.0;
};

enum class Outcome { solved, exhausted, timeout };

const char* outcome_name(Outcome o);

struct SolveResult {
  Outcome outcome = Outcome::exhausted;
  pddl::Plan plan;  // canonical timestamps; meaningful only when solved
  std::size_t expanded = 0;
  double wall_secs = 0.0;

  bool solved() const { return outcome == Outcome::solved; }
};

// Greedy best-first on the unsatisfied-goal-literal count. Satisficing: the
// first goal state found wins, so plans may contain spurious steps.
SolveResult solve_satisficing(const pddl::DomainDef& domain,
                              const pddl::ProblemDef& problem,
                              const SearchBudget& budget = {});

// Breadth-first search; returns a shortest plan or exhausts the space.
SolveResult solve_optimal(const pddl::DomainDef& domain,
                          const pddl::ProblemDef& problem,
                          const SearchBudget& budget = {});

// Context-reusing variants for batch runs over one object universe.
SolveResult solve_satisficing(sem::GroundContext& ctx, const sem::State& init,
                              const pddl::Condition& goal,
                              const SearchBudget& budget = {});
SolveResult solve_optimal(sem::GroundContext& ctx, const sem::State& init,
                          const pddl::Condition& goal,
                          const SearchBudget& budget = {});

}  // namespace chainplan::solver
