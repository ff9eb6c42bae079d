#include "chainplan/solver.hpp"

#include <chrono>
#include <cstring>
#include <deque>
#include <queue>
#include <unordered_set>

namespace chainplan::solver {

namespace {

struct Node {
  sem::State state;
  std::int64_t parent = -1;
  std::int32_t action = -1;  // index into ctx.all_actions()
};

std::string state_key(const sem::State& state) {
  std::string key(state.size() * sizeof(sem::AtomId), '\0');
  if (!state.empty())
    std::memcpy(key.data(), state.data(), key.size());
  return key;
}

struct GoalLits {
  std::vector<sem::AtomId> pos;
  std::vector<sem::AtomId> neg;
};

GoalLits intern_goal(sem::GroundContext& ctx, const pddl::Condition& goal) {
  GoalLits g;
  for (const auto& lit : goal.literals)
    (lit.negated ? g.neg : g.pos).push_back(ctx.intern(lit.atom));
  return g;
}

int unsatisfied(const sem::State& state, const GoalLits& goal) {
  int n = 0;
  for (auto id : goal.pos)
    if (!sem::contains(state, id)) ++n;
  for (auto id : goal.neg)
    if (sem::contains(state, id)) ++n;
  return n;
}

pddl::Plan extract_plan(const std::vector<Node>& nodes,
                        const std::vector<sem::GroundAction>& actions,
                        std::int64_t leaf) {
  std::vector<std::int32_t> rev;
  for (std::int64_t at = leaf; nodes[at].parent >= 0; at = nodes[at].parent)
    rev.push_back(nodes[at].action);
  pddl::Plan plan;
  for (auto it = rev.rbegin(); it != rev.rend(); ++it) {
    const auto& ga = actions[*it];
    pddl::PlanStep step;
    step.ticks = pddl::canonical_ticks(plan.steps.size());
    step.name = ga.name;
    step.args = ga.args;
    plan.steps.push_back(std::move(step));
  }
  return plan;
}

struct QueueEntry {
  int h;
  std::uint64_t seq;
  std::int64_t node;
};

// max-heap ordering inverted: smallest h wins, then the most recent push
struct WorseThan {
  bool operator()(const QueueEntry& a, const QueueEntry& b) const {
    if (a.h != b.h) return a.h > b.h;
    return a.seq < b.seq;
  }
};

SolveResult search(sem::GroundContext& ctx, const sem::State& init,
                   const pddl::Condition& goal, const SearchBudget& budget,
                   bool greedy) {
  const auto start_time = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start_time)
        .count();
  };

  SolveResult result;
  const auto& actions = ctx.all_actions();
  const GoalLits goal_lits = intern_goal(ctx, goal);

  std::vector<Node> nodes;
  nodes.push_back({init, -1, -1});
  std::unordered_set<std::string> visited;
  visited.insert(state_key(init));

  std::priority_queue<QueueEntry, std::vector<QueueEntry>, WorseThan> open;
  std::deque<std::int64_t> fifo;
  std::uint64_t seq = 0;
  if (greedy)
    open.push({unsatisfied(init, goal_lits), seq++, 0});
  else
    fifo.push_back(0);

  auto finish = [&](Outcome outcome) {
    result.outcome = outcome;
    result.wall_secs = elapsed();
    return result;
  };

  while (greedy ? !open.empty() : !fifo.empty()) {
    std::int64_t idx;
    if (greedy) {
      idx = open.top().node;
      open.pop();
    } else {
      idx = fifo.front();
      fifo.pop_front();
    }
    ++result.expanded;

    if (unsatisfied(nodes[idx].state, goal_lits) == 0) {
      result.plan = extract_plan(nodes, actions, idx);
      return finish(Outcome::solved);
    }
    if (result.expanded >= budget.max_expanded_states)
      return finish(Outcome::exhausted);
    if ((result.expanded & 0xFF) == 0 && elapsed() > budget.max_wall_secs)
      return finish(Outcome::timeout);

    const sem::State state = nodes[idx].state;  // nodes may reallocate below
    for (std::size_t a = 0; a < actions.size(); ++a) {
      if (!sem::applicable(state, actions[a])) continue;
      sem::State next = sem::apply(state, actions[a]);
      if (!visited.insert(state_key(next)).second) continue;
      nodes.push_back({std::move(next), idx, static_cast<std::int32_t>(a)});
      const std::int64_t child = static_cast<std::int64_t>(nodes.size()) - 1;
      if (greedy)
        open.push({unsatisfied(nodes[child].state, goal_lits), seq++, child});
      else
        fifo.push_back(child);
    }
  }
  return finish(Outcome::exhausted);
}

}  // namespace

const char* outcome_name(Outcome o) {
  switch (o) {
    case Outcome::solved:
      return "solved";
    case Outcome::exhausted:
      return "exhausted";
    case Outcome::timeout:
      return "timeout";
  }
  return "unknown";
}

SolveResult solve_satisficing(const pddl::DomainDef& domain,
                              const pddl::ProblemDef& problem,
                              const SearchBudget& budget) {
  sem::GroundContext ctx(domain, problem);
  return search(ctx, ctx.init(), problem.goal, budget, true);
}

SolveResult solve_optimal(const pddl::DomainDef& domain,
                          const pddl::ProblemDef& problem,
                          const SearchBudget& budget) {
  sem::GroundContext ctx(domain, problem);
  return search(ctx, ctx.init(), problem.goal, budget, false);
}

SolveResult solve_satisficing(sem::GroundContext& ctx, const sem::State& init,
                              const pddl::Condition& goal,
                              const SearchBudget& budget) {
  return search(ctx, init, goal, budget, true);
}

SolveResult solve_optimal(sem::GroundContext& ctx, const sem::State& init,
                          const pddl::Condition& goal,
                          const SearchBudget& budget) {
  return search(ctx, init, goal, budget, false);
}

}  // namespace chainplan::solver
