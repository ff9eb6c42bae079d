#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "chainplan/artobj.hpp"
#include "chainplan/neuroplanner.hpp"
#include "chainplan/pddl.hpp"
#include "chainplan/provider.hpp"
#include "chainplan/semantics.hpp"
#include "chainplan/solver.hpp"
#include "chainplan/spem.hpp"
#include "support/atoms.hpp"
#include "support/chain_sim.hpp"

using namespace chainplan;

namespace {

artobj::ChainConfig macro_cfg() { return artobj::ChainConfig{}; }

std::unique_ptr<provider::Provider> emulated(int delay_ms = 0) {
  provider::ProviderConfig cfg;
  cfg.kind = provider::ProviderConfig::Kind::emulated;
  cfg.chain = macro_cfg();
  cfg.chunk_delay_ms = delay_ms;
  return provider::make_provider(cfg);
}

spem::ExecConfig fast_exec() {
  spem::ExecConfig exec;
  exec.action_ms = 0;
  return exec;
}

std::string angle_name(int deg) {
  return "angle" + std::to_string(((deg % 360) + 360) % 360);
}

pddl::Atom angle_atom(int deg, int joint) {
  return testutil::gatom("angle_joint",
                         {angle_name(deg), "joint" + std::to_string(joint)});
}

// goal := init + delta (degrees) per joint; a zero delta still pins the joint
pddl::ProblemDef with_goal_deltas(const pddl::ProblemDef& base,
                                  const std::vector<int>& deltas) {
  chainsim::Sim sim = chainsim::Sim::from_problem(base);
  pddl::ProblemDef problem = base;
  problem.goal.literals.clear();
  for (std::size_t j = 0; j < deltas.size(); ++j)
    problem.goal.literals.push_back(pddl::Literal{
        angle_atom(sim.angles[j] + deltas[j], static_cast<int>(j) + 1),
        false});
  return problem;
}

// replays the executed signatures through the arithmetic model, applying
// world mutations before the step at the given executed-count boundary
bool replay_executed(const pddl::ProblemDef& problem,
                     const std::vector<std::string>& executed,
                     const pddl::Condition& final_goal,
                     std::size_t mutate_after = SIZE_MAX,
                     const std::vector<std::pair<int, int>>& set_angles = {}) {
  chainsim::Sim sim = chainsim::Sim::from_problem(problem);
  for (std::size_t i = 0; i < executed.size(); ++i) {
    if (i == mutate_after)
      for (auto [joint, deg] : set_angles) sim.angles[joint - 1] = deg;
    // signature: "(name arg1 arg2 ...)"
    const std::string& sig = executed[i];
    if (sig.size() < 2 || sig.front() != '(' || sig.back() != ')')
      return false;
    std::istringstream in(sig.substr(1, sig.size() - 2));
    std::string name, tok;
    in >> name;
    std::vector<std::string> args;
    while (in >> tok) args.push_back(tok);
    if (!sim.apply(name, args)) return false;
  }
  return sim.satisfies(final_goal);
}

// The stack is deterministic, so the plan the emulated provider will stream
// is exactly the satisficing plan; derive a disturbance that invalidates its
// second step after the first has executed.
struct DerivedDisturbance {
  spem::Disturbance d;
  int joint = 0;
  int from_deg = 0;
  int shifted_deg = 0;
};

DerivedDisturbance break_second_step(artobj::Generator& gen,
                                     const pddl::ProblemDef& problem) {
  solver::SolveResult res = solver::solve_satisficing(
      gen.context(), gen.context().make_state(problem.init), problem.goal,
      {});
  REQUIRE(res.solved());
  REQUIRE(res.plan.steps.size() >= 2);
  const pddl::PlanStep& second = res.plan.steps[1];
  DerivedDisturbance out;
  out.joint = chainsim::trailing_int(second.args[0], "joint");
  out.from_deg = chainsim::trailing_int(second.args[3], "angle");
  out.shifted_deg = (out.from_deg + 180) % 360;
  out.d.after = 1;
  out.d.unset.push_back(angle_atom(out.from_deg, out.joint));
  out.d.set.push_back(angle_atom(out.shifted_deg, out.joint));
  return out;
}

}  // namespace

TEST_SUITE("spem") {

TEST_CASE("spem_check gates on goal identity first, then preconditions") {
  artobj::Generator gen(macro_cfg());
  sem::GroundContext& ctx = gen.context();
  artobj::GeneratedProblem gp = gen.generate(2, 2);

  spem::WorldState world;
  world.state = ctx.make_state(gp.problem.init);
  world.goal = gp.problem.goal;

  chainsim::Sim sim = chainsim::Sim::from_problem(gp.problem);
  pddl::PlanStep rotate;
  rotate.ticks = pddl::canonical_ticks(0);
  rotate.name = "grasp-increase-release_45";
  rotate.args = {"joint1", "link1", "gleft", angle_name(sim.angles[0]),
                 angle_name(sim.angles[0] + 45)};

  spem::CheckResult ok = spem::spem_check(ctx, world, world.goal, rotate);
  CHECK(ok.pass);

  // wrong source angle: precondition failure with the atom named
  pddl::PlanStep stale = rotate;
  stale.args[3] = angle_name(sim.angles[0] + 90);
  stale.args[4] = angle_name(sim.angles[0] + 135);
  spem::CheckResult pre = spem::spem_check(ctx, world, world.goal, stale);
  CHECK_FALSE(pre.pass);
  CHECK(pre.reason == "precondition");
  REQUIRE_FALSE(pre.failing_atoms.empty());
  CHECK(pre.failing_atoms[0].find("angle_joint") != std::string::npos);

  // statically impossible binding is still a precondition problem
  pddl::PlanStep wrong_link = rotate;
  wrong_link.args[1] = "link2";
  spem::CheckResult imp = spem::spem_check(ctx, world, world.goal, wrong_link);
  CHECK_FALSE(imp.pass);
  CHECK(imp.reason == "precondition");

  pddl::PlanStep unknown = rotate;
  unknown.name = "warp-drive";
  spem::CheckResult unk = spem::spem_check(ctx, world, world.goal, unknown);
  CHECK_FALSE(unk.pass);
  CHECK(unk.reason == "unknown-action");

  pddl::PlanStep bad_arity = rotate;
  bad_arity.args.pop_back();
  CHECK(spem::spem_check(ctx, world, world.goal, bad_arity).reason ==
        "unknown-action");

  // a changed goal dominates even a broken precondition
  spem::WorldState moved = world;
  moved.goal.literals[0].negated = !moved.goal.literals[0].negated;
  spem::CheckResult gc = spem::spem_check(ctx, moved, world.goal, stale);
  CHECK_FALSE(gc.pass);
  CHECK(gc.reason == "goal-changed");
}

TEST_CASE("an undisturbed episode executes the plan and stops at the goal") {
  artobj::Generator gen(macro_cfg());
  artobj::GeneratedProblem gp = gen.generate(7, 3);
  auto prov = emulated();

  spem::EpisodeResult res = spem::run_episode(
      gen.domain(), gp.problem, *prov, {}, {}, fast_exec());

  CHECK(res.goal_reached);
  CHECK(res.metrics.replans == 0);
  CHECK(res.trace.count(spem::EventKind::goal_reached) == 1);
  CHECK(res.trace.count(spem::EventKind::spem_reject) == 0);
  CHECK(res.trace.count(spem::EventKind::failure) == 0);
  CHECK(res.trace.count(spem::EventKind::action_executed) ==
        res.executed.size());
  CHECK(res.metrics.wait_before_first_action >= 0.0);
  CHECK(res.metrics.makespan >= res.metrics.wait_before_first_action);
  CHECK_FALSE(res.final_state.empty());

  CHECK(replay_executed(gp.problem, res.executed, gp.problem.goal));

  nlohmann::json j = res.to_json();
  CHECK(j["goal_reached"] == true);
  CHECK(j["trace"].size() == res.trace.events.size());
}

TEST_CASE("a goal already satisfied ends before any action") {
  artobj::Generator gen(macro_cfg());
  artobj::GeneratedProblem gp = gen.generate(7, 3);
  pddl::ProblemDef problem = with_goal_deltas(gp.problem, {0, 0, 0});
  auto prov = emulated();

  spem::EpisodeResult res = spem::run_episode(
      gen.domain(), problem, *prov, {}, {}, fast_exec());
  CHECK(res.goal_reached);
  CHECK(res.executed.empty());
  CHECK(res.metrics.replans == 0);
}

TEST_CASE("a precondition disturbance forces exactly one replan") {
  artobj::Generator gen(macro_cfg());
  artobj::GeneratedProblem gp = gen.generate(4, 2);
  pddl::ProblemDef problem = with_goal_deltas(gp.problem, {135});
  DerivedDisturbance broken = break_second_step(gen, problem);

  auto prov = emulated();
  spem::EpisodeResult res = spem::run_episode(
      gen.domain(), problem, *prov, {}, {broken.d}, fast_exec());

  CHECK(res.goal_reached);
  CHECK(res.metrics.replans == 1);
  CHECK(res.trace.count(spem::EventKind::replan_started) == 1);
  CHECK(res.trace.count(spem::EventKind::replan_ready) == 1);
  CHECK(res.trace.count(spem::EventKind::disturbance) == 1);
  REQUIRE(res.trace.count(spem::EventKind::spem_reject) == 1);
  for (const spem::Event& e : res.trace.events)
    if (e.kind == spem::EventKind::spem_reject)
      CHECK(e.detail.find("precondition") != std::string::npos);

  // no stale action ran: the executed sequence must replay cleanly in a
  // world that suffers the same mutation after the first action
  CHECK(replay_executed(problem, res.executed, problem.goal, 1,
                        {{broken.joint, broken.shifted_deg}}));
  CHECK(res.metrics.replan_waits.size() == 1);
}

TEST_CASE("a goal change is rejected as goal-changed and replanned") {
  artobj::Generator gen(macro_cfg());
  artobj::GeneratedProblem gp = gen.generate(4, 2);
  pddl::ProblemDef problem = with_goal_deltas(gp.problem, {135});
  pddl::ProblemDef retarget = with_goal_deltas(gp.problem, {45, 90, 180});

  spem::Disturbance d;
  d.after = 1;
  d.new_goal = retarget.goal;

  auto prov = emulated();
  spem::EpisodeResult res = spem::run_episode(
      gen.domain(), problem, *prov, {}, {d}, fast_exec());

  CHECK(res.goal_reached);
  REQUIRE(res.trace.count(spem::EventKind::spem_reject) >= 1);
  bool saw_goal_changed = false;
  for (const spem::Event& e : res.trace.events)
    if (e.kind == spem::EventKind::spem_reject &&
        e.detail.find("goal-changed") != std::string::npos)
      saw_goal_changed = true;
  CHECK(saw_goal_changed);
  CHECK(res.metrics.replans >= 1);
  // the episode ends at the new goal, not the original one
  CHECK(replay_executed(problem, res.executed, retarget.goal));
}

TEST_CASE("a disturbance that satisfies the goal stops the episode early") {
  artobj::Generator gen(macro_cfg());
  artobj::GeneratedProblem gp = gen.generate(4, 2);
  pddl::ProblemDef problem = with_goal_deltas(gp.problem, {135});

  spem::Disturbance d;
  d.after = 1;
  d.new_goal = pddl::Condition{};  // vacuously true

  auto prov = emulated();
  spem::EpisodeResult res = spem::run_episode(
      gen.domain(), problem, *prov, {}, {d}, fast_exec());
  CHECK(res.goal_reached);
  CHECK(res.executed.size() == 1);
  CHECK(res.metrics.replans == 0);
  CHECK(res.trace.count(spem::EventKind::spem_reject) == 0);
}

TEST_CASE("a disturbance at zero fires before planning starts") {
  artobj::Generator gen(macro_cfg());
  artobj::GeneratedProblem gp = gen.generate(4, 2);
  pddl::ProblemDef problem = with_goal_deltas(gp.problem, {45});
  pddl::ProblemDef retarget = with_goal_deltas(gp.problem, {90});

  spem::Disturbance d;
  d.after = 0;
  d.new_goal = retarget.goal;

  auto prov = emulated();
  spem::EpisodeResult res = spem::run_episode(
      gen.domain(), problem, *prov, {}, {d}, fast_exec());
  CHECK(res.goal_reached);
  // the first plan already targets the new goal: no reject, no replan
  CHECK(res.metrics.replans == 0);
  CHECK(res.trace.count(spem::EventKind::spem_reject) == 0);
  REQUIRE_FALSE(res.trace.events.empty());
  CHECK(res.trace.events.front().kind == spem::EventKind::disturbance);
  CHECK(replay_executed(problem, res.executed, retarget.goal));
}

TEST_CASE("the replan limit turns persistent trouble into failure") {
  artobj::Generator gen(macro_cfg());
  artobj::GeneratedProblem gp = gen.generate(4, 2);
  pddl::ProblemDef problem = with_goal_deltas(gp.problem, {135});
  DerivedDisturbance broken = break_second_step(gen, problem);

  spem::ExecConfig exec = fast_exec();
  exec.replan_limit = 0;
  auto prov = emulated();
  spem::EpisodeResult res = spem::run_episode(
      gen.domain(), problem, *prov, {}, {broken.d}, exec);

  CHECK_FALSE(res.goal_reached);
  CHECK(res.metrics.replans == 0);
  REQUIRE(res.trace.count(spem::EventKind::failure) == 1);
  for (const spem::Event& e : res.trace.events)
    if (e.kind == spem::EventKind::failure)
      CHECK(e.detail.find("replan limit") != std::string::npos);
}

TEST_CASE("a truncated stream triggers a bounded replan, then success") {
  artobj::Generator gen(macro_cfg());
  artobj::GeneratedProblem gp = gen.generate(4, 2);
  pddl::ProblemDef problem = with_goal_deltas(gp.problem, {45, 90, 135});

  neuro::PlannerConfig planner;
  planner.request.max_tokens = 40;  // roughly two action lines

  auto prov = emulated();
  spem::EpisodeResult res = spem::run_episode(
      gen.domain(), problem, *prov, planner, {}, fast_exec());

  CHECK(res.goal_reached);
  CHECK(res.metrics.replans >= 1);
  CHECK(res.trace.count(spem::EventKind::spem_reject) == 0);
  CHECK(res.trace.count(spem::EventKind::failure) == 0);
  CHECK(replay_executed(problem, res.executed, problem.goal));
}

TEST_CASE("a provider error ends the episode as a failure") {
  artobj::Generator gen(macro_cfg());
  artobj::GeneratedProblem gp = gen.generate(4, 2);

  auto tmp = std::filesystem::temp_directory_path() /
             "chainplan-spem-empty-log.jsonl";
  std::filesystem::remove(tmp);
  provider::ReplayRecord rec;  // some other prompt, so every lookup misses
  rec.prompt_hash = provider::prompt_hash("unrelated");
  rec.completion = " \nEND";
  provider::append_replay_record(tmp.string(), rec);
  auto prov = provider::make_provider(provider::make_replay(tmp.string()));

  spem::EpisodeResult res = spem::run_episode(
      gen.domain(), gp.problem, *prov, {}, {}, fast_exec());
  std::filesystem::remove(tmp);

  CHECK_FALSE(res.goal_reached);
  CHECK(res.trace.count(spem::EventKind::failure) == 1);
  CHECK(res.executed.empty());
}

TEST_CASE("schedules survive a JSON round trip") {
  spem::DisturbanceSchedule schedule;
  spem::Disturbance d;
  d.after = 2;
  d.set.push_back(angle_atom(90, 1));
  d.unset.push_back(angle_atom(45, 1));
  pddl::Condition goal;
  goal.literals.push_back(pddl::Literal{angle_atom(180, 2), false});
  goal.literals.push_back(pddl::Literal{angle_atom(90, 3), true});
  d.new_goal = goal;
  schedule.push_back(d);
  spem::Disturbance plain;
  plain.after = 5;
  plain.set.push_back(testutil::gatom("free", {"gleft"}));
  schedule.push_back(plain);

  spem::DisturbanceSchedule back =
      spem::schedule_from_json(spem::schedule_to_json(schedule));
  REQUIRE(back.size() == 2);
  CHECK(back[0].after == 2);
  CHECK(back[0].set == schedule[0].set);
  CHECK(back[0].unset == schedule[0].unset);
  REQUIRE(back[0].new_goal.has_value());
  CHECK(*back[0].new_goal == goal);
  CHECK(back[1].after == 5);
  CHECK_FALSE(back[1].new_goal.has_value());
  CHECK(back[1].set == plain.set);
}

TEST_CASE("summaries aggregate per condition with population statistics") {
  std::vector<spem::EpisodeRecord> records;
  auto rec = [&](std::string cond, bool valid, bool has_plan,
                 std::size_t len, double total, double first, int replans) {
    records.push_back(spem::EpisodeRecord{std::move(cond), valid, has_plan,
                                          len, total, first, replans});
  };
  rec("stream", true, true, 10, 4.0, 1.0, 0);
  rec("stream", true, true, 12, 6.0, 2.0, 1);
  rec("stream", false, true, 8, 8.0, 3.0, 0);
  rec("stream", false, false, 0, 2.0, 2.0, 0);
  rec("bulk", true, true, 11, 10.0, 10.0, 0);

  std::map<std::string, spem::ConditionSummary> sum =
      spem::summarize(records);
  REQUIRE(sum.size() == 2);

  const spem::ConditionSummary& s = sum.at("stream");
  CHECK(s.episodes == 4);
  CHECK(s.validity_pct == doctest::Approx(50.0));
  CHECK(s.mean_plan_length == doctest::Approx(10.0));  // over parsed plans
  CHECK(s.max_plan_length == 12);
  CHECK(s.t_max == doctest::Approx(8.0));
  CHECK(s.t_avg == doctest::Approx(5.0));
  CHECK(s.t_std == doctest::Approx(std::sqrt(5.0)));  // population
  CHECK(s.first_action_avg == doctest::Approx(2.0));
  CHECK(s.first_action_std == doctest::Approx(std::sqrt(0.5)));

  const spem::ConditionSummary& b = sum.at("bulk");
  CHECK(b.episodes == 1);
  CHECK(b.t_std == doctest::Approx(0.0));
  CHECK(b.validity_pct == doctest::Approx(100.0));

  CHECK(spem::wait_reduction(s, b) == doctest::Approx(1.0 - 2.0 / 10.0));
  spem::ConditionSummary zero;
  CHECK(spem::wait_reduction(s, zero) == 0.0);

  nlohmann::json j = spem::summary_to_json(sum);
  CHECK(j.contains("stream"));
  CHECK(j["bulk"]["episodes"] == 1);
}

}  // TEST_SUITE
