#include <doctest.h>

#include <algorithm>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "chainplan/artobj.hpp"
#include "chainplan/dataset.hpp"
#include "chainplan/pddl.hpp"
#include "chainplan/semantics.hpp"
#include "chainplan/solver.hpp"
#include "support/chain_sim.hpp"

using namespace chainplan;

namespace {

artobj::ChainConfig cfg_of(bool macros) {
  artobj::ChainConfig cfg;
  cfg.use_macros = macros;
  return cfg;
}

std::set<std::string> action_names(const pddl::DomainDef& d) {
  std::set<std::string> names;
  for (const auto& a : d.actions) names.insert(a.name);
  return names;
}

}  // namespace

TEST_SUITE("artobj") {

TEST_CASE("config validation rejects inconsistent chains") {
  artobj::ChainConfig cfg;
  CHECK_NOTHROW(cfg.validate());

  artobj::ChainConfig bad = cfg;
  bad.angle_step_deg = 7;  // does not divide 360
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  bad = cfg;
  bad.rotation_increments_deg = {40};  // not a multiple of the lattice step
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  bad = cfg;
  bad.rotation_increments_deg = {360};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  bad = cfg;
  bad.central_joint = 4;  // only 3 joints
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  bad = cfg;
  bad.n_joints = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("the two variants share one name but not one operator set") {
  pddl::DomainDef macro = artobj::make_domain(cfg_of(true));
  pddl::DomainDef atomic = artobj::make_domain(cfg_of(false));

  CHECK(macro.name == atomic.name);
  CHECK(macro.name == cfg_of(true).domain_name());
  CHECK(macro.predicates == atomic.predicates);
  CHECK(macro.types == atomic.types);

  CHECK(action_names(macro) ==
        std::set<std::string>{"grasp-increase-release_45",
                              "grasp-decrease-release_45"});
  CHECK(action_names(atomic) ==
        std::set<std::string>{"link-to-central-grasp",
                              "increase_angle_first_child_45",
                              "decrease_angle_first_child_45",
                              "release-links"});
}

TEST_CASE("macro operators leave the gripper predicates untouched") {
  pddl::DomainDef macro = artobj::make_domain(cfg_of(true));
  for (const auto& action : macro.actions) {
    for (const auto& lit : action.effect.literals)
      CHECK(lit.atom.predicate == "angle_joint");
    for (const auto& ce : action.effect.conditional)
      for (const auto& lit : ce.then)
        CHECK(lit.atom.predicate == "angle_joint");
  }
}

TEST_CASE("domains survive a render/parse round trip") {
  for (bool macros : {true, false}) {
    pddl::DomainDef d = artobj::make_domain(cfg_of(macros));
    pddl::DomainDef reparsed = pddl::parse_domain(pddl::render_domain(d));
    CHECK(reparsed == d);
  }
}

TEST_CASE("generation is deterministic per seed and distinct across seeds") {
  artobj::Generator gen(cfg_of(true));
  artobj::GeneratedProblem a = gen.generate(42, 4);
  artobj::GeneratedProblem b = gen.generate(42, 4);
  CHECK(a.problem == b.problem);
  CHECK(a.witness == b.witness);
  CHECK(a.compact_prompt == b.compact_prompt);

  artobj::GeneratedProblem c = gen.generate(43, 4);
  CHECK(c.problem.name != a.problem.name);
  CHECK(c.problem.name == "chain3-p43");
}

TEST_CASE("every generated problem ships a valid witness plan") {
  for (bool macros : {true, false}) {
    artobj::Generator gen(cfg_of(macros));
    for (std::uint64_t seed = 0; seed < 25; ++seed) {
      artobj::GeneratedProblem gp = gen.generate(seed, 1 + seed % 5);
      sem::ValidationReport rep =
          sem::validate_plan(gen.domain(), gp.problem, gp.witness);
      REQUIRE_MESSAGE(rep.valid(), gp.problem.name << ": " << rep.reason);

      // independent arithmetic model agrees
      chainsim::Sim sim = chainsim::Sim::from_problem(gp.problem);
      CHECK(sim.accepts(gp.witness, gp.problem.goal));
    }
  }
}

TEST_CASE("goals project exactly the final joint angles") {
  artobj::Generator gen(cfg_of(true));
  artobj::GeneratedProblem gp = gen.generate(5, 3);
  REQUIRE(gp.problem.goal.literals.size() == 3);
  std::set<std::string> joints;
  for (const auto& lit : gp.problem.goal.literals) {
    CHECK_FALSE(lit.negated);
    CHECK(lit.atom.predicate == "angle_joint");
    joints.insert(lit.atom.args[1].name);
  }
  CHECK(joints == std::set<std::string>{"joint1", "joint2", "joint3"});

  // witness timestamps follow the canonical grid
  for (std::size_t i = 0; i < gp.witness.steps.size(); ++i)
    CHECK(gp.witness.steps[i].ticks == pddl::canonical_ticks(i));
}

TEST_CASE("a problem from one variant is solvable under the other") {
  artobj::Generator macro_gen(cfg_of(true));
  artobj::Generator atomic_gen(cfg_of(false));
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    artobj::GeneratedProblem gp = macro_gen.generate(seed, 3);
    sem::GroundContext& ctx = atomic_gen.context();
    solver::SolveResult res = solver::solve_satisficing(
        ctx, ctx.make_state(gp.problem.init), gp.problem.goal, {});
    REQUIRE(res.solved());
    CHECK(sem::validate_plan(atomic_gen.domain(), gp.problem, res.plan)
              .valid());
  }
}

TEST_CASE("compact prompts carry only the dynamic facts") {
  artobj::Generator gen(cfg_of(true));
  artobj::GeneratedProblem gp = gen.generate(17, 4);
  const std::string& p = gp.compact_prompt;

  CHECK(p == artobj::strip_statics(gp.problem));
  CHECK(p.rfind("(:init (angle_joint ", 0) == 0);
  CHECK(p.find("\n(free gleft) (free gright))\n(:goal (and\n") !=
        std::string::npos);
  CHECK(p.find("(in-centre joint2)") != std::string::npos);
  CHECK(p.back() == ')');
  for (const char* banned : {"connected", "downstream", "angle_succ",
                             ":objects", "define"})
    CHECK(p.find(banned) == std::string::npos);

  // one line per non-gripper atom: 3 angles + in-centre + gripper line,
  // then the goal header and 3 goal literals
  CHECK(std::count(p.begin(), p.end(), '\n') == 4 + 4);
}

TEST_CASE("parse_prompt inverts strip_statics") {
  for (bool macros : {true, false}) {
    artobj::ChainConfig cfg = cfg_of(macros);
    artobj::Generator gen(cfg);
    artobj::GeneratedProblem gp = gen.generate(23, 3);

    std::string prompt = gp.compact_prompt + dataset::kPromptTerminator;
    artobj::PromptParse parsed = artobj::parse_prompt(prompt, cfg);
    CHECK_FALSE(parsed.no_macro_tag);
    CHECK(parsed.problem.goal == gp.problem.goal);
    CHECK(parsed.problem.objects == gp.problem.objects);
    CHECK(parsed.problem.init == gp.problem.init);

    std::string tagged =
        std::string(artobj::kNoMacroTag) + "\n" + prompt;
    artobj::PromptParse tag_parsed = artobj::parse_prompt(tagged, cfg);
    CHECK(tag_parsed.no_macro_tag);
    CHECK(tag_parsed.problem.init == gp.problem.init);
  }
}

TEST_CASE("problem names stay unique across seeds") {
  artobj::Generator gen(cfg_of(true));
  std::set<std::string> names;
  for (std::uint64_t seed = 0; seed < 200; ++seed)
    names.insert(gen.generate(seed, 2).problem.name);
  CHECK(names.size() == 200);
}

TEST_CASE("the one-shot wrapper checks the domain it is given") {
  artobj::ChainConfig cfg = cfg_of(true);
  pddl::DomainDef domain = artobj::make_domain(cfg);
  artobj::GeneratedProblem gp = artobj::generate_problem(domain, cfg, 3);
  CHECK(sem::validate_plan(domain, gp.problem, gp.witness).valid());

  pddl::DomainDef other = domain;
  other.name = "other";
  CHECK_THROWS_AS(artobj::generate_problem(other, cfg, 3),
                  std::invalid_argument);
}

TEST_CASE("larger chains and extra increments ground cleanly") {
  artobj::ChainConfig cfg;
  cfg.n_joints = 4;
  cfg.rotation_increments_deg = {30, 45};
  cfg.central_joint = 3;
  cfg.use_macros = false;
  artobj::Generator gen(cfg);
  CHECK(gen.domain().name == "chain4");

  artobj::GeneratedProblem gp = gen.generate(1, 5);
  CHECK(sem::validate_plan(gen.domain(), gp.problem, gp.witness).valid());
  chainsim::Sim sim = chainsim::Sim::from_problem(gp.problem);
  CHECK(sim.accepts(gp.witness, gp.problem.goal));
}

}  // TEST_SUITE
