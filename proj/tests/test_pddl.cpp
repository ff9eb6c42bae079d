#include <doctest.h>

#include "chainplan/pddl.hpp"

using namespace chainplan;

namespace {

const char* kDomainText = R"pddl((define (domain chain3)
  (:requirements :strips :typing :conditional-effects)
  (:types joint link angle gripper - object)
  (:predicates
    (angle_joint ?a - angle ?j - joint)
    (free ?g - gripper)
    (held ?l - link ?g - gripper)
    (connected ?l - link ?j - joint)
    (downstream ?j - joint ?dj - joint)
    (angle_succ_45 ?from - angle ?to - angle))
  (:action increase_angle_first_child_45
    :parameters (?j - joint ?l - link ?g - gripper ?from - angle ?to - angle)
    :precondition (and (held ?l ?g) (connected ?l ?j)
                       (angle_joint ?from ?j) (angle_succ_45 ?from ?to))
    :effect (and (not (angle_joint ?from ?j)) (angle_joint ?to ?j)
      (forall (?dj - joint ?da - angle ?dto - angle)
        (when (and (downstream ?j ?dj) (angle_joint ?da ?dj)
                   (angle_succ_45 ?da ?dto))
          (and (not (angle_joint ?da ?dj)) (angle_joint ?dto ?dj))))))))pddl";

const char* kProblemText = R"pddl((define (problem chain3-p0)
  (:domain chain3)
  (:objects joint1 joint2 - joint link1 link2 - link
            angle0 angle45 angle90 - angle gleft - gripper)
  (:init (angle_joint angle0 joint1)
         (angle_joint angle45 joint2)
         (free gleft)
         (connected link1 joint1) (connected link2 joint2)
         (downstream joint1 joint2)
         (angle_succ_45 angle0 angle45) (angle_succ_45 angle45 angle90))
  (:goal (and (angle_joint angle45 joint1)))))pddl";

}  // namespace

TEST_SUITE("pddl") {

TEST_CASE("parses a domain with quantified conditional effects") {
  pddl::DomainDef d = pddl::parse_domain(kDomainText);
  CHECK(d.name == "chain3");
  REQUIRE(d.actions.size() == 1);
  const pddl::ActionSchema& a = d.actions[0];
  CHECK(a.name == "increase_angle_first_child_45");
  CHECK(a.params.size() == 5);
  CHECK(a.precondition.literals.size() == 4);
  CHECK(a.effect.literals.size() == 2);
  REQUIRE(a.effect.conditional.size() == 1);
  const pddl::CondEffect& ce = a.effect.conditional[0];
  CHECK(ce.vars.size() == 3);
  CHECK(ce.when.literals.size() == 3);
  CHECK(ce.then.size() == 2);
  CHECK(d.find_action("increase_angle_first_child_45") == &a);
  CHECK(d.find_predicate("downstream") != nullptr);
  CHECK(d.find_predicate("nonesuch") == nullptr);
}

TEST_CASE("input is case-insensitive, canonical form is lowercase") {
  pddl::DomainDef d = pddl::parse_domain(
      "(DEFINE (Domain Tiny)\n"
      " (:Requirements :STRIPS :typing)\n"
      " (:Types Spot - Object)\n"
      " (:Predicates (At ?X - Spot))\n"
      " (:Action Move :parameters (?A ?B - Spot)\n"
      "  :precondition (At ?A) :effect (and (not (At ?A)) (At ?B))))");
  CHECK(d.name == "tiny");
  CHECK(d.types[0].name == "spot");
  CHECK(d.predicates[0].name == "at");
  CHECK(d.actions[0].name == "move");
  CHECK(d.actions[0].params[0].name == "a");
  const std::string rendered = pddl::render_domain(d);
  CHECK(rendered.find("Move") == std::string::npos);
  CHECK(rendered.find("move") != std::string::npos);
}

TEST_CASE("semicolon comments are skipped") {
  pddl::DomainDef d = pddl::parse_domain(
      "; a header comment\n"
      "(define (domain c) ; trailing\n"
      " (:requirements :strips)\n"
      " (:predicates (p)))\n; tail");
  CHECK(d.name == "c");
  CHECK(d.predicates.size() == 1);
}

TEST_CASE("unsupported features fail loudly, by name") {
  CHECK_THROWS_WITH_AS(
      pddl::parse_domain("(define (domain d) (:requirements :fluents))"),
      doctest::Contains("unsupported"), pddl::ParseError);
  CHECK_THROWS_WITH_AS(
      pddl::parse_domain("(define (domain d) (:requirements :strips)"
                         " (:functions (cost)))"),
      doctest::Contains("unsupported"), pddl::ParseError);
  CHECK_THROWS_WITH_AS(
      pddl::parse_domain(
          "(define (domain d) (:requirements :strips)"
          " (:predicates (p))"
          " (:durative-action a :parameters () :duration (= ?duration 1)"
          "  :condition (p) :effect (p)))"),
      doctest::Contains("unsupported"), pddl::ParseError);
  // disjunctive preconditions are outside the subset even though negation
  // and conjunction are in
  CHECK_THROWS_WITH_AS(
      pddl::parse_domain("(define (domain d) (:requirements :strips)"
                         " (:predicates (p) (q))"
                         " (:action a :parameters ()"
                         "  :precondition (or (p) (q)) :effect (p)))"),
      doctest::Contains("unsupported"), pddl::ParseError);
}

TEST_CASE("parse errors carry line and column") {
  try {
    pddl::parse_domain("(define (domain d)\n (:requirements :strips)\n (:predicates (p ?x - ghost)))");
    FAIL("expected a parse error");
  } catch (const pddl::ParseError& e) {
    CHECK(e.line() == 3);
    CHECK(std::string(e.what()).find("ghost") != std::string::npos);
  }
  try {
    pddl::parse_domain("(define (domain d) (:requirements :strips)");
    FAIL("expected a parse error");
  } catch (const pddl::ParseError& e) {
    CHECK(std::string(e.what()).find("line") != std::string::npos);
  }
}

TEST_CASE("problems are checked against their domain") {
  pddl::DomainDef d = pddl::parse_domain(kDomainText);
  pddl::ProblemDef p = pddl::parse_problem(kProblemText, d);
  CHECK(p.name == "chain3-p0");
  CHECK(p.domain_name == "chain3");
  CHECK(p.objects.size() == 8);
  CHECK(p.init.size() == 8);
  CHECK(p.goal.literals.size() == 1);

  SUBCASE("mismatched domain name") {
    pddl::DomainDef other = d;
    other.name = "something-else";
    CHECK_THROWS_AS(pddl::parse_problem(kProblemText, other),
                    pddl::ParseError);
  }
  SUBCASE("unknown object in init") {
    std::string bad = kProblemText;
    const auto at = bad.find("(free gleft)");
    bad.replace(at, 12, "(free gmiddle)");
    CHECK_THROWS_WITH_AS(pddl::parse_problem(bad, d),
                         doctest::Contains("gmiddle"), pddl::ParseError);
  }
  SUBCASE("arity mismatch in goal") {
    std::string bad = kProblemText;
    const auto at = bad.find("(angle_joint angle45 joint1))))");
    bad.replace(at, 31, "(angle_joint angle45))))");
    CHECK_THROWS_AS(pddl::parse_problem(bad, d), pddl::ParseError);
  }
  SUBCASE("type mismatch in init") {
    std::string bad = kProblemText;
    const auto at = bad.find("(free gleft)");
    bad.replace(at, 12, "(free joint1)");
    CHECK_THROWS_AS(pddl::parse_problem(bad, d), pddl::ParseError);
  }
  SUBCASE("duplicate init atoms collapse") {
    std::string dup = kProblemText;
    const auto at = dup.find("(free gleft)");
    dup.insert(at, "(free gleft) ");
    pddl::ProblemDef q = pddl::parse_problem(dup, d);
    CHECK(q.init.size() == p.init.size());
  }
}

TEST_CASE("render/parse is a fixpoint for domains and problems") {
  pddl::DomainDef d1 = pddl::parse_domain(kDomainText);
  const std::string d_text = pddl::render_domain(d1);
  pddl::DomainDef d2 = pddl::parse_domain(d_text);
  CHECK(d1 == d2);
  CHECK(pddl::render_domain(d2) == d_text);

  pddl::ProblemDef p1 = pddl::parse_problem(kProblemText, d1);
  const std::string p_text = pddl::render_problem(p1);
  pddl::ProblemDef p2 = pddl::parse_problem(p_text, d1);
  CHECK(p1 == p2);
  CHECK(pddl::render_problem(p2) == p_text);
}

TEST_CASE("plan timestamps render with five decimals and round-trip") {
  CHECK(pddl::render_ticks(100) == "0.00100");
  CHECK(pddl::render_ticks(300) == "0.00300");
  CHECK(pddl::render_ticks(150000) == "1.50000");
  CHECK(pddl::canonical_ticks(0) == 100);
  CHECK(pddl::canonical_ticks(1) == 300);
  CHECK(pddl::canonical_ticks(10) == 2100);

  pddl::Plan plan;
  plan.steps.push_back({777, "grasp", {"link1", "gleft"}});
  plan.steps.push_back({12345, "release-links", {"link1", "gleft"}});
  pddl::Plan again = pddl::parse_plan(pddl::render_plan(plan)).plan;
  CHECK(again == plan);

  pddl::Plan canon = pddl::restamped(plan);
  CHECK(canon.steps[0].ticks == 100);
  CHECK(canon.steps[1].ticks == 300);
  CHECK(canon.steps[1].name == "release-links");
}

TEST_CASE("plan parsing tolerates completion-shaped text") {
  const pddl::PlanParse pp = pddl::parse_plan(
      " 0.00100: (link-to-central-grasp link1 gleft)\n"
      "\n"
      "   0.00300: (increase_angle_first_child_45 joint1 link1 gleft angle0 angle45)\n"
      "0.00500: (release-links link1 gleft)\n"
      "END\n");
  CHECK(pp.end_sentinel);
  REQUIRE(pp.plan.size() == 3);
  CHECK(pp.plan.steps[0].name == "link-to-central-grasp");
  CHECK(pp.plan.steps[0].args ==
        std::vector<std::string>{"link1", "gleft"});
  CHECK(pp.plan.steps[1].ticks == 300);
  CHECK(pp.plan.steps[2].name == "release-links");

  CHECK_FALSE(pddl::parse_plan("0.00100: (a x)\n").end_sentinel);
  CHECK(pddl::parse_plan("  \n \nEND").plan.empty());
}

TEST_CASE("plan parsing rejects malformed lines") {
  CHECK_THROWS_AS(pddl::parse_plan("0.00100 (a x)"), pddl::ParseError);
  CHECK_THROWS_AS(pddl::parse_plan("0.00100: a x"), pddl::ParseError);
  CHECK_THROWS_AS(pddl::parse_plan("0.001000: (a x)"), pddl::ParseError);
  CHECK_THROWS_AS(pddl::parse_plan("abc: (a x)"), pddl::ParseError);
  CHECK_THROWS_AS(pddl::parse_plan("0.00100: (a x) trailing"),
                  pddl::ParseError);
  // timestamps must strictly increase
  CHECK_THROWS_AS(
      pddl::parse_plan("0.00300: (a x)\n0.00300: (b y)"), pddl::ParseError);
  CHECK_THROWS_AS(
      pddl::parse_plan("0.00300: (a x)\n0.00100: (b y)"), pddl::ParseError);
}

TEST_CASE("condition keys ignore literal order") {
  pddl::Condition c1, c2;
  pddl::Atom a{"angle_joint", {pddl::obj("angle0"), pddl::obj("joint1")}};
  pddl::Atom b{"free", {pddl::obj("gleft")}};
  c1.literals = {{a, false}, {b, true}};
  c2.literals = {{b, true}, {a, false}};
  CHECK(pddl::condition_key(c1) == pddl::condition_key(c2));
  c2.literals[0].negated = false;
  CHECK(pddl::condition_key(c1) != pddl::condition_key(c2));
}

TEST_CASE("symbol normalization") {
  CHECK(pddl::normalize_symbol("Link-To-Central-Grasp") ==
        "link-to-central-grasp");
  CHECK(pddl::normalize_symbol("angle_succ_45") == "angle_succ_45");
  CHECK_THROWS_AS(pddl::normalize_symbol("9lives"), std::invalid_argument);
  CHECK_THROWS_AS(pddl::normalize_symbol(""), std::invalid_argument);
  CHECK_THROWS_AS(pddl::normalize_symbol("bad atom"), std::invalid_argument);
}

}  // TEST_SUITE
