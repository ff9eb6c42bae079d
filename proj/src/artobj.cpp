#include "chainplan/artobj.hpp"

#include <algorithm>
#include <random>
#include <sstream>
#include <stdexcept>

namespace chainplan::artobj {

namespace {

std::string angle_name(int deg) { return "angle" + std::to_string(deg); }
std::string joint_name(int i) { return "joint" + std::to_string(i); }
std::string link_name(int i) { return "link" + std::to_string(i); }

pddl::Atom atom(std::string pred, std::initializer_list<std::string> args) {
  pddl::Atom a;
  a.predicate = std::move(pred);
  for (const auto& arg : args) a.args.push_back(pddl::obj(arg));
  return a;
}

pddl::Atom vatom(std::string pred, std::initializer_list<std::string> vars) {
  pddl::Atom a;
  a.predicate = std::move(pred);
  for (const auto& v : vars) a.args.push_back(pddl::var(v));
  return a;
}

std::string succ_pred(int increment) {
  return "angle_succ_" + std::to_string(increment);
}

std::vector<pddl::TypedObject> object_universe(const ChainConfig& cfg) {
  std::vector<pddl::TypedObject> objects;
  for (int i = 1; i <= cfg.n_joints; ++i)
    objects.push_back({joint_name(i), "joint"});
  for (int i = 1; i <= cfg.n_joints; ++i)
    objects.push_back({link_name(i), "link"});
  for (int d = 0; d < 360; d += cfg.angle_step_deg)
    objects.push_back({angle_name(d), "angle"});
  objects.push_back({"gleft", "gripper"});
  objects.push_back({"gright", "gripper"});
  return objects;
}

std::vector<pddl::Atom> static_atoms(const ChainConfig& cfg) {
  std::vector<pddl::Atom> out;
  for (int i = 1; i <= cfg.n_joints; ++i)
    out.push_back(atom("connected", {link_name(i), joint_name(i)}));
  for (int i = 1; i <= cfg.n_joints; ++i)
    for (int j = i + 1; j <= cfg.n_joints; ++j)
      out.push_back(atom("downstream", {joint_name(i), joint_name(j)}));
  for (int k : cfg.rotation_increments_deg)
    for (int d = 0; d < 360; d += cfg.angle_step_deg)
      out.push_back(
          atom(succ_pred(k), {angle_name(d), angle_name((d + k) % 360)}));
  return out;
}

// The downstream-propagation effect shared by every rotation operator: all
// joints below the rotated one shift by the same increment. `up` selects the
// direction by orienting the successor lookup.
pddl::CondEffect downstream_shift(int increment, bool up) {
  pddl::CondEffect ce;
  ce.vars = {{"dj", "joint"}, {"da", "angle"}, {"dto", "angle"}};
  ce.when.literals.push_back({vatom("downstream", {"j", "dj"}), false});
  ce.when.literals.push_back({vatom("angle_joint", {"da", "dj"}), false});
  ce.when.literals.push_back(
      {up ? vatom(succ_pred(increment), {"da", "dto"})
          : vatom(succ_pred(increment), {"dto", "da"}),
       false});
  ce.then.push_back({vatom("angle_joint", {"da", "dj"}), true});
  ce.then.push_back({vatom("angle_joint", {"dto", "dj"}), false});
  return ce;
}

pddl::ActionSchema rotation_schema(const std::string& name, int increment,
                                   bool up, bool macro) {
  pddl::ActionSchema s;
  s.name = name;
  s.params = {{"j", "joint"},
              {"l", "link"},
              {"g", "gripper"},
              {"from", "angle"},
              {"to", "angle"}};
  if (macro)
    s.precondition.literals.push_back({vatom("free", {"g"}), false});
  else
    s.precondition.literals.push_back({vatom("held", {"l", "g"}), false});
  s.precondition.literals.push_back({vatom("connected", {"l", "j"}), false});
  s.precondition.literals.push_back({vatom("angle_joint", {"from", "j"}), false});
  s.precondition.literals.push_back(
      {up ? vatom(succ_pred(increment), {"from", "to"})
          : vatom(succ_pred(increment), {"to", "from"}),
       false});
  s.effect.literals.push_back({vatom("angle_joint", {"from", "j"}), true});
  s.effect.literals.push_back({vatom("angle_joint", {"to", "j"}), false});
  s.effect.conditional.push_back(downstream_shift(increment, up));
  return s;
}

}  // namespace

void ChainConfig::validate() const {
  if (n_joints < 1) throw std::invalid_argument("need at least one joint");
  if (angle_step_deg <= 0 || 360 % angle_step_deg != 0)
    throw std::invalid_argument("angle step must divide 360");
  if (rotation_increments_deg.empty())
    throw std::invalid_argument("need at least one rotation increment");
  for (int k : rotation_increments_deg)
    if (k <= 0 || k >= 360 || k % angle_step_deg != 0)
      throw std::invalid_argument(
          "rotation increments must be multiples of the angle step in (0, "
          "360)");
  if (central_joint < 1 || central_joint > n_joints)
    throw std::invalid_argument("central joint out of range");
}

std::string ChainConfig::domain_name() const {
  return "chain" + std::to_string(n_joints);
}

const std::vector<std::string>& dynamic_predicates() {
  static const std::vector<std::string> preds = {"angle_joint", "in-centre",
                                                 "free", "held"};
  return preds;
}

pddl::DomainDef make_domain(const ChainConfig& cfg) {
  cfg.validate();
  pddl::DomainDef d;
  d.name = cfg.domain_name();
  d.requirements = {":strips", ":typing", ":conditional-effects"};
  d.types = {{"joint", "object"},
             {"link", "object"},
             {"angle", "object"},
             {"gripper", "object"}};
  d.predicates = {
      {"angle_joint", {{"a", "angle"}, {"j", "joint"}}},
      {"in-centre", {{"j", "joint"}}},
      {"free", {{"g", "gripper"}}},
      {"held", {{"l", "link"}, {"g", "gripper"}}},
      {"connected", {{"l", "link"}, {"j", "joint"}}},
      {"downstream", {{"j", "joint"}, {"dj", "joint"}}},
  };
  for (int k : cfg.rotation_increments_deg)
    d.predicates.push_back({succ_pred(k), {{"from", "angle"}, {"to", "angle"}}});

  if (cfg.use_macros) {
    // compound grasp-rotate-release operators: the gripper must be free, the
    // net effect touches angles only
    for (int k : cfg.rotation_increments_deg) {
      d.actions.push_back(rotation_schema(
          "grasp-increase-release_" + std::to_string(k), k, true, true));
      d.actions.push_back(rotation_schema(
          "grasp-decrease-release_" + std::to_string(k), k, false, true));
    }
  } else {
    pddl::ActionSchema grasp;
    grasp.name = "link-to-central-grasp";
    grasp.params = {{"l", "link"}, {"g", "gripper"}};
    grasp.precondition.literals.push_back({vatom("free", {"g"}), false});
    grasp.effect.literals.push_back({vatom("free", {"g"}), true});
    grasp.effect.literals.push_back({vatom("held", {"l", "g"}), false});
    d.actions.push_back(std::move(grasp));

    for (int k : cfg.rotation_increments_deg) {
      d.actions.push_back(rotation_schema(
          "increase_angle_first_child_" + std::to_string(k), k, true, false));
      d.actions.push_back(rotation_schema(
          "decrease_angle_first_child_" + std::to_string(k), k, false, false));
    }

    pddl::ActionSchema release;
    release.name = "release-links";
    release.params = {{"l", "link"}, {"g", "gripper"}};
    release.precondition.literals.push_back({vatom("held", {"l", "g"}), false});
    release.effect.literals.push_back({vatom("held", {"l", "g"}), true});
    release.effect.literals.push_back({vatom("free", {"g"}), false});
    d.actions.push_back(std::move(release));
  }
  return d;
}

std::string strip_statics(const pddl::ProblemDef& problem) {
  const auto& dyn = dynamic_predicates();
  std::vector<std::string> main_atoms;
  std::vector<std::string> gripper_atoms;
  for (const auto& a : problem.init) {
    if (std::find(dyn.begin(), dyn.end(), a.predicate) == dyn.end()) continue;
    if (a.predicate == "free" || a.predicate == "held")
      gripper_atoms.push_back(pddl::render_atom(a));
    else
      main_atoms.push_back(pddl::render_atom(a));
  }

  std::ostringstream out;
  out << "(:init ";
  for (std::size_t i = 0; i < main_atoms.size(); ++i) {
    if (i) out << '\n';
    out << main_atoms[i];
  }
  if (!gripper_atoms.empty()) {
    if (!main_atoms.empty()) out << '\n';
    for (std::size_t i = 0; i < gripper_atoms.size(); ++i) {
      if (i) out << ' ';
      out << gripper_atoms[i];
    }
  }
  out << ")\n(:goal (and";
  for (const auto& lit : problem.goal.literals)
    out << '\n' << pddl::render_literal(lit);
  out << "))";
  return out.str();
}

PromptParse parse_prompt(const std::string& prompt, const ChainConfig& cfg) {
  cfg.validate();
  std::string body = prompt;
  const std::string terminator = "\n\n###\n\n";
  if (body.size() >= terminator.size() &&
      body.compare(body.size() - terminator.size(), terminator.size(),
                   terminator) == 0)
    body.erase(body.size() - terminator.size());

  PromptParse result;
  std::size_t pos = body.find_first_not_of(" \t\r\n");
  if (pos != std::string::npos &&
      body.compare(pos, 10, "--NO-MACRO") == 0) {
    result.no_macro_tag = true;
    pos = body.find('\n', pos);
    body = pos == std::string::npos ? "" : body.substr(pos + 1);
  }

  ChainConfig variant = cfg;
  if (result.no_macro_tag) variant.use_macros = false;
  pddl::DomainDef domain = make_domain(variant);

  std::ostringstream full;
  full << "(define (problem prompt-problem)\n(:domain " << variant.domain_name()
       << ")\n(:objects";
  const auto objects = object_universe(variant);
  for (const auto& o : objects) full << ' ' << o.name << " - " << o.type;
  full << ")\n" << body << "\n)";
  result.problem = pddl::parse_problem(full.str(), domain);
  for (const auto& a : static_atoms(variant)) result.problem.init.push_back(a);
  return result;
}

namespace {

pddl::ProblemDef make_template(const ChainConfig& cfg) {
  pddl::ProblemDef t;
  t.name = cfg.domain_name() + "-template";
  t.domain_name = cfg.domain_name();
  t.objects = object_universe(cfg);
  for (int i = 1; i <= cfg.n_joints; ++i)
    t.init.push_back(atom("angle_joint", {angle_name(0), joint_name(i)}));
  t.init.push_back(atom("in-centre", {joint_name(cfg.central_joint)}));
  t.init.push_back(atom("free", {"gleft"}));
  t.init.push_back(atom("free", {"gright"}));
  for (const auto& a : static_atoms(cfg)) t.init.push_back(a);
  return t;
}

}  // namespace

Generator::Generator(const ChainConfig& cfg)
    : cfg_(cfg),
      domain_(make_domain(cfg)),
      template_problem_(make_template(cfg)),
      ctx_(domain_, template_problem_) {
  ctx_.all_actions();  // ground once, up front
}

GeneratedProblem Generator::generate(std::uint64_t seed, int walk_len) {
  if (walk_len < 1) throw std::invalid_argument("walk length must be >= 1");
  std::mt19937_64 rng(cfg_.seed ^ (seed * 0x9E3779B97F4A7C15ULL) ^
                      0xD1B54A32D192ED03ULL);

  const int n_angles = 360 / cfg_.angle_step_deg;
  std::vector<pddl::Atom> dynamics;
  for (int i = 1; i <= cfg_.n_joints; ++i) {
    int deg = cfg_.angle_step_deg *
              static_cast<int>(std::uniform_int_distribution<int>(
                  0, n_angles - 1)(rng));
    dynamics.push_back(atom("angle_joint", {angle_name(deg), joint_name(i)}));
  }
  dynamics.push_back(atom("in-centre", {joint_name(cfg_.central_joint)}));
  dynamics.push_back(atom("free", {"gleft"}));
  dynamics.push_back(atom("free", {"gright"}));

  sem::State state = ctx_.make_state(dynamics);

  GeneratedProblem gp;
  const auto& actions = ctx_.all_actions();
  std::vector<const sem::GroundAction*> applicable_now;
  for (int t = 0; t < walk_len; ++t) {
    applicable_now.clear();
    for (const auto& ga : actions)
      if (sem::applicable(state, ga)) applicable_now.push_back(&ga);
    // grasp-style domains always have an applicable action; guard anyway
    if (applicable_now.empty()) break;
    const sem::GroundAction* pick =
        applicable_now[std::uniform_int_distribution<std::size_t>(
            0, applicable_now.size() - 1)(rng)];
    state = sem::apply(state, *pick);
    pddl::PlanStep step;
    step.ticks = pddl::canonical_ticks(gp.witness.steps.size());
    step.name = pick->name;
    step.args = pick->args;
    gp.witness.steps.push_back(std::move(step));
  }

  gp.problem.name = cfg_.domain_name() + "-p" + std::to_string(seed);
  gp.problem.domain_name = cfg_.domain_name();
  gp.problem.objects = object_universe(cfg_);
  gp.problem.init = dynamics;
  for (const auto& a : static_atoms(cfg_)) gp.problem.init.push_back(a);

  // goal: the angle of every joint in the walk's final state
  for (int i = 1; i <= cfg_.n_joints; ++i) {
    for (int d = 0; d < 360; d += cfg_.angle_step_deg) {
      pddl::Atom a = atom("angle_joint", {angle_name(d), joint_name(i)});
      auto id = ctx_.find(a);
      if (id && sem::contains(state, *id)) {
        gp.problem.goal.literals.push_back({std::move(a), false});
        break;
      }
    }
  }

  gp.compact_prompt = strip_statics(gp.problem);
  return gp;
}

GeneratedProblem generate_problem(const pddl::DomainDef& domain,
                                  const ChainConfig& cfg, int walk_len) {
  Generator gen(cfg);
  if (domain.name != gen.domain().name)
    throw std::invalid_argument("domain/config mismatch: " + domain.name);
  return gen.generate(cfg.seed, walk_len);
}

}  // namespace chainplan::artobj
