#include "chainplan/semantics.hpp"

#include <algorithm>
#include <stdexcept>

namespace chainplan::sem {

namespace {

std::string atom_key(const pddl::Atom& atom) {
  std::string key = atom.predicate;
  for (const auto& t : atom.args) {
    key += ' ';
    key += t.name;
  }
  return key;
}

pddl::Atom substitute(const pddl::Atom& atom,
                      const std::unordered_map<std::string, std::string>& bind) {
  pddl::Atom out;
  out.predicate = atom.predicate;
  out.args.reserve(atom.args.size());
  for (const auto& t : atom.args) {
    if (t.is_var) {
      auto it = bind.find(t.name);
      if (it == bind.end())
        throw std::invalid_argument("unbound variable '?" + t.name + "' in (" +
                                    atom.predicate + " ...)");
      out.args.push_back(pddl::obj(it->second));
    } else {
      out.args.push_back(t);
    }
  }
  return out;
}

void insert_sorted(std::vector<AtomId>& v, AtomId id) {
  auto it = std::lower_bound(v.begin(), v.end(), id);
  if (it == v.end() || *it != id) v.insert(it, id);
}

// Highest 0-based index of any of `names` used as a variable in the literal;
// -1 when the literal mentions none of them.
int max_var_index(const pddl::Literal& lit,
                  const std::vector<pddl::TypedVar>& names) {
  int max = -1;
  for (const auto& t : lit.atom.args) {
    if (!t.is_var) continue;
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i].name == t.name) max = std::max(max, static_cast<int>(i));
  }
  return max;
}

}  // namespace

bool contains(const State& state, AtomId id) {
  return std::binary_search(state.begin(), state.end(), id);
}

std::string GroundAction::signature() const {
  std::string s = "(" + name;
  for (const auto& a : args) {
    s += ' ';
    s += a;
  }
  s += ')';
  return s;
}

GroundContext::GroundContext(const pddl::DomainDef& domain,
                             const pddl::ProblemDef& problem)
    : domain_(domain), problem_(problem) {
  // A predicate is static iff no action effect ever adds or deletes it.
  for (const auto& p : domain_.predicates) static_predicates_.insert(p.name);
  for (const auto& a : domain_.actions) {
    for (const auto& lit : a.effect.literals)
      static_predicates_.erase(lit.atom.predicate);
    for (const auto& ce : a.effect.conditional)
      for (const auto& lit : ce.then)
        static_predicates_.erase(lit.atom.predicate);
  }
  for (const auto& obj : problem_.objects) object_type_[obj.name] = obj.type;
  for (const auto& atom : problem_.init) insert_sorted(init_, intern(atom));
}

AtomId GroundContext::intern(const pddl::Atom& ground_atom) {
  std::string key = atom_key(ground_atom);
  auto it = index_.find(key);
  if (it != index_.end()) return it->second;
  AtomId id = static_cast<AtomId>(atoms_.size());
  atoms_.push_back(ground_atom);
  index_.emplace(std::move(key), id);
  return id;
}

std::optional<AtomId> GroundContext::find(const pddl::Atom& ground_atom) const {
  auto it = index_.find(atom_key(ground_atom));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

bool GroundContext::holds(const State& state, const pddl::Condition& cond) {
  for (const auto& lit : cond.literals) {
    bool truth;
    if (lit.atom.predicate == "=") {
      truth = lit.atom.args[0].name == lit.atom.args[1].name;
    } else {
      auto id = find(lit.atom);
      truth = id && contains(state, *id);
    }
    if (truth == lit.negated) return false;
  }
  return true;
}

bool GroundContext::goal_holds(const State& state) {
  return holds(state, problem_.goal);
}

bool GroundContext::is_static(const std::string& predicate) const {
  return static_predicates_.count(predicate) > 0;
}

bool GroundContext::object_is(const std::string& object,
                              const std::string& type) const {
  auto it = object_type_.find(object);
  if (it == object_type_.end()) return false;
  std::string t = it->second;
  for (;;) {
    if (t == type) return true;
    if (t == "object") return type == "object";
    const std::string* parent = nullptr;
    for (const auto& d : domain_.types)
      if (d.name == t) parent = &d.parent;
    t = parent ? *parent : "object";
  }
}

const std::vector<std::string>& GroundContext::objects_of(
    const std::string& type) {
  auto it = by_type_.find(type);
  if (it != by_type_.end()) return it->second;
  std::vector<std::string> names;
  for (const auto& obj : problem_.objects)
    if (object_is(obj.name, type)) names.push_back(obj.name);
  return by_type_.emplace(type, std::move(names)).first->second;
}

// True when the literal's truth is frozen (equality or static predicate) and
// it contradicts the initial state. Interns nothing for equality.
bool GroundContext::static_literal_false_in_init(const pddl::Literal& lit) {
  bool truth;
  if (lit.atom.predicate == "=") {
    truth = lit.atom.args[0].name == lit.atom.args[1].name;
  } else {
    auto id = find(lit.atom);
    truth = id && contains(init_, *id);
  }
  return truth == lit.negated;
}

GroundAction GroundContext::ground(const pddl::ActionSchema& schema,
                                   const std::vector<std::string>& args) {
  if (args.size() != schema.params.size())
    throw std::invalid_argument(
        "arity mismatch for '" + schema.name + "': expected " +
        std::to_string(schema.params.size()) + " args, got " +
        std::to_string(args.size()));
  std::unordered_map<std::string, std::string> bind;
  for (std::size_t i = 0; i < schema.params.size(); ++i) {
    const auto& p = schema.params[i];
    if (!object_type_.count(args[i]))
      throw std::invalid_argument("unknown object '" + args[i] + "'");
    if (!object_is(args[i], p.type))
      throw std::invalid_argument("type mismatch for '" + schema.name +
                                  "': '" + args[i] + "' is not of type " +
                                  p.type);
    bind[p.name] = args[i];
  }

  GroundAction ga;
  ga.name = schema.name;
  ga.args = args;

  for (const auto& lit : schema.precondition.literals) {
    pddl::Literal g{substitute(lit.atom, bind), lit.negated};
    if (g.atom.predicate == "=" || is_static(g.atom.predicate)) {
      if (static_literal_false_in_init(g)) ga.impossible = true;
      continue;  // statically-true guards carry no information at runtime
    }
    AtomId id = intern(g.atom);
    insert_sorted(g.negated ? ga.pre_neg : ga.pre_pos, id);
  }
  for (const auto& lit : schema.effect.literals) {
    AtomId id = intern(substitute(lit.atom, bind));
    insert_sorted(lit.negated ? ga.dels : ga.adds, id);
  }

  for (const auto& ce : schema.effect.conditional) {
    // Guards over schema parameters alone can kill the whole conditional
    // effect before any quantifier is expanded.
    bool effect_dead = false;
    for (const auto& lit : ce.when.literals) {
      if (max_var_index(lit, ce.vars) != -1) continue;
      if (lit.atom.predicate != "=" && !is_static(lit.atom.predicate))
        continue;
      if (static_literal_false_in_init(
              {substitute(lit.atom, bind), lit.negated})) {
        effect_dead = true;
        break;
      }
    }
    if (effect_dead) continue;
    // Expand the quantified variables depth-first, testing each static or
    // equality guard as soon as all its variables are bound; dead tuples are
    // pruned without visiting their subtrees.
    auto expand = [&](auto&& self, std::size_t depth) -> void {
      if (depth == ce.vars.size()) {
        GroundBranch br;
        for (const auto& lit : ce.when.literals) {
          pddl::Literal g{substitute(lit.atom, bind), lit.negated};
          if (g.atom.predicate == "=" || is_static(g.atom.predicate)) continue;
          AtomId id = intern(g.atom);
          insert_sorted(g.negated ? br.when_neg : br.when_pos, id);
        }
        for (const auto& lit : ce.then) {
          AtomId id = intern(substitute(lit.atom, bind));
          insert_sorted(lit.negated ? br.dels : br.adds, id);
        }
        ga.branches.push_back(std::move(br));
        return;
      }
      for (const auto& obj : objects_of(ce.vars[depth].type)) {
        bind[ce.vars[depth].name] = obj;
        bool dead = false;
        for (const auto& lit : ce.when.literals) {
          if (max_var_index(lit, ce.vars) != static_cast<int>(depth)) continue;
          if (lit.atom.predicate != "=" && !is_static(lit.atom.predicate))
            continue;
          if (static_literal_false_in_init(
                  {substitute(lit.atom, bind), lit.negated})) {
            dead = true;
            break;
          }
        }
        if (!dead) self(self, depth + 1);
      }
      bind.erase(ce.vars[depth].name);
    };
    expand(expand, 0);
  }
  return ga;
}

void GroundContext::enumerate_bindings(const pddl::ActionSchema& schema,
                                       std::size_t param,
                                       std::vector<std::string>& binding,
                                       std::vector<GroundAction>& out) {
  if (param == schema.params.size()) {
    GroundAction ga = ground(schema, binding);
    if (!ga.impossible) out.push_back(std::move(ga));
    return;
  }
  std::unordered_map<std::string, std::string> bind;
  for (const auto& obj : objects_of(schema.params[param].type)) {
    binding[param] = obj;
    // prune on static/equality precondition guards that are now fully bound
    bool dead = false;
    for (const auto& lit : schema.precondition.literals) {
      if (max_var_index(lit, schema.params) != static_cast<int>(param))
        continue;
      if (lit.atom.predicate != "=" && !is_static(lit.atom.predicate))
        continue;
      bind.clear();
      for (std::size_t i = 0; i <= param; ++i)
        bind[schema.params[i].name] = binding[i];
      if (static_literal_false_in_init(
              {substitute(lit.atom, bind), lit.negated})) {
        dead = true;
        break;
      }
    }
    if (!dead) enumerate_bindings(schema, param + 1, binding, out);
  }
}

const std::vector<GroundAction>& GroundContext::all_actions() {
  if (all_actions_ready_) return all_actions_;
  for (const auto& schema : domain_.actions) {
    std::vector<std::string> binding(schema.params.size());
    if (schema.params.empty()) {
      GroundAction ga = ground(schema, {});
      if (!ga.impossible) all_actions_.push_back(std::move(ga));
    } else {
      enumerate_bindings(schema, 0, binding, all_actions_);
    }
  }
  std::sort(all_actions_.begin(), all_actions_.end(),
            [](const GroundAction& a, const GroundAction& b) {
              return a.signature() < b.signature();
            });
  all_actions_ready_ = true;
  return all_actions_;
}

State GroundContext::make_state(const std::vector<pddl::Atom>& atoms) {
  State state;
  for (AtomId id : init_)
    if (is_static(atoms_[id].predicate)) state.push_back(id);
  for (const auto& atom : atoms) insert_sorted(state, intern(atom));
  return state;
}

std::vector<std::string> GroundContext::render_state(
    const State& state) const {
  std::vector<std::string> out;
  out.reserve(state.size());
  for (AtomId id : state) out.push_back(pddl::render_atom(atoms_[id]));
  std::sort(out.begin(), out.end());
  return out;
}

bool applicable(const State& state, const GroundAction& action) {
  if (action.impossible) return false;
  for (AtomId id : action.pre_pos)
    if (!contains(state, id)) return false;
  for (AtomId id : action.pre_neg)
    if (contains(state, id)) return false;
  return true;
}

State apply(const State& state, const GroundAction& action) {
  if (!applicable(state, action))
    throw std::logic_error("apply: preconditions of " + action.signature() +
                           " do not hold");
  std::vector<AtomId> dels = action.dels;
  std::vector<AtomId> adds = action.adds;
  for (const auto& br : action.branches) {
    bool triggered = true;
    for (AtomId id : br.when_pos)
      if (!contains(state, id)) {
        triggered = false;
        break;
      }
    if (triggered)
      for (AtomId id : br.when_neg)
        if (contains(state, id)) {
          triggered = false;
          break;
        }
    if (!triggered) continue;
    for (AtomId id : br.dels) insert_sorted(dels, id);
    for (AtomId id : br.adds) insert_sorted(adds, id);
  }
  std::sort(dels.begin(), dels.end());
  std::sort(adds.begin(), adds.end());

  State out;
  out.reserve(state.size() + adds.size());
  std::set_difference(state.begin(), state.end(), dels.begin(), dels.end(),
                      std::back_inserter(out));
  State result;
  result.reserve(out.size() + adds.size());
  std::set_union(out.begin(), out.end(), adds.begin(), adds.end(),
                 std::back_inserter(result));
  return result;
}

std::string ValidationReport::verdict_text() const {
  switch (verdict) {
    case Verdict::valid:
      return "valid";
    case Verdict::invalid:
      return "invalid";
    case Verdict::unsolved_goal:
      return "unsolved-goal";
  }
  return "invalid";
}

nlohmann::json ValidationReport::to_json() const {
  nlohmann::json j;
  j["verdict"] = verdict_text();
  if (failed_step) j["failed_step"] = *failed_step;
  if (!reason.empty()) j["reason"] = reason;
  if (!failing_atoms.empty()) j["failing_atoms"] = failing_atoms;
  j["final_state"] = final_state;
  return j;
}

ValidationReport validate_plan(GroundContext& ctx, const State& start,
                               const pddl::Condition& goal,
                               const pddl::Plan& plan) {
  ValidationReport report;
  State state = start;
  for (std::size_t i = 0; i < plan.steps.size(); ++i) {
    const auto& step = plan.steps[i];
    const pddl::ActionSchema* schema = ctx.domain().find_action(step.name);
    auto fail = [&](const std::string& reason) -> ValidationReport& {
      report.verdict = ValidationReport::Verdict::invalid;
      report.failed_step = i;
      report.reason = reason;
      report.final_state = ctx.render_state(state);
      return report;
    };
    if (!schema) return fail("unknown action '" + step.name + "'");
    GroundAction ga;
    try {
      ga = ctx.ground(*schema, step.args);
    } catch (const std::invalid_argument& e) {
      return fail(e.what());
    }
    if (!applicable(state, ga)) {
      ValidationReport& r = fail("unsatisfied precondition");
      if (ga.impossible) {
        r.reason = "statically impossible binding";
      } else {
        for (AtomId id : ga.pre_pos)
          if (!contains(state, id))
            r.failing_atoms.push_back(pddl::render_atom(ctx.atom(id)));
        for (AtomId id : ga.pre_neg)
          if (contains(state, id))
            r.failing_atoms.push_back("(not " +
                                      pddl::render_atom(ctx.atom(id)) + ")");
      }
      return r;
    }
    state = chainplan::sem::apply(state, ga);  // qualified: ADL finds std::apply
  }
  report.final_state = ctx.render_state(state);
  if (!ctx.holds(state, goal)) {
    report.verdict = ValidationReport::Verdict::unsolved_goal;
    report.reason = "goal not satisfied in final state";
    for (const auto& lit : goal.literals) {
      pddl::Condition single;
      single.literals.push_back(lit);
      if (!ctx.holds(state, single))
        report.failing_atoms.push_back(pddl::render_literal(lit));
    }
  }
  return report;
}

ValidationReport validate_plan(const pddl::DomainDef& domain,
                               const pddl::ProblemDef& problem,
                               const pddl::Plan& plan) {
  GroundContext ctx(domain, problem);
  return validate_plan(ctx, ctx.init(), problem.goal, plan);
}

}  // namespace chainplan::sem
