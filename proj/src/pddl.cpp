#include "chainplan/pddl.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>
#include <sstream>

namespace chainplan::pddl {

namespace {

// ---------------------------------------------------------------------------
// S-expression layer. PDDL files are tokenized into a tree of nodes carrying
// source locations; the domain/problem parsers walk that tree.

struct Sexp {
  bool is_list = false;
  std::string token;        // leaf only, already lowercased
  std::vector<Sexp> items;  // list only
  int line = 1;
  int col = 1;
};

[[noreturn]] void fail(const Sexp& at, const std::string& msg) {
  throw ParseError(msg, at.line, at.col);
}

class Tokenizer {
 public:
  explicit Tokenizer(const std::string& text) : text_(text) {}

  Sexp parse_all_as_one() {
    Sexp root = next();
    skip_ws();
    if (pos_ != text_.size())
      throw ParseError("trailing content after top-level form", line_, col_);
    return root;
  }

 private:
  Sexp next() {
    skip_ws();
    if (pos_ >= text_.size())
      throw ParseError("unexpected end of input", line_, col_);
    int line = line_;
    int col = col_;
    char c = text_[pos_];
    if (c == '(') {
      advance();
      Sexp list;
      list.is_list = true;
      list.line = line;
      list.col = col;
      for (;;) {
        skip_ws();
        if (pos_ >= text_.size())
          throw ParseError("missing ')'", line, col);
        if (text_[pos_] == ')') {
          advance();
          return list;
        }
        list.items.push_back(next());
      }
    }
    if (c == ')') throw ParseError("unexpected ')'", line_, col_);
    Sexp leaf;
    leaf.line = line;
    leaf.col = col;
    std::string tok;
    while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(c)) &&
           c != '(' && c != ')' && c != ';') {
      tok.push_back(static_cast<char>(
          std::tolower(static_cast<unsigned char>(c))));
      advance();
      if (pos_ < text_.size()) c = text_[pos_];
    }
    leaf.token = std::move(tok);
    return leaf;
  }

  void skip_ws() {
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (c == ';') {
        while (pos_ < text_.size() && text_[pos_] != '\n') advance();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else {
        break;
      }
    }
  }

  void advance() {
    if (text_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  const std::string& text_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

bool is_leaf(const Sexp& s, const std::string& tok) {
  return !s.is_list && s.token == tok;
}

const std::set<std::string> kSupportedRequirements = {
    ":strips", ":typing", ":equality", ":conditional-effects",
    ":universal-preconditions"};

bool valid_symbol(const std::string& s) {
  if (s.empty()) return false;
  if (s[0] < 'a' || s[0] > 'z') return false;
  for (char c : s) {
    bool ok = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_' ||
              c == '-';
    if (!ok) return false;
  }
  return true;
}

std::string expect_symbol(const Sexp& s, const char* what) {
  if (s.is_list) fail(s, std::string("expected ") + what);
  if (s.token == "=") return s.token;  // equality predicate
  if (!valid_symbol(s.token))
    fail(s, std::string("invalid ") + what + " '" + s.token + "'");
  return s.token;
}

std::string expect_variable(const Sexp& s) {
  if (s.is_list || s.token.size() < 2 || s.token[0] != '?')
    fail(s, "expected variable");
  std::string name = s.token.substr(1);
  if (!valid_symbol(name)) fail(s, "invalid variable '" + s.token + "'");
  return name;
}

// Parses "x y z - t a b - u rest..." into typed entries; untyped names get
// the fallback type.
template <typename Out>
void parse_typed_list(const std::vector<Sexp>& items, std::size_t begin,
                      std::size_t end, bool variables,
                      const std::string& fallback_type, Out&& emit) {
  std::vector<std::pair<std::string, const Sexp*>> pending;
  for (std::size_t i = begin; i < end; ++i) {
    const Sexp& it = items[i];
    if (is_leaf(it, "-")) {
      if (pending.empty()) fail(it, "dangling '-' in typed list");
      if (i + 1 >= end) fail(it, "missing type after '-'");
      std::string type = expect_symbol(items[i + 1], "type name");
      for (auto& [name, at] : pending) emit(name, type, *at);
      pending.clear();
      ++i;
    } else {
      std::string name = variables ? expect_variable(it)
                                   : expect_symbol(it, "name");
      pending.emplace_back(std::move(name), &it);
    }
  }
  for (auto& [name, at] : pending) emit(name, fallback_type, *at);
}

// ---------------------------------------------------------------------------
// Domain parsing

struct DomainContext {
  const DomainDef* domain = nullptr;
  std::set<std::string> type_names;

  bool has_type(const std::string& t) const {
    return t == "object" || type_names.count(t) > 0;
  }
};

Atom parse_atom(const Sexp& s, const DomainContext& ctx,
                const std::map<std::string, std::string>* var_types,
                bool allow_vars) {
  if (!s.is_list || s.items.empty() || s.items[0].is_list)
    fail(s, "expected atom");
  Atom atom;
  atom.predicate = expect_symbol(s.items[0], "predicate name");
  for (std::size_t i = 1; i < s.items.size(); ++i) {
    const Sexp& a = s.items[i];
    if (!a.is_list && !a.token.empty() && a.token[0] == '?') {
      if (!allow_vars) fail(a, "variable not allowed here");
      std::string name = expect_variable(a);
      if (var_types && !var_types->count(name))
        fail(a, "unbound variable '?" + name + "'");
      atom.args.push_back(var(std::move(name)));
    } else {
      atom.args.push_back(obj(expect_symbol(a, "object name")));
    }
  }
  if (atom.predicate == "=") {
    if (atom.args.size() != 2) fail(s, "'=' takes exactly two arguments");
    return atom;
  }
  const PredicateDecl* decl = ctx.domain->find_predicate(atom.predicate);
  if (!decl) fail(s, "unknown predicate '" + atom.predicate + "'");
  if (decl->params.size() != atom.args.size())
    fail(s, "arity mismatch for '" + atom.predicate + "': expected " +
                std::to_string(decl->params.size()) + ", got " +
                std::to_string(atom.args.size()));
  return atom;
}

Condition parse_condition(const Sexp& s, const DomainContext& ctx,
                          const std::map<std::string, std::string>* var_types,
                          bool allow_vars) {
  Condition cond;
  if (!s.is_list) fail(s, "expected condition");
  if (s.items.empty()) return cond;  // ()
  auto add_literal = [&](const Sexp& lit) {
    if (!lit.is_list || lit.items.empty()) fail(lit, "expected literal");
    if (is_leaf(lit.items[0], "not")) {
      if (lit.items.size() != 2) fail(lit, "'not' takes one literal");
      if (lit.items[1].is_list && !lit.items[1].items.empty() &&
          is_leaf(lit.items[1].items[0], "not"))
        fail(lit, "nested negation is not supported");
      cond.literals.push_back(
          Literal{parse_atom(lit.items[1], ctx, var_types, allow_vars), true});
    } else if (is_leaf(lit.items[0], "or")) {
      fail(lit, "unsupported feature: disjunctive condition");
    } else if (is_leaf(lit.items[0], "forall") ||
               is_leaf(lit.items[0], "exists")) {
      fail(lit, "unsupported feature: quantified condition");
    } else {
      cond.literals.push_back(
          Literal{parse_atom(lit, ctx, var_types, allow_vars), false});
    }
  };
  if (is_leaf(s.items[0], "and")) {
    for (std::size_t i = 1; i < s.items.size(); ++i) add_literal(s.items[i]);
  } else {
    add_literal(s);
  }
  return cond;
}

std::vector<Literal> parse_literal_list(const Sexp& s,
                                        const DomainContext& ctx,
                                        const std::map<std::string,
                                                       std::string>* var_types) {
  // Reuses conjunction parsing; "=" has no business in effects.
  Condition c = parse_condition(s, ctx, var_types, true);
  for (const auto& lit : c.literals)
    if (lit.atom.predicate == "=") fail(s, "'=' not allowed in effects");
  return c.literals;
}

Effect parse_effect(const Sexp& s, const DomainContext& ctx,
                    std::map<std::string, std::string> var_types) {
  Effect eff;
  if (!s.is_list) fail(s, "expected effect");
  std::vector<const Sexp*> entries;
  if (!s.items.empty() && is_leaf(s.items[0], "and")) {
    for (std::size_t i = 1; i < s.items.size(); ++i)
      entries.push_back(&s.items[i]);
  } else if (!s.items.empty()) {
    entries.push_back(&s);
  }
  for (const Sexp* e : entries) {
    if (!e->is_list || e->items.empty()) fail(*e, "expected effect entry");
    if (is_leaf(e->items[0], "forall")) {
      if (e->items.size() != 3 || !e->items[1].is_list)
        fail(*e, "expected (forall (vars) (when ...))");
      CondEffect ce;
      auto scoped = var_types;
      parse_typed_list(e->items[1].items, 0, e->items[1].items.size(), true,
                       "object",
                       [&](const std::string& n, const std::string& t,
                           const Sexp& at) {
                         if (!ctx.has_type(t))
                           fail(at, "undeclared type '" + t + "'");
                         if (scoped.count(n))
                           fail(at, "shadowed variable '?" + n + "'");
                         ce.vars.push_back(TypedVar{n, t});
                         scoped[n] = t;
                       });
      const Sexp& body = e->items[2];
      if (!body.is_list || body.items.size() != 3 ||
          !is_leaf(body.items[0], "when"))
        fail(body, "expected (when cond effect) under forall");
      ce.when = parse_condition(body.items[1], ctx, &scoped, true);
      ce.then = parse_literal_list(body.items[2], ctx, &scoped);
      eff.conditional.push_back(std::move(ce));
    } else if (is_leaf(e->items[0], "when")) {
      if (e->items.size() != 3) fail(*e, "expected (when cond effect)");
      CondEffect ce;
      ce.when = parse_condition(e->items[1], ctx, &var_types, true);
      ce.then = parse_literal_list(e->items[2], ctx, &var_types);
      eff.conditional.push_back(std::move(ce));
    } else if (is_leaf(e->items[0], "not")) {
      if (e->items.size() != 2) fail(*e, "'not' takes one literal");
      eff.literals.push_back(
          Literal{parse_atom(e->items[1], ctx, &var_types, true), true});
    } else {
      eff.literals.push_back(
          Literal{parse_atom(*e, ctx, &var_types, true), false});
    }
  }
  for (const auto& lit : eff.literals)
    if (lit.atom.predicate == "=") fail(s, "'=' not allowed in effects");
  return eff;
}

ActionSchema parse_action(const Sexp& s, const DomainContext& ctx) {
  ActionSchema schema;
  if (s.items.size() < 2) fail(s, "expected action name");
  schema.name = expect_symbol(s.items[1], "action name");
  std::map<std::string, std::string> var_types;
  std::size_t i = 2;
  bool saw_params = false;
  while (i < s.items.size()) {
    if (!is_leaf(s.items[i], s.items[i].token) || s.items[i].token.empty() ||
        s.items[i].token[0] != ':')
      fail(s.items[i], "expected :parameters/:precondition/:effect");
    const std::string& key = s.items[i].token;
    if (i + 1 >= s.items.size()) fail(s.items[i], "missing value after " + key);
    const Sexp& val = s.items[i + 1];
    if (key == ":parameters") {
      if (!val.is_list) fail(val, "expected parameter list");
      parse_typed_list(val.items, 0, val.items.size(), true, "object",
                       [&](const std::string& n, const std::string& t,
                           const Sexp& at) {
                         if (!ctx.has_type(t))
                           fail(at, "undeclared type '" + t + "'");
                         if (var_types.count(n))
                           fail(at, "duplicate parameter '?" + n + "'");
                         schema.params.push_back(TypedVar{n, t});
                         var_types[n] = t;
                       });
      saw_params = true;
    } else if (key == ":precondition") {
      schema.precondition = parse_condition(val, ctx, &var_types, true);
    } else if (key == ":effect") {
      schema.effect = parse_effect(val, ctx, var_types);
    } else if (key == ":duration" || key == ":condition") {
      fail(s.items[i], "unsupported feature: durative action field " + key);
    } else {
      fail(s.items[i], "unsupported action field " + key);
    }
    i += 2;
  }
  if (!saw_params) fail(s, "action '" + schema.name + "' has no :parameters");
  return schema;
}

// ---------------------------------------------------------------------------
// Rendering

void render_term(std::ostringstream& out, const Term& t) {
  if (t.is_var) out << '?';
  out << t.name;
}

void render_atom_to(std::ostringstream& out, const Atom& a) {
  out << '(' << a.predicate;
  for (const auto& t : a.args) {
    out << ' ';
    render_term(out, t);
  }
  out << ')';
}

void render_literal_to(std::ostringstream& out, const Literal& lit) {
  if (lit.negated) {
    out << "(not ";
    render_atom_to(out, lit.atom);
    out << ')';
  } else {
    render_atom_to(out, lit.atom);
  }
}

void render_condition_to(std::ostringstream& out, const Condition& c) {
  out << "(and";
  for (const auto& lit : c.literals) {
    out << ' ';
    render_literal_to(out, lit);
  }
  out << ')';
}

void render_typed_vars(std::ostringstream& out,
                       const std::vector<TypedVar>& vars) {
  out << '(';
  for (std::size_t i = 0; i < vars.size(); ++i) {
    if (i) out << ' ';
    out << '?' << vars[i].name << " - " << vars[i].type;
  }
  out << ')';
}

}  // namespace

const ActionSchema* DomainDef::find_action(const std::string& n) const {
  for (const auto& a : actions)
    if (a.name == n) return &a;
  return nullptr;
}

const PredicateDecl* DomainDef::find_predicate(const std::string& n) const {
  for (const auto& p : predicates)
    if (p.name == n) return &p;
  return nullptr;
}

std::string normalize_symbol(const std::string& raw) {
  std::string s;
  s.reserve(raw.size());
  for (char c : raw)
    s.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (!valid_symbol(s))
    throw std::invalid_argument("invalid symbol '" + raw + "'");
  return s;
}

DomainDef parse_domain(const std::string& text) {
  Sexp root = Tokenizer(text).parse_all_as_one();
  if (!root.is_list || root.items.size() < 2 || !is_leaf(root.items[0], "define"))
    fail(root, "expected (define (domain ...) ...)");
  const Sexp& head = root.items[1];
  if (!head.is_list || head.items.size() != 2 ||
      !is_leaf(head.items[0], "domain"))
    fail(head, "expected (domain <name>)");

  DomainDef domain;
  domain.name = expect_symbol(head.items[1], "domain name");
  DomainContext ctx;
  ctx.domain = &domain;

  for (std::size_t i = 2; i < root.items.size(); ++i) {
    const Sexp& sec = root.items[i];
    if (!sec.is_list || sec.items.empty() || sec.items[0].is_list)
      fail(sec, "expected domain section");
    const std::string& key = sec.items[0].token;
    if (key == ":requirements") {
      for (std::size_t j = 1; j < sec.items.size(); ++j) {
        const Sexp& r = sec.items[j];
        if (r.is_list) fail(r, "expected requirement flag");
        if (!kSupportedRequirements.count(r.token))
          fail(r, "unsupported feature: requirement " + r.token);
        domain.requirements.push_back(r.token);
      }
    } else if (key == ":types") {
      parse_typed_list(sec.items, 1, sec.items.size(), false, "object",
                       [&](const std::string& n, const std::string& t,
                           const Sexp& at) {
                         if (ctx.type_names.count(n))
                           fail(at, "duplicate type '" + n + "'");
                         if (t != "object" && !ctx.type_names.count(t))
                           fail(at, "undeclared parent type '" + t + "'");
                         domain.types.push_back(TypeDecl{n, t});
                         ctx.type_names.insert(n);
                       });
    } else if (key == ":predicates") {
      for (std::size_t j = 1; j < sec.items.size(); ++j) {
        const Sexp& p = sec.items[j];
        if (!p.is_list || p.items.empty())
          fail(p, "expected predicate declaration");
        PredicateDecl decl;
        decl.name = expect_symbol(p.items[0], "predicate name");
        if (domain.find_predicate(decl.name))
          fail(p, "duplicate predicate '" + decl.name + "'");
        std::set<std::string> seen;
        parse_typed_list(p.items, 1, p.items.size(), true, "object",
                         [&](const std::string& n, const std::string& t,
                             const Sexp& at) {
                           if (!ctx.has_type(t))
                             fail(at, "undeclared type '" + t + "'");
                           if (!seen.insert(n).second)
                             fail(at, "duplicate parameter '?" + n + "'");
                           decl.params.push_back(TypedVar{n, t});
                         });
        domain.predicates.push_back(std::move(decl));
      }
    } else if (key == ":action") {
      ActionSchema schema = parse_action(sec, ctx);
      if (domain.find_action(schema.name))
        fail(sec, "duplicate action '" + schema.name + "'");
      domain.actions.push_back(std::move(schema));
    } else if (key == ":durative-action" || key == ":functions" ||
               key == ":derived" || key == ":constraints") {
      fail(sec, "unsupported feature: section " + key);
    } else {
      fail(sec, "unknown domain section " + key);
    }
  }
  return domain;
}

ProblemDef parse_problem(const std::string& text, const DomainDef& domain) {
  Sexp root = Tokenizer(text).parse_all_as_one();
  if (!root.is_list || root.items.size() < 2 || !is_leaf(root.items[0], "define"))
    fail(root, "expected (define (problem ...) ...)");
  const Sexp& head = root.items[1];
  if (!head.is_list || head.items.size() != 2 ||
      !is_leaf(head.items[0], "problem"))
    fail(head, "expected (problem <name>)");

  ProblemDef problem;
  problem.name = expect_symbol(head.items[1], "problem name");

  DomainContext ctx;
  ctx.domain = &domain;
  for (const auto& t : domain.types) ctx.type_names.insert(t.name);

  std::map<std::string, std::string> object_types;
  auto check_ground_typed = [&](const Atom& atom, const Sexp& at) {
    const PredicateDecl* decl = domain.find_predicate(atom.predicate);
    for (std::size_t k = 0; k < atom.args.size(); ++k) {
      const Term& term = atom.args[k];
      if (term.is_var) fail(at, "non-ground atom in init/goal");
      auto it = object_types.find(term.name);
      if (it == object_types.end())
        fail(at, "unknown object '" + term.name + "'");
      if (decl) {
        // walk the hierarchy upward
        std::string want = decl->params[k].type;
        std::string have = it->second;
        while (have != want && have != "object") {
          const std::string* parent = nullptr;
          for (const auto& t : domain.types)
            if (t.name == have) parent = &t.parent;
          have = parent ? *parent : "object";
        }
        if (have != want && want != "object")
          fail(at, "type mismatch for '" + term.name + "' in (" +
                       atom.predicate + " ...): expected " + want);
      }
    }
  };

  bool saw_domain = false;
  for (std::size_t i = 2; i < root.items.size(); ++i) {
    const Sexp& sec = root.items[i];
    if (!sec.is_list || sec.items.empty() || sec.items[0].is_list)
      fail(sec, "expected problem section");
    const std::string& key = sec.items[0].token;
    if (key == ":domain") {
      if (sec.items.size() != 2) fail(sec, "expected (:domain <name>)");
      problem.domain_name = expect_symbol(sec.items[1], "domain name");
      if (problem.domain_name != domain.name)
        fail(sec, "problem references domain '" + problem.domain_name +
                      "' but '" + domain.name + "' was supplied");
      saw_domain = true;
    } else if (key == ":objects") {
      parse_typed_list(sec.items, 1, sec.items.size(), false, "object",
                       [&](const std::string& n, const std::string& t,
                           const Sexp& at) {
                         if (!ctx.has_type(t))
                           fail(at, "undeclared type '" + t + "'");
                         if (object_types.count(n))
                           fail(at, "duplicate object '" + n + "'");
                         problem.objects.push_back(TypedObject{n, t});
                         object_types[n] = t;
                       });
    } else if (key == ":init") {
      for (std::size_t j = 1; j < sec.items.size(); ++j) {
        Atom atom = parse_atom(sec.items[j], ctx, nullptr, false);
        if (atom.predicate == "=")
          fail(sec.items[j], "'=' not allowed in init");
        check_ground_typed(atom, sec.items[j]);
        if (std::find(problem.init.begin(), problem.init.end(), atom) ==
            problem.init.end())
          problem.init.push_back(std::move(atom));
      }
    } else if (key == ":goal") {
      if (sec.items.size() != 2) fail(sec, "expected (:goal <condition>)");
      problem.goal = parse_condition(sec.items[1], ctx, nullptr, false);
      for (const auto& lit : problem.goal.literals)
        check_ground_typed(lit.atom, sec.items[1]);
    } else if (key == ":metric" || key == ":constraints") {
      fail(sec, "unsupported feature: section " + key);
    } else {
      fail(sec, "unknown problem section " + key);
    }
  }
  if (!saw_domain) fail(root, "problem lacks a (:domain ...) section");
  return problem;
}

// ---------------------------------------------------------------------------
// Plan files

namespace {

std::int64_t parse_ticks(const std::string& s, int line) {
  std::size_t dot = s.find('.');
  std::string int_part = dot == std::string::npos ? s : s.substr(0, dot);
  std::string frac_part = dot == std::string::npos ? "" : s.substr(dot + 1);
  if (int_part.empty() && frac_part.empty())
    throw ParseError("malformed timestamp '" + s + "'", line, 1);
  if (frac_part.size() > 5)
    throw ParseError("timestamp '" + s + "' exceeds 5 fractional digits", line,
                     1);
  for (char c : int_part + frac_part)
    if (!std::isdigit(static_cast<unsigned char>(c)))
      throw ParseError("malformed timestamp '" + s + "'", line, 1);
  while (frac_part.size() < 5) frac_part.push_back('0');
  std::int64_t v = 0;
  for (char c : int_part) v = v * 10 + (c - '0');
  std::int64_t f = 0;
  for (char c : frac_part) f = f * 10 + (c - '0');
  return v * kTicksPerSecond + f;
}

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

PlanParse parse_plan(const std::string& text) {
  PlanParse result;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  std::int64_t prev_ticks = -1;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = trim(raw);
    if (line.empty()) continue;
    if (line == "END") {
      result.end_sentinel = true;
      break;  // anything after the sentinel is ignored
    }
    std::size_t colon = line.find(':');
    if (colon == std::string::npos)
      throw ParseError("malformed step line (missing ':')", line_no, 1);
    std::string stamp = trim(line.substr(0, colon));
    std::string rest = trim(line.substr(colon + 1));
    PlanStep step;
    step.ticks = parse_ticks(stamp, line_no);
    if (step.ticks <= prev_ticks)
      throw ParseError("non-increasing timestamps", line_no, 1);
    prev_ticks = step.ticks;
    if (rest.size() < 2 || rest.front() != '(' || rest.back() != ')')
      throw ParseError("malformed step line (expected '(<name> <args>)')",
                       line_no, static_cast<int>(colon) + 2);
    std::istringstream body(rest.substr(1, rest.size() - 2));
    std::string tok;
    bool first = true;
    while (body >> tok) {
      std::string sym;
      for (char c : tok)
        sym.push_back(
            static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
      if (!valid_symbol(sym))
        throw ParseError("invalid symbol '" + tok + "' in step", line_no, 1);
      if (first) {
        step.name = sym;
        first = false;
      } else {
        step.args.push_back(sym);
      }
    }
    if (first)
      throw ParseError("malformed step line (empty action)", line_no, 1);
    result.plan.steps.push_back(std::move(step));
  }
  return result;
}

std::string render_ticks(std::int64_t ticks) {
  std::int64_t secs = ticks / kTicksPerSecond;
  std::int64_t frac = ticks % kTicksPerSecond;
  std::string f = std::to_string(frac);
  while (f.size() < 5) f.insert(f.begin(), '0');
  return std::to_string(secs) + "." + f;
}

std::string render_step(const PlanStep& step) {
  std::ostringstream out;
  out << render_ticks(step.ticks) << ": (" << step.name;
  for (const auto& a : step.args) out << ' ' << a;
  out << ')';
  return out.str();
}

std::string render_plan(const Plan& plan) {
  std::ostringstream out;
  for (std::size_t i = 0; i < plan.steps.size(); ++i) {
    if (i) out << '\n';
    out << render_step(plan.steps[i]);
  }
  return out.str();
}

std::int64_t canonical_ticks(std::size_t step_index) {
  return kFirstStepTicks +
         kStepStrideTicks * static_cast<std::int64_t>(step_index);
}

Plan restamped(const Plan& plan) {
  Plan out = plan;
  for (std::size_t i = 0; i < out.steps.size(); ++i)
    out.steps[i].ticks = canonical_ticks(i);
  return out;
}

std::string render_atom(const Atom& atom) {
  std::ostringstream out;
  render_atom_to(out, atom);
  return out.str();
}

std::string render_literal(const Literal& lit) {
  std::ostringstream out;
  render_literal_to(out, lit);
  return out.str();
}

std::string condition_key(const Condition& cond) {
  std::vector<std::string> parts;
  parts.reserve(cond.literals.size());
  for (const auto& lit : cond.literals) parts.push_back(render_literal(lit));
  std::sort(parts.begin(), parts.end());
  parts.erase(std::unique(parts.begin(), parts.end()), parts.end());
  std::string key;
  for (const auto& p : parts) key += p;
  return key;
}

std::string render_domain(const DomainDef& domain) {
  std::ostringstream out;
  out << "(define (domain " << domain.name << ")\n";
  if (!domain.requirements.empty()) {
    out << "  (:requirements";
    for (const auto& r : domain.requirements) out << ' ' << r;
    out << ")\n";
  }
  if (!domain.types.empty()) {
    out << "  (:types";
    // contiguous runs that share a parent render as one "- parent" group
    for (std::size_t i = 0; i < domain.types.size();) {
      std::size_t j = i;
      while (j < domain.types.size() &&
             domain.types[j].parent == domain.types[i].parent)
        ++j;
      for (std::size_t k = i; k < j; ++k) out << ' ' << domain.types[k].name;
      if (domain.types[i].parent != "object")
        out << " - " << domain.types[i].parent;
      i = j;
    }
    out << ")\n";
  }
  if (!domain.predicates.empty()) {
    out << "  (:predicates\n";
    for (const auto& p : domain.predicates) {
      out << "    (" << p.name;
      for (const auto& v : p.params) out << " ?" << v.name << " - " << v.type;
      out << ")\n";
    }
    out << "  )\n";
  }
  for (const auto& a : domain.actions) {
    out << "  (:action " << a.name << "\n    :parameters ";
    std::ostringstream params;
    render_typed_vars(params, a.params);
    out << params.str() << "\n    :precondition ";
    std::ostringstream pre;
    render_condition_to(pre, a.precondition);
    out << pre.str() << "\n    :effect (and";
    for (const auto& lit : a.effect.literals) {
      out << ' ';
      std::ostringstream l;
      render_literal_to(l, lit);
      out << l.str();
    }
    for (const auto& ce : a.effect.conditional) {
      out << "\n      ";
      std::ostringstream body;
      if (!ce.vars.empty()) {
        body << "(forall ";
        render_typed_vars(body, ce.vars);
        body << ' ';
      }
      body << "(when ";
      render_condition_to(body, ce.when);
      body << " (and";
      for (const auto& lit : ce.then) {
        body << ' ';
        render_literal_to(body, lit);
      }
      body << "))";
      if (!ce.vars.empty()) body << ')';
      out << body.str();
    }
    out << "))\n";
  }
  out << ")\n";
  return out.str();
}

std::string render_problem(const ProblemDef& problem) {
  std::ostringstream out;
  out << "(define (problem " << problem.name << ")\n  (:domain "
      << problem.domain_name << ")\n";
  if (!problem.objects.empty()) {
    out << "  (:objects\n";
    for (std::size_t i = 0; i < problem.objects.size();) {
      std::size_t j = i;
      while (j < problem.objects.size() &&
             problem.objects[j].type == problem.objects[i].type)
        ++j;
      out << "   ";
      for (std::size_t k = i; k < j; ++k) out << ' ' << problem.objects[k].name;
      out << " - " << problem.objects[i].type << "\n";
      i = j;
    }
    out << "  )\n";
  }
  out << "  (:init";
  for (const auto& atom : problem.init) out << "\n    " << render_atom(atom);
  out << " )\n";
  out << "  (:goal (and";
  for (const auto& lit : problem.goal.literals)
    out << "\n    " << render_literal(lit);
  out << "))\n)\n";
  return out.str();
}

}  // namespace chainplan::pddl
