#include "kbx/definition.hpp"

#include <algorithm>
#include <cctype>
#include <mutex>
#include <regex>

#include "kbx/builtins.hpp"
#include "kbx/grammar.hpp"

namespace kbx {

using grammar::Lexeme;
using grammar::Symbol;
using grammar::TokenClass;

// --- plain accessors ----------------------------------------------------------

std::vector<std::string> Production::childSorts() const {
  std::vector<std::string> out;
  if (kind == Kind::kList) return {element};
  for (const auto& item : items) {
    if (!item.literal) out.push_back(item.text);
  }
  return out;
}

bool operator==(const Cell& a, const Cell& b) {
  return a.name == b.name && a.initial == b.initial && a.pgm == b.pgm && a.sort == b.sort &&
         a.output == b.output;
}

const Cell* ConfigurationDecl::find(const std::string& name) const {
  for (const auto& c : cells) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

Cell* ConfigurationDecl::find(const std::string& name) {
  for (auto& c : cells) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

const Cell& ConfigurationDecl::input() const {
  for (const auto& c : cells) {
    if (c.pgm) return c;
  }
  throw Error(ErrorKind::kNoInputCell, "no cell holds $PGM");
}

const Cell& ConfigurationDecl::output() const {
  for (const auto& c : cells) {
    if (c.output && !c.pgm) return c;
  }
  const Cell& in = input();
  for (const auto& c : cells) {
    if (c.name != in.name) return c;
  }
  throw Error(ErrorKind::kSyntaxError, "configuration has no output cell");
}

const Term* RuleDecl::cell(const std::string& name) const {
  for (const auto& [n, t] : cells) {
    if (n == name) return &t;
  }
  return nullptr;
}

Term* RuleDecl::cell(const std::string& name) {
  for (auto& [n, t] : cells) {
    if (n == name) return &t;
  }
  return nullptr;
}

bool operator==(const RuleDecl& a, const RuleDecl& b) {
  if (a.id != b.id || a.priority != b.priority || a.cells.size() != b.cells.size()) return false;
  for (std::size_t i = 0; i < a.cells.size(); ++i) {
    if (a.cells[i].first != b.cells[i].first || a.cells[i].second != b.cells[i].second) return false;
  }
  if (a.condition.has_value() != b.condition.has_value()) return false;
  return !a.condition || *a.condition == *b.condition;
}

Term lhsOf(const Term& cellPattern) {
  return cellPattern.is(Term::Kind::kRewrite) ? cellPattern.asRewrite().lhs : cellPattern;
}

Term rhsOf(const Term& cellPattern) {
  return cellPattern.is(Term::Kind::kRewrite) ? cellPattern.asRewrite().rhs : cellPattern;
}

bool operator==(const Definition& a, const Definition& b) {
  return a.productions == b.productions && a.configuration == b.configuration && a.rules == b.rules;
}

std::vector<std::string> Definition::userSorts() const {
  std::vector<std::string> out;
  for (const auto& p : productions) {
    if (std::find(out.begin(), out.end(), p.sort) == out.end()) out.push_back(p.sort);
  }
  return out;
}

bool Definition::hasSort(const std::string& sort) const {
  if (isBuiltinSort(sort)) return true;
  return std::any_of(productions.begin(), productions.end(),
                     [&](const Production& p) { return p.sort == sort; });
}

const Production* Definition::production(const std::string& id) const {
  for (const auto& p : productions) {
    if (p.kind == Production::Kind::kSyntax && p.id == id) return &p;
  }
  return nullptr;
}

const Production* Definition::listProduction(const std::string& sort) const {
  for (const auto& p : productions) {
    if (p.kind == Production::Kind::kList && p.sort == sort) return &p;
  }
  return nullptr;
}

bool Definition::isListSort(const std::string& sort) const { return listProduction(sort) != nullptr; }

const RuleDecl* Definition::rule(int id) const {
  for (const auto& r : rules) {
    if (r.id == id) return &r;
  }
  return nullptr;
}

// --- grammar construction -----------------------------------------------------

namespace {

enum Tag : int {
  kPass = -1,
  kLeaf = -2,
  kListEmpty = -3,
  kListOne = -5,
  kListCons = -6,
  kOrBool = -20,
  kAndBool = -21,
  kEqK = -22,
  kLtInt = -23,
  kLeInt = -24,
  kPlusInt = -25,
  kConcat = -26,
  kBind = -27,
  kUpdate = -28,
  kLookup = -29,
  kNotBool = -30,
  kBrackets = -31,
  kEmptyBrackets = -32,
  kDotK = -33,
  kDotList = -34,
  kDotMap = -35,
  kElemsOne = -37,
  kElemsCons = -38,
};

const char* const kBuiltinTokenSorts[] = {"Int", "String", "Bool", "Id"};

TokenClass classOfBuiltin(const std::string& sort) {
  if (sort == kSortInt) return TokenClass::kInt;
  if (sort == kSortString) return TokenClass::kString;
  if (sort == kSortBool) return TokenClass::kBool;
  return TokenClass::kIdent;
}

}  // namespace

struct Definition::Cache {
  std::vector<Production> productions;
  Signature signature;
  grammar::Grammar model;
  grammar::Grammar rule;
  grammar::LexOptions modelLex;
  grammar::LexOptions ruleLex;
};

namespace {

void addUserRules(grammar::Grammar& g, const std::vector<Production>& prods, bool ruleMode) {
  for (std::size_t idx = 0; idx < prods.size(); ++idx) {
    const Production& p = prods[idx];
    int lhs = g.nonterminal(p.sort);
    switch (p.kind) {
      case Production::Kind::kSyntax: {
        std::vector<Symbol> rhs;
        for (const auto& item : p.items) {
          rhs.push_back(item.literal ? Symbol::lit(item.text) : Symbol::nt(g.nonterminal(item.text)));
        }
        g.addRule(lhs, std::move(rhs), static_cast<int>(idx));
        break;
      }
      case Production::Kind::kChain:
        g.addRule(lhs, {Symbol::nt(g.nonterminal(p.items.front().text))}, kPass);
        break;
      case Production::Kind::kToken:
        g.addRule(lhs, {Symbol::cls_(TokenClass::kHash)}, kLeaf);
        break;
      case Production::Kind::kList: {
        if (ruleMode) {
          g.addRule(lhs, {Symbol::nt(g.nonterminal("@Atom"))}, kPass);
          break;
        }
        int ne = g.nonterminal(p.sort + "@ne");
        int elem = g.nonterminal(p.element);
        g.addRule(lhs, {}, kListEmpty);
        g.addRule(lhs, {Symbol::nt(ne)}, kPass);
        g.addRule(ne, {Symbol::nt(elem)}, kListOne);
        std::vector<Symbol> cons{Symbol::nt(elem)};
        if (!p.separator.empty()) cons.push_back(Symbol::lit(p.separator));
        cons.push_back(Symbol::nt(ne));
        g.addRule(ne, std::move(cons), kListCons);
        break;
      }
    }
  }
  for (const char* s : kBuiltinTokenSorts) {
    g.addRule(g.nonterminal(s), {Symbol::cls_(classOfBuiltin(s))}, kLeaf);
  }
}

void buildModelGrammar(grammar::Grammar& g, const std::vector<Production>& prods) {
  int top = g.nonterminal(kSortK);
  addUserRules(g, prods, false);
  std::vector<std::string> seen;
  for (const auto& p : prods) {
    if (std::find(seen.begin(), seen.end(), p.sort) != seen.end()) continue;
    seen.push_back(p.sort);
    g.addRule(top, {Symbol::nt(g.nonterminal(p.sort))}, kPass);
  }
}

void buildRuleGrammar(grammar::Grammar& g, const std::vector<Production>& prods) {
  int k = g.nonterminal("@K");
  int orN = g.nonterminal("@Or");
  int andN = g.nonterminal("@And");
  int cmp = g.nonterminal("@Cmp");
  int add = g.nonterminal("@Add");
  int concat = g.nonterminal("@Concat");
  int bind = g.nonterminal("@Bind");
  int post = g.nonterminal("@Post");
  int atom = g.nonterminal("@Atom");
  int elems = g.nonterminal("@Elems");
  using S = Symbol;

  g.addRule(k, {S::nt(orN)}, kPass);
  g.addRule(orN, {S::nt(orN), S::lit("orBool"), S::nt(andN)}, kOrBool);
  g.addRule(orN, {S::nt(andN)}, kPass);
  g.addRule(andN, {S::nt(andN), S::lit("andBool"), S::nt(cmp)}, kAndBool);
  g.addRule(andN, {S::nt(cmp)}, kPass);
  g.addRule(cmp, {S::nt(add), S::lit("==K"), S::nt(add)}, kEqK);
  g.addRule(cmp, {S::nt(add), S::lit("<Int"), S::nt(add)}, kLtInt);
  g.addRule(cmp, {S::nt(add), S::lit("<=Int"), S::nt(add)}, kLeInt);
  g.addRule(cmp, {S::nt(add)}, kPass);
  g.addRule(add, {S::nt(add), S::lit("+Int"), S::nt(concat)}, kPlusInt);
  g.addRule(add, {S::nt(concat)}, kPass);
  g.addRule(concat, {S::nt(concat), S::nt(bind)}, kConcat);
  g.addRule(concat, {S::nt(bind)}, kPass);
  g.addRule(bind, {S::nt(post), S::lit("|->"), S::nt(post)}, kBind);
  g.addRule(bind, {S::nt(post)}, kPass);
  g.addRule(post, {S::nt(post), S::lit("["), S::nt(k), S::lit("<-"), S::nt(k), S::lit("]")}, kUpdate);
  g.addRule(post, {S::nt(post), S::lit("["), S::nt(k), S::lit("]"), S::lit("orDefault"), S::nt(atom)},
            kLookup);
  g.addRule(post, {S::lit("notBool"), S::nt(post)}, kNotBool);
  g.addRule(post, {S::nt(atom)}, kPass);
  g.addRule(atom, {S::lit("["), S::nt(elems), S::lit("]")}, kBrackets);
  g.addRule(atom, {S::lit("["), S::lit("]")}, kEmptyBrackets);
  g.addRule(atom, {S::lit(".K")}, kDotK);
  g.addRule(atom, {S::lit(".List")}, kDotList);
  g.addRule(atom, {S::lit(".Map")}, kDotMap);
  g.addRule(atom, {S::lit("("), S::nt(k), S::lit(")")}, kPass);
  g.addRule(atom, {S::cls_(TokenClass::kVar)}, kLeaf);
  g.addRule(elems, {S::nt(k)}, kElemsOne);
  g.addRule(elems, {S::nt(k), S::lit(","), S::nt(elems)}, kElemsCons);

  addUserRules(g, prods, true);

  std::vector<std::string> sorts;
  for (const auto& p : prods) {
    if (std::find(sorts.begin(), sorts.end(), p.sort) == sorts.end()) sorts.push_back(p.sort);
  }
  for (const auto& s : sorts) {
    bool isList = std::any_of(prods.begin(), prods.end(), [&](const Production& p) {
      return p.sort == s && p.kind == Production::Kind::kList;
    });
    if (isList) continue;
    int nt = g.nonterminal(s);
    g.addRule(nt, {S::cls_(TokenClass::kVar)}, kLeaf);
    g.addRule(atom, {S::nt(nt)}, kPass);
  }
  for (const char* s : kBuiltinTokenSorts) {
    int nt = g.nonterminal(s);
    g.addRule(nt, {S::cls_(TokenClass::kVar)}, kLeaf);
    g.addRule(atom, {S::nt(nt)}, kPass);
  }
}

std::mutex& cacheMutex() {
  static std::mutex m;
  return m;
}

}  // namespace

std::shared_ptr<Definition::Cache> Definition::cache() const {
  std::lock_guard<std::mutex> lock(cacheMutex());
  if (cache_ && cache_->productions == productions) return cache_;
  auto c = std::make_shared<Cache>();
  c->productions = productions;
  for (const auto& p : productions) {
    switch (p.kind) {
      case Production::Kind::kSyntax: c->signature.addProduction(p.id, p.sort); break;
      case Production::Kind::kChain: c->signature.addSubsort(p.items.front().text, p.sort); break;
      case Production::Kind::kToken: c->signature.addTokenSort(p.sort); break;
      case Production::Kind::kList: c->signature.addListSort(p.sort); break;
    }
  }
  buildModelGrammar(c->model, productions);
  buildRuleGrammar(c->rule, productions);
  c->modelLex.literals = c->model.literals();
  c->ruleLex.literals = c->rule.literals();
  c->ruleLex.literals.insert("=>");
  c->ruleLex.ruleMode = true;
  for (const char* s : {kSortK, kSortInt, kSortString, kSortBool, kSortId, kSortList, kSortMap}) {
    c->ruleLex.sorts.insert(s);
  }
  for (const auto& p : productions) c->ruleLex.sorts.insert(p.sort);
  cache_ = c;
  return c;
}

const Signature& Definition::signature() const { return cache()->signature; }

// --- term building --------------------------------------------------------------

namespace {

std::vector<Term> valueChildren(const grammar::Rule& rule, const std::vector<Term>& children) {
  std::vector<Term> out;
  for (std::size_t i = 0; i < rule.rhs.size(); ++i) {
    const Symbol& s = rule.rhs[i];
    if (s.terminal && s.cls == TokenClass::kLiteral) continue;
    out.push_back(children[i]);
  }
  return out;
}

Term leafTerm(const Lexeme& lx) {
  if (lx.cls != TokenClass::kVar) return Term::token(lx.text);
  if (lx.text.front() == '?') {
    return Term::variable(Variable::placeholder(std::stoi(lx.text.substr(1, lx.text.size() - 2))));
  }
  std::string name = lx.text;
  std::string sort;
  bool annotated = false;
  if (auto colon = name.find(':'); colon != std::string::npos) {
    sort = name.substr(colon + 1);
    name = name.substr(0, colon);
    annotated = true;
  }
  if (name == "_") {
    Variable v = Variable::anonymous(0, sort, annotated);
    v.name = "_";
    return Term::variable(std::move(v));
  }
  return Term::variable(Variable::named(name, sort, annotated));
}

bool isVar(const Term& t) {
  return t.is(Term::Kind::kVariable) && t.asVariable().kind != VarKind::kPlaceholder;
}

// Juxtaposition of collection pieces; nullopt rejects the derivation.
std::optional<Term> combine(const Term& l, const Term& r) {
  auto asList = [](const Term& t) -> std::optional<ListTerm> {
    if (t.is(Term::Kind::kList)) return t.asList();
    if (t.is(Term::Kind::kEmpty) && t.asEmpty().kind != EmptyKind::kMap) return ListTerm{};
    return std::nullopt;
  };
  auto asMap = [](const Term& t) -> std::optional<MapTerm> {
    if (t.is(Term::Kind::kMap)) return t.asMap();
    if (t.is(Term::Kind::kEmpty) && t.asEmpty().kind != EmptyKind::kList) return MapTerm{};
    return std::nullopt;
  };
  auto ll = asList(l);
  auto rl = asList(r);
  if (isVar(l) && rl && !rl->rest) {
    return Term::list(rl->elements, l.asVariable(), RestPosition::kBefore);
  }
  if (ll && !ll->rest && isVar(r)) {
    return Term::list(ll->elements, r.asVariable(), RestPosition::kAfter);
  }
  if (ll && rl && !rl->rest && (!ll->rest || ll->position == RestPosition::kBefore) &&
      (l.is(Term::Kind::kList) || r.is(Term::Kind::kList))) {
    auto elems = ll->elements;
    elems.insert(elems.end(), rl->elements.begin(), rl->elements.end());
    return Term::list(std::move(elems), ll->rest, ll->position);
  }
  auto lm = asMap(l);
  auto rm = asMap(r);
  if (isVar(l) && rm && !rm->rest && r.is(Term::Kind::kMap)) {
    return Term::map(rm->bindings, l.asVariable());
  }
  if (lm && !lm->rest && isVar(r) && l.is(Term::Kind::kMap)) {
    return Term::map(lm->bindings, r.asVariable());
  }
  if (lm && rm && !rm->rest && (l.is(Term::Kind::kMap) || r.is(Term::Kind::kMap))) {
    auto b = lm->bindings;
    b.insert(b.end(), rm->bindings.begin(), rm->bindings.end());
    return Term::map(std::move(b), lm->rest);
  }
  return std::nullopt;
}

// A bracketed literal must fit some declared list sort: every production
// element needs to be admitted by that sort's element sort.
bool fitsListSort(const Definition::Cache& cache, const std::vector<Term>& elems) {
  std::vector<std::string> sorts;
  for (const auto& e : elems) {
    if (e.is(Term::Kind::kApply) && !builtin::isBuiltinId(e.asApply().production)) {
      sorts.push_back(cache.signature.sortOf(e));
    }
  }
  if (sorts.empty()) return true;
  for (const auto& p : cache.productions) {
    if (p.kind != Production::Kind::kList) continue;
    bool all = std::all_of(sorts.begin(), sorts.end(),
                           [&](const std::string& s) { return cache.signature.leq(s, p.element); });
    if (all) return true;
  }
  return false;
}

std::optional<Term> buildTerm(const Definition::Cache& cache, const grammar::Rule& rule,
                              const std::vector<Term>& children) {
  const auto& prods = cache.productions;
  auto v = valueChildren(rule, children);
  if (rule.tag >= 0) {
    return Term::apply(prods[static_cast<std::size_t>(rule.tag)].id, std::move(v));
  }
  auto bin = [&](const char* op) { return Term::apply(op, {v[0], v[1]}); };
  switch (rule.tag) {
    case kPass:
    case kLeaf: return v.front();
    case kListEmpty: return Term::list({});
    case kListOne: return Term::list({v[0]});
    case kListCons: {
      std::vector<Term> elems{v[0]};
      const auto& rest = v[1].asList().elements;
      elems.insert(elems.end(), rest.begin(), rest.end());
      return Term::list(std::move(elems));
    }
    case kOrBool: return bin(builtin::kOrBool);
    case kAndBool: return bin(builtin::kAndBool);
    case kEqK: return bin(builtin::kEqK);
    case kLtInt: return bin(builtin::kLtInt);
    case kLeInt: return bin(builtin::kLeInt);
    case kPlusInt: return bin(builtin::kPlusInt);
    case kConcat: return combine(v[0], v[1]);
    case kBind: return Term::map({{v[0], v[1]}});
    case kUpdate: return Term::apply(builtin::kUpdate, {v[0], v[1], v[2]});
    case kLookup: return Term::apply(builtin::kLookup, {v[0], v[1], v[2]});
    case kNotBool: return Term::apply(builtin::kNotBool, {v[0]});
    case kBrackets:
      if (!fitsListSort(cache, v[0].asList().elements)) return std::nullopt;
      return Term::list(v[0].asList().elements);
    case kEmptyBrackets: return Term::list({});
    case kDotK: return Term();
    case kDotList: return Term::empty(EmptyKind::kList);
    case kDotMap: return Term::empty(EmptyKind::kMap);
    case kElemsOne: return Term::list({v[0]});
    case kElemsCons: {
      std::vector<Term> elems{v[0]};
      const auto& rest = v[1].asList().elements;
      elems.insert(elems.end(), rest.begin(), rest.end());
      return Term::list(std::move(elems));
    }
    default: break;
  }
  return std::nullopt;
}

Term parseTokens(const Definition& def, bool ruleMode, const std::string& start,
                 const std::vector<Lexeme>& tokens) {
  auto cache = def.cache();
  const grammar::Grammar& g = ruleMode ? cache->rule : cache->model;
  auto nt = g.find(start);
  if (!nt) throw Error(ErrorKind::kUnknownSort, start);
  return grammar::parse(
      g, *nt, tokens,
      [&](const grammar::Rule& r, const std::vector<Term>& c) { return buildTerm(*cache, r, c); },
      leafTerm);
}

// Rebuilds a term applying `f` to every variable, including rest variables.
template <typename F>
Term mapVariables(const Term& t, F&& f) {
  switch (t.kind()) {
    case Term::Kind::kVariable: return Term::variable(f(t.asVariable()));
    case Term::Kind::kApply: {
      std::vector<Term> c;
      for (const auto& x : t.asApply().children) c.push_back(mapVariables(x, f));
      return Term::apply(t.asApply().production, std::move(c));
    }
    case Term::Kind::kList: {
      const auto& l = t.asList();
      std::vector<Term> e;
      for (const auto& x : l.elements) e.push_back(mapVariables(x, f));
      std::optional<Variable> rest;
      if (l.rest) rest = f(*l.rest);
      return Term::list(std::move(e), rest, l.position);
    }
    case Term::Kind::kMap: {
      const auto& m = t.asMap();
      std::vector<std::pair<Term, Term>> b;
      for (const auto& [k, v] : m.bindings) b.emplace_back(mapVariables(k, f), mapVariables(v, f));
      std::optional<Variable> rest;
      if (m.rest) rest = f(*m.rest);
      return Term::map(std::move(b), rest);
    }
    case Term::Kind::kRewrite:
      return Term::rewrite(mapVariables(t.asRewrite().lhs, f), mapVariables(t.asRewrite().rhs, f));
    default: return t;
  }
}

struct SortFacts {
  std::map<std::string, std::string> annotation;
  std::map<std::string, std::vector<std::string>> contexts;
};

void collectSorts(const Definition& def, const Term& t, const std::string& ctx, SortFacts& facts) {
  auto note = [&](const Variable& v, const std::string& c) {
    if (v.kind == VarKind::kAnonymous) return;
    if (v.annotated && !facts.annotation.count(v.name)) facts.annotation[v.name] = v.sort;
    if (!c.empty() && c != kSortK) facts.contexts[v.name].push_back(c);
  };
  switch (t.kind()) {
    case Term::Kind::kVariable: note(t.asVariable(), ctx); break;
    case Term::Kind::kApply: {
      const auto& a = t.asApply();
      const Production* p = builtin::isBuiltinId(a.production) ? nullptr : def.production(a.production);
      std::vector<std::string> sorts = p ? p->childSorts() : std::vector<std::string>{};
      for (std::size_t i = 0; i < a.children.size(); ++i) {
        collectSorts(def, a.children[i], i < sorts.size() ? sorts[i] : std::string(), facts);
      }
      break;
    }
    case Term::Kind::kList: {
      const auto& l = t.asList();
      const Production* lp = def.listProduction(ctx);
      for (const auto& e : l.elements) collectSorts(def, e, lp ? lp->element : std::string(), facts);
      if (l.rest) note(*l.rest, kSortList);
      break;
    }
    case Term::Kind::kMap: {
      const auto& m = t.asMap();
      for (const auto& [k, v] : m.bindings) {
        collectSorts(def, k, {}, facts);
        collectSorts(def, v, {}, facts);
      }
      if (m.rest) note(*m.rest, kSortMap);
      break;
    }
    case Term::Kind::kRewrite:
      collectSorts(def, t.asRewrite().lhs, ctx, facts);
      collectSorts(def, t.asRewrite().rhs, ctx, facts);
      break;
    default: break;
  }
}

}  // namespace

void normalizeRule(const Definition& def, RuleDecl& rule) {
  const Signature& sig = def.signature();
  SortFacts facts;
  for (const auto& [cell, t] : rule.cells) {
    const Cell* c = def.configuration.find(cell);
    collectSorts(def, t, c ? c->sort : std::string(), facts);
  }
  if (rule.condition) collectSorts(def, *rule.condition, {}, facts);

  std::map<std::string, std::string> effective;
  for (const auto& [name, ctxs] : facts.contexts) {
    std::string best = ctxs.front();
    for (const auto& c : ctxs) {
      bool below = std::all_of(ctxs.begin(), ctxs.end(), [&](const std::string& d) { return sig.leq(c, d); });
      if (below) {
        best = c;
        break;
      }
    }
    effective[name] = best;
  }
  for (const auto& [name, sort] : facts.annotation) effective[name] = sort;

  int anon = 0;
  auto fix = [&](const Variable& v) {
    Variable out = v;
    if (v.kind == VarKind::kAnonymous) {
      out = Variable::anonymous(anon++, v.sort, v.annotated);
      return out;
    }
    auto it = effective.find(v.name);
    out.sort = it == effective.end() ? std::string() : it->second;
    out.annotated = facts.annotation.count(v.name) != 0;
    return out;
  };
  for (auto& [cell, t] : rule.cells) t = mapVariables(t, fix);
  if (rule.condition) rule.condition = mapVariables(*rule.condition, fix);
}

void Definition::refreshDefaultsRequired() {
  defaultsRequired.clear();
  for (const auto& r : rules) {
    std::vector<Term> parts;
    for (const auto& [cell, t] : r.cells) parts.push_back(t);
    if (r.condition) parts.push_back(*r.condition);
    for (const auto& part : parts) {
      for (const auto& v : variablesOf(part)) {
        if (v.kind == VarKind::kPlaceholder) {
          defaultsRequired.emplace(std::make_pair(r.id, v.index), v.sort.empty() ? kSortK : v.sort);
        }
      }
    }
  }
}

Term parseModel(const Definition& def, const std::string& startSort, const std::string& text) {
  if (!def.hasSort(startSort) && startSort != kSortK) throw Error(ErrorKind::kUnknownSort, startSort);
  auto tokens = grammar::lex(text, def.cache()->modelLex);
  return parseTokens(def, false, startSort, tokens);
}

Term parsePattern(const Definition& def, const std::string& text) {
  auto tokens = grammar::lex(text, def.cache()->ruleLex);
  RuleDecl tmp;
  tmp.cells.emplace_back("", parseTokens(def, true, "@K", tokens));
  normalizeRule(def, tmp);
  return tmp.cells.front().second;
}

// --- .kbx reader --------------------------------------------------------------

namespace {

struct Decl {
  std::string keyword;
  std::string body;  // text after the keyword
  int line = 1;
  long offset = 0;  // file offset of body[0]
};

std::vector<Decl> splitDeclarations(const std::string& text) {
  std::vector<Decl> out;
  std::size_t pos = 0;
  int line = 1;
  std::string stray;
  int strayLine = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string::npos) eol = text.size();
    std::string_view ln(text.data() + pos, eol - pos);
    std::size_t first = ln.find_first_not_of(" \t\r");
    bool started = false;
    if (first != std::string_view::npos) {
      for (const char* kw : {"syntax", "configuration", "rule"}) {
        std::string_view k(kw);
        if (ln.substr(first, k.size()) == k &&
            (first + k.size() == ln.size() || std::isspace(static_cast<unsigned char>(ln[first + k.size()])))) {
          Decl d;
          d.keyword = kw;
          d.line = line;
          d.offset = static_cast<long>(pos + first + k.size());
          d.body = std::string(ln.substr(first + k.size()));
          out.push_back(std::move(d));
          started = true;
          break;
        }
      }
      if (!started) {
        bool comment = ln.substr(first, 2) == "//";
        if (out.empty() && !comment) {
          if (stray.empty()) strayLine = line;
          stray += std::string(ln);
        } else if (!out.empty()) {
          out.back().body += comment ? std::string("\n") : "\n" + std::string(ln);
        }
      }
    } else if (!out.empty()) {
      out.back().body += "\n";
    }
    if (eol == text.size()) break;
    pos = eol + 1;
    ++line;
  }
  if (!stray.empty()) {
    throw Error(ErrorKind::kSyntaxError, "expected syntax, configuration or rule", strayLine, 0);
  }
  return out;
}

std::string unquote(const std::string& lit) {
  std::string out;
  for (std::size_t i = 1; i + 1 < lit.size(); ++i) {
    if (lit[i] == '\\' && i + 2 < lit.size()) ++i;
    out += lit[i];
  }
  return out;
}

class TokenCursor {
 public:
  TokenCursor(std::vector<Lexeme> toks, int line) : toks_(std::move(toks)), line_(line) {}
  bool done() const { return i_ >= toks_.size(); }
  const Lexeme* peek() const { return done() ? nullptr : &toks_[i_]; }
  bool isLit(const char* s) const {
    return !done() && toks_[i_].cls == TokenClass::kLiteral && toks_[i_].text == s;
  }
  Lexeme next(const std::string& expected) {
    if (done()) fail(expected);
    return toks_[i_++];
  }
  void expectLit(const char* s) {
    if (!isLit(s)) fail(std::string("\"") + s + "\"");
    ++i_;
  }
  [[noreturn]] void fail(const std::string& expected) const {
    if (done()) throw Error(ErrorKind::kSyntaxError, "expected " + expected + " at end of declaration", line_, 0);
    throw Error(ErrorKind::kSyntaxError, "expected " + expected + ", found '" + toks_[i_].text + "'",
                toks_[i_].line, toks_[i_].offset);
  }

 private:
  std::vector<Lexeme> toks_;
  std::size_t i_ = 0;
  int line_;
};

void parseSyntax(const Decl& d, std::vector<Production>& prods) {
  grammar::LexOptions opts;
  opts.literals = {"::=", "|", "[", "]", "{", "}", ","};
  TokenCursor cur(grammar::lex(d.body, opts, d.line, d.offset), d.line);
  Lexeme sort = cur.next("sort name");
  if (sort.cls != TokenClass::kIdent) cur.fail("sort name");
  if (isBuiltinSort(sort.text)) {
    throw Error(ErrorKind::kSyntaxError, "cannot redeclare builtin sort " + sort.text, sort.line, sort.offset);
  }
  if (cur.isLit("[")) {
    cur.expectLit("[");
    Lexeme attr = cur.next("token");
    if (attr.text != "token") cur.fail("token");
    cur.expectLit("]");
    if (!cur.done()) cur.fail("end of declaration");
    prods.push_back(Production{sort.text, sort.text, Production::Kind::kToken, {}, {}, {}});
    return;
  }
  cur.expectLit("::=");
  while (true) {
    Production p;
    p.sort = sort.text;
    if (cur.peek() && cur.peek()->cls == TokenClass::kIdent && cur.peek()->text == "List") {
      cur.next("List");
      if (cur.isLit("{")) {
        cur.expectLit("{");
        Lexeme elem = cur.next("element sort");
        if (elem.cls != TokenClass::kIdent) cur.fail("element sort");
        cur.expectLit(",");
        Lexeme sep = cur.next("separator string");
        if (sep.cls != TokenClass::kString) cur.fail("separator string");
        cur.expectLit("}");
        p.kind = Production::Kind::kList;
        p.element = elem.text;
        p.separator = unquote(sep.text);
        p.id = sort.text;
      } else {
        p.items.push_back({false, "List"});
      }
    }
    while (p.kind != Production::Kind::kList && !cur.done() && !cur.isLit("|")) {
      Lexeme item = cur.next("production item");
      if (item.cls == TokenClass::kString) {
        std::string text = unquote(item.text);
        if (text.empty()) {
          throw Error(ErrorKind::kSyntaxError, "empty literal", item.line, item.offset);
        }
        p.items.push_back({true, text});
      } else if (item.cls == TokenClass::kIdent) {
        p.items.push_back({false, item.text});
      } else {
        cur.fail("string literal or sort name");
      }
    }
    if (p.kind != Production::Kind::kList) {
      if (p.items.empty()) cur.fail("production item");
      if (p.items.size() == 1 && !p.items[0].literal) p.kind = Production::Kind::kChain;
    }
    prods.push_back(std::move(p));
    if (cur.done()) break;
    cur.expectLit("|");
  }
}

void assignProductionIds(std::vector<Production>& prods) {
  std::set<std::string> used;
  for (auto& p : prods) {
    if (p.kind == Production::Kind::kChain) {
      p.id = p.items.front().text + ">" + p.sort;
      continue;
    }
    if (p.kind != Production::Kind::kSyntax) continue;
    std::string label;
    for (const auto& item : p.items) label += item.literal ? item.text : "_";
    std::string id = label;
    for (int n = 2; used.count(id); ++n) id = label + "#" + std::to_string(n);
    used.insert(id);
    p.id = id;
  }
}

void checkSorts(const std::vector<Production>& prods) {
  std::set<std::string> declared;
  for (const auto& p : prods) declared.insert(p.sort);
  auto check = [&](const std::string& s) {
    if (!declared.count(s) && s != kSortInt && s != kSortString && s != kSortBool && s != kSortId) {
      throw Error(ErrorKind::kUnknownSort, s);
    }
  };
  for (const auto& p : prods) {
    if (p.kind == Production::Kind::kList) check(p.element);
    for (const auto& item : p.items) {
      if (!item.literal) check(item.text);
    }
  }
}

struct CellSlice {
  std::string name;
  std::string attrs;
  std::string content;
  int line;
  long offset;
};

int lineAt(const std::string& text, std::size_t upto, int base) {
  return base + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<long>(upto), '\n'));
}

// Reads `<name attrs> content </name>` groups; returns the unconsumed tail.
std::string readCells(const Decl& d, std::vector<CellSlice>& out) {
  const std::string& s = d.body;
  std::size_t i = 0;
  auto skipSpace = [&] {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
  };
  while (true) {
    skipSpace();
    if (i >= s.size() || s[i] != '<' || i + 1 >= s.size() || !std::isalpha(static_cast<unsigned char>(s[i + 1]))) {
      break;
    }
    std::size_t close = s.find('>', i);
    if (close == std::string::npos) {
      throw Error(ErrorKind::kSyntaxError, "unterminated cell tag", lineAt(s, i, d.line), d.offset + static_cast<long>(i));
    }
    std::string tag = s.substr(i + 1, close - i - 1);
    std::size_t nameEnd = 0;
    while (nameEnd < tag.size() && (std::isalnum(static_cast<unsigned char>(tag[nameEnd])) || tag[nameEnd] == '_')) {
      ++nameEnd;
    }
    CellSlice cs;
    cs.name = tag.substr(0, nameEnd);
    cs.attrs = tag.substr(nameEnd);
    std::string endTag = "</" + cs.name + ">";
    std::size_t end = s.find(endTag, close + 1);
    if (end == std::string::npos) {
      throw Error(ErrorKind::kSyntaxError, "missing " + endTag, lineAt(s, i, d.line), d.offset + static_cast<long>(i));
    }
    cs.content = s.substr(close + 1, end - close - 1);
    cs.line = lineAt(s, close + 1, d.line);
    cs.offset = d.offset + static_cast<long>(close + 1);
    out.push_back(std::move(cs));
    i = end + endTag.size();
  }
  return s.substr(i);
}

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return {};
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

Term parseSide(const Definition& def, const std::vector<Lexeme>& toks) {
  if (toks.empty()) throw Error(ErrorKind::kSyntaxError, "empty pattern");
  return parseTokens(def, true, "@K", toks);
}

Term parseCellBody(const Definition& def, const CellSlice& cs) {
  auto toks = grammar::lex(cs.content, def.cache()->ruleLex, cs.line, cs.offset);
  std::vector<std::vector<Lexeme>> sides(1);
  for (auto& t : toks) {
    if (t.cls == TokenClass::kLiteral && t.text == "=>") {
      if (sides.size() == 2) {
        throw Error(ErrorKind::kSyntaxError, "more than one => in a cell", t.line, t.offset);
      }
      sides.emplace_back();
      continue;
    }
    sides.back().push_back(std::move(t));
  }
  if (sides.size() == 1) return parseSide(def, sides[0]);
  return Term::rewrite(parseSide(def, sides[0]), parseSide(def, sides[1]));
}

void parseConfiguration(const Decl& d, Definition& def) {
  std::vector<CellSlice> slices;
  std::string tail = trim(readCells(d, slices));
  if (!tail.empty()) throw Error(ErrorKind::kSyntaxError, "unexpected text after configuration cells", d.line, d.offset);
  if (slices.empty()) throw Error(ErrorKind::kSyntaxError, "configuration without cells", d.line, d.offset);
  static const std::regex sortAttr(R"re(sort\s*=\s*"([A-Za-z_][A-Za-z0-9_]*)")re");
  for (const auto& cs : slices) {
    if (def.configuration.find(cs.name)) throw Error(ErrorKind::kDuplicateCellName, cs.name, cs.line, cs.offset);
    Cell cell;
    cell.name = cs.name;
    std::string attrs = cs.attrs;
    std::smatch m;
    if (std::regex_search(attrs, m, sortAttr)) {
      cell.sort = m[1];
      attrs = m.prefix().str() + m.suffix().str();
    }
    attrs = trim(attrs);
    if (attrs == "output") {
      cell.output = true;
    } else if (!attrs.empty()) {
      throw Error(ErrorKind::kSyntaxError, "unknown cell attribute '" + attrs + "'", cs.line, cs.offset);
    }
    std::string content = trim(cs.content);
    if (content.rfind("$PGM", 0) == 0) {
      cell.pgm = true;
      std::string rest = content.substr(4);
      if (!rest.empty()) {
        if (rest[0] != ':') throw Error(ErrorKind::kSyntaxError, "expected $PGM:Sort", cs.line, cs.offset);
        cell.sort = rest.substr(1);
      }
      if (cell.sort == kSortK) cell.sort.clear();
    } else {
      cell.initial = parseCellBody(def, cs);
      if (!cell.initial.isGround()) throw Error(ErrorKind::kNotGround, "initial value of cell " + cs.name);
    }
    if (!cell.sort.empty() && !def.hasSort(cell.sort)) throw Error(ErrorKind::kUnknownSort, cell.sort, cs.line, cs.offset);
    def.configuration.cells.push_back(std::move(cell));
  }
  int pgms = 0;
  int outputs = 0;
  for (const auto& c : def.configuration.cells) {
    pgms += c.pgm ? 1 : 0;
    outputs += c.output ? 1 : 0;
  }
  if (pgms == 0) throw Error(ErrorKind::kNoInputCell, "no cell holds $PGM", d.line, d.offset);
  if (pgms > 1) throw Error(ErrorKind::kSyntaxError, "more than one $PGM cell", d.line, d.offset);
  if (outputs > 1) throw Error(ErrorKind::kSyntaxError, "more than one output cell", d.line, d.offset);
  if (def.configuration.cells.size() < 2) throw Error(ErrorKind::kSyntaxError, "configuration needs an output cell", d.line, d.offset);
}

void checkConditionVars(const RuleDecl& r) {
  if (!r.condition) return;
  std::set<std::string> bound;
  for (const auto& [cell, t] : r.cells) {
    for (const auto& n : variableNames(lhsOf(t))) bound.insert(n);
  }
  for (const auto& v : variablesOf(*r.condition)) {
    if (v.kind == VarKind::kNamed && !bound.count(v.name)) {
      throw Error(ErrorKind::kUnboundVariable, v.name + " in requires clause of rule " + std::to_string(r.id));
    }
  }
}

void parseRule(const Decl& d, Definition& def) {
  std::vector<CellSlice> slices;
  std::string tail = readCells(d, slices);
  if (slices.empty()) throw Error(ErrorKind::kSyntaxError, "rule without cells", d.line, d.offset);
  RuleDecl rule;
  rule.id = static_cast<int>(def.rules.size()) + 1;
  for (const auto& cs : slices) {
    if (!trim(cs.attrs).empty()) throw Error(ErrorKind::kSyntaxError, "attributes on rule cell " + cs.name, cs.line, cs.offset);
    if (!def.configuration.find(cs.name)) throw Error(ErrorKind::kSyntaxError, "unknown cell " + cs.name, cs.line, cs.offset);
    if (rule.cell(cs.name)) throw Error(ErrorKind::kDuplicateCellName, cs.name, cs.line, cs.offset);
    rule.cells.emplace_back(cs.name, parseCellBody(def, cs));
  }
  static const std::regex prio(R"(\[\s*priority\s*\(\s*([0-9]+)\s*\)\s*\]\s*$)");
  std::smatch m;
  if (std::regex_search(tail, m, prio)) {
    rule.priority = std::stoi(m[1]);
    tail = m.prefix().str();
  }
  std::string cond = trim(tail);
  if (!cond.empty()) {
    std::size_t kw = 0;
    if (cond.rfind("requires", 0) == 0) {
      kw = 8;
    } else if (cond.rfind("require", 0) == 0) {
      kw = 7;
    } else {
      throw Error(ErrorKind::kSyntaxError, "expected requires or [priority(N)] after rule cells", d.line, d.offset);
    }
    if (kw < cond.size() && !std::isspace(static_cast<unsigned char>(cond[kw]))) {
      throw Error(ErrorKind::kSyntaxError, "expected requires", d.line, d.offset);
    }
    std::size_t at = d.body.size() - tail.size() + tail.find(cond) + kw;
    auto toks = grammar::lex(cond.substr(kw), def.cache()->ruleLex, lineAt(d.body, at, d.line),
                             d.offset + static_cast<long>(at));
    rule.condition = parseSide(def, toks);
  }
  normalizeRule(def, rule);
  checkConditionVars(rule);
  def.rules.push_back(std::move(rule));
}

}  // namespace

Definition parseDefinition(const std::string& text) {
  std::vector<Decl> decls = splitDeclarations(text);
  if (decls.empty()) throw Error(ErrorKind::kSyntaxError, "empty definition", 1, 0);
  Definition def;
  std::size_t i = 0;
  for (; i < decls.size() && decls[i].keyword == "syntax"; ++i) parseSyntax(decls[i], def.productions);
  assignProductionIds(def.productions);
  checkSorts(def.productions);
  if (i >= decls.size() || decls[i].keyword != "configuration") {
    const Decl& at = i < decls.size() ? decls[i] : decls.back();
    throw Error(ErrorKind::kSyntaxError, "expected configuration after syntax declarations", at.line, at.offset);
  }
  parseConfiguration(decls[i++], def);
  for (; i < decls.size(); ++i) {
    if (decls[i].keyword != "rule") {
      throw Error(ErrorKind::kSyntaxError, "unexpected " + decls[i].keyword + " after rules", decls[i].line, decls[i].offset);
    }
    parseRule(decls[i], def);
  }
  def.refreshDefaultsRequired();
  return def;
}

}  // namespace kbx
