#include <set>
#include <sstream>

#include "kbx/builtins.hpp"
#include "kbx/definition.hpp"

namespace kbx {

namespace {

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

// Precedence levels of the rule-body expression grammar, loosest first.
enum Level { kOr, kAnd, kCmp, kAdd, kConcat, kBind, kPost, kAtom };

class PatternPrinter {
 public:
  explicit PatternPrinter(const Definition& def) : def_(def) {}

  std::string print(const Term& t, Level min = kOr) {
    Level level = kAtom;
    std::string s = render(t, level);
    if (level < min) return "( " + s + " )";
    return s;
  }

 private:
  std::string var(const Variable& v) {
    switch (v.kind) {
      case VarKind::kPlaceholder: return "?" + std::to_string(v.index) + "?";
      case VarKind::kAnonymous: return v.annotated ? "_:" + v.sort : "_";
      case VarKind::kNamed: break;
    }
    if (v.annotated && annotated_.insert(v.name).second) return v.name + ":" + v.sort;
    return v.name;
  }

  std::string elements(const std::vector<Term>& es) {
    if (es.empty()) return "[ ]";
    std::string out = "[";
    for (std::size_t i = 0; i < es.size(); ++i) out += (i ? ", " : "") + print(es[i]);
    return out + "]";
  }

  std::string render(const Term& t, Level& level) {
    switch (t.kind()) {
      case Term::Kind::kVariable: return var(t.asVariable());
      case Term::Kind::kToken: return t.asToken().lexeme;
      case Term::Kind::kEmpty:
        switch (t.asEmpty().kind) {
          case EmptyKind::kK: return ".K";
          case EmptyKind::kList: return ".List";
          case EmptyKind::kMap: return ".Map";
        }
        return ".K";
      case Term::Kind::kList: {
        const auto& l = t.asList();
        if (!l.rest) return elements(l.elements);
        level = kConcat;
        if (l.position == RestPosition::kBefore) {
          std::string r = var(*l.rest);
          return r + " " + elements(l.elements);
        }
        std::string e = elements(l.elements);
        return e + " " + var(*l.rest);
      }
      case Term::Kind::kMap: {
        const auto& m = t.asMap();
        if (m.bindings.empty() && !m.rest) return ".Map";
        std::string out;
        if (m.rest) out = var(*m.rest);
        for (const auto& [k, v] : m.bindings) {
          std::string kk = print(k, kPost);
          std::string vv = print(v, kPost);
          out += (out.empty() ? "" : " ") + kk + " |-> " + vv;
        }
        level = (m.bindings.size() == 1 && !m.rest) ? kBind : kConcat;
        return out;
      }
      case Term::Kind::kRewrite:
      {
        level = kOr;
        std::string lhs = print(t.asRewrite().lhs);
        return lhs + " => " + print(t.asRewrite().rhs);
      }
      case Term::Kind::kApply: break;
    }
    const auto& a = t.asApply();
    const auto& c = a.children;
    const std::string& op = a.production;
    if (builtin::isBuiltinId(op)) {
      auto binary = [&](Level lv, Level l, const char* sym, Level r) {
        level = lv;
        std::string left = print(c[0], l);
        return left + " " + sym + " " + print(c[1], r);
      };
      if (op == builtin::kOrBool) return binary(kOr, kOr, "orBool", kAnd);
      if (op == builtin::kAndBool) return binary(kAnd, kAnd, "andBool", kCmp);
      if (op == builtin::kEqK) return binary(kCmp, kAdd, "==K", kAdd);
      if (op == builtin::kLtInt) return binary(kCmp, kAdd, "<Int", kAdd);
      if (op == builtin::kLeInt) return binary(kCmp, kAdd, "<=Int", kAdd);
      if (op == builtin::kPlusInt) return binary(kAdd, kAdd, "+Int", kConcat);
      level = kPost;
      if (op == builtin::kNotBool) return "notBool " + print(c[0], kPost);
      if (op == builtin::kUpdate) {
        std::string m = print(c[0], kPost);
        std::string k = print(c[1]);
        return m + " [" + k + " <- " + print(c[2]) + "]";
      }
      if (op == builtin::kLookup) {
        std::string m = print(c[0], kPost);
        std::string k = print(c[1]);
        return m + " [" + k + "] orDefault " + print(c[2], kAtom);
      }
      throw Error(ErrorKind::kUnknownBuiltin, op);
    }
    const Production* p = def_.production(op);
    if (!p) throw Error(ErrorKind::kUntypedTerm, "unknown production " + op);
    std::string out;
    std::size_t child = 0;
    for (const auto& item : p->items) {
      if (!out.empty()) out += " ";
      out += item.literal ? item.text : print(c.at(child++), kAtom);
    }
    return out;
  }

  const Definition& def_;
  std::set<std::string> annotated_;
};

std::string printProductionGroup(const std::vector<const Production*>& group) {
  const Production& first = *group.front();
  if (first.kind == Production::Kind::kToken) return "syntax " + first.sort + " [token]\n";
  std::string out = "syntax " + first.sort + " ::= ";
  for (std::size_t i = 0; i < group.size(); ++i) {
    const Production& p = *group[i];
    if (i) out += " | ";
    if (p.kind == Production::Kind::kList) {
      out += "List{" + p.element + ", " + quote(p.separator) + "}";
      continue;
    }
    for (std::size_t j = 0; j < p.items.size(); ++j) {
      if (j) out += " ";
      out += p.items[j].literal ? quote(p.items[j].text) : p.items[j].text;
    }
  }
  return out + "\n";
}

}  // namespace

std::string printPattern(const Definition& def, const Term& t) { return PatternPrinter(def).print(t); }

std::string printDefinition(const Definition& def) {
  std::string out;
  std::vector<const Production*> group;
  for (const auto& p : def.productions) {
    bool split = !group.empty() && (group.front()->sort != p.sort || p.kind == Production::Kind::kToken ||
                                    group.front()->kind == Production::Kind::kToken);
    if (split) {
      out += printProductionGroup(group);
      group.clear();
    }
    group.push_back(&p);
  }
  if (!group.empty()) out += printProductionGroup(group);
  if (!def.productions.empty()) out += "\n";

  out += "configuration";
  for (const auto& c : def.configuration.cells) {
    out += " <" + c.name;
    if (c.output) out += " output";
    if (!c.pgm && !c.sort.empty()) out += " sort=\"" + c.sort + "\"";
    out += "> ";
    out += c.pgm ? "$PGM:" + (c.sort.empty() ? std::string(kSortK) : c.sort) : printPattern(def, c.initial);
    out += " </" + c.name + ">";
  }
  out += "\n";

  for (const auto& r : def.rules) {
    PatternPrinter pp(def);
    out += "\nrule";
    bool first = true;
    for (const auto& [cell, t] : r.cells) {
      out += first ? " " : "\n     ";
      first = false;
      out += "<" + cell + "> " + pp.print(t) + " </" + cell + ">";
    }
    if (r.condition) out += "\n  requires " + pp.print(*r.condition);
    if (r.priority != 50) out += "\n  [priority(" + std::to_string(r.priority) + ")]";
    out += "\n";
  }
  return out;
}

// --- models -------------------------------------------------------------------

namespace {

class ModelPrinter {
 public:
  explicit ModelPrinter(const Definition& def) : def_(def), sig_(def.signature()) {}

  std::string print(const Term& t, const std::string& sort) {
    switch (t.kind()) {
      case Term::Kind::kToken: return t.asToken().lexeme;
      case Term::Kind::kEmpty:
        if (t.asEmpty().kind == EmptyKind::kMap) break;
        return "";
      case Term::Kind::kList: {
        const auto& l = t.asList();
        if (l.rest) break;
        if (l.elements.empty()) return "";
        const Production* lp = listFor(l, sort);
        if (!lp) throw Error(ErrorKind::kUntypedTerm, "no list sort for " + serialize(t));
        std::string sep = lp->separator.empty() ? "\n" : " " + lp->separator + " ";
        std::string out;
        for (std::size_t i = 0; i < l.elements.size(); ++i) {
          if (i) out += sep;
          out += print(l.elements[i], lp->element);
        }
        return out;
      }
      case Term::Kind::kApply: {
        const auto& a = t.asApply();
        const Production* p = def_.production(a.production);
        if (!p) throw Error(ErrorKind::kUntypedTerm, "production " + a.production + " is not declared");
        std::string out;
        std::size_t child = 0;
        for (const auto& item : p->items) {
          if (!out.empty()) out += " ";
          if (item.literal) {
            out += item.text;
          } else {
            if (child >= a.children.size()) throw Error(ErrorKind::kUntypedTerm, "arity of " + a.production);
            out += print(a.children[child++], item.text);
          }
        }
        return out;
      }
      default: break;
    }
    throw Error(ErrorKind::kUntypedTerm, serialize(t));
  }

 private:
  const Production* listFor(const ListTerm& l, const std::string& sort) const {
    if (const Production* p = def_.listProduction(sort)) return p;
    for (const auto& p : def_.productions) {
      if (p.kind != Production::Kind::kList) continue;
      if (!sort.empty() && sort != kSortK && !sig_.leq(p.sort, sort)) continue;
      if (sig_.admits(p.element, l.elements.front())) return &p;
    }
    return nullptr;
  }

  const Definition& def_;
  const Signature& sig_;
};

}  // namespace

std::string printModel(const Definition& def, const Term& term, const std::string& sort) {
  if (!term.isGround()) throw Error(ErrorKind::kUntypedTerm, "model terms must be ground");
  return ModelPrinter(def).print(term, sort);
}

}  // namespace kbx
