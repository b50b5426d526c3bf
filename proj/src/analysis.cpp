#include "kbx/analysis.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace kbx {

namespace {

// Identity of a classified element: variables by name, tokens by lexeme.
std::string elementKey(const Term& t) {
  return t.is(Term::Kind::kVariable) ? "v:" + t.asVariable().name : "t:" + t.asToken().lexeme;
}

void collectElements(const Term& t, std::vector<Term>& out) {
  switch (t.kind()) {
    case Term::Kind::kVariable:
      if (t.asVariable().kind == VarKind::kNamed) out.push_back(t);
      break;
    case Term::Kind::kToken: out.push_back(t); break;
    case Term::Kind::kApply:
      for (const auto& c : t.asApply().children) collectElements(c, out);
      break;
    case Term::Kind::kList: {
      const auto& l = t.asList();
      auto rest = [&] {
        if (l.rest && l.rest->kind == VarKind::kNamed) out.push_back(Term::variable(*l.rest));
      };
      if (l.position == RestPosition::kBefore) rest();
      for (const auto& e : l.elements) collectElements(e, out);
      if (l.position != RestPosition::kBefore) rest();
      break;
    }
    case Term::Kind::kMap: {
      const auto& m = t.asMap();
      if (m.rest && m.rest->kind == VarKind::kNamed) out.push_back(Term::variable(*m.rest));
      for (const auto& [k, v] : m.bindings) {
        collectElements(k, out);
        collectElements(v, out);
      }
      break;
    }
    case Term::Kind::kRewrite:
      collectElements(t.asRewrite().lhs, out);
      collectElements(t.asRewrite().rhs, out);
      break;
    case Term::Kind::kEmpty: break;
  }
}

std::string skeleton(const Term& t) {
  switch (t.kind()) {
    case Term::Kind::kVariable: return "_";
    case Term::Kind::kToken: return t.asToken().lexeme;
    case Term::Kind::kEmpty: return ".K";
    case Term::Kind::kApply: {
      std::string s = "(" + t.asApply().production;
      for (const auto& c : t.asApply().children) s += " " + skeleton(c);
      return s + ")";
    }
    case Term::Kind::kList: {
      const auto& l = t.asList();
      std::string s = "(list";
      if (l.rest && l.position == RestPosition::kBefore) s += " _*";
      for (const auto& e : l.elements) s += " " + skeleton(e);
      if (l.rest && l.position == RestPosition::kAfter) s += " _*";
      return s + ")";
    }
    case Term::Kind::kMap: {
      const auto& m = t.asMap();
      std::vector<std::string> parts;
      for (const auto& [k, v] : m.bindings) parts.push_back("(" + skeleton(k) + " " + skeleton(v) + ")");
      std::sort(parts.begin(), parts.end());
      std::string s = m.rest ? "(map _*" : "(map";
      for (const auto& p : parts) s += " " + p;
      return s + ")";
    }
    case Term::Kind::kRewrite: break;
  }
  return "?";
}

std::string ruleSkeleton(const Definition& def, const RuleDecl& r, bool left) {
  std::string s;
  for (const auto& c : def.configuration.cells) {
    const Term* p = r.cell(c.name);
    if (!p) continue;
    s += "<" + c.name + ">" + skeleton(left ? lhsOf(*p) : rhsOf(*p));
  }
  return s;
}

bool hasPlaceholder(const Term& t) {
  for (const auto& v : variablesOf(t)) {
    if (v.kind == VarKind::kPlaceholder) return true;
  }
  return false;
}

}  // namespace

RuleInfo analyzeRule(const RuleDecl& rule) {
  RuleInfo info;
  info.ruleId = rule.id;
  std::vector<std::string> order;
  std::map<std::string, Term> element;
  std::map<std::string, std::set<std::string>> leftCells;
  std::map<std::string, std::set<std::string>> rightCells;

  auto record = [&](const Term& side, const std::string& cell,
                    std::map<std::string, std::set<std::string>>& where) {
    std::vector<Term> found;
    collectElements(side, found);
    for (const auto& e : found) {
      std::string key = elementKey(e);
      if (!element.count(key)) {
        element.emplace(key, e);
        order.push_back(key);
      }
      where[key].insert(cell);
    }
  };
  for (const auto& [cell, t] : rule.cells) {
    record(lhsOf(t), cell, leftCells);
    record(rhsOf(t), cell, rightCells);
  }

  for (const auto& key : order) {
    const auto& l = leftCells[key];
    const auto& r = rightCells[key];
    const Term& e = element.at(key);
    if (!l.empty() && !r.empty()) {
      std::set<std::string> all = l;
      all.insert(r.begin(), r.end());
      (all.size() > 1 ? info.common : info.contextVars).push_back(e);
    } else if (!l.empty()) {
      info.missR.push_back(e);
    } else {
      info.missL.push_back(e);
    }
  }
  return info;
}

const char* severityName(Diagnostic::Severity s) {
  switch (s) {
    case Diagnostic::Severity::kInfo: return "info";
    case Diagnostic::Severity::kWarning: return "warning";
    case Diagnostic::Severity::kError: return "error";
  }
  return "?";
}

std::vector<Diagnostic> lintDefinition(const Definition& def) {
  std::vector<Diagnostic> out;
  const auto& rules = def.rules;
  for (std::size_t i = 0; i < rules.size(); ++i) {
    for (std::size_t j = i + 1; j < rules.size(); ++j) {
      if (ruleSkeleton(def, rules[i], true) == ruleSkeleton(def, rules[j], true)) {
        out.push_back({Diagnostic::Severity::kWarning, "LhsOverlap", {rules[i].id, rules[j].id},
                       "rules " + std::to_string(rules[i].id) + " and " + std::to_string(rules[j].id) +
                           " have the same left-hand skeleton"});
      }
      if (ruleSkeleton(def, rules[i], false) == ruleSkeleton(def, rules[j], false)) {
        out.push_back({Diagnostic::Severity::kInfo, "RhsOverlap", {rules[i].id, rules[j].id},
                       "rules " + std::to_string(rules[i].id) + " and " + std::to_string(rules[j].id) +
                           " have the same right-hand skeleton; rule ids keep their complements apart"});
      }
    }
  }
  for (const auto& r : rules) {
    bool found = r.condition && hasPlaceholder(*r.condition);
    for (const auto& [cell, t] : r.cells) found = found || hasPlaceholder(t);
    if (found) {
      out.push_back({Diagnostic::Severity::kError, "PlaceholderRemaining", {r.id},
                     "rule " + std::to_string(r.id) + " still contains ?N? placeholders"});
    }
  }
  return out;
}

bool hasErrors(const std::vector<Diagnostic>& diagnostics) {
  return std::any_of(diagnostics.begin(), diagnostics.end(),
                     [](const Diagnostic& d) { return d.severity == Diagnostic::Severity::kError; });
}

}  // namespace kbx
