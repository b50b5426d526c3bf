#pragma once

// Independent reference implementations used as test oracles. They share no
// code with the library beyond the term accessors.

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "kbx/definition.hpp"

namespace kbx::test {

/// Named variables and tokens of a term, keyed by a printable name.
inline void collectElements(const Term& t, std::vector<std::string>& out) {
  switch (t.kind()) {
    case Term::Kind::kVariable:
      if (t.asVariable().kind == VarKind::kNamed) out.push_back("var " + t.asVariable().name);
      break;
    case Term::Kind::kToken:
      out.push_back("tok " + t.asToken().lexeme);
      break;
    case Term::Kind::kApply:
      for (const auto& c : t.asApply().children) collectElements(c, out);
      break;
    case Term::Kind::kList:
      for (const auto& e : t.asList().elements) collectElements(e, out);
      if (t.asList().rest && t.asList().rest->kind == VarKind::kNamed) out.push_back("var " + t.asList().rest->name);
      break;
    case Term::Kind::kMap:
      for (const auto& [k, v] : t.asMap().bindings) {
        collectElements(k, out);
        collectElements(v, out);
      }
      if (t.asMap().rest && t.asMap().rest->kind == VarKind::kNamed) out.push_back("var " + t.asMap().rest->name);
      break;
    case Term::Kind::kRewrite:
      collectElements(t.asRewrite().lhs, out);
      collectElements(t.asRewrite().rhs, out);
      break;
    case Term::Kind::kEmpty:
      break;
  }
}

struct NaiveClassification {
  std::vector<std::string> common, missR, missL, context;
};

/// Brute-force classification: count, for every element, the cells where it
/// occurs on the left and on the right of `=>`.
inline NaiveClassification classifyNaively(const RuleDecl& rule) {
  std::vector<std::string> order;
  std::map<std::string, std::set<std::string>> left, right;
  auto note = [&](const std::string& e) {
    if (std::find(order.begin(), order.end(), e) == order.end()) order.push_back(e);
  };
  for (const auto& [cell, pattern] : rule.cells) {
    std::vector<std::string> l, r;
    if (pattern.is(Term::Kind::kRewrite)) {
      collectElements(pattern.asRewrite().lhs, l);
      collectElements(pattern.asRewrite().rhs, r);
    } else {
      collectElements(pattern, l);
      r = l;
    }
    for (const auto& e : l) {
      note(e);
      left[e].insert(cell);
    }
    for (const auto& e : r) {
      note(e);
      right[e].insert(cell);
    }
  }
  NaiveClassification out;
  for (const auto& e : order) {
    bool onLeft = left.count(e) != 0, onRight = right.count(e) != 0;
    std::set<std::string> cells = left[e];
    cells.insert(right[e].begin(), right[e].end());
    if (onLeft && onRight) (cells.size() > 1 ? out.common : out.context).push_back(e);
    else if (onLeft) out.missR.push_back(e);
    else out.missL.push_back(e);
  }
  return out;
}

inline std::string elementName(const Term& t) {
  return t.is(Term::Kind::kVariable) ? "var " + t.asVariable().name : "tok " + t.asToken().lexeme;
}

inline std::vector<std::string> elementNames(const std::vector<Term>& ts) {
  std::vector<std::string> out;
  for (const auto& t : ts) out.push_back(elementName(t));
  return out;
}

/// Count of token nodes in a term.
inline std::size_t tokenCount(const Term& t) {
  std::vector<std::string> all;
  collectElements(t, all);
  return static_cast<std::size_t>(std::count_if(all.begin(), all.end(), [](const std::string& s) {
    return s.rfind("tok ", 0) == 0;
  }));
}

/// Placeholder indices in a term.
inline void collectPlaceholders(const Term& t, std::set<int>& out) {
  switch (t.kind()) {
    case Term::Kind::kVariable:
      if (t.asVariable().kind == VarKind::kPlaceholder) out.insert(t.asVariable().index);
      break;
    case Term::Kind::kApply:
      for (const auto& c : t.asApply().children) collectPlaceholders(c, out);
      break;
    case Term::Kind::kList:
      for (const auto& e : t.asList().elements) collectPlaceholders(e, out);
      break;
    case Term::Kind::kMap:
      for (const auto& [k, v] : t.asMap().bindings) {
        collectPlaceholders(k, out);
        collectPlaceholders(v, out);
      }
      break;
    case Term::Kind::kRewrite:
      collectPlaceholders(t.asRewrite().lhs, out);
      collectPlaceholders(t.asRewrite().rhs, out);
      break;
    default:
      break;
  }
}

inline std::set<int> placeholdersOf(const RuleDecl& rule) {
  std::set<int> out;
  for (const auto& [cell, pattern] : rule.cells) collectPlaceholders(pattern, out);
  if (rule.condition) collectPlaceholders(*rule.condition, out);
  return out;
}

/// Longest common subsequence length of two sequences of canonical strings.
inline std::size_t lcsLength(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<std::vector<std::size_t>> t(a.size() + 1, std::vector<std::size_t>(b.size() + 1, 0));
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      t[i][j] = a[i - 1] == b[j - 1] ? t[i - 1][j - 1] + 1 : std::max(t[i - 1][j], t[i][j - 1]);
    }
  }
  return t[a.size()][b.size()];
}

}  // namespace kbx::test
