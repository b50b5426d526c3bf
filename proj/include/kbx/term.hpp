#pragma once

// Terms, patterns and substitutions. Every other module manipulates these.
//
// A Term is an immutable, cheaply copyable handle to a shared node. Ground
// terms hold model values and execution states; patterns additionally contain
// variables, collection rest variables and (inside rule cells only) a
// top-level RewriteSplit.

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "kbx/error.hpp"

namespace kbx {

// Builtin sort names.
inline constexpr const char* kSortK = "K";
inline constexpr const char* kSortInt = "Int";
inline constexpr const char* kSortString = "String";
inline constexpr const char* kSortBool = "Bool";
inline constexpr const char* kSortId = "Id";
inline constexpr const char* kSortList = "List";
inline constexpr const char* kSortMap = "Map";

bool isBuiltinSort(const std::string& name);

enum class VarKind { kNamed, kAnonymous, kPlaceholder };

/// Where the rest variable of a list pattern sits relative to its elements.
///   kAfter:  `[e1, e2] Rest`  (elements match a prefix)
///   kBefore: `Rest [e1, e2]`  (elements match a suffix)
enum class RestPosition { kNone, kAfter, kBefore };

enum class EmptyKind { kK, kList, kMap };

class Term;

struct Variable {
  std::string name;  // anonymous variables carry a rule-unique internal name `_N`
  std::string sort;  // effective sort used for matching; empty means K
  VarKind kind = VarKind::kNamed;
  int index = 0;           // placeholder number for `?N?`
  bool annotated = false;  // sort was written explicitly as `X:Sort`

  static Variable named(std::string name, std::string sort = {}, bool annotated = false);
  static Variable anonymous(int ordinal, std::string sort = {}, bool annotated = false);
  static Variable placeholder(int index, std::string sort = {});

  friend bool operator==(const Variable& a, const Variable& b);
};

/// Literal value. The lexeme determines the lexical class and therefore the
/// sort: `"..."` String, digits Int, `true`/`false` Bool, `#name` hash token,
/// anything else Id. Token identity is the lexeme.
struct Token {
  std::string lexeme;
  std::string sort() const;
};

struct Apply {
  std::string production;
  std::vector<Term> children;
};

struct ListTerm {
  std::vector<Term> elements;
  std::optional<Variable> rest;
  RestPosition position = RestPosition::kNone;
};

struct MapTerm {
  std::vector<std::pair<Term, Term>> bindings;
  std::optional<Variable> rest;
};

struct Empty {
  EmptyKind kind = EmptyKind::kK;
};

struct RewriteSplit;

class Term {
 public:
  enum class Kind { kVariable, kToken, kApply, kList, kMap, kEmpty, kRewrite };

  Term();  // `.K`

  static Term variable(Variable v);
  static Term token(std::string lexeme);
  static Term apply(std::string production, std::vector<Term> children = {});
  static Term list(std::vector<Term> elements, std::optional<Variable> rest = std::nullopt,
                   RestPosition position = RestPosition::kNone);
  static Term map(std::vector<std::pair<Term, Term>> bindings,
                  std::optional<Variable> rest = std::nullopt);
  static Term empty(EmptyKind kind = EmptyKind::kK);
  static Term rewrite(Term lhs, Term rhs);

  Kind kind() const;
  bool is(Kind k) const { return kind() == k; }

  const Variable& asVariable() const;
  const Token& asToken() const;
  const Apply& asApply() const;
  const ListTerm& asList() const;
  const MapTerm& asMap() const;
  const Empty& asEmpty() const;
  const RewriteSplit& asRewrite() const;

  /// No variables, no rest variables, no RewriteSplit.
  bool isGround() const;

  /// `.K`, `.List`, `.Map` or a collection with no elements and no rest.
  bool isEmptyValue() const;

  /// Exact tree identity (variable names and annotations included, no
  /// normalization). Use structurallyEqual for ground value comparison.
  friend bool operator==(const Term& a, const Term& b);
  friend bool operator!=(const Term& a, const Term& b) { return !(a == b); }

  struct Node;

 private:
  explicit Term(std::shared_ptr<const Node> node);
  friend std::shared_ptr<const Node> makeEmptyNode();
  std::shared_ptr<const Node> node_;
};

struct RewriteSplit {
  Term lhs;
  Term rhs;
};

/// Finite map from variable names to ground terms.
class Substitution {
 public:
  Substitution() = default;

  bool contains(const std::string& name) const { return bindings_.count(name) != 0; }
  const Term* lookup(const std::string& name) const;
  void bind(const std::string& name, Term value);
  std::size_t size() const { return bindings_.size(); }
  bool empty() const { return bindings_.empty(); }

  const std::map<std::string, Term>& bindings() const { return bindings_; }

  friend bool operator==(const Substitution& a, const Substitution& b);

 private:
  std::map<std::string, Term> bindings_;
};

/// Replaces every variable by its binding and splices bound collections into
/// list/map patterns. Throws UnboundVariable for an unbound named or
/// placeholder variable and AnonymousOnRight for an unbound anonymous one.
Term substitute(const Term& pattern, const Substitution& theta);

/// Equality of ground values modulo list/map normalization: map bindings are
/// unordered and every empty collection equals `.K`. Throws NotGround.
bool structurallyEqual(const Term& a, const Term& b);

/// Returns `base` followed by the smallest non-negative integer whose result
/// is not in `taken`.
Variable freshVariable(const std::string& base, const std::set<std::string>& taken);

/// Names of every variable (including rest variables) in order of first
/// occurrence.
std::vector<Variable> variablesOf(const Term& t);
std::set<std::string> variableNames(const Term& t);

/// Canonical one-line serialization. For ground terms it is a normal form:
/// `structurallyEqual(a, b)` iff `serialize(a) == serialize(b)`.
std::string serialize(const Term& t);

/// Inverse of serialize for ground terms. Throws SyntaxError.
Term parseCanonical(const std::string& text);

/// Bottom-up rewriting helper: applies `f` to every node after its children
/// were rebuilt. Used by the synthesis passes.
template <typename F>
Term transform(const Term& t, F&& f);

/// Sort information needed to check variable sorts during matching.
class Signature {
 public:
  void addProduction(const std::string& production, const std::string& sort);
  void addSubsort(const std::string& sub, const std::string& super);
  void addTokenSort(const std::string& sort);
  void addListSort(const std::string& sort);

  bool isTokenSort(const std::string& sort) const { return tokenSorts_.count(sort) != 0; }
  bool isListSort(const std::string& sort) const { return listSorts_.count(sort) != 0; }

  /// Sort of a ground value. Empty collections report `.K`.
  std::string sortOf(const Term& t) const;
  /// Reflexive, transitive subsort check with K as top.
  bool leq(const std::string& sub, const std::string& super) const;
  /// May a variable of `varSort` be bound to `value`?
  bool admits(const std::string& varSort, const Term& value) const;

 private:
  std::map<std::string, std::string> productionSorts_;
  std::map<std::string, std::set<std::string>> supers_;
  std::set<std::string> tokenSorts_;
  std::set<std::string> listSorts_;
};

// --- implementation details -------------------------------------------------

template <typename F>
Term transform(const Term& t, F&& f) {
  switch (t.kind()) {
    case Term::Kind::kApply: {
      const auto& a = t.asApply();
      std::vector<Term> children;
      children.reserve(a.children.size());
      for (const auto& c : a.children) children.push_back(transform(c, f));
      return f(Term::apply(a.production, std::move(children)));
    }
    case Term::Kind::kList: {
      const auto& l = t.asList();
      std::vector<Term> elements;
      for (const auto& e : l.elements) elements.push_back(transform(e, f));
      return f(Term::list(std::move(elements), l.rest, l.position));
    }
    case Term::Kind::kMap: {
      const auto& m = t.asMap();
      std::vector<std::pair<Term, Term>> bindings;
      for (const auto& [k, v] : m.bindings) bindings.emplace_back(transform(k, f), transform(v, f));
      return f(Term::map(std::move(bindings), m.rest));
    }
    case Term::Kind::kRewrite: {
      const auto& r = t.asRewrite();
      return f(Term::rewrite(transform(r.lhs, f), transform(r.rhs, f)));
    }
    default:
      return f(t);
  }
}

}  // namespace kbx
