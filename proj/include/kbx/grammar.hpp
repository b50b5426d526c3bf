#pragma once

// Lexer and general context-free (Earley) parser shared by model parsing and
// rule-body parsing. Grammars are built at runtime from `syntax`
// declarations; ambiguity is reported instead of resolved.

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "kbx/term.hpp"

namespace kbx::grammar {

enum class TokenClass { kLiteral, kString, kInt, kHash, kBool, kIdent, kVar };

struct Lexeme {
  TokenClass cls = TokenClass::kLiteral;
  std::string text;
  long offset = 0;
  int line = 1;
};

struct LexOptions {
  std::set<std::string> literals;  // grammar literals; identifier-shaped ones become keywords
  std::set<std::string> sorts;     // admissible `X:Sort` annotations (rule mode)
  bool ruleMode = false;           // uppercase / `_` identifiers and `?N?` are variables
};

/// Splits text into lexemes. `lineBase` and `offsetBase` shift reported
/// positions when the text is a slice of a larger file. Throws SyntaxError.
std::vector<Lexeme> lex(std::string_view text, const LexOptions& options, int lineBase = 1,
                        long offsetBase = 0);

struct Symbol {
  bool terminal = false;
  int nonterminal = -1;                       // when !terminal
  TokenClass cls = TokenClass::kLiteral;      // when terminal
  std::string literal;                        // when terminal && cls == kLiteral

  static Symbol nt(int id) { return Symbol{false, id, TokenClass::kLiteral, {}}; }
  static Symbol lit(std::string text) { return Symbol{true, -1, TokenClass::kLiteral, std::move(text)}; }
  static Symbol cls_(TokenClass c) { return Symbol{true, -1, c, {}}; }
};

struct Rule {
  int lhs = -1;
  std::vector<Symbol> rhs;
  int tag = 0;  // interpreted by the caller's builder
};

class Grammar {
 public:
  int nonterminal(const std::string& name);
  std::optional<int> find(const std::string& name) const;
  const std::string& name(int nt) const { return names_[static_cast<std::size_t>(nt)]; }
  int addRule(int lhs, std::vector<Symbol> rhs, int tag);

  const std::vector<Rule>& rules() const { return rules_; }
  const std::vector<int>& rulesFor(int nt) const { return byLhs_[static_cast<std::size_t>(nt)]; }
  bool nullable(int nt) const;
  std::set<std::string> literals() const;

 private:
  void computeNullable() const;

  std::vector<std::string> names_;
  std::map<std::string, int> ids_;
  std::vector<Rule> rules_;
  std::vector<std::vector<int>> byLhs_;
  mutable std::vector<bool> nullable_;
  mutable bool nullableReady_ = false;
};

/// Builds the term for one completed rule from its child values (literal
/// terminals contribute `.K`). Returning nullopt discards the derivation.
using Builder = std::function<std::optional<Term>(const Rule& rule, const std::vector<Term>& children)>;
using TerminalBuilder = std::function<Term(const Lexeme& lexeme)>;

/// Parses `tokens` as `start`. Throws ParseError at the furthest position
/// reached, or AmbiguousParse naming two distinct results.
Term parse(const Grammar& g, int start, const std::vector<Lexeme>& tokens, const Builder& build,
           const TerminalBuilder& terminal);

}  // namespace kbx::grammar
