#pragma once

// Transformation definitions: syntax declarations, the configuration and
// the rewrite rules, plus the `.kbx` reader/printer and model parsing.

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "kbx/term.hpp"

namespace kbx {

struct ProductionItem {
  bool literal = false;
  std::string text;  // literal text or sort name

  friend bool operator==(const ProductionItem&, const ProductionItem&) = default;
};

struct Production {
  enum class Kind {
    kSyntax,  // builds an Apply node labelled `id`
    kChain,   // single nonterminal: a subsort injection, no node
    kList,    // List{Element, "sep"}
    kToken,   // `syntax S [token]`: values are #-tokens
  };

  std::string id;
  std::string sort;
  Kind kind = Kind::kSyntax;
  std::vector<ProductionItem> items;  // kSyntax and kChain
  std::string element;                // kList
  std::string separator;              // kList

  /// Sorts of the nonterminal items, in order (the Apply children's sorts).
  std::vector<std::string> childSorts() const;

  friend bool operator==(const Production&, const Production&) = default;
};

struct Cell {
  std::string name;
  Term initial;            // `.K` for the `$PGM` cell
  bool pgm = false;        // initial content is `$PGM:sort`
  std::string sort;        // model sort held by the cell; empty means K
  bool output = false;     // explicit `output` attribute

  friend bool operator==(const Cell& a, const Cell& b);
};

struct ConfigurationDecl {
  std::vector<Cell> cells;

  const Cell* find(const std::string& name) const;
  Cell* find(const std::string& name);
  /// The `$PGM` cell. Throws NoInputCell.
  const Cell& input() const;
  /// The cell carrying `output`, otherwise the first non-input cell.
  const Cell& output() const;

  friend bool operator==(const ConfigurationDecl&, const ConfigurationDecl&) = default;
};

struct RuleDecl {
  int id = 0;
  std::vector<std::pair<std::string, Term>> cells;  // in written order
  std::optional<Term> condition;  // `requires` clause
  int priority = 50;

  const Term* cell(const std::string& name) const;
  Term* cell(const std::string& name);

  friend bool operator==(const RuleDecl& a, const RuleDecl& b);
};

/// Left and right side of a cell pattern (a read-only cell is both).
Term lhsOf(const Term& cellPattern);
Term rhsOf(const Term& cellPattern);

class Definition {
 public:
  std::vector<Production> productions;
  ConfigurationDecl configuration;
  std::vector<RuleDecl> rules;

  /// (rule id, placeholder index) -> expected sort, recomputed by
  /// refreshDefaultsRequired() and by the parser.
  std::map<std::pair<int, int>, std::string> defaultsRequired;

  /// Sorts declared by `syntax` (in first-declaration order).
  std::vector<std::string> userSorts() const;
  bool hasSort(const std::string& sort) const;
  const Production* production(const std::string& id) const;
  const Production* listProduction(const std::string& sort) const;
  bool isListSort(const std::string& sort) const;

  const Signature& signature() const;
  void refreshDefaultsRequired();

  /// Rule by declaration id; nullptr when absent.
  const RuleDecl* rule(int id) const;

  friend bool operator==(const Definition& a, const Definition& b);

  // Parser caches, shared by copies.
  struct Cache;
  std::shared_ptr<Cache> cache() const;

 private:
  mutable std::shared_ptr<Cache> cache_;
};

/// Parses `.kbx` text. Throws SyntaxError, UnknownSort, DuplicateCellName,
/// NoInputCell, ParseError or AmbiguousParse.
Definition parseDefinition(const std::string& text);

/// Parses model text as `startSort` under the definition's grammar.
Term parseModel(const Definition& def, const std::string& startSort, const std::string& text);

/// Parses a rule-body expression (patterns, builtins) against the
/// definition's grammar, with variable sorts inferred from context.
Term parsePattern(const Definition& def, const std::string& text);

std::string printDefinition(const Definition& def);

/// Unparses a ground model term; `sort` selects the list separator for a
/// top-level list and may be empty. Throws UntypedTerm.
std::string printModel(const Definition& def, const Term& term, const std::string& sort = {});

/// Pattern printer used by printDefinition.
std::string printPattern(const Definition& def, const Term& t);

/// Recomputes each variable's effective sort in a rule from its annotations
/// and production contexts so that synthesized rules equal their re-parsed
/// form. Applied by the parser and by the synthesis passes.
void normalizeRule(const Definition& def, RuleDecl& rule);

}  // namespace kbx
