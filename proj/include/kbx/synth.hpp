#pragma once

// Synthesis of the forward and backward definitions from a definition of
// unidirectional rules, plus the defaults that fill backward placeholders.

#include <map>
#include <optional>
#include <string>
#include <utility>

#include "kbx/analysis.hpp"
#include "kbx/definition.hpp"

namespace kbx {

/// Appends the complements cell `c` (or `c0`, `c1`, ... when taken),
/// initialised to `.Map`.
ConfigurationDecl addCHolder(const ConfigurationDecl& config);

/// Name of the complements cell of a synthesized definition (its last cell).
const std::string& complementsCell(const Definition& def);

/// The rule with the complements update and consistency condition added.
/// Rules without missing information are returned unchanged.
RuleDecl makeCreateR(const RuleDecl& rule, const RuleInfo& info, const std::string& cCell);

/// The store-reading variant; nullopt for rules without missing information.
std::optional<RuleDecl> makePutR(const RuleDecl& rule, const RuleInfo& info, const std::string& cCell);

Definition synthesizeForward(const Definition& ux);

/// Swaps the two sides of every rewrite.
RuleDecl backwardRule(const RuleDecl& rule);

/// Exchanges the input and output roles of the configuration.
ConfigurationDecl reverseIO(const ConfigurationDecl& config);

RuleDecl makeCreateL(const RuleDecl& rule, const RuleInfo& info, const std::string& cCell);
RuleDecl makePutL(const RuleDecl& putR, const std::string& cCell);

/// The backward definition; its placeholders are listed in defaultsRequired.
Definition synthesizeBackward(const Definition& ux);

/// (rule id, placeholder index) -> model text.
using Defaults = std::map<std::pair<int, int>, std::string>;

/// Reads `rule <id> ?<n>? := <text>` lines; `//` comments and blank lines
/// are skipped. Lines with an empty value are ignored. Throws SyntaxError.
Defaults parseDefaults(const std::string& text);

/// Replaces every placeholder of `def` by its parsed default.
/// Throws MissingDefault or SortMismatch.
Definition applyDefaults(const Definition& def, const Defaults& defaults);

/// A defaults file for the backward definition of `ux`, pre-filled where the
/// missing element is a token.
std::string defaultsTemplate(const Definition& ux);

}  // namespace kbx
