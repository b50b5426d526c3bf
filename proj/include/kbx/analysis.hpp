#pragma once

// Classification of rule variables and tokens into shared and missing
// information, and the determinism lints the synthesis relies on.

#include <string>
#include <vector>

#include "kbx/definition.hpp"

namespace kbx {

/// Each element is a named variable term or a token term, in order of first
/// occurrence (cells in written order, left side before right side).
struct RuleInfo {
  int ruleId = 0;
  std::vector<Term> common;
  std::vector<Term> missR;
  std::vector<Term> missL;
  std::vector<Term> contextVars;

  bool hasMissing() const { return !missR.empty() || !missL.empty(); }
};

RuleInfo analyzeRule(const RuleDecl& rule);

struct Diagnostic {
  enum class Severity { kInfo, kWarning, kError };
  Severity severity = Severity::kInfo;
  std::string code;  // LhsOverlap, RhsOverlap, PlaceholderRemaining
  std::vector<int> rules;
  std::string message;
};

const char* severityName(Diagnostic::Severity s);

std::vector<Diagnostic> lintDefinition(const Definition& def);

/// True when any diagnostic is an error.
bool hasErrors(const std::vector<Diagnostic>& diagnostics);

}  // namespace kbx
