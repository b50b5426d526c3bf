#pragma once

// Rewrite certificates: a textual record of an execution that an independent
// checker can validate step by step against the definition.
//
//   KBXCERT 1 sha256:<digest of the printed definition>
//   initial
//   cell <name> := <canonical term>
//   step <rule id>
//   from sha256:<digest of the predecessor state>
//   var <name> := <canonical term>
//   next
//   cell <name> := <canonical term>
//   end

#include <string>
#include <vector>

#include "kbx/engine.hpp"

namespace kbx {

std::string sha256Hex(const std::string& data);

/// Digest of the printed definition.
std::string definitionDigest(const Definition& def);

/// Digest of the state's `cell` lines.
std::string stateDigest(const State& state);

struct CertStep {
  int ruleId = 0;
  std::string from;
  Substitution theta;
  State next;
};

struct Certificate {
  std::string digest;
  State initial;
  std::vector<CertStep> steps;
};

Certificate makeCertificate(const Definition& def, const Trace& trace);

std::string writeCertificate(const Certificate& cert);

/// Throws SyntaxError with the offending line number.
Certificate readCertificate(const std::string& text);

struct CheckResult {
  bool accepted = false;
  long step = -1;      // failing step index (0-based); -1 for header errors
  std::string reason;  // DigestMismatch, CellSetMismatch, ChainBreak, UnknownRule, ...
  std::string detail;
};

/// Validates the certificate using only matching, substitution and builtins.
CheckResult checkCertificate(const Definition& def, const Certificate& cert);

}  // namespace kbx
