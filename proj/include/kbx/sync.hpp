#pragma once

// Forward/backward transformation passes over a pair of synthesized
// definitions, the synchronizer built on them, and the BX law checks.

#include <optional>
#include <string>
#include <vector>

#include "kbx/engine.hpp"

namespace kbx {

struct BxPair {
  Definition fwd;
  Definition bwd;
  long maxSteps = kDefaultMaxSteps;
};

struct PassResult {
  Term output;
  Term store;
  Trace trace;
};

/// Runs `fwd` on source model `m` with complements `store`.
/// Throws ExecutionFailed when the input cell is not consumed.
PassResult putr(const BxPair& bx, const Term& m, const Term& store);

/// Runs `bwd` on target model `n` with complements `store`.
PassResult putl(const BxPair& bx, const Term& n, const Term& store);

enum class Verdict { kConsistent, kSynchronized, kInconsistent, kFailed };
const char* verdictName(Verdict v);

struct SyncResult {
  Verdict verdict = Verdict::kFailed;
  Term source;
  Term target;
  Term store;
  std::vector<Trace> traces;  // in execution order
  std::string reason;
};

/// Propagates a source edit: extracts complements from `n`, then rebuilds n.
SyncResult syncForward(const BxPair& bx, const Term& m, const Term& n);

/// Propagates a target edit: extracts complements from `m`, then rebuilds m.
SyncResult syncBackward(const BxPair& bx, const Term& m, const Term& n);

struct Difference {
  std::string cell;
  std::string description;
};

struct ConsistencyReport {
  bool consistent = false;
  std::vector<Difference> differences;
  std::string reason;  // set when a pass failed
};

/// Differences between two ground values of `cell`, by list position.
std::vector<Difference> diffValues(const Definition& def, const std::string& cell, const Term& expected,
                                   const Term& actual);

/// Consistent iff synchronizing in either direction changes nothing: putr of m
/// with complements extracted from n reproduces n, and putl of n with
/// complements extracted from m reproduces m.
ConsistencyReport checkConsistency(const BxPair& bx, const Term& m, const Term& n);

struct LawResult {
  std::string law;    // PUTRL or PUTLR
  std::string store;  // empty or extracted
  bool pass = false;
  std::string detail;
};

/// Both round-trip laws with an empty store and with a store extracted from
/// the law's own starting side (putr of m for PUTRL, putl of n for PUTLR).
std::vector<LawResult> roundtripTest(const BxPair& bx, const Term& m, const Term& n);

/// Replays every step of `trace` (a run of `ux`) backwards through the
/// swapped rules with the recorded substitutions. Returns the index of the
/// first step that does not reproduce its predecessor, or nullopt.
std::optional<std::size_t> replayBackward(const Definition& ux, const Trace& trace);

}  // namespace kbx
