#pragma once

// One-way matching of patterns against ground terms.
//
// Search order is deterministic: tasks are solved left to right, list
// patterns have exactly one decomposition, and map patterns whose binding
// keys are not yet ground are postponed until every other task is solved.
// When a key is still open at that point its candidates are tried in
// canonical key order.

#include <cstddef>
#include <functional>
#include <limits>
#include <vector>

#include "kbx/term.hpp"

namespace kbx {

struct MatchTask {
  Term pattern;
  Term subject;
};

/// Calls `visit` for each solution in search order until it returns false.
void forEachMatch(const std::vector<MatchTask>& tasks, const Substitution& seed,
                  const Signature& signature,
                  const std::function<bool(const Substitution&)>& visit);

/// Every substitution extending `seed` under which each task's pattern equals
/// its subject, in search order, at most `limit` of them.
std::vector<Substitution> matchAll(const std::vector<MatchTask>& tasks, const Substitution& seed,
                                   const Signature& signature,
                                   std::size_t limit = std::numeric_limits<std::size_t>::max());

}  // namespace kbx
