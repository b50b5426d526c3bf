#pragma once

// Concrete rewriting over configurations: rule matching, priority-ordered
// rule selection and execution to a final state with a recorded trace.

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "kbx/definition.hpp"
#include "kbx/match.hpp"

namespace kbx {

inline constexpr long kDefaultMaxSteps = 100000;

/// Cell contents in configuration order.
struct State {
  std::vector<std::pair<std::string, Term>> cells;

  const Term& at(const std::string& cell) const;
  void set(const std::string& cell, Term value);

  /// Cellwise structural equality.
  friend bool operator==(const State& a, const State& b);
};

struct Step {
  int ruleId = 0;
  Substitution theta;
  State next;
};

struct Trace {
  State initial;
  std::vector<Step> steps;

  const State& final() const { return steps.empty() ? initial : steps.back().next; }
};

class StepLimitExceeded : public Error {
 public:
  StepLimitExceeded(long limit, Trace partial);
  const Trace& partial() const { return partial_; }

 private:
  Trace partial_;
};

/// The configuration's initial state with `program` in the `$PGM` cell.
State initialState(const Definition& def, const Term& program);

/// Rules ordered by (priority, id).
std::vector<const RuleDecl*> rulesByPriority(const Definition& def);

/// Match tasks for the rule's left-hand side against `state`.
std::vector<MatchTask> lhsTasks(const Definition& def, const RuleDecl& rule, const State& state);

/// First substitution (in matcher search order) that matches every cell and
/// satisfies the side condition. Throws NonGroundSideCondition.
std::optional<Substitution> matchRule(const Definition& def, const RuleDecl& rule, const State& state);

/// The successor state obtained by instantiating every rewritten cell.
State applyRule(const RuleDecl& rule, const Substitution& theta, const State& state);

std::optional<Step> step(const Definition& def, const State& state);

Trace execute(const Definition& def, const State& initial, long maxSteps = kDefaultMaxSteps);

}  // namespace kbx
