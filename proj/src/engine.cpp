#include "kbx/engine.hpp"

#include <algorithm>

#include "kbx/builtins.hpp"
#include "kbx/match.hpp"

namespace kbx {

const Term& State::at(const std::string& cell) const {
  for (const auto& [n, t] : cells) {
    if (n == cell) return t;
  }
  throw Error(ErrorKind::kSyntaxError, "state has no cell " + cell);
}

void State::set(const std::string& cell, Term value) {
  for (auto& [n, t] : cells) {
    if (n == cell) {
      t = std::move(value);
      return;
    }
  }
  cells.emplace_back(cell, std::move(value));
}

bool operator==(const State& a, const State& b) {
  if (a.cells.size() != b.cells.size()) return false;
  for (std::size_t i = 0; i < a.cells.size(); ++i) {
    if (a.cells[i].first != b.cells[i].first) return false;
    if (serialize(a.cells[i].second) != serialize(b.cells[i].second)) return false;
  }
  return true;
}

StepLimitExceeded::StepLimitExceeded(long limit, Trace partial)
    : Error(ErrorKind::kStepLimitExceeded, "no final state within " + std::to_string(limit) + " steps"),
      partial_(std::move(partial)) {}

State initialState(const Definition& def, const Term& program) {
  State s;
  for (const auto& c : def.configuration.cells) s.cells.emplace_back(c.name, c.pgm ? program : c.initial);
  return s;
}

std::vector<const RuleDecl*> rulesByPriority(const Definition& def) {
  std::vector<const RuleDecl*> out;
  for (const auto& r : def.rules) out.push_back(&r);
  std::stable_sort(out.begin(), out.end(), [](const RuleDecl* a, const RuleDecl* b) {
    return std::make_pair(a->priority, a->id) < std::make_pair(b->priority, b->id);
  });
  return out;
}

std::vector<MatchTask> lhsTasks(const Definition& def, const RuleDecl& rule, const State& state) {
  std::vector<MatchTask> tasks;
  for (const auto& c : def.configuration.cells) {
    if (const Term* p = rule.cell(c.name)) tasks.push_back({lhsOf(*p), state.at(c.name)});
  }
  return tasks;
}

std::optional<Substitution> matchRule(const Definition& def, const RuleDecl& rule, const State& state) {
  std::optional<Substitution> found;
  forEachMatch(lhsTasks(def, rule, state), Substitution{}, def.signature(), [&](const Substitution& theta) {
    if (rule.condition && !builtin::isTrue(builtin::evalBuiltin(*rule.condition, theta))) return true;
    found = theta;
    return false;
  });
  return found;
}

State applyRule(const RuleDecl& rule, const Substitution& theta, const State& state) {
  State next = state;
  for (const auto& [cell, pattern] : rule.cells) {
    if (!pattern.is(Term::Kind::kRewrite)) continue;
    next.set(cell, builtin::evaluate(substitute(pattern.asRewrite().rhs, theta)));
  }
  return next;
}

std::optional<Step> step(const Definition& def, const State& state) {
  for (const RuleDecl* r : rulesByPriority(def)) {
    if (auto theta = matchRule(def, *r, state)) {
      return Step{r->id, *theta, applyRule(*r, *theta, state)};
    }
  }
  return std::nullopt;
}

Trace execute(const Definition& def, const State& initial, long maxSteps) {
  Trace trace;
  trace.initial = initial;
  while (auto s = step(def, trace.final())) {
    if (static_cast<long>(trace.steps.size()) >= maxSteps) throw StepLimitExceeded(maxSteps, std::move(trace));
    trace.steps.push_back(std::move(*s));
  }
  return trace;
}

}  // namespace kbx
