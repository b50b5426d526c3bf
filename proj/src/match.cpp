#include "kbx/match.hpp"

#include <algorithm>
#include <deque>

namespace kbx {

namespace {

using Tasks = std::deque<MatchTask>;
using Entries = std::vector<std::pair<Term, Term>>;

class Matcher {
 public:
  Matcher(const Signature& sig, const std::function<bool(const Substitution&)>& visit)
      : sig_(sig), visit_(visit) {}

  // Returns false once the visitor asked to stop.
  bool solve(Tasks tasks, Substitution theta) {
    while (!tasks.empty()) {
      auto ready = std::find_if(tasks.begin(), tasks.end(),
                                [&](const MatchTask& t) { return !blocked(t.pattern, theta); });
      if (ready == tasks.end()) return branchOnMap(std::move(tasks), std::move(theta));
      MatchTask task = *ready;
      tasks.erase(ready);
      if (!reduce(task, tasks, theta)) return true;
    }
    return visit_(theta);
  }

 private:
  // A map pattern one of whose keys still has unbound variables.
  bool blocked(const Term& pattern, const Substitution& theta) const {
    if (!pattern.is(Term::Kind::kMap)) return false;
    for (const auto& [k, v] : pattern.asMap().bindings) {
      if (!keyGround(k, theta)) return true;
    }
    return false;
  }

  static bool keyGround(const Term& key, const Substitution& theta) {
    for (const auto& name : variableNames(key)) {
      if (!theta.contains(name)) return false;
    }
    return true;
  }

  static Entries entriesOf(const Term& subject) {
    Entries out = subject.asMap().bindings;
    std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
      return serialize(a.first) < serialize(b.first);
    });
    return out;
  }

  bool bindVar(const Variable& v, const Term& value, Substitution& theta) const {
    if (const Term* bound = theta.lookup(v.name)) return serialize(*bound) == serialize(value);
    if (!sig_.admits(v.sort, value)) return false;
    theta.bind(v.name, value);
    return true;
  }

  // Decomposes one task; new subtasks go to the front. False on mismatch.
  bool reduce(const MatchTask& task, Tasks& tasks, Substitution& theta) {
    const Term& p = task.pattern;
    const Term& s = task.subject;
    switch (p.kind()) {
      case Term::Kind::kVariable:
        return bindVar(p.asVariable(), s, theta);
      case Term::Kind::kToken:
        return s.is(Term::Kind::kToken) && s.asToken().lexeme == p.asToken().lexeme;
      case Term::Kind::kEmpty:
        return s.isEmptyValue();
      case Term::Kind::kApply: {
        if (!s.is(Term::Kind::kApply)) return false;
        const auto& pa = p.asApply();
        const auto& sa = s.asApply();
        if (pa.production != sa.production || pa.children.size() != sa.children.size()) return false;
        for (std::size_t i = pa.children.size(); i-- > 0;) {
          tasks.push_front({pa.children[i], sa.children[i]});
        }
        return true;
      }
      case Term::Kind::kList:
        return reduceList(p.asList(), s, tasks, theta);
      case Term::Kind::kMap:
        return reduceMap(p.asMap(), s, tasks, theta);
      case Term::Kind::kRewrite:
        throw Error(ErrorKind::kTypeMismatch, "rewrite split inside a match pattern");
    }
    return false;
  }

  bool reduceList(const ListTerm& pl, const Term& s, Tasks& tasks, Substitution& theta) {
    std::vector<Term> items;
    if (!s.isEmptyValue()) {
      if (!s.is(Term::Kind::kList)) return false;
      items = s.asList().elements;
    }
    const std::size_t k = pl.elements.size();
    if (items.size() < k || (!pl.rest && items.size() != k)) return false;
    std::size_t offset = pl.position == RestPosition::kBefore ? items.size() - k : 0;
    if (pl.rest) {
      std::vector<Term> rest;
      if (pl.position == RestPosition::kBefore) {
        rest.assign(items.begin(), items.begin() + static_cast<long>(offset));
      } else {
        rest.assign(items.begin() + static_cast<long>(k), items.end());
      }
      if (!bindVar(*pl.rest, Term::list(std::move(rest)), theta)) return false;
    }
    for (std::size_t i = k; i-- > 0;) tasks.push_front({pl.elements[i], items[offset + i]});
    return true;
  }

  bool reduceMap(const MapTerm& pm, const Term& s, Tasks& tasks, Substitution& theta) {
    Entries entries;
    if (!s.isEmptyValue()) {
      if (!s.is(Term::Kind::kMap)) return false;
      entries = entriesOf(s);
    }
    std::vector<MatchTask> valueTasks;
    for (const auto& [k, v] : pm.bindings) {
      std::string key = serialize(substitute(k, theta));
      auto it = std::find_if(entries.begin(), entries.end(),
                             [&](const auto& e) { return serialize(e.first) == key; });
      if (it == entries.end()) return false;
      valueTasks.push_back({v, it->second});
      entries.erase(it);
    }
    if (pm.rest) {
      if (!bindVar(*pm.rest, Term::map(std::move(entries)), theta)) return false;
    } else if (!entries.empty()) {
      return false;
    }
    for (std::size_t i = valueTasks.size(); i-- > 0;) tasks.push_front(valueTasks[i]);
    return true;
  }

  // Every remaining task is a map pattern with an open key: pick the first
  // open binding of the first task and try each subject entry in order.
  bool branchOnMap(Tasks tasks, Substitution theta) {
    MatchTask task = tasks.front();
    tasks.pop_front();
    const auto& pm = task.pattern.asMap();
    const Term& s = task.subject;
    if (!s.isEmptyValue() && !s.is(Term::Kind::kMap)) return true;
    Entries entries = s.isEmptyValue() ? Entries{} : entriesOf(s);

    std::size_t open = 0;
    while (keyGround(pm.bindings[open].first, theta)) ++open;
    const auto& [pk, pv] = pm.bindings[open];

    std::vector<std::pair<Term, Term>> others;
    for (std::size_t i = 0; i < pm.bindings.size(); ++i) {
      if (i != open) others.push_back(pm.bindings[i]);
    }

    for (std::size_t e = 0; e < entries.size(); ++e) {
      Entries remaining = entries;
      remaining.erase(remaining.begin() + static_cast<long>(e));
      Tasks next = tasks;
      next.push_front({Term::map(others, pm.rest), Term::map(remaining)});
      next.push_front({pv, entries[e].second});
      next.push_front({pk, entries[e].first});
      if (!solve(std::move(next), theta)) return false;
    }
    return true;
  }

  const Signature& sig_;
  const std::function<bool(const Substitution&)>& visit_;
};

}  // namespace

void forEachMatch(const std::vector<MatchTask>& tasks, const Substitution& seed,
                  const Signature& signature,
                  const std::function<bool(const Substitution&)>& visit) {
  Matcher m(signature, visit);
  m.solve(Tasks(tasks.begin(), tasks.end()), seed);
}

std::vector<Substitution> matchAll(const std::vector<MatchTask>& tasks, const Substitution& seed,
                                   const Signature& signature, std::size_t limit) {
  std::vector<Substitution> out;
  if (limit == 0) return out;
  forEachMatch(tasks, seed, signature, [&](const Substitution& theta) {
    out.push_back(theta);
    return out.size() < limit;
  });
  return out;
}

}  // namespace kbx
