#include "kbx/sync.hpp"

#include <algorithm>

#include "kbx/builtins.hpp"
#include "kbx/synth.hpp"

namespace kbx {

namespace {

PassResult run(const Definition& def, const Term& input, const Term& store, long maxSteps, const char* pass) {
  State s = initialState(def, input);
  s.set(complementsCell(def), store);
  PassResult out;
  out.trace = execute(def, s, maxSteps);
  const State& last = out.trace.final();
  const std::string& in = def.configuration.input().name;
  if (!last.at(in).isEmptyValue()) {
    throw Error(ErrorKind::kExecutionFailed,
                std::string(pass) + " stopped with unconsumed input: " + serialize(last.at(in)));
  }
  out.output = last.at(def.configuration.output().name);
  out.store = last.at(complementsCell(def));
  return out;
}

bool same(const Term& a, const Term& b) { return serialize(a) == serialize(b); }

std::string show(const Definition& def, const Term& t) {
  try {
    std::string s = printModel(def, t);
    return s.empty() ? ".K" : s;
  } catch (const Error&) {
    return serialize(t);
  }
}

const std::vector<Term>& elementsOf(const Term& t) {
  static const std::vector<Term> none;
  return t.is(Term::Kind::kList) ? t.asList().elements : none;
}

}  // namespace

PassResult putr(const BxPair& bx, const Term& m, const Term& store) {
  return run(bx.fwd, m, store, bx.maxSteps, "putr");
}

PassResult putl(const BxPair& bx, const Term& n, const Term& store) {
  return run(bx.bwd, n, store, bx.maxSteps, "putl");
}

const char* verdictName(Verdict v) {
  switch (v) {
    case Verdict::kConsistent: return "Consistent";
    case Verdict::kSynchronized: return "Synchronized";
    case Verdict::kInconsistent: return "Inconsistent";
    case Verdict::kFailed: return "Failed";
  }
  return "?";
}

SyncResult syncForward(const BxPair& bx, const Term& m, const Term& n) {
  SyncResult out;
  out.source = m;
  out.target = n;
  try {
    PassResult extract = putl(bx, n, Term::empty(EmptyKind::kMap));
    out.traces.push_back(extract.trace);
    PassResult rebuild = putr(bx, m, extract.store);
    out.traces.push_back(rebuild.trace);
    out.verdict = same(rebuild.output, n) ? Verdict::kConsistent : Verdict::kSynchronized;
    out.target = rebuild.output;
    out.store = rebuild.store;
  } catch (const Error& e) {
    out.verdict = Verdict::kFailed;
    out.reason = e.what();
  }
  return out;
}

SyncResult syncBackward(const BxPair& bx, const Term& m, const Term& n) {
  SyncResult out;
  out.source = m;
  out.target = n;
  try {
    PassResult extract = putr(bx, m, Term::empty(EmptyKind::kMap));
    out.traces.push_back(extract.trace);
    PassResult rebuild = putl(bx, n, extract.store);
    out.traces.push_back(rebuild.trace);
    out.verdict = same(rebuild.output, m) ? Verdict::kConsistent : Verdict::kSynchronized;
    out.source = rebuild.output;
    out.store = rebuild.store;
  } catch (const Error& e) {
    out.verdict = Verdict::kFailed;
    out.reason = e.what();
  }
  return out;
}

std::vector<Difference> diffValues(const Definition& def, const std::string& cell, const Term& expected,
                                   const Term& actual) {
  std::vector<Difference> out;
  if (same(expected, actual)) return out;
  bool lists = (expected.is(Term::Kind::kList) || expected.isEmptyValue()) &&
               (actual.is(Term::Kind::kList) || actual.isEmptyValue());
  if (!lists) {
    out.push_back({cell, "expected `" + show(def, expected) + "`, found `" + show(def, actual) + "`"});
    return out;
  }
  const auto& e = elementsOf(expected);
  const auto& a = elementsOf(actual);
  // Longest common subsequence alignment, so one missing element is one entry.
  std::vector<std::string> se, sa;
  for (const auto& t : e) se.push_back(serialize(t));
  for (const auto& t : a) sa.push_back(serialize(t));
  std::vector<std::vector<std::size_t>> lcs(se.size() + 1, std::vector<std::size_t>(sa.size() + 1, 0));
  for (std::size_t i = se.size(); i-- > 0;) {
    for (std::size_t j = sa.size(); j-- > 0;) {
      lcs[i][j] = se[i] == sa[j] ? lcs[i + 1][j + 1] + 1 : std::max(lcs[i + 1][j], lcs[i][j + 1]);
    }
  }
  std::size_t i = 0, j = 0;
  while (i < se.size() || j < sa.size()) {
    if (i < se.size() && j < sa.size() && se[i] == sa[j]) {
      ++i, ++j;
    } else if (j >= sa.size() || (i < se.size() && lcs[i + 1][j] >= lcs[i][j + 1])) {
      out.push_back({cell, "element " + std::to_string(i + 1) + " `" + show(def, e[i]) + "` is not reproduced"});
      ++i;
    } else {
      out.push_back({cell, "`" + show(def, a[j]) + "` is produced before element " + std::to_string(i + 1) + " but absent"});
      ++j;
    }
  }
  return out;
}

ConsistencyReport checkConsistency(const BxPair& bx, const Term& m, const Term& n) {
  ConsistencyReport out;
  const std::string& nCell = bx.fwd.configuration.output().name;
  const std::string& mCell = bx.fwd.configuration.input().name;
  const Term empty = Term::empty(EmptyKind::kMap);
  try {
    PassResult forward = putr(bx, m, putl(bx, n, empty).store);
    out.differences = diffValues(bx.fwd, nCell, n, forward.output);
    PassResult backward = putl(bx, n, putr(bx, m, empty).store);
    auto more = diffValues(bx.bwd, mCell, m, backward.output);
    out.differences.insert(out.differences.end(), more.begin(), more.end());
    out.consistent = out.differences.empty();
  } catch (const Error& e) {
    out.consistent = false;
    out.reason = e.what();
  }
  return out;
}

std::vector<LawResult> roundtripTest(const BxPair& bx, const Term& m, const Term& n) {
  std::vector<LawResult> out;
  const Term empty = Term::empty(EmptyKind::kMap);
  auto law = [&](const std::string& name, const std::string& label, auto&& body) {
    LawResult r{name, label, false, {}};
    try {
      r.detail = body();
      r.pass = r.detail.empty();
    } catch (const Error& e) {
      r.detail = e.what();
    }
    out.push_back(std::move(r));
  };
  auto putrl = [&](const Term& c) {
    return [&bx, &m, c]() -> std::string {
      PassResult f = putr(bx, m, c);
      PassResult b = putl(bx, f.output, f.store);
      if (!same(b.output, m)) return "putl(putr(m)) differs from m";
      if (!same(b.store, f.store)) return "store changed by putl";
      return {};
    };
  };
  auto putlr = [&](const Term& c) {
    return [&bx, &n, c]() -> std::string {
      PassResult b = putl(bx, n, c);
      PassResult f = putr(bx, b.output, b.store);
      if (!same(f.output, n)) return "putr(putl(n)) differs from n";
      if (!same(f.store, b.store)) return "store changed by putr";
      return {};
    };
  };
  law("PUTRL", "empty", putrl(empty));
  law("PUTRL", "extracted", [&]() -> std::string { return putrl(putr(bx, m, empty).store)(); });
  law("PUTLR", "empty", putlr(empty));
  law("PUTLR", "extracted", [&]() -> std::string { return putlr(putl(bx, n, empty).store)(); });
  return out;
}

std::optional<std::size_t> replayBackward(const Definition& ux, const Trace& trace) {
  for (std::size_t k = trace.steps.size(); k-- > 0;) {
    const Step& s = trace.steps[k];
    const State& before = k == 0 ? trace.initial : trace.steps[k - 1].next;
    const RuleDecl* r = ux.rule(s.ruleId);
    if (!r) return k;
    RuleDecl back = backwardRule(*r);
    try {
      for (const auto& [cell, pattern] : back.cells) {
        Term lhs = builtin::evaluate(substitute(lhsOf(pattern), s.theta));
        if (!same(lhs, s.next.at(cell))) return k;
      }
      if (!(applyRule(back, s.theta, s.next) == before)) return k;
    } catch (const Error&) {
      return k;
    }
  }
  return std::nullopt;
}

}  // namespace kbx
