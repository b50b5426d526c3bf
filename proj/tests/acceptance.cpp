// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <sstream>

#include "generators.hpp"
#include "kbx/certificate.hpp"
#include "mutants.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace kbx;
using namespace kbx::test;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances.
constexpr double kMirrorBudgetMs = 5000;
constexpr double kLawsBudgetMs = 60000;
constexpr double kCertBudgetMs = 30000;
constexpr std::size_t kMinRandomModels = 200;
constexpr std::size_t kMaxReplaySteps = 50;
constexpr std::size_t kFig4KeyArity = 3;
constexpr int kPutPriority = 50;
constexpr int kCreatePriority = 51;
constexpr std::size_t kFig4Placeholders = 2;
constexpr std::uint64_t kSeed = 20240917;

struct Outcome {
  bool pass = true;
  std::string detail;
};

class Check {
 public:
  void require(bool ok, const std::string& what) {
    if (!ok && out_.pass) out_.detail = what;
    out_.pass = out_.pass && ok;
  }
  Outcome done(const std::string& summary) {
    if (out_.pass) out_.detail = summary;
    return out_;
  }

 private:
  Outcome out_;
};

double since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
}

std::string ms(double v) {
  std::ostringstream s;
  s.precision(1);
  s << std::fixed << v << " ms";
  return s.str();
}

struct Loaded {
  CorpusCase c;
  Definition ux;
  BxPair bx;
  Term m, n;
};

std::vector<Loaded> loadAll() {
  std::vector<Loaded> out;
  for (const auto& c : loadCorpus(corpusDir())) {
    Definition ux = parseDefinition(readFile(c.ux));
    BxPair bx = synthesizePair(ux, c.defaults);
    out.push_back({c, ux, bx, readModel(ux, sourceSort(ux), c.source), readModel(ux, targetSort(ux), c.target)});
  }
  return out;
}

Term uxOutput(const Definition& ux, const Term& m) {
  return execute(ux, initialState(ux, m)).final().at(ux.configuration.output().name);
}

Outcome mirror(const std::vector<Loaded>& corpus) {
  Check check;
  auto start = std::chrono::steady_clock::now();
  for (const auto& l : corpus) {
    check.require(structurallyEqual(putr(l.bx, l.m, emptyMap()).output, uxOutput(l.ux, l.m)),
                  l.c.name + ": forward output differs");
  }
  double t = since(start);
  check.require(t < kMirrorBudgetMs, "took " + ms(t));
  return check.done(std::to_string(corpus.size()) + " source models exact, " + ms(t) + " < " + ms(kMirrorBudgetMs));
}

Outcome laws(const std::vector<Loaded>& corpus) {
  Check check;
  auto start = std::chrono::steady_clock::now();
  std::size_t pairs = 0;
  auto run = [&](const BxPair& bx, const Term& m, const Term& n, const std::string& name) {
    for (const auto& law : roundtripTest(bx, m, n)) {
      check.require(law.pass, name + ": " + law.law + " (" + law.store + " store) " + law.detail);
    }
    ++pairs;
  };
  for (const auto& l : corpus) {
    if (l.c.expect == "Consistent") run(l.bx, l.m, l.n, l.c.name);
    if (l.c.expect == "Synchronized") run(l.bx, l.m, syncForward(l.bx, l.m, l.n).target, l.c.name + " (synchronized)");
  }
  std::size_t corpusPairs = pairs;
  Rng rng(kSeed);
  Definition traffic = uxOf("traffic"), family = uxOf("family");
  BxPair trafficBx = pairOf("traffic"), familyBx = pairOf("family");
  std::size_t random = 0;
  for (; random < kMinRandomModels; ++random) {
    bool useFamily = random % 4 == 3;
    const Definition& ux = useFamily ? family : traffic;
    const BxPair& bx = useFamily ? familyBx : trafficBx;
    std::string text = useFamily ? randomFamilies(rng, 6) : randomTrafficProgram(rng, 6);
    Term m = parseModel(ux, sourceSort(ux), text);
    run(bx, m, uxOutput(ux, m), "random model `" + text + "`");
  }
  double t = since(start);
  check.require(t < kLawsBudgetMs, "took " + ms(t));
  return check.done(std::to_string(corpusPairs) + " corpus pairs + " + std::to_string(random) +
                    " random models, PUTRL and PUTLR exact, " + ms(t) + " < " + ms(kLawsBudgetMs));
}

Outcome backForth(const std::vector<Loaded>& corpus) {
  Check check;
  std::size_t traces = 0, steps = 0;
  for (const auto& l : corpus) {
    Trace t = execute(l.ux, initialState(l.ux, l.m));
    check.require(t.steps.size() <= kMaxReplaySteps, l.c.name + ": trace longer than the replay bound");
    auto bad = replayBackward(l.ux, t);
    check.require(!bad, l.c.name + ": snapshot " + std::to_string(bad.value_or(0)) + " not reproduced");
    ++traces;
    steps += t.steps.size();
  }
  return check.done(std::to_string(traces) + " traces, " + std::to_string(steps) + " steps, every snapshot exact");
}

Outcome fidelity() {
  Check check;
  Definition ux = parseDefinition(readFile(corpusCase("fig4").ux));
  Definition fwd = synthesizeForward(ux);
  Definition bwd = synthesizeBackward(ux);
  RuleInfo info = analyzeRule(ux.rules[0]);
  check.require(fwd.rules.size() == 2 && bwd.rules.size() == 2, "expected two forward and two backward rules");
  if (fwd.rules.size() != 2 || bwd.rules.size() != 2) return check.done("");
  const RuleDecl &createR = fwd.rules[0], &putR = fwd.rules[1], &createL = bwd.rules[0], &putL = bwd.rules[1];
  check.require(createR.priority == kCreatePriority && createL.priority == kCreatePriority, "create priority");
  check.require(putR.priority == kPutPriority && putL.priority == kPutPriority, "put priority");
  for (const RuleDecl* r : {&createR, &putR, &createL, &putL}) {
    check.require(r->cells.size() == 4, "rule " + std::to_string(r->id) + " does not have cells m, n, s, c");
    for (const char* cell : {"m", "n", "s", "c"}) check.require(r->cell(cell) != nullptr, std::string("cell ") + cell);
  }
  auto updateKey = [](const RuleDecl& r) { return r.cell("c")->asRewrite().rhs.asApply().children[1]; };
  auto bindingKey = [](const RuleDecl& r) { return r.cell("c")->asRewrite().lhs.asMap().bindings[0].first; };
  check.require(info.common.size() + 1 == kFig4KeyArity, "common elements");
  check.require(updateKey(createR).asList().elements.size() == kFig4KeyArity, "CreateR key arity");
  check.require(updateKey(createL).asList().elements.size() == kFig4KeyArity, "CreateL key arity");
  check.require(bindingKey(putR).asList().elements.size() == kFig4KeyArity, "PutR key arity");
  check.require(bindingKey(putL).asList().elements.size() == kFig4KeyArity, "PutL key arity");
  check.require(serialize(updateKey(createR).asList().elements[0]) == "1", "key starts with the rule id");
  check.require(createR.condition.has_value() && createL.condition.has_value(), "consistency conditions");
  check.require(bwd.defaultsRequired.size() == kFig4Placeholders, "placeholder count");
  check.require(placeholdersOf(createL) == std::set<int>{1, 2}, "placeholders ?1? ?2? in CreateL");
  check.require(tokenCount(rhsOf(*putR.cell("n"))) == 0, "PutR output has no colour token");
  const Term& stored = createR.cell("c")->asRewrite().rhs.asApply().children[2];
  check.require(serialize(stored.asList().elements[1].asList().elements[0]) == "#red",
                "CreateR stores the rule's own colour token");
  return check.done("key arity 3, priorities 50/51, 2 placeholders, cells m n s c on all four rules");
}

Outcome recovery() {
  Check check;
  CorpusCase c = corpusCase("traffic-edit");
  Definition ux = parseDefinition(readFile(c.ux));
  BxPair bx = synthesizePair(ux, c.defaults);
  Term m = readModel(ux, sourceSort(ux), c.source);
  Term n = readModel(ux, targetSort(ux), c.target);
  SyncResult r = syncForward(bx, m, n);
  check.require(r.verdict == Verdict::kSynchronized, std::string("verdict ") + verdictName(r.verdict));
  check.require(structurallyEqual(r.target, readModel(ux, targetSort(ux), *c.expected)), "differs from golden");
  std::string text = printModel(ux, r.target, targetSort(ux));
  check.require(text.find("ped -[ #blue ]> ped : Run 5 meters") != std::string::npos, "message text not updated");
  check.require(text.find("Run 10 meters") == std::string::npos, "stale message text remains");
  check.require(text.find("#orange") != std::string::npos, "custom colour lost");
  return check.done("`Run 10 meters` became `Run 5 meters`, #blue and #orange kept, golden exact");
}

Outcome certificates(const std::vector<Loaded>& corpus) {
  Check check;
  auto start = std::chrono::steady_clock::now();
  std::size_t accepted = 0, emitted = 0, rejected = 0, mutants = 0;
  std::set<std::string> classes;
  auto certify = [&](const Definition& def, const Trace& trace, const std::string& what) {
    Certificate cert = readCertificate(writeCertificate(makeCertificate(def, trace)));
    ++emitted;
    CheckResult r = checkCertificate(def, cert);
    check.require(r.accepted, what + ": " + r.reason + " " + r.detail);
    accepted += r.accepted;
    for (std::size_t k = 0; k < cert.steps.size(); ++k) {
      for (const auto& m : mutantsAt(def, cert, k)) {
        CheckResult mr = checkCertificate(def, readCertificate(writeCertificate(m.cert)));
        ++mutants;
        classes.insert(m.kind);
        bool ok = rejectsAsExpected(m, mr);
        rejected += ok;
        check.require(ok, what + ": " + m.kind + " at step " + std::to_string(k) + " gave " + mr.reason + " at " +
                              std::to_string(mr.step));
      }
    }
  };
  for (const auto& l : corpus) {
    certify(l.ux, execute(l.ux, initialState(l.ux, l.m)), l.c.name + " ux");
    SyncResult s = syncForward(l.bx, l.m, l.n);
    certify(l.bx.bwd, s.traces.at(0), l.c.name + " putl");
    certify(l.bx.fwd, s.traces.at(1), l.c.name + " putr");
    SyncResult b = syncBackward(l.bx, l.m, l.n);
    certify(l.bx.fwd, b.traces.at(0), l.c.name + " putr (backward sync)");
    certify(l.bx.bwd, b.traces.at(1), l.c.name + " putl (backward sync)");
  }
  double t = since(start);
  check.require(classes.size() == 6, "only " + std::to_string(classes.size()) + " mutation classes exercised");
  check.require(t < kCertBudgetMs, "took " + ms(t));
  return check.done(std::to_string(accepted) + "/" + std::to_string(emitted) + " accepted, " +
                    std::to_string(rejected) + "/" + std::to_string(mutants) + " mutants rejected at their step (" +
                    std::to_string(classes.size()) + " classes), " + ms(t) + " < " + ms(kCertBudgetMs));
}

Outcome detection(const std::vector<Loaded>& corpus) {
  Check check;
  for (const auto& l : corpus) {
    if (l.c.expect != "Inconsistent") continue;
    ConsistencyReport rep = checkConsistency(l.bx, l.m, l.n);
    check.require(!rep.consistent, l.c.name + ": reported consistent");
    check.require(!rep.differences.empty(), l.c.name + ": no diff");
    if (rep.differences.empty()) continue;
    const Difference& d = rep.differences.front();
    check.require(d.cell == "n" && d.description.find("button ! 0") != std::string::npos,
                  l.c.name + ": first difference is `" + d.cell + ": " + d.description + "`");
    return check.done("Inconsistent, n: " + d.description);
  }
  check.require(false, "no Inconsistent case in the corpus");
  return check.done("");
}

Outcome determinism() {
  Check check;
  fs::path base = fs::temp_directory_path() / "kbx-acceptance-bench";
  fs::remove_all(base);
  std::string cli = KBX_CLI_PATH;
  std::vector<std::map<std::string, std::string>> runs;
  for (const char* run : {"a", "b"}) {
    fs::path out = base / run;
    std::string cmd = "\"" + cli + "\" bench \"" + corpusDir().string() + "\" --out \"" + out.string() + "\" > \"" +
                      (base / (std::string(run) + ".log")).string() + "\" 2>&1";
    fs::create_directories(base);
    check.require(std::system(cmd.c_str()) == 0, std::string("bench run ") + run + " failed");
    std::map<std::string, std::string> files;
    if (fs::exists(out)) {
      for (const auto& e : fs::recursive_directory_iterator(out)) {
        if (e.is_regular_file()) files[fs::relative(e.path(), out).string()] = readFile(e.path());
      }
    }
    runs.push_back(std::move(files));
  }
  std::size_t stores = 0, certs = 0, defs = 0;
  for (const auto& [name, bytes] : runs[0]) {
    stores += name.ends_with(".kbxc");
    certs += name.ends_with(".kbxp");
    defs += name.ends_with(".kbx");
  }
  check.require(stores > 0 && certs > 0 && defs > 0, "bench wrote no artifacts");
  check.require(runs[0] == runs[1], "artifacts differ between runs");
  fs::remove_all(base);
  return check.done(std::to_string(runs[0].size()) + " files byte-identical (" + std::to_string(stores) +
                    " stores, " + std::to_string(certs) + " certificates, " + std::to_string(defs) + " definitions)");
}

}  // namespace

int main() {
  std::vector<Loaded> corpus;
  try {
    corpus = loadAll();
  } catch (const std::exception& e) {
    std::cout << "corpus failed to load: " << e.what() << "\n";
    return 8;
  }
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"mirror", [&] { return mirror(corpus); }},
      {"round-trip laws", [&] { return laws(corpus); }},
      {"back-forth replay", [&] { return backForth(corpus); }},
      {"synthesized rule structure", [] { return fidelity(); }},
      {"missing-information recovery", [] { return recovery(); }},
      {"certificate soundness", [&] { return certificates(corpus); }},
      {"consistency detection", [&] { return detection(corpus); }},
      {"determinism", [] { return determinism(); }},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << "criterion " << i + 1 << " " << criteria[i].first << ": " << (o.pass ? "PASS" : "FAIL") << " ("
              << o.detail << ")\n";
  }
  return failed;
}
