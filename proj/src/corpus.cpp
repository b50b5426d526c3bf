#include "kbx/corpus.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <sstream>

#include "kbx/certificate.hpp"
#include "kbx/synth.hpp"

namespace kbx {

namespace fs = std::filesystem;

std::string readFile(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIoError, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void writeFile(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << text)) throw Error(ErrorKind::kIoError, "cannot write " + path.string());
}

std::string sourceSort(const Definition& def) {
  const std::string& s = def.configuration.input().sort;
  return s.empty() ? kSortK : s;
}

std::string targetSort(const Definition& def) {
  const std::string& s = def.configuration.output().sort;
  return s.empty() ? kSortK : s;
}

Term readModel(const Definition& def, const std::string& sort, const fs::path& path) {
  return parseModel(def, sort, readFile(path));
}

std::string modelText(const Definition& def, const Term& model, const std::string& sort) {
  std::string s = printModel(def, model, sort);
  return s.empty() ? s : s + "\n";
}

CorpusCase loadCase(const fs::path& manifest) {
  std::istringstream in(readFile(manifest));
  const fs::path base = manifest.parent_path();
  CorpusCase c;
  c.name = base.filename().string();
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorKind::kSyntaxError, manifest.string() + ":" + std::to_string(number) + ": expected key = value",
                  number);
    }
    auto trim = [](std::string s) {
      s.erase(0, s.find_first_not_of(" \t\r"));
      s.erase(s.find_last_not_of(" \t\r") + 1);
      return s;
    };
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key == "name") c.name = value;
    else if (key == "ux") c.ux = base / value;
    else if (key == "defaults") c.defaults = base / value;
    else if (key == "source") c.source = base / value;
    else if (key == "target") c.target = base / value;
    else if (key == "expect") c.expect = value;
    else if (key == "expected") c.expected = base / value;
    else throw Error(ErrorKind::kSyntaxError, manifest.string() + ": unknown key " + key, number);
  }
  if (c.ux.empty() || c.source.empty() || c.target.empty()) {
    throw Error(ErrorKind::kSyntaxError, manifest.string() + ": ux, source and target are required");
  }
  if (c.expect != "Consistent" && c.expect != "Inconsistent" && c.expect != "Synchronized") {
    throw Error(ErrorKind::kSyntaxError, manifest.string() + ": unknown expectation " + c.expect);
  }
  if (c.expect == "Synchronized" && !c.expected) {
    throw Error(ErrorKind::kSyntaxError, manifest.string() + ": Synchronized cases need `expected`");
  }
  return c;
}

std::vector<CorpusCase> loadCorpus(const fs::path& dir) {
  std::vector<CorpusCase> out;
  if (!fs::is_directory(dir)) throw Error(ErrorKind::kIoError, dir.string() + " is not a directory");
  for (const auto& entry : fs::directory_iterator(dir)) {
    fs::path manifest = entry.path() / "case.txt";
    if (entry.is_directory() && fs::exists(manifest)) out.push_back(loadCase(manifest));
  }
  std::sort(out.begin(), out.end(), [](const CorpusCase& a, const CorpusCase& b) { return a.name < b.name; });
  return out;
}

BxPair synthesizePair(const Definition& ux, const std::optional<fs::path>& defaults, long maxSteps) {
  BxPair bx{synthesizeForward(ux), synthesizeBackward(ux), maxSteps};
  if (defaults) {
    bx.bwd = applyDefaults(bx.bwd, parseDefaults(readFile(*defaults)));
  } else if (!bx.bwd.defaultsRequired.empty()) {
    bx.bwd = applyDefaults(bx.bwd, {});
  }
  return bx;
}

CaseReport runCase(const CorpusCase& c, long maxSteps, const std::optional<fs::path>& outDir) {
  CaseReport report;
  report.name = c.name;
  auto start = std::chrono::steady_clock::now();
  auto fail = [&](const std::string& what) { report.failures.push_back(what); };
  try {
    Definition ux = parseDefinition(readFile(c.ux));
    BxPair bx = synthesizePair(ux, c.defaults, maxSteps);
    if (!(parseDefinition(printDefinition(bx.fwd)) == bx.fwd)) fail("forward definition does not re-parse");
    if (!(parseDefinition(printDefinition(bx.bwd)) == bx.bwd)) fail("backward definition does not re-parse");
    Term m = readModel(ux, sourceSort(ux), c.source);
    Term n = readModel(ux, targetSort(ux), c.target);

    SyncResult sync = syncForward(bx, m, n);
    if (sync.verdict == Verdict::kFailed) fail("sync failed: " + sync.reason);
    const Definition* defs[] = {&bx.bwd, &bx.fwd};
    for (std::size_t i = 0; i < sync.traces.size(); ++i) {
      report.steps += static_cast<long>(sync.traces[i].steps.size());
      Certificate cert = makeCertificate(*defs[i], sync.traces[i]);
      CheckResult checked = checkCertificate(*defs[i], readCertificate(writeCertificate(cert)));
      if (!checked.accepted) fail("certificate rejected: " + checked.reason + " " + checked.detail);
      if (outDir) writeFile(*outDir / c.name / (i == 0 ? "putl.kbxp" : "putr.kbxp"), writeCertificate(cert));
    }
    if (outDir) {
      writeFile(*outDir / c.name / "forward.kbx", printDefinition(bx.fwd));
      writeFile(*outDir / c.name / "backward.kbx", printDefinition(bx.bwd));
      writeFile(*outDir / c.name / "store.kbxc", serialize(sync.store) + "\n");
    }

    ConsistencyReport consistency = checkConsistency(bx, m, n);
    if (c.expect == "Inconsistent") {
      if (consistency.consistent || consistency.differences.empty()) fail("expected an inconsistency with a diff");
    } else if (c.expect == "Synchronized") {
      Term golden = readModel(ux, targetSort(ux), *c.expected);
      if (sync.verdict != Verdict::kSynchronized) fail(std::string("verdict ") + verdictName(sync.verdict));
      if (serialize(sync.target) != serialize(golden)) fail("synchronized target differs from the golden file");
      if (!checkConsistency(bx, m, sync.target).consistent) fail("synchronized pair is not consistent");
    } else {
      if (!consistency.consistent) {
        fail("pair is not consistent" + (consistency.reason.empty() ? "" : ": " + consistency.reason));
      }
      if (sync.verdict != Verdict::kConsistent) fail(std::string("verdict ") + verdictName(sync.verdict));
      for (const auto& law : roundtripTest(bx, m, n)) {
        if (!law.pass) fail(law.law + " (" + law.store + " store): " + law.detail);
      }
      Trace uxTrace = execute(ux, initialState(ux, m), maxSteps);
      report.steps += static_cast<long>(uxTrace.steps.size());
      const std::string& out = ux.configuration.output().name;
      if (serialize(uxTrace.final().at(out)) != serialize(putr(bx, m, Term::empty(EmptyKind::kMap)).output)) {
        fail("forward output differs from the unidirectional output");
      }
      if (auto k = replayBackward(ux, uxTrace)) fail("backward replay fails at step " + std::to_string(*k + 1));
    }
  } catch (const std::exception& e) {
    fail(e.what());
  }
  report.pass = report.failures.empty();
  report.millis = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace kbx
