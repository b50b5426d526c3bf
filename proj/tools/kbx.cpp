// kbx: parse, lint, synthesize, synchronize and certify .kbx definitions.
//
// Exit codes: 0 ok, 1 law or consistency failure, 2 usage or parse error,
// 3 defaults required.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include "kbx/certificate.hpp"
#include "kbx/corpus.hpp"
#include "kbx/synth.hpp"

namespace fs = std::filesystem;
using namespace kbx;

namespace {

constexpr int kOk = 0;
constexpr int kFailure = 1;
constexpr int kUsage = 2;
constexpr int kDefaults = 3;

struct Options {
  bool porcelain = false;
  long maxSteps = kDefaultMaxSteps;
};

int exitCodeFor(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kMissingDefault:
    case ErrorKind::kSortMismatch: return kDefaults;
    case ErrorKind::kExecutionFailed:
    case ErrorKind::kStepLimitExceeded:
    case ErrorKind::kNonGroundSideCondition:
    case ErrorKind::kTypeMismatch: return kFailure;
    default: return kUsage;
  }
}

// "-" reads standard input.
std::string readInput(const std::string& path) {
  if (path == "-") {
    std::ostringstream ss;
    ss << std::cin.rdbuf();
    return ss.str();
  }
  return readFile(path);
}

Definition loadDefinition(const std::string& path) { return parseDefinition(readInput(path)); }

void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
  } else {
    writeFile(path, text);
  }
}

void printDiagnostics(const std::vector<Diagnostic>& ds, const Options& o) {
  for (const auto& d : ds) {
    std::string rules;
    for (int r : d.rules) rules += (rules.empty() ? "" : ",") + std::to_string(r);
    if (o.porcelain) {
      std::cout << "diagnostic=" << d.code << " severity=" << severityName(d.severity) << " rules=" << rules << "\n";
    } else {
      std::cout << severityName(d.severity) << ": " << d.code << " [rules " << rules << "] " << d.message << "\n";
    }
  }
}

struct PairArgs {
  std::string fwd, bwd, source, target;
};

void addPairOptions(CLI::App* cmd, PairArgs& a) {
  cmd->add_option("--fwd", a.fwd, "Forward definition")->required()->check(CLI::ExistingFile);
  cmd->add_option("--bwd", a.bwd, "Backward definition")->required()->check(CLI::ExistingFile);
  cmd->add_option("--source", a.source, "Source model")->required()->check(CLI::ExistingFile);
  cmd->add_option("--target", a.target, "Target model")->required()->check(CLI::ExistingFile);
}

struct LoadedPair {
  BxPair bx;
  Term m, n;
};

LoadedPair loadPair(const PairArgs& a, const Options& o) {
  LoadedPair p{{loadDefinition(a.fwd), loadDefinition(a.bwd), o.maxSteps}, {}, {}};
  if (!p.bx.bwd.defaultsRequired.empty()) {
    throw Error(ErrorKind::kMissingDefault, a.bwd + " still contains placeholders");
  }
  p.m = readModel(p.bx.fwd, sourceSort(p.bx.fwd), a.source);
  p.n = readModel(p.bx.fwd, targetSort(p.bx.fwd), a.target);
  return p;
}

// --- subcommands --------------------------------------------------------------

int cmdParse(const std::string& def, const std::string& model, const std::string& sort, const Options& o) {
  Definition d = loadDefinition(def);
  if (model.empty()) {
    std::cout << printDefinition(d);
    return kOk;
  }
  std::string s = sort.empty() ? sourceSort(d) : sort;
  Term t = parseModel(d, s, readInput(model));
  if (o.porcelain) {
    std::cout << "term=" << serialize(t) << "\n";
  } else {
    std::cout << serialize(t) << "\n";
  }
  return kOk;
}

int cmdLint(const std::string& def, const Options& o) {
  Definition d = loadDefinition(def);
  auto ds = lintDefinition(d);
  printDiagnostics(ds, o);
  return hasErrors(ds) ? kDefaults : kOk;
}

int cmdSynth(const std::string& in, const std::string& defaults, const std::string& outDir, const Options& o) {
  Definition ux = loadDefinition(in);
  printDiagnostics(lintDefinition(ux), o);
  Definition fwd = synthesizeForward(ux);
  Definition bwd = synthesizeBackward(ux);
  if (!defaults.empty()) bwd = applyDefaults(bwd, parseDefaults(readFile(defaults)));
  fs::path dir(outDir);
  writeFile(dir / "forward.kbx", printDefinition(fwd));
  writeFile(dir / "backward.kbx", printDefinition(bwd));
  bool pending = !bwd.defaultsRequired.empty();
  if (pending) writeFile(dir / "defaults.template.kbxd", defaultsTemplate(ux));
  if (o.porcelain) {
    std::cout << "forward=" << (dir / "forward.kbx").string() << "\nbackward=" << (dir / "backward.kbx").string()
              << "\ndefaults_required=" << bwd.defaultsRequired.size() << "\n";
  } else if (pending) {
    std::cerr << bwd.defaultsRequired.size() << " placeholder(s) need defaults; see "
              << (dir / "defaults.template.kbxd").string() << "\n";
  }
  return pending ? kDefaults : kOk;
}

int cmdSynthBackward(const std::string& in, const std::string& defaults, const std::string& out,
                     const std::string& templatePath) {
  Definition ux = loadDefinition(in);
  Definition bwd = synthesizeBackward(ux);
  if (!defaults.empty()) bwd = applyDefaults(bwd, parseDefaults(readFile(defaults)));
  emit(out, printDefinition(bwd));
  if (bwd.defaultsRequired.empty()) return kOk;
  if (!templatePath.empty()) writeFile(templatePath, defaultsTemplate(ux));
  std::cerr << bwd.defaultsRequired.size() << " placeholder(s) need defaults\n";
  return kDefaults;
}

int cmdSync(const PairArgs& a, const std::string& direction, std::string store, const std::string& certs,
            const std::string& output, const Options& o) {
  LoadedPair p = loadPair(a, o);
  bool forward = direction == "fwd";
  SyncResult r = forward ? syncForward(p.bx, p.m, p.n) : syncBackward(p.bx, p.m, p.n);
  if (r.verdict == Verdict::kFailed) {
    std::cout << (o.porcelain ? "verdict=Failed\nreason=" : "Failed: ") << r.reason << "\n";
    return kFailure;
  }
  if (store.empty()) store = a.target + ".kbxc";
  writeFile(store, serialize(r.store) + "\n");
  if (!certs.empty()) {
    const char* names[2][2] = {{"1-putr.kbxp", "2-putl.kbxp"}, {"1-putl.kbxp", "2-putr.kbxp"}};
    const Definition* defs[2][2] = {{&p.bx.fwd, &p.bx.bwd}, {&p.bx.bwd, &p.bx.fwd}};
    for (std::size_t i = 0; i < r.traces.size(); ++i) {
      writeFile(fs::path(certs) / names[forward][i], writeCertificate(makeCertificate(*defs[forward][i], r.traces[i])));
    }
  }
  const Definition& def = p.bx.fwd;
  std::string text = forward ? modelText(def, r.target, targetSort(def)) : modelText(def, r.source, sourceSort(def));
  if (!output.empty()) writeFile(output, text);
  if (o.porcelain) {
    std::cout << "verdict=" << verdictName(r.verdict) << "\nstore=" << store << "\n";
  } else {
    std::cout << verdictName(r.verdict) << "\n";
    if (output.empty()) std::cout << text;
  }
  return kOk;
}

int cmdCheck(const PairArgs& a, const Options& o) {
  LoadedPair p = loadPair(a, o);
  ConsistencyReport r = checkConsistency(p.bx, p.m, p.n);
  if (o.porcelain) {
    std::cout << "verdict=" << (r.consistent ? "Consistent" : "Inconsistent") << "\n";
    for (const auto& d : r.differences) std::cout << "diff=" << d.cell << ": " << d.description << "\n";
    if (!r.reason.empty()) std::cout << "reason=" << r.reason << "\n";
  } else {
    std::cout << (r.consistent ? "Consistent" : "Inconsistent") << "\n";
    for (const auto& d : r.differences) std::cout << "  " << d.cell << ": " << d.description << "\n";
    if (!r.reason.empty()) std::cout << "  " << r.reason << "\n";
  }
  return r.consistent ? kOk : kFailure;
}

int cmdRoundtrip(const PairArgs& a, const Options& o) {
  LoadedPair p = loadPair(a, o);
  bool all = true;
  for (const auto& law : roundtripTest(p.bx, p.m, p.n)) {
    all = all && law.pass;
    if (o.porcelain) {
      std::cout << "law=" << law.law << " store=" << law.store << " pass=" << (law.pass ? "true" : "false") << "\n";
    } else {
      std::cout << law.law << " (" << law.store << " store): " << (law.pass ? "pass" : "FAIL " + law.detail) << "\n";
    }
  }
  return all ? kOk : kFailure;
}

int cmdRun(const std::string& def, const std::string& model, const std::string& cert, const Options& o) {
  Definition d = loadDefinition(def);
  Term m = parseModel(d, sourceSort(d), readInput(model));
  Trace t = execute(d, initialState(d, m), o.maxSteps);
  if (!cert.empty()) writeFile(cert, writeCertificate(makeCertificate(d, t)));
  const Term& out = t.final().at(d.configuration.output().name);
  if (o.porcelain) {
    std::cout << "steps=" << t.steps.size() << "\noutput=" << serialize(out) << "\n";
  } else {
    std::cout << modelText(d, out, targetSort(d));
  }
  return kOk;
}

int cmdCheckCert(const std::string& def, const std::string& cert, const Options& o) {
  Definition d = loadDefinition(def);
  CheckResult r = checkCertificate(d, readCertificate(readFile(cert)));
  if (o.porcelain) {
    std::cout << "verdict=" << (r.accepted ? "Accepted" : "Rejected") << "\nreason=" << r.reason
              << "\nstep=" << r.step << "\n";
  } else if (r.accepted) {
    std::cout << "Accepted\n";
  } else {
    std::cout << "Rejected: " << r.reason << (r.step >= 0 ? " at step " + std::to_string(r.step + 1) : "") << " ("
              << r.detail << ")\n";
  }
  return r.accepted ? kOk : kFailure;
}

int cmdBench(const std::string& dir, const std::string& out, const Options& o) {
  auto cases = loadCorpus(dir);
  std::optional<fs::path> outDir;
  if (!out.empty()) outDir = fs::path(out);
  bool all = true;
  if (!o.porcelain) std::cout << std::left << std::setw(20) << "case" << std::setw(6) << "pass" << std::setw(8) << "steps" << "ms\n";
  for (const auto& c : cases) {
    CaseReport r = runCase(c, o.maxSteps, outDir);
    all = all && r.pass;
    if (o.porcelain) {
      std::cout << "case=" << r.name << " pass=" << (r.pass ? "true" : "false") << " steps=" << r.steps << "\n";
    } else {
      std::cout << std::left << std::setw(20) << r.name << std::setw(6) << (r.pass ? "yes" : "NO") << std::setw(8)
                << r.steps << std::fixed << std::setprecision(1) << r.millis << "\n";
    }
    for (const auto& f : r.failures) std::cout << "  " << f << "\n";
  }
  return all ? kOk : kFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kbx: bidirectional transformations from unidirectional rewrite rules"};
  app.require_subcommand(1);
  app.fallthrough();
  Options o;
  if (const char* env = std::getenv("KBX_MAX_STEPS")) {
    try {
      o.maxSteps = std::stol(env);
    } catch (const std::exception&) {
      std::cerr << "KBX_MAX_STEPS must be an integer\n";
      return kUsage;
    }
  }
  app.add_flag("--porcelain", o.porcelain, "Machine-readable key=value output");
  app.add_option("--max-steps", o.maxSteps, "Step limit per execution (default from KBX_MAX_STEPS or 100000)")
      ->check(CLI::PositiveNumber);

  std::string def, model, sort, out, defaults, cert, direction = "fwd", store, certs, dir, tmpl;
  PairArgs pair;
  std::function<int()> run;

  auto* parse = app.add_subcommand("parse", "Parse a definition (and optionally a model)");
  parse->add_option("definition", def)->required();
  parse->add_option("--model", model, "Model file to parse");
  parse->add_option("--sort", sort, "Model sort (default: the $PGM sort)");
  parse->callback([&] { run = [&] { return cmdParse(def, model, sort, o); }; });

  auto* lint = app.add_subcommand("lint", "Report overlaps and remaining placeholders");
  lint->add_option("definition", def)->required();
  lint->callback([&] { run = [&] { return cmdLint(def, o); }; });

  auto* synth = app.add_subcommand("synth", "Write forward.kbx, backward.kbx and a defaults template");
  synth->add_option("definition", def)->required();
  synth->add_option("--defaults", defaults, "Defaults file for backward placeholders")->check(CLI::ExistingFile);
  synth->add_option("-o,--out", out, "Output directory")->required();
  synth->callback([&] { run = [&] { return cmdSynth(def, defaults, out, o); }; });

  auto* sf = app.add_subcommand("synth-forward", "Synthesize the forward definition");
  sf->add_option("definition", def)->required();
  sf->add_option("-o,--out", out, "Output file (default: standard output)");
  sf->callback([&] { run = [&] { emit(out, printDefinition(synthesizeForward(loadDefinition(def)))); return kOk; }; });

  auto* sb = app.add_subcommand("synth-backward", "Synthesize the backward definition");
  sb->add_option("definition", def)->required();
  sb->add_option("--defaults", defaults, "Defaults file for backward placeholders")->check(CLI::ExistingFile);
  sb->add_option("-o,--out", out, "Output file (default: standard output)");
  sb->add_option("--template", tmpl, "Write a defaults template here when placeholders remain");
  sb->callback([&] { run = [&] { return cmdSynthBackward(def, defaults, out, tmpl); }; });

  auto* sync = app.add_subcommand("sync", "Synchronize a source/target pair");
  addPairOptions(sync, pair);
  sync->add_option("--direction", direction, "fwd propagates the source, bwd the target")
      ->check(CLI::IsMember({"fwd", "bwd"}));
  sync->add_option("--store", store, "Store file (default: <target>.kbxc)");
  sync->add_option("--emit-certs", certs, "Directory for execution certificates");
  sync->add_option("--output", out, "Write the updated model here");
  sync->callback([&] { run = [&] { return cmdSync(pair, direction, store, certs, out, o); }; });

  auto* check = app.add_subcommand("check", "Check a source/target pair for consistency");
  addPairOptions(check, pair);
  check->callback([&] { run = [&] { return cmdCheck(pair, o); }; });

  auto* rt = app.add_subcommand("roundtrip", "Check the round-tripping laws on a pair");
  addPairOptions(rt, pair);
  rt->callback([&] { run = [&] { return cmdRoundtrip(pair, o); }; });

  auto* exec = app.add_subcommand("run", "Execute a definition on a model");
  exec->add_option("definition", def)->required();
  exec->add_option("model", model)->required();
  exec->add_option("--cert", cert, "Write an execution certificate");
  exec->callback([&] { run = [&] { return cmdRun(def, model, cert, o); }; });

  auto* cc = app.add_subcommand("check-cert", "Check an execution certificate");
  cc->add_option("definition", def)->required();
  cc->add_option("certificate", cert)->required()->check(CLI::ExistingFile);
  cc->callback([&] { run = [&] { return cmdCheckCert(def, cert, o); }; });

  auto* bench = app.add_subcommand("bench", "Run every corpus case");
  bench->add_option("corpus", dir)->required();
  bench->add_option("--out", out, "Write synthesized definitions, stores and certificates here");
  bench->callback([&] { run = [&] { return cmdBench(dir, out, o); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }
  try {
    return run();
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exitCodeFor(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
}
