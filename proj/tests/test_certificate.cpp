#include <doctest.h>

#include "kbx/certificate.hpp"
#include "mutants.hpp"
#include "support.hpp"

using namespace kbx;

namespace {

struct Run {
  Definition def;
  Certificate cert;
};

std::vector<Run> corpusRuns() {
  std::vector<Run> out;
  for (const char* name : {"fig4", "traffic", "family"}) {
    Definition ux = kbx::test::uxOf(name);
    BxPair bx = kbx::test::pairOf(name);
    Term m = kbx::test::sourceOf(name);
    Term n = kbx::test::targetOf(name);
    out.push_back({ux, makeCertificate(ux, execute(ux, initialState(ux, m)))});
    out.push_back({bx.fwd, makeCertificate(bx.fwd, putr(bx, m, kbx::test::emptyMap()).trace)});
    out.push_back({bx.bwd, makeCertificate(bx.bwd, putl(bx, n, kbx::test::emptyMap()).trace)});
  }
  return out;
}

}  // namespace

TEST_CASE("sha256 of known inputs") {
  CHECK(sha256Hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256Hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("a one-step run names its rule") {
  Definition def = parseDefinition(kbx::test::kFig4);
  Trace t = execute(def, initialState(def, parseModel(def, "HCSP", "log(\"a\"); x := 1")));
  Certificate cert = makeCertificate(def, t);
  REQUIRE(cert.steps.size() == 1);
  CHECK(cert.steps[0].ruleId == 1);
  std::string text = writeCertificate(cert);
  CHECK(text.rfind("KBXCERT 1 sha256:" + definitionDigest(def) + "\n", 0) == 0);
  CHECK(text.find("\nstep 1\n") != std::string::npos);
  CHECK(text.substr(text.size() - 4) == "end\n");
  CHECK(checkCertificate(def, cert).accepted);
}

TEST_CASE("a zero-step run certifies the initial state") {
  Definition def = parseDefinition(kbx::test::kFig4);
  Certificate cert = makeCertificate(def, execute(def, initialState(def, Term())));
  CHECK(cert.steps.empty());
  CheckResult r = checkCertificate(def, readCertificate(writeCertificate(cert)));
  CHECK(r.accepted);
  CHECK(r.reason == "Accepted");
}

TEST_CASE("a final state that still admits a rule is rejected") {
  Definition def = parseDefinition(kbx::test::kFig4);
  State s = initialState(def, parseModel(def, "HCSP", "log(\"a\"); x := 1"));
  Certificate cert = makeCertificate(def, Trace{s, {}});
  CheckResult r = checkCertificate(def, cert);
  CHECK_FALSE(r.accepted);
  CHECK(r.reason == "NotFinal");
  CHECK(r.step == 0);
}

TEST_CASE("certificates are stable bytes and survive a text round trip") {
  for (const auto& run : corpusRuns()) {
    std::string text = writeCertificate(run.cert);
    CHECK(writeCertificate(readCertificate(text)) == text);
    CHECK(checkCertificate(run.def, readCertificate(text)).accepted);
  }
}

TEST_CASE("every corpus certificate is accepted") {
  for (const auto& run : corpusRuns()) {
    CheckResult r = checkCertificate(run.def, run.cert);
    CHECK_MESSAGE(r.accepted, std::string(r.reason + " " + r.detail));
  }
}

TEST_CASE("a certificate checked against another definition is rejected") {
  auto runs = corpusRuns();
  CheckResult r = checkCertificate(runs[1].def, runs[0].cert);
  CHECK_FALSE(r.accepted);
  CHECK(r.reason == "DigestMismatch");
  CHECK(r.step == -1);
}

TEST_CASE("malformed certificate text") {
  CHECK_THROWS_AS(readCertificate(""), Error);
  CHECK_THROWS_AS(readCertificate("KBXCERT 1 sha256:00\ninitial\ncell m := (list\nend\n"), Error);
  CHECK_THROWS_AS(readCertificate("KBXCERT 1 sha256:00\ninitial\ncell m := .K\n"), Error);
}

TEST_CASE("a certificate with a cell missing is rejected") {
  auto runs = corpusRuns();
  Certificate cert = runs[0].cert;
  cert.initial.cells.pop_back();
  CheckResult r = checkCertificate(runs[0].def, cert);
  CHECK_FALSE(r.accepted);
  CHECK(r.reason == "CellSetMismatch");
}

TEST_CASE("every mutation class is rejected at the tampered step") {
  std::map<std::string, std::size_t> perClass;
  for (const auto& run : corpusRuns()) {
    for (std::size_t k = 0; k < run.cert.steps.size(); ++k) {
      for (const auto& m : kbx::test::mutantsAt(run.def, run.cert, k)) {
        CheckResult r = checkCertificate(run.def, readCertificate(writeCertificate(m.cert)));
        CAPTURE(m.kind);
        CAPTURE(k);
        CAPTURE(r.reason);
        CAPTURE(r.step);
        CHECK(kbx::test::rejectsAsExpected(m, r));
        ++perClass[m.kind];
      }
    }
  }
  CHECK(perClass.size() == 6);
  for (const auto& [kind, count] : perClass) {
    CAPTURE(kind);
    CHECK(count > 0);
  }
}

TEST_CASE("an altered substitution is an LhsMismatch") {
  Definition def = parseDefinition(kbx::test::kFig4);
  Certificate cert = makeCertificate(def, execute(def, initialState(def, parseModel(def, "HCSP", "log(\"a\"); x := 1"))));
  Substitution theta;
  for (const auto& [name, value] : cert.steps[0].theta.bindings()) {
    theta.bind(name, name == "R" ? Term::token("2") : value);
  }
  cert.steps[0].theta = theta;
  CheckResult r = checkCertificate(def, cert);
  CHECK(r.reason == "LhsMismatch");
  CHECK(r.step == 0);
}

TEST_CASE("a substitution with an extra variable is rejected") {
  Definition def = parseDefinition(kbx::test::kFig4);
  Certificate cert = makeCertificate(def, execute(def, initialState(def, parseModel(def, "HCSP", "log(\"a\"); x := 1"))));
  cert.steps[0].theta.bind("Extra", Term::token("1"));
  CheckResult r = checkCertificate(def, cert);
  CHECK(r.reason == "SubstitutionDomain");
}

TEST_CASE("choosing a less preferred rule is a PriorityViolation") {
  Definition def = parseDefinition(R"KBX(syntax A ::= "a" | "b" | "c"
configuration <k> $PGM:A </k> <o> .K </o>
rule <k> a => b </k> <o> _ => 1 </o> [priority(51)]
rule <k> a => c </k> <o> _ => 2 </o>
)KBX");
  State s = initialState(def, parseModel(def, "A", "a"));
  auto theta = matchRule(def, def.rules[0], s);
  REQUIRE(theta);
  Trace t{s, {{1, *theta, applyRule(def.rules[0], *theta, s)}}};
  CheckResult r = checkCertificate(def, makeCertificate(def, t));
  CHECK_FALSE(r.accepted);
  CHECK(r.reason == "PriorityViolation");
  CHECK(r.step == 0);
}
