#include "kbx/certificate.hpp"

#include <openssl/evp.h>

#include <iomanip>
#include <set>
#include <sstream>

#include "kbx/builtins.hpp"
#include "kbx/match.hpp"

namespace kbx {

std::string sha256Hex(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorKind::kIoError, "sha256 failed");
  }
  std::ostringstream out;
  for (unsigned int i = 0; i < length; ++i) out << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return out.str();
}

std::string definitionDigest(const Definition& def) { return sha256Hex(printDefinition(def)); }

namespace {

std::string cellLines(const State& s) {
  std::string out;
  for (const auto& [name, t] : s.cells) out += "cell " + name + " := " + serialize(t) + "\n";
  return out;
}

}  // namespace

std::string stateDigest(const State& state) { return sha256Hex(cellLines(state)); }

Certificate makeCertificate(const Definition& def, const Trace& trace) {
  Certificate cert;
  cert.digest = definitionDigest(def);
  cert.initial = trace.initial;
  const State* prev = &trace.initial;
  for (const auto& s : trace.steps) {
    cert.steps.push_back({s.ruleId, stateDigest(*prev), s.theta, s.next});
    prev = &s.next;
  }
  return cert;
}

std::string writeCertificate(const Certificate& cert) {
  std::string out = "KBXCERT 1 sha256:" + cert.digest + "\ninitial\n" + cellLines(cert.initial);
  for (const auto& s : cert.steps) {
    out += "step " + std::to_string(s.ruleId) + "\nfrom sha256:" + s.from + "\n";
    for (const auto& [name, t] : s.theta.bindings()) out += "var " + name + " := " + serialize(t) + "\n";
    out += "next\n" + cellLines(s.next);
  }
  return out + "end\n";
}

Certificate readCertificate(const std::string& text) {
  Certificate cert;
  std::istringstream in(text);
  std::string line;
  int number = 0;
  auto fail = [&](const std::string& msg) { throw Error(ErrorKind::kSyntaxError, "certificate line " + std::to_string(number) + ": " + msg, number); };
  auto next = [&]() -> bool {
    while (std::getline(in, line)) {
      ++number;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty()) return true;
    }
    return false;
  };
  auto binding = [&](const std::string& prefix) -> std::pair<std::string, Term> {
    auto sep = line.find(" := ");
    if (line.rfind(prefix, 0) != 0 || sep == std::string::npos) fail("expected `" + prefix + "<name> := <term>`");
    return {line.substr(prefix.size(), sep - prefix.size()), parseCanonical(line.substr(sep + 4))};
  };
  auto readCells = [&](State& s) {
    while (next() && line.rfind("cell ", 0) == 0) {
      auto [name, t] = binding("cell ");
      s.cells.emplace_back(name, t);
    }
  };

  if (!next() || line.rfind("KBXCERT 1 sha256:", 0) != 0) fail("expected `KBXCERT 1 sha256:<digest>`");
  cert.digest = line.substr(17);
  if (!next() || line != "initial") fail("expected `initial`");
  readCells(cert.initial);
  while (line != "end") {
    if (line.rfind("step ", 0) != 0) fail("expected `step <id>` or `end`");
    CertStep s;
    try {
      s.ruleId = std::stoi(line.substr(5));
    } catch (const std::exception&) {
      fail("bad rule id");
    }
    if (!next() || line.rfind("from sha256:", 0) != 0) fail("expected `from sha256:<digest>`");
    s.from = line.substr(12);
    while (next() && line.rfind("var ", 0) == 0) {
      auto [name, t] = binding("var ");
      s.theta.bind(name, t);
    }
    if (line != "next") fail("expected `next`");
    readCells(s.next);
    cert.steps.push_back(std::move(s));
    if (in.eof() && line != "end") fail("missing `end`");
  }
  return cert;
}

namespace {

bool sameValue(const Term& a, const Term& b) { return serialize(a) == serialize(b); }

bool sameCells(const State& a, const State& b) {
  if (a.cells.size() != b.cells.size()) return false;
  for (std::size_t i = 0; i < a.cells.size(); ++i) {
    if (a.cells[i].first != b.cells[i].first) return false;
  }
  return true;
}

const Term* cellOf(const State& s, const std::string& name) {
  for (const auto& [n, t] : s.cells) {
    if (n == name) return &t;
  }
  return nullptr;
}

bool conditionHolds(const RuleDecl& r, const Substitution& theta) {
  return !r.condition || builtin::isTrue(builtin::evalBuiltin(*r.condition, theta));
}

bool applicable(const Definition& def, const RuleDecl& r, const State& s) {
  std::vector<MatchTask> tasks;
  for (const auto& [cell, pattern] : r.cells) {
    const Term* subject = cellOf(s, cell);
    if (!subject) return false;
    tasks.push_back({lhsOf(pattern), *subject});
  }
  bool found = false;
  forEachMatch(tasks, Substitution{}, def.signature(), [&](const Substitution& theta) {
    found = conditionHolds(r, theta);
    return !found;
  });
  return found;
}

}  // namespace

CheckResult checkCertificate(const Definition& def, const Certificate& cert) {
  auto reject = [](long step, std::string reason, std::string detail) {
    return CheckResult{false, step, std::move(reason), std::move(detail)};
  };
  if (cert.digest != definitionDigest(def)) return reject(-1, "DigestMismatch", "definition digest differs");
  State expected;
  for (const auto& c : def.configuration.cells) expected.cells.emplace_back(c.name, Term());
  if (!sameCells(cert.initial, expected)) return reject(-1, "CellSetMismatch", "initial state cells differ");

  const Signature& sig = def.signature();
  const State* current = &cert.initial;
  for (std::size_t i = 0; i < cert.steps.size(); ++i) {
    const CertStep& s = cert.steps[i];
    long at = static_cast<long>(i);
    try {
      if (s.from != stateDigest(*current)) return reject(at, "ChainBreak", "predecessor digest differs");
      if (!sameCells(s.next, expected)) return reject(at, "CellSetMismatch", "state cells differ");
      const RuleDecl* r = def.rule(s.ruleId);
      if (!r) return reject(at, "UnknownRule", "rule " + std::to_string(s.ruleId));

      std::map<std::string, Variable> lhsVars;
      for (const auto& [cell, pattern] : r->cells) {
        for (const auto& v : variablesOf(lhsOf(pattern))) lhsVars.emplace(v.name, v);
      }
      if (lhsVars.size() != s.theta.size()) return reject(at, "SubstitutionDomain", "domain differs from left-hand variables");
      for (const auto& [name, value] : s.theta.bindings()) {
        auto v = lhsVars.find(name);
        if (v == lhsVars.end()) return reject(at, "SubstitutionDomain", name + " is not a left-hand variable");
        if (!value.isGround() || !sig.admits(v->second.sort, value)) {
          return reject(at, "SubstitutionDomain", name + " is bound outside its sort");
        }
      }
      for (const auto& [cell, pattern] : r->cells) {
        const Term* now = cellOf(*current, cell);
        if (!now || !sameValue(builtin::evaluate(substitute(lhsOf(pattern), s.theta)), *now)) {
          return reject(at, "LhsMismatch", "cell " + cell);
        }
      }
      if (!conditionHolds(*r, s.theta)) return reject(at, "SideCondition", "condition is false");
      for (const auto& [name, value] : s.next.cells) {
        const Term* pattern = r->cell(name);
        if (pattern && pattern->is(Term::Kind::kRewrite)) {
          Term rhs = builtin::evaluate(substitute(rhsOf(*pattern), s.theta));
          if (!sameValue(rhs, value)) return reject(at, "RhsMismatch", "cell " + name);
        } else if (!sameValue(*cellOf(*current, name), value)) {
          return reject(at, "FrameViolation", "cell " + name + " changed without a rewrite");
        }
      }
      for (const auto& other : def.rules) {
        if (std::make_pair(other.priority, other.id) >= std::make_pair(r->priority, r->id)) continue;
        if (applicable(def, other, *current)) {
          return reject(at, "PriorityViolation", "rule " + std::to_string(other.id) + " applies first");
        }
      }
    } catch (const Error& e) {
      return reject(at, "Malformed", e.what());
    }
    current = &s.next;
  }
  long last = static_cast<long>(cert.steps.size());
  try {
    for (const auto& r : def.rules) {
      if (applicable(def, r, *current)) return reject(last, "NotFinal", "rule " + std::to_string(r.id) + " still applies");
    }
  } catch (const Error& e) {
    return reject(last, "Malformed", e.what());
  }
  return {true, -1, "Accepted", {}};
}

}  // namespace kbx
