#include "kbx/synth.hpp"

#include <algorithm>
#include <regex>
#include <set>
#include <sstream>

#include "kbx/builtins.hpp"

namespace kbx {

namespace {

std::string elementKey(const Term& t) {
  if (t.is(Term::Kind::kVariable)) return "v:" + t.asVariable().name;
  return "t:" + t.asToken().lexeme;
}

std::set<std::string> ruleVariableNames(const RuleDecl& rule) {
  std::set<std::string> names;
  for (const auto& [cell, t] : rule.cells) names.merge(variableNames(t));
  if (rule.condition) names.merge(variableNames(*rule.condition));
  return names;
}

// Replaces named variables and tokens by key; rest variables are replaced
// only by variables.
Term replaceElements(const Term& t, const std::map<std::string, Term>& repl) {
  auto restOf = [&](const std::optional<Variable>& rest) -> std::optional<Variable> {
    if (!rest) return rest;
    auto it = repl.find("v:" + rest->name);
    if (it == repl.end() || !it->second.is(Term::Kind::kVariable)) return rest;
    return it->second.asVariable();
  };
  return transform(t, [&](const Term& n) -> Term {
    switch (n.kind()) {
      case Term::Kind::kVariable:
        if (n.asVariable().kind == VarKind::kAnonymous) return n;
        [[fallthrough]];
      case Term::Kind::kToken: {
        auto it = repl.find(elementKey(n));
        return it == repl.end() ? n : it->second;
      }
      case Term::Kind::kList:
        return Term::list(n.asList().elements, restOf(n.asList().rest), n.asList().position);
      case Term::Kind::kMap: return Term::map(n.asMap().bindings, restOf(n.asMap().rest));
      default: return n;
    }
  });
}

Term replaceInRule(const Term& t, const std::map<std::string, Term>& repl) { return replaceElements(t, repl); }

struct Complements {
  Variable cp;
  Term key;
};

Complements complementsKey(const RuleDecl& rule, const RuleInfo& info, std::set<std::string> taken) {
  Variable cp = taken.count("Cp") ? freshVariable("Cp", taken) : Variable::named("Cp");
  cp.sort = "Map";
  cp.annotated = true;
  std::vector<Term> key{Term::token(std::to_string(rule.id))};
  key.insert(key.end(), info.common.begin(), info.common.end());
  return {cp, Term::list(std::move(key))};
}

// Fresh variables C0, C1, ... for each token of `tokens`.
std::map<std::string, Term> tokensToVariables(const std::vector<Term>& tokens, std::set<std::string>& taken) {
  std::map<std::string, Term> out;
  for (const auto& t : tokens) {
    Variable v = freshVariable("C", taken);
    taken.insert(v.name);
    out.emplace(elementKey(t), Term::variable(v));
  }
  return out;
}

std::vector<Term> replaced(const std::vector<Term>& items, const std::map<std::string, Term>& repl) {
  std::vector<Term> out;
  for (const auto& i : items) out.push_back(replaceElements(i, repl));
  return out;
}

Term pairValue(std::vector<Term> first, std::vector<Term> second) {
  return Term::list({Term::list(std::move(first)), Term::list(std::move(second))});
}

Term consist(const Variable& cp, const Term& key, const Term& value) {
  Term lookup = Term::apply(builtin::kLookup, {Term::variable(cp), key, Term::empty(EmptyKind::kList)});
  return Term::apply(builtin::kOrBool, {Term::apply(builtin::kEqK, {lookup, Term::empty(EmptyKind::kList)}),
                                        Term::apply(builtin::kEqK, {lookup, value})});
}

Term conjoin(const std::optional<Term>& original, Term extra) {
  if (!original) return extra;
  return Term::apply(builtin::kAndBool, {*original, std::move(extra)});
}

std::vector<Term> anonymous(std::size_t n) {
  std::vector<Term> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(Term::variable(Variable::anonymous(static_cast<int>(i))));
  return out;
}

void finish(Definition& def) {
  int id = 1;
  for (auto& r : def.rules) {
    r.id = id++;
    normalizeRule(def, r);
  }
  def.refreshDefaultsRequired();
}

}  // namespace

ConfigurationDecl addCHolder(const ConfigurationDecl& config) {
  std::set<std::string> taken;
  for (const auto& c : config.cells) taken.insert(c.name);
  ConfigurationDecl out = config;
  Cell c;
  c.name = taken.count("c") ? freshVariable("c", taken).name : "c";
  c.initial = Term::empty(EmptyKind::kMap);
  out.cells.push_back(std::move(c));
  return out;
}

const std::string& complementsCell(const Definition& def) {
  if (def.configuration.cells.empty()) throw Error(ErrorKind::kNoInputCell, "empty configuration");
  return def.configuration.cells.back().name;
}

RuleDecl makeCreateR(const RuleDecl& rule, const RuleInfo& info, const std::string& cCell) {
  if (!info.hasMissing()) return rule;
  auto [cp, key] = complementsKey(rule, info, ruleVariableNames(rule));
  Term value = pairValue(info.missR, info.missL);
  RuleDecl out = rule;
  out.cells.emplace_back(cCell, Term::rewrite(Term::variable(cp), Term::apply(builtin::kUpdate,
                                                                                {Term::variable(cp), key, value})));
  out.condition = conjoin(rule.condition, consist(cp, key, value));
  out.priority = 51;
  return out;
}

std::optional<RuleDecl> makePutR(const RuleDecl& rule, const RuleInfo& info, const std::string& cCell) {
  if (!info.hasMissing()) return std::nullopt;
  std::set<std::string> taken = ruleVariableNames(rule);
  auto [cp, key] = complementsKey(rule, info, taken);
  taken.insert(cp.name);
  auto t2v = tokensToVariables(info.missL, taken);
  RuleDecl out = rule;
  for (auto& [cell, t] : out.cells) t = replaceInRule(t, t2v);
  std::vector<Term> missL = replaced(info.missL, t2v);
  Term lhs = Term::map({{key, pairValue(anonymous(info.missR.size()), missL)}}, cp);
  Term rhs = Term::map({{key, pairValue(info.missR, missL)}}, cp);
  out.cells.emplace_back(cCell, Term::rewrite(lhs, rhs));
  out.priority = 50;
  return out;
}

Definition synthesizeForward(const Definition& ux) {
  Definition out;
  out.productions = ux.productions;
  out.configuration = addCHolder(ux.configuration);
  const std::string cCell = complementsCell(out);
  std::vector<RuleInfo> infos;
  for (const auto& r : ux.rules) infos.push_back(analyzeRule(r));
  for (std::size_t i = 0; i < ux.rules.size(); ++i) out.rules.push_back(makeCreateR(ux.rules[i], infos[i], cCell));
  for (std::size_t i = 0; i < ux.rules.size(); ++i) {
    if (auto p = makePutR(ux.rules[i], infos[i], cCell)) out.rules.push_back(std::move(*p));
  }
  finish(out);
  return out;
}

RuleDecl backwardRule(const RuleDecl& rule) {
  RuleDecl out = rule;
  for (auto& [cell, t] : out.cells) {
    if (t.is(Term::Kind::kRewrite)) t = Term::rewrite(t.asRewrite().rhs, t.asRewrite().lhs);
  }
  return out;
}

ConfigurationDecl reverseIO(const ConfigurationDecl& config) {
  const std::string oldIn = config.input().name;
  const std::string oldOut = config.output().name;
  ConfigurationDecl out = config;
  for (auto& c : out.cells) {
    c.output = false;
    if (c.name == oldIn) {
      c.pgm = false;
      c.initial = Term();
    } else if (c.name == oldOut) {
      c.pgm = true;
      c.initial = Term();
    }
  }
  // Only mark the new output explicitly when the default would pick another cell.
  if (out.output().name != oldIn) {
    for (auto& c : out.cells) c.output = c.name == oldIn;
  }
  return out;
}

RuleDecl makeCreateL(const RuleDecl& rule, const RuleInfo& info, const std::string& cCell) {
  if (!info.hasMissing()) return backwardRule(rule);
  std::set<std::string> taken = ruleVariableNames(rule);
  auto [cp, key] = complementsKey(rule, info, taken);
  taken.insert(cp.name);
  auto repl = tokensToVariables(info.missL, taken);
  std::set<std::string> missRVars;
  for (std::size_t i = 0; i < info.missR.size(); ++i) {
    repl.emplace(elementKey(info.missR[i]), Term::variable(Variable::placeholder(static_cast<int>(i) + 1)));
    if (info.missR[i].is(Term::Kind::kVariable)) missRVars.insert(info.missR[i].asVariable().name);
  }
  if (rule.condition) {
    for (const auto& name : variableNames(*rule.condition)) {
      if (missRVars.count(name)) {
        throw Error(ErrorKind::kUnboundVariable, "rule " + std::to_string(rule.id) + ": condition variable " +
                                                     name + " is not bound by the backward rule");
      }
    }
  }
  RuleDecl out = backwardRule(rule);
  for (auto& [cell, t] : out.cells) t = replaceInRule(t, repl);
  Term value = pairValue(replaced(info.missR, repl), replaced(info.missL, repl));
  out.cells.emplace_back(cCell, Term::rewrite(Term::variable(cp), Term::apply(builtin::kUpdate,
                                                                                {Term::variable(cp), key, value})));
  out.condition = conjoin(rule.condition, consist(cp, key, value));
  out.priority = 51;
  return out;
}

RuleDecl makePutL(const RuleDecl& putR, const std::string& cCell) {
  RuleDecl out = backwardRule(putR);
  for (auto& [cell, t] : out.cells) {
    if (cell != cCell) continue;
    // putR stores [missR, missL'] on its right; read it back with the wildcard moved.
    const MapTerm& stored = putR.cell(cCell)->asRewrite().rhs.asMap();
    const auto& [key, value] = stored.bindings.front();
    const auto& parts = value.asList().elements;
    std::vector<Term> missR = parts.at(0).is(Term::Kind::kList) ? parts[0].asList().elements : std::vector<Term>{};
    std::vector<Term> missL = parts.at(1).is(Term::Kind::kList) ? parts[1].asList().elements : std::vector<Term>{};
    Term lhs = Term::map({{key, pairValue(missR, anonymous(missL.size()))}}, stored.rest);
    Term rhs = Term::map({{key, pairValue(missR, missL)}}, stored.rest);
    t = Term::rewrite(lhs, rhs);
  }
  return out;
}

Definition synthesizeBackward(const Definition& ux) {
  Definition out;
  out.productions = ux.productions;
  out.configuration = addCHolder(reverseIO(ux.configuration));
  const std::string cCell = complementsCell(out);
  std::vector<RuleInfo> infos;
  for (const auto& r : ux.rules) infos.push_back(analyzeRule(r));
  for (std::size_t i = 0; i < ux.rules.size(); ++i) out.rules.push_back(makeCreateL(ux.rules[i], infos[i], cCell));
  for (std::size_t i = 0; i < ux.rules.size(); ++i) {
    if (auto p = makePutR(ux.rules[i], infos[i], cCell)) out.rules.push_back(makePutL(*p, cCell));
  }
  finish(out);
  return out;
}

Defaults parseDefaults(const std::string& text) {
  static const std::regex line(R"(^\s*rule\s+(\d+)\s+\?(\d+)\?\s*:=\s*(.*?)\s*$)");
  Defaults out;
  std::istringstream in(text);
  std::string raw;
  int number = 0;
  while (std::getline(in, raw)) {
    ++number;
    auto comment = raw.find("//");
    std::string s = raw;
    // Keep `//` inside string literals.
    if (comment != std::string::npos && std::count(raw.begin(), raw.begin() + comment, '"') % 2 == 0) {
      s = raw.substr(0, comment);
    }
    if (s.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::smatch m;
    if (!std::regex_match(s, m, line)) {
      throw Error(ErrorKind::kSyntaxError, "defaults line " + std::to_string(number) + ": expected `rule <id> ?<n>? := <value>`",
                  number);
    }
    if (m[3].str().empty()) continue;
    out[{std::stoi(m[1]), std::stoi(m[2])}] = m[3];
  }
  return out;
}

Definition applyDefaults(const Definition& def, const Defaults& defaults) {
  Definition out = def;
  const Signature& sig = def.signature();
  for (auto& r : out.rules) {
    std::map<std::string, Term> repl;
    for (const auto& [slot, sort] : def.defaultsRequired) {
      if (slot.first != r.id) continue;
      auto it = defaults.find(slot);
      std::string where = "rule " + std::to_string(slot.first) + " ?" + std::to_string(slot.second) + "?";
      if (it == defaults.end()) throw Error(ErrorKind::kMissingDefault, where + " (" + sort + ") has no default");
      Term value;
      try {
        value = parseModel(def, sort, it->second);
      } catch (const Error& e) {
        throw Error(ErrorKind::kSortMismatch, where + ": `" + it->second + "` is not a " + sort + ": " + e.what());
      }
      if (!sig.admits(sort, value)) {
        throw Error(ErrorKind::kSortMismatch, where + ": `" + it->second + "` is not a " + sort);
      }
      repl.emplace("v:" + Variable::placeholder(slot.second).name, value);
    }
    if (repl.empty()) continue;
    for (auto& [cell, t] : r.cells) t = replaceInRule(t, repl);
    if (r.condition) r.condition = replaceInRule(*r.condition, repl);
  }
  out.refreshDefaultsRequired();
  return out;
}

std::string defaultsTemplate(const Definition& ux) {
  Definition bwd = synthesizeBackward(ux);
  std::string out;
  for (const auto& r : ux.rules) {
    RuleInfo info = analyzeRule(r);
    for (std::size_t i = 0; i < info.missR.size(); ++i) {
      int index = static_cast<int>(i) + 1;
      const Term& e = info.missR[i];
      auto sort = bwd.defaultsRequired.find({r.id, index});
      std::string sortName = sort == bwd.defaultsRequired.end() ? std::string(kSortK) : sort->second;
      std::string what = e.is(Term::Kind::kVariable) ? e.asVariable().name : e.asToken().lexeme;
      out += "// " + what + " : " + sortName + "\n";
      out += "rule " + std::to_string(r.id) + " ?" + std::to_string(index) + "? := ";
      if (e.is(Term::Kind::kToken)) out += e.asToken().lexeme;
      out += "\n";
    }
  }
  return out;
}

}  // namespace kbx
