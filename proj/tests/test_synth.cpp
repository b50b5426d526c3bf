#include <doctest.h>

#include "kbx/builtins.hpp"
#include "kbx/synth.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace kbx;
using kbx::test::kFig4;

namespace {

const Term& cCell(const RuleDecl& rule, const std::string& name = "c") {
  const Term* t = rule.cell(name);
  REQUIRE(t != nullptr);
  return *t;
}

/// Key and value of a `Cp [K <- V]` update.
std::pair<Term, Term> updateOf(const Term& cPattern) {
  REQUIRE(cPattern.is(Term::Kind::kRewrite));
  const Term& rhs = cPattern.asRewrite().rhs;
  REQUIRE(rhs.is(Term::Kind::kApply));
  REQUIRE(rhs.asApply().production == builtin::kUpdate);
  return {rhs.asApply().children[1], rhs.asApply().children[2]};
}

/// The single explicit binding of a store pattern side.
std::pair<Term, Term> bindingOf(const Term& side) {
  REQUIRE(side.is(Term::Kind::kMap));
  REQUIRE(side.asMap().bindings.size() == 1);
  return side.asMap().bindings[0];
}

bool isAnonymous(const Term& t) {
  return t.is(Term::Kind::kVariable) && t.asVariable().kind == VarKind::kAnonymous;
}

Definition fig4() { return parseDefinition(kFig4); }

}  // namespace

TEST_CASE("addCHolder appends an empty map cell") {
  Definition def = fig4();
  ConfigurationDecl c = addCHolder(def.configuration);
  REQUIRE(c.cells.size() == 4);
  for (std::size_t i = 0; i < 3; ++i) CHECK(c.cells[i] == def.configuration.cells[i]);
  CHECK(c.cells[3].name == "c");
  CHECK(c.cells[3].initial.isEmptyValue());
  CHECK(c.cells[3].initial.is(Term::Kind::kEmpty));
  CHECK(c.cells[3].initial.asEmpty().kind == EmptyKind::kMap);
}

TEST_CASE("addCHolder picks a fresh name when c is taken") {
  ConfigurationDecl twice = addCHolder(addCHolder(fig4().configuration));
  REQUIRE(twice.cells.size() == 5);
  CHECK(twice.cells[3].name == "c");
  CHECK(twice.cells[4].name == "c0");
}

TEST_CASE("CreateR for the log/assignment rule") {
  Definition def = fig4();
  const RuleDecl& rule = def.rules[0];
  RuleInfo info = analyzeRule(rule);
  RuleDecl created = makeCreateR(rule, info, "c");
  CHECK(created.priority == 51);
  CHECK(created.cells.size() == rule.cells.size() + 1);
  for (const auto& [name, pattern] : rule.cells) CHECK(*created.cell(name) == pattern);
  const Term& c = cCell(created);
  CHECK(c.asRewrite().lhs.is(Term::Kind::kVariable));
  CHECK(c.asRewrite().lhs.asVariable().sort == "Map");
  auto [key, value] = updateOf(c);
  CHECK(key.asList().elements.size() == 1 + info.common.size());
  CHECK(key.asList().elements.size() == 3);
  CHECK(serialize(key.asList().elements[0]) == "1");
  REQUIRE(value.asList().elements.size() == 2);
  CHECK(value.asList().elements[0].asList().elements.size() == info.missR.size());
  CHECK(value.asList().elements[1].asList().elements.size() == info.missL.size());
  CHECK(value.asList().elements[1].asList().elements[0] == Term::token("#red"));
  REQUIRE(created.condition);
  CHECK(created.condition->asApply().production == builtin::kOrBool);
}

TEST_CASE("CreateR keeps rules without missing information") {
  Definition def = parseDefinition(R"KBX(syntax A ::= "a" | "b"
configuration <k> $PGM:A </k> <o> .K </o>
rule <k> X => X </k>
)KBX");
  RuleDecl created = makeCreateR(def.rules[0], analyzeRule(def.rules[0]), "c");
  CHECK(created == def.rules[0]);
  CHECK(created.priority == 50);
  CHECK_FALSE(makePutR(def.rules[0], analyzeRule(def.rules[0]), "c"));
}

TEST_CASE("CreateR conjoins an existing side condition") {
  Definition def = parseDefinition(R"KBX(syntax S ::= "n" Int
syntax T ::= "big" | "small"
configuration <k> $PGM:S </k> <o> .K </o>
rule <k> n N => .K </k> <o> _ => big </o> requires 10 <Int N
)KBX");
  RuleDecl created = makeCreateR(def.rules[0], analyzeRule(def.rules[0]), "c");
  REQUIRE(created.condition);
  CHECK(created.condition->asApply().production == builtin::kAndBool);
}

TEST_CASE("PutR turns output tokens into variables and reads the store") {
  Definition def = fig4();
  const RuleDecl& rule = def.rules[0];
  RuleInfo info = analyzeRule(rule);
  auto put = makePutR(rule, info, "c");
  REQUIRE(put);
  CHECK(put->priority == 50);
  CHECK(kbx::test::tokenCount(rhsOf(*put->cell("n"))) == kbx::test::tokenCount(rhsOf(*rule.cell("n"))) - 1);
  const Term& c = cCell(*put);
  auto [lk, lv] = bindingOf(c.asRewrite().lhs);
  auto [rk, rv] = bindingOf(c.asRewrite().rhs);
  CHECK(lk == rk);
  CHECK(lk.asList().elements.size() == 3);
  const auto& lmissR = lv.asList().elements[0].asList().elements;
  REQUIRE(lmissR.size() == 2);
  CHECK(isAnonymous(lmissR[0]));
  CHECK(isAnonymous(lmissR[1]));
  const Term& color = lv.asList().elements[1].asList().elements[0];
  REQUIRE(color.is(Term::Kind::kVariable));
  CHECK(color.asVariable().name == "C0");
  CHECK(rv.asList().elements[1] == lv.asList().elements[1]);
  CHECK(serialize(Term()) == ".K");
}

TEST_CASE("synthesizeForward orders CreateR before PutR and renumbers") {
  Definition fwd = synthesizeForward(kbx::test::uxOf("traffic"));
  Definition ux = kbx::test::uxOf("traffic");
  std::size_t withMissing = 0;
  for (const auto& r : ux.rules) withMissing += analyzeRule(r).hasMissing();
  REQUIRE(fwd.rules.size() == ux.rules.size() + withMissing);
  for (std::size_t i = 0; i < fwd.rules.size(); ++i) CHECK(fwd.rules[i].id == static_cast<int>(i + 1));
  for (std::size_t i = 0; i < ux.rules.size(); ++i) {
    CHECK(fwd.rules[i].priority == (analyzeRule(ux.rules[i]).hasMissing() ? 51 : 50));
  }
  for (std::size_t i = ux.rules.size(); i < fwd.rules.size(); ++i) CHECK(fwd.rules[i].priority == 50);
  CHECK(complementsCell(fwd) == "c");
  CHECK(parseDefinition(printDefinition(fwd)) == fwd);
}

TEST_CASE("synthesizeForward on a definition without rules adds only the store") {
  Definition def = parseDefinition("syntax A ::= \"a\"\nconfiguration <k> $PGM:A </k> <o> .K </o>\n");
  Definition fwd = synthesizeForward(def);
  CHECK(fwd.rules.empty());
  CHECK(fwd.configuration.cells.size() == 3);
  CHECK(fwd.productions == def.productions);
}

TEST_CASE("backwardRule swaps sides and is an involution") {
  for (const char* name : {"fig4", "traffic", "family"}) {
    for (const auto& rule : kbx::test::uxOf(name).rules) {
      RuleDecl back = backwardRule(rule);
      for (const auto& [cell, pattern] : rule.cells) {
        CHECK(lhsOf(*back.cell(cell)) == rhsOf(pattern));
        CHECK(rhsOf(*back.cell(cell)) == lhsOf(pattern));
      }
      CHECK(backwardRule(back) == rule);
    }
  }
}

TEST_CASE("backwardRule keeps read-only rules") {
  Definition def = parseDefinition(R"KBX(syntax A ::= "a"
configuration <k> $PGM:A </k> <o> .K </o>
rule <k> a </k> <o> X </o>
)KBX");
  CHECK(backwardRule(def.rules[0]) == def.rules[0]);
}

TEST_CASE("reverseIO exchanges input and output") {
  ConfigurationDecl c = addCHolder(fig4().configuration);
  ConfigurationDecl r = reverseIO(c);
  CHECK(r.input().name == "n");
  CHECK(r.output().name == "m");
  CHECK(r.find("n")->pgm);
  CHECK(r.find("n")->sort == "UML");
  CHECK_FALSE(r.find("m")->pgm);
  CHECK(r.find("m")->initial.isEmptyValue());
  CHECK(*r.find("s") == *c.find("s"));
  CHECK(*r.find("c") == *c.find("c"));
  CHECK(reverseIO(r) == c);
}

TEST_CASE("reverseIO with extra cells touches only input and output") {
  ConfigurationDecl c = addCHolder(kbx::test::uxOf("traffic").configuration);
  ConfigurationDecl r = reverseIO(c);
  std::size_t changed = 0;
  for (std::size_t i = 0; i < c.cells.size(); ++i) changed += !(c.cells[i] == r.cells[i]);
  CHECK(changed == 2);
  CHECK(reverseIO(r) == c);
}

TEST_CASE("CreateL captures colours and asks for defaults") {
  Definition def = fig4();
  const RuleDecl& rule = def.rules[0];
  RuleInfo info = analyzeRule(rule);
  RuleDecl created = makeCreateL(rule, info, "c");
  CHECK(created.priority == 51);
  CHECK(kbx::test::placeholdersOf(created) == std::set<int>{1, 2});
  CHECK(kbx::test::tokenCount(lhsOf(*created.cell("n"))) == 0);
  auto [key, value] = updateOf(cCell(created));
  CHECK(key.asList().elements.size() == 3);
  const auto& missR = value.asList().elements[0].asList().elements;
  REQUIRE(missR.size() == 2);
  CHECK(missR[0].asVariable().kind == VarKind::kPlaceholder);
  CHECK(missR[0].asVariable().index == 1);
  CHECK(missR[1].asVariable().index == 2);
  CHECK(value.asList().elements[1].asList().elements[0].asVariable().name == "C0");
  REQUIRE(created.condition);
}

TEST_CASE("CreateL without source-only elements has no placeholders") {
  for (const auto& rule : kbx::test::uxOf("family").rules) {
    RuleInfo info = analyzeRule(rule);
    CHECK(kbx::test::placeholdersOf(makeCreateL(rule, info, "c")).size() == info.missR.size());
  }
}

TEST_CASE("PutL moves the wildcard block to the output slot") {
  Definition def = fig4();
  RuleInfo info = analyzeRule(def.rules[0]);
  RuleDecl putR = *makePutR(def.rules[0], info, "c");
  RuleDecl putL = makePutL(putR, "c");
  CHECK(putL.priority == 50);
  auto [lk, lv] = bindingOf(cCell(putL).asRewrite().lhs);
  const auto& missR = lv.asList().elements[0].asList().elements;
  const auto& missL = lv.asList().elements[1].asList().elements;
  REQUIRE(missR.size() == 2);
  REQUIRE(missL.size() == 1);
  CHECK(missR[0].asVariable().name == "L");
  CHECK(missR[1].asVariable().name == "R");
  CHECK(isAnonymous(missL[0]));
  auto [rk, rv] = bindingOf(cCell(putL).asRewrite().rhs);
  CHECK(rv == bindingOf(cCell(putR).asRewrite().rhs).second);
  for (const auto& [cell, pattern] : putR.cells) {
    if (cell != "c") CHECK(*putL.cell(cell) == *backwardRule(putR).cell(cell));
  }
}

TEST_CASE("synthesizeBackward records the required defaults") {
  Definition bwd = synthesizeBackward(fig4());
  CHECK(bwd.configuration.input().name == "n");
  REQUIRE(bwd.rules.size() == 2);
  CHECK(bwd.rules[0].priority == 51);
  CHECK(bwd.rules[1].priority == 50);
  CHECK(bwd.defaultsRequired.size() == 2);
  CHECK(bwd.defaultsRequired.count({1, 1}) == 1);
  CHECK(bwd.defaultsRequired.count({1, 2}) == 1);
  CHECK(parseDefinition(printDefinition(bwd)) == bwd);
}

TEST_CASE("synthesizeBackward on a definition without rules reverses the configuration") {
  Definition def = parseDefinition("syntax A ::= \"a\"\nconfiguration <k> $PGM:A </k> <o> .K </o>\n");
  Definition bwd = synthesizeBackward(def);
  CHECK(bwd.rules.empty());
  CHECK(bwd.configuration.input().name == "o");
}

TEST_CASE("backward synthesis rejects conditions on source-only variables") {
  Definition def = parseDefinition(R"KBX(syntax S ::= "n" Int
syntax T ::= "big" | "small"
configuration <k> $PGM:S </k> <o> .K </o>
rule <k> n N => .K </k> <o> _ => big </o> requires 10 <Int N
)KBX");
  try {
    synthesizeBackward(def);
    FAIL("expected UnboundVariable");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kUnboundVariable);
  }
}

TEST_CASE("defaults fill every placeholder") {
  Definition bwd = synthesizeBackward(fig4());
  Definition filled = applyDefaults(bwd, parseDefaults("rule 1 ?1? := x\nrule 1 ?2? := 0\n"));
  CHECK(filled.defaultsRequired.empty());
  CHECK(kbx::test::placeholdersOf(filled.rules[0]).empty());
  CHECK_FALSE(hasErrors(lintDefinition(filled)));
}

TEST_CASE("empty defaults on a placeholder-free definition change nothing") {
  Definition bwd = synthesizeBackward(kbx::test::uxOf("family"));
  if (bwd.defaultsRequired.empty()) CHECK(applyDefaults(bwd, {}) == bwd);
  Definition fwd = synthesizeForward(fig4());
  CHECK(applyDefaults(fwd, {}) == fwd);
}

TEST_CASE("defaults errors") {
  Definition bwd = synthesizeBackward(fig4());
  SUBCASE("a missing entry is named") {
    try {
      applyDefaults(bwd, parseDefaults("rule 1 ?1? := x\n"));
      FAIL("expected MissingDefault");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::kMissingDefault);
      CHECK(std::string(e.what()).find("?2?") != std::string::npos);
    }
  }
  SUBCASE("a value of the wrong sort") {
    try {
      applyDefaults(bwd, parseDefaults("rule 1 ?1? := 5\nrule 1 ?2? := 0\n"));
      FAIL("expected SortMismatch");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::kSortMismatch);
    }
  }
  SUBCASE("malformed lines") {
    CHECK_THROWS_AS(parseDefaults("rule one ?1? := x\n"), Error);
  }
  SUBCASE("comments and blank values are skipped") {
    Defaults d = parseDefaults("// header\n\nrule 1 ?1? := \nrule 1 ?2? := 0\n");
    CHECK(d.size() == 1);
    CHECK(d.at({1, 2}) == "0");
  }
}

TEST_CASE("the defaults template lists every placeholder and pre-fills tokens") {
  std::string fig = defaultsTemplate(fig4());
  CHECK(fig.find("rule 1 ?1? :=") != std::string::npos);
  CHECK(fig.find("rule 1 ?2? :=") != std::string::npos);
  std::string traffic = defaultsTemplate(kbx::test::uxOf("traffic"));
  Definition bwd = synthesizeBackward(kbx::test::uxOf("traffic"));
  for (const auto& [key, sort] : bwd.defaultsRequired) {
    std::string line = "rule " + std::to_string(key.first) + " ?" + std::to_string(key.second) + "? :=";
    CHECK(traffic.find(line) != std::string::npos);
  }
}
