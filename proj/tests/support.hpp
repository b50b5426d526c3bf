#pragma once

// Shared fixtures for the test executables.

#include <filesystem>
#include <string>

#include "kbx/corpus.hpp"
#include "kbx/definition.hpp"
#include "kbx/sync.hpp"
#include "kbx/synth.hpp"

namespace kbx::test {

inline std::filesystem::path corpusDir() { return std::filesystem::path(KBX_SOURCE_DIR) / "corpus"; }

inline CorpusCase corpusCase(const std::string& name) { return loadCase(corpusDir() / name / "case.txt"); }

inline Definition uxOf(const std::string& name) { return parseDefinition(readFile(corpusCase(name).ux)); }

inline BxPair pairOf(const std::string& name) {
  CorpusCase c = corpusCase(name);
  return synthesizePair(parseDefinition(readFile(c.ux)), c.defaults);
}

inline Term sourceOf(const std::string& name) {
  CorpusCase c = corpusCase(name);
  Definition ux = parseDefinition(readFile(c.ux));
  return readModel(ux, sourceSort(ux), c.source);
}

inline Term targetOf(const std::string& name) {
  CorpusCase c = corpusCase(name);
  Definition ux = parseDefinition(readFile(c.ux));
  return readModel(ux, targetSort(ux), c.target);
}

inline Term tok(const std::string& lexeme) { return Term::token(lexeme); }

inline Term var(const std::string& name) { return Term::variable(Variable::named(name)); }

inline Term emptyMap() { return Term::empty(EmptyKind::kMap); }

/// The log/assignment definition, kept inline so frontend tests do not depend on
/// corpus files.
inline const char* kFig4 = R"KBX(syntax HCSPStat ::= "log" "(" String ")" | Id ":=" Expr
syntax Expr ::= Int | Id
syntax HCSP ::= List{HCSPStat, ";"}
syntax Color [token]
syntax UMLStat ::= Id "-[" Color "]>" Id ":" String
syntax UML ::= List{UMLStat, ""}

configuration <m> $PGM:HCSP </m> <n sort="UML"> .K </n> <s> ped </s>

rule <m> [log(A), L := R] HCSPs:List => HCSPs </m>
     <n> UMLs:List => UMLs [P -[#red]> P : A] </n>
     <s> P </s>
)KBX";

}  // namespace kbx::test
