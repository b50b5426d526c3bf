#pragma once

// Corpus cases (line-oriented manifests) and the per-case benchmark run.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "kbx/sync.hpp"

namespace kbx {

std::string readFile(const std::filesystem::path& path);
void writeFile(const std::filesystem::path& path, const std::string& text);

/// Source sort (the `$PGM` cell) and target sort (the output cell) of a
/// definition; `K` when unspecified.
std::string sourceSort(const Definition& def);
std::string targetSort(const Definition& def);

/// Reads a model file under `sort` of `def`.
Term readModel(const Definition& def, const std::string& sort, const std::filesystem::path& path);

/// Prints a model followed by a newline (nothing for an empty model).
std::string modelText(const Definition& def, const Term& model, const std::string& sort);

struct CorpusCase {
  std::string name;
  std::filesystem::path ux;
  std::optional<std::filesystem::path> defaults;
  std::filesystem::path source;
  std::filesystem::path target;
  std::string expect = "Consistent";  // Consistent, Inconsistent or Synchronized
  std::optional<std::filesystem::path> expected;  // golden target for Synchronized
};

/// Parses `key = value` lines; paths are relative to the manifest.
/// Throws SyntaxError or IoError.
CorpusCase loadCase(const std::filesystem::path& manifest);

/// Every `case.txt` directly below `dir`, ordered by case name.
std::vector<CorpusCase> loadCorpus(const std::filesystem::path& dir);

/// Synthesized definitions with defaults applied. Throws MissingDefault when
/// the case has no defaults but placeholders remain.
BxPair synthesizePair(const Definition& ux, const std::optional<std::filesystem::path>& defaults,
                      long maxSteps = kDefaultMaxSteps);

struct CaseReport {
  std::string name;
  bool pass = false;
  long steps = 0;
  double millis = 0;
  std::vector<std::string> failures;
};

/// Synthesis, laws, consistency and certificate checks for one case.
/// With `outDir`, writes the synthesized definitions, store and
/// certificates below `outDir/<name>`.
CaseReport runCase(const CorpusCase& c, long maxSteps = kDefaultMaxSteps,
                   const std::optional<std::filesystem::path>& outDir = std::nullopt);

}  // namespace kbx
