#include "kbx/grammar.hpp"

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <unordered_map>
#include <unordered_set>

namespace kbx::grammar {

namespace {

bool identStart(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool identChar(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

bool isIdentifier(const std::string& s) {
  if (s.empty() || !identStart(s[0])) return false;
  return std::all_of(s.begin(), s.end(), identChar);
}

}  // namespace

std::vector<Lexeme> lex(std::string_view text, const LexOptions& options, int lineBase,
                        long offsetBase) {
  std::vector<std::string> punct;
  for (const auto& l : options.literals) {
    if (!l.empty() && !isIdentifier(l)) punct.push_back(l);
  }
  std::sort(punct.begin(), punct.end(),
            [](const std::string& a, const std::string& b) { return a.size() > b.size(); });

  std::vector<Lexeme> out;
  int line = lineBase;
  std::size_t i = 0;
  auto fail = [&](const std::string& what) {
    throw Error(ErrorKind::kSyntaxError, what, line, offsetBase + static_cast<long>(i));
  };
  while (i < text.size()) {
    char c = text[i];
    if (c == '\n') {
      ++line;
      ++i;
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (c == '/' && i + 1 < text.size() && text[i + 1] == '/' && !options.literals.count("//")) {
      while (i < text.size() && text[i] != '\n') ++i;
      continue;
    }
    Lexeme lx;
    lx.offset = offsetBase + static_cast<long>(i);
    lx.line = line;
    std::size_t start = i;

    if (c == '"') {
      ++i;
      while (i < text.size() && text[i] != '"') {
        if (text[i] == '\\') ++i;
        if (i < text.size() && text[i] == '\n') fail("unterminated string literal");
        ++i;
      }
      if (i >= text.size()) fail("unterminated string literal");
      ++i;
      lx.cls = TokenClass::kString;
      lx.text = std::string(text.substr(start, i - start));
      out.push_back(std::move(lx));
      continue;
    }
    if (options.ruleMode && c == '?') {
      std::size_t j = i + 1;
      while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
      if (j > i + 1 && j < text.size() && text[j] == '?') {
        i = j + 1;
        lx.cls = TokenClass::kVar;
        lx.text = std::string(text.substr(start, i - start));
        out.push_back(std::move(lx));
        continue;
      }
    }

    // Identifier-shaped lexemes.
    std::size_t identEnd = i;
    if (identStart(c)) {
      while (identEnd < text.size() && identChar(text[identEnd])) ++identEnd;
    }
    // Longest punctuation literal at this position.
    std::size_t best = 0;
    for (const auto& p : punct) {
      if (text.compare(i, p.size(), p) == 0) {
        best = p.size();
        break;
      }
    }
    if (best > 0 && best > identEnd - i) {
      i += best;
      lx.cls = TokenClass::kLiteral;
      lx.text = std::string(text.substr(start, best));
      out.push_back(std::move(lx));
      continue;
    }
    if (identEnd > i) {
      std::string word(text.substr(i, identEnd - i));
      i = identEnd;
      if (options.literals.count(word)) {
        lx.cls = TokenClass::kLiteral;
      } else if (word == "true" || word == "false") {
        lx.cls = TokenClass::kBool;
      } else if (options.ruleMode &&
                 (std::isupper(static_cast<unsigned char>(word[0])) || word[0] == '_')) {
        lx.cls = TokenClass::kVar;
        if (i + 1 < text.size() && text[i] == ':' && identStart(text[i + 1])) {
          std::size_t j = i + 1;
          while (j < text.size() && identChar(text[j])) ++j;
          std::string sort(text.substr(i + 1, j - i - 1));
          if (options.sorts.count(sort)) {
            word += ":" + sort;
            i = j;
          }
        }
      } else {
        lx.cls = TokenClass::kIdent;
      }
      lx.text = std::move(word);
      out.push_back(std::move(lx));
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) ++i;
      lx.cls = TokenClass::kInt;
      lx.text = std::string(text.substr(start, i - start));
      out.push_back(std::move(lx));
      continue;
    }
    if (c == '#' && i + 1 < text.size() && identStart(text[i + 1])) {
      ++i;
      while (i < text.size() && identChar(text[i])) ++i;
      lx.cls = TokenClass::kHash;
      lx.text = std::string(text.substr(start, i - start));
      out.push_back(std::move(lx));
      continue;
    }
    fail(std::string("unexpected character '") + c + "'");
  }
  return out;
}

// --- Grammar ------------------------------------------------------------------

int Grammar::nonterminal(const std::string& name) {
  auto it = ids_.find(name);
  if (it != ids_.end()) return it->second;
  int id = static_cast<int>(names_.size());
  names_.push_back(name);
  ids_[name] = id;
  byLhs_.emplace_back();
  nullableReady_ = false;
  return id;
}

std::optional<int> Grammar::find(const std::string& name) const {
  auto it = ids_.find(name);
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

int Grammar::addRule(int lhs, std::vector<Symbol> rhs, int tag) {
  int id = static_cast<int>(rules_.size());
  rules_.push_back(Rule{lhs, std::move(rhs), tag});
  byLhs_[static_cast<std::size_t>(lhs)].push_back(id);
  nullableReady_ = false;
  return id;
}

void Grammar::computeNullable() const {
  nullable_.assign(names_.size(), false);
  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto& r : rules_) {
      if (nullable_[static_cast<std::size_t>(r.lhs)]) continue;
      bool all = std::all_of(r.rhs.begin(), r.rhs.end(), [&](const Symbol& s) {
        return !s.terminal && nullable_[static_cast<std::size_t>(s.nonterminal)];
      });
      if (all) {
        nullable_[static_cast<std::size_t>(r.lhs)] = true;
        changed = true;
      }
    }
  }
  nullableReady_ = true;
}

bool Grammar::nullable(int nt) const {
  if (!nullableReady_) computeNullable();
  return nullable_[static_cast<std::size_t>(nt)];
}

std::set<std::string> Grammar::literals() const {
  std::set<std::string> out;
  for (const auto& r : rules_) {
    for (const auto& s : r.rhs) {
      if (s.terminal && s.cls == TokenClass::kLiteral) out.insert(s.literal);
    }
  }
  return out;
}

// --- Earley ------------------------------------------------------------------

namespace {

struct Item {
  int rule;
  int dot;
  int origin;
};

std::uint64_t itemKey(int rule, int dot, int origin) {
  return (static_cast<std::uint64_t>(rule) << 40) | (static_cast<std::uint64_t>(dot) << 32) |
         static_cast<std::uint32_t>(origin);
}

std::uint64_t spanKey(int nt, int i, int j) {
  return (static_cast<std::uint64_t>(nt) << 42) | (static_cast<std::uint64_t>(i) << 21) |
         static_cast<std::uint64_t>(j);
}

bool matches(const Symbol& s, const Lexeme& t) {
  if (s.cls == TokenClass::kLiteral) return t.cls == TokenClass::kLiteral && t.text == s.literal;
  return t.cls == s.cls;
}

std::string describe(const Symbol& s) {
  switch (s.cls) {
    case TokenClass::kLiteral: return "\"" + s.literal + "\"";
    case TokenClass::kString: return "string";
    case TokenClass::kInt: return "integer";
    case TokenClass::kHash: return "#token";
    case TokenClass::kBool: return "boolean";
    case TokenClass::kIdent: return "identifier";
    case TokenClass::kVar: return "variable";
  }
  return "?";
}

class Earley {
 public:
  Earley(const Grammar& g, const std::vector<Lexeme>& toks) : g_(g), toks_(toks) {
    const std::size_t n = toks.size() + 1;
    sets_.resize(n);
    keys_.resize(n);
    waiting_.resize(n);
    completed_.resize(n);
  }

  void run(int start) {
    for (int r : g_.rulesFor(start)) add(0, {r, 0, 0});
    for (std::size_t i = 0; i < sets_.size(); ++i) {
      for (std::size_t idx = 0; idx < sets_[i].size(); ++idx) {
        Item it = sets_[i][idx];
        const Rule& rule = g_.rules()[static_cast<std::size_t>(it.rule)];
        if (static_cast<std::size_t>(it.dot) < rule.rhs.size()) {
          const Symbol& s = rule.rhs[static_cast<std::size_t>(it.dot)];
          if (!s.terminal) {
            for (int r : g_.rulesFor(s.nonterminal)) add(i, {r, 0, static_cast<int>(i)});
            if (g_.nullable(s.nonterminal)) add(i, {it.rule, it.dot + 1, it.origin});
          } else if (i < toks_.size() && matches(s, toks_[i])) {
            add(i + 1, {it.rule, it.dot + 1, it.origin});
          }
        } else {
          auto& origins = completed_[i][rule.lhs];
          if (std::find(origins.begin(), origins.end(), it.origin) == origins.end()) {
            origins.push_back(it.origin);
          }
          auto w = waiting_[static_cast<std::size_t>(it.origin)].find(rule.lhs);
          if (w == waiting_[static_cast<std::size_t>(it.origin)].end()) continue;
          std::vector<int> parents = w->second;
          for (int p : parents) {
            Item parent = sets_[static_cast<std::size_t>(it.origin)][static_cast<std::size_t>(p)];
            add(i, {parent.rule, parent.dot + 1, parent.origin});
          }
        }
      }
    }
  }

  bool has(std::size_t pos, int rule, int dot, int origin) const {
    return keys_[pos].count(itemKey(rule, dot, origin)) != 0;
  }

  const std::vector<int>* completedOrigins(std::size_t pos, int nt) const {
    auto it = completed_[pos].find(nt);
    return it == completed_[pos].end() ? nullptr : &it->second;
  }

  std::size_t furthest() const {
    std::size_t f = 0;
    for (std::size_t i = 0; i < sets_.size(); ++i) {
      if (!sets_[i].empty()) f = i;
    }
    return f;
  }

  std::set<std::string> expectedAt(std::size_t pos) const {
    std::set<std::string> out;
    for (const auto& it : sets_[pos]) {
      const Rule& rule = g_.rules()[static_cast<std::size_t>(it.rule)];
      if (static_cast<std::size_t>(it.dot) < rule.rhs.size()) {
        const Symbol& s = rule.rhs[static_cast<std::size_t>(it.dot)];
        if (s.terminal) out.insert(describe(s));
      }
    }
    return out;
  }

 private:
  void add(std::size_t pos, Item it) {
    if (!keys_[pos].insert(itemKey(it.rule, it.dot, it.origin)).second) return;
    const Rule& rule = g_.rules()[static_cast<std::size_t>(it.rule)];
    if (static_cast<std::size_t>(it.dot) < rule.rhs.size()) {
      const Symbol& s = rule.rhs[static_cast<std::size_t>(it.dot)];
      if (!s.terminal) waiting_[pos][s.nonterminal].push_back(static_cast<int>(sets_[pos].size()));
    }
    sets_[pos].push_back(it);
  }

  const Grammar& g_;
  const std::vector<Lexeme>& toks_;
  std::vector<std::vector<Item>> sets_;
  std::vector<std::unordered_set<std::uint64_t>> keys_;
  std::vector<std::unordered_map<int, std::vector<int>>> waiting_;
  std::vector<std::unordered_map<int, std::vector<int>>> completed_;
};

constexpr std::size_t kMaxResults = 2;
constexpr std::size_t kMaxSequences = 4;

class Extractor {
 public:
  Extractor(const Grammar& g, const Earley& chart, const std::vector<Lexeme>& toks,
            const Builder& build, const TerminalBuilder& terminal)
      : g_(g), chart_(chart), toks_(toks), build_(build), terminal_(terminal) {}

  std::vector<Term> extract(int nt, int i, int j) {
    auto key = spanKey(nt, i, j);
    auto found = memo_.find(key);
    if (found != memo_.end()) return found->second.results;  // empty while in progress
    memo_[key] = {};
    std::vector<Term> results;
    std::set<std::string> seen;
    for (int r : g_.rulesFor(nt)) {
      const Rule& rule = g_.rules()[static_cast<std::size_t>(r)];
      int len = static_cast<int>(rule.rhs.size());
      if (!chart_.has(static_cast<std::size_t>(j), r, len, i)) continue;
      for (const auto& seq : derive(r, len, i, j)) {
        std::optional<Term> t = build_(rule, seq);
        if (!t) continue;
        if (seen.insert(serialize(*t)).second) results.push_back(*t);
        if (results.size() >= kMaxResults) break;
      }
      if (results.size() >= kMaxResults) break;
    }
    memo_[key].results = results;
    return results;
  }

 private:
  struct Entry {
    std::vector<Term> results;
  };

  // Child sequences for rhs[0..k) of rule r spanning [i, end).
  std::vector<std::vector<Term>> derive(int r, int k, int i, int end) {
    if (k == 0) {
      if (end == i) return {{}};
      return {};
    }
    const Rule& rule = g_.rules()[static_cast<std::size_t>(r)];
    const Symbol& s = rule.rhs[static_cast<std::size_t>(k - 1)];
    std::vector<std::vector<Term>> out;
    if (s.terminal) {
      int pos = end - 1;
      if (pos < i || !matches(s, toks_[static_cast<std::size_t>(pos)])) return out;
      if (!chart_.has(static_cast<std::size_t>(pos), r, k - 1, i)) return out;
      Term leaf = s.cls == TokenClass::kLiteral ? Term() : terminal_(toks_[static_cast<std::size_t>(pos)]);
      for (auto& prefix : derive(r, k - 1, i, pos)) {
        prefix.push_back(leaf);
        out.push_back(std::move(prefix));
        if (out.size() >= kMaxSequences) break;
      }
      return out;
    }
    const std::vector<int>* origins = chart_.completedOrigins(static_cast<std::size_t>(end), s.nonterminal);
    if (!origins) return out;
    std::vector<int> starts = *origins;
    std::sort(starts.begin(), starts.end());
    for (int pos : starts) {
      if (pos < i || !chart_.has(static_cast<std::size_t>(pos), r, k - 1, i)) continue;
      std::vector<Term> kids = extract(s.nonterminal, pos, end);
      if (kids.empty()) continue;
      auto prefixes = derive(r, k - 1, i, pos);
      for (const auto& prefix : prefixes) {
        for (const auto& kid : kids) {
          auto seq = prefix;
          seq.push_back(kid);
          out.push_back(std::move(seq));
          if (out.size() >= kMaxSequences) return out;
        }
      }
    }
    return out;
  }

  const Grammar& g_;
  const Earley& chart_;
  const std::vector<Lexeme>& toks_;
  const Builder& build_;
  const TerminalBuilder& terminal_;
  std::unordered_map<std::uint64_t, Entry> memo_;
};

}  // namespace

Term parse(const Grammar& g, int start, const std::vector<Lexeme>& tokens, const Builder& build,
           const TerminalBuilder& terminal) {
  Earley chart(g, tokens);
  chart.run(start);
  const int n = static_cast<int>(tokens.size());

  bool accepted = false;
  for (int r : g.rulesFor(start)) {
    int len = static_cast<int>(g.rules()[static_cast<std::size_t>(r)].rhs.size());
    if (chart.has(static_cast<std::size_t>(n), r, len, 0)) accepted = true;
  }
  if (!accepted) {
    std::size_t f = chart.furthest();
    std::string expected;
    for (const auto& e : chart.expectedAt(f)) expected += (expected.empty() ? "" : ", ") + e;
    long offset = f < tokens.size() ? tokens[f].offset : (tokens.empty() ? 0 : tokens.back().offset);
    int line = f < tokens.size() ? tokens[f].line : (tokens.empty() ? 1 : tokens.back().line);
    std::string found = f < tokens.size() ? "'" + tokens[f].text + "'" : "end of input";
    throw Error(ErrorKind::kParseError,
                "unexpected " + found + (expected.empty() ? "" : "; expected " + expected), line,
                offset);
  }

  Extractor ex(g, chart, tokens, build, terminal);
  std::vector<Term> results = ex.extract(start, 0, n);
  if (results.empty()) {
    throw Error(ErrorKind::kParseError, "input has no well-formed parse", tokens.empty() ? 1 : tokens[0].line,
                tokens.empty() ? 0 : tokens[0].offset);
  }
  if (results.size() > 1) {
    throw Error(ErrorKind::kAmbiguousParse,
                "two parses: " + serialize(results[0]) + " and " + serialize(results[1]),
                tokens.empty() ? 1 : tokens[0].line, tokens.empty() ? 0 : tokens[0].offset);
  }
  return results.front();
}

}  // namespace kbx::grammar
