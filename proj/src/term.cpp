#include "kbx/term.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <sstream>

namespace kbx {

const char* errorKindName(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kSyntaxError: return "SyntaxError";
    case ErrorKind::kUnknownSort: return "UnknownSort";
    case ErrorKind::kDuplicateCellName: return "DuplicateCellName";
    case ErrorKind::kNoInputCell: return "NoInputCell";
    case ErrorKind::kParseError: return "ParseError";
    case ErrorKind::kAmbiguousParse: return "AmbiguousParse";
    case ErrorKind::kUnboundVariable: return "UnboundVariable";
    case ErrorKind::kAnonymousOnRight: return "AnonymousOnRight";
    case ErrorKind::kNotGround: return "NotGround";
    case ErrorKind::kNonGroundSideCondition: return "NonGroundSideCondition";
    case ErrorKind::kUnknownBuiltin: return "UnknownBuiltin";
    case ErrorKind::kTypeMismatch: return "TypeMismatch";
    case ErrorKind::kStepLimitExceeded: return "StepLimitExceeded";
    case ErrorKind::kUntypedTerm: return "UntypedTerm";
    case ErrorKind::kMissingDefault: return "MissingDefault";
    case ErrorKind::kSortMismatch: return "SortMismatch";
    case ErrorKind::kExecutionFailed: return "ExecutionFailed";
    case ErrorKind::kLintError: return "LintError";
    case ErrorKind::kIoError: return "IoError";
  }
  return "Error";
}

bool isBuiltinSort(const std::string& name) {
  return name == kSortK || name == kSortInt || name == kSortString || name == kSortBool ||
         name == kSortId || name == kSortList || name == kSortMap;
}

// --- Variable / Token -------------------------------------------------------

Variable Variable::named(std::string name, std::string sort, bool annotated) {
  return Variable{std::move(name), std::move(sort), VarKind::kNamed, 0, annotated};
}

Variable Variable::anonymous(int ordinal, std::string sort, bool annotated) {
  return Variable{"_" + std::to_string(ordinal), std::move(sort), VarKind::kAnonymous, ordinal,
                  annotated};
}

Variable Variable::placeholder(int index, std::string sort) {
  return Variable{"?" + std::to_string(index) + "?", std::move(sort), VarKind::kPlaceholder, index,
                  false};
}

bool operator==(const Variable& a, const Variable& b) {
  return a.name == b.name && a.sort == b.sort && a.kind == b.kind && a.index == b.index &&
         a.annotated == b.annotated;
}

std::string Token::sort() const {
  if (lexeme.empty()) return kSortK;
  if (lexeme.front() == '"') return kSortString;
  if (lexeme.front() == '#') return "#";
  if (lexeme == "true" || lexeme == "false") return kSortBool;
  bool digits = std::all_of(lexeme.begin(), lexeme.end(),
                            [](unsigned char c) { return std::isdigit(c) != 0; });
  if (digits) return kSortInt;
  return kSortId;
}

// --- Term -------------------------------------------------------------------

struct Term::Node {
  std::variant<Variable, Token, Apply, ListTerm, MapTerm, Empty, RewriteSplit> value;
  bool ground = true;
};

std::shared_ptr<const Term::Node> makeEmptyNode() {
  static const auto node = [] {
    auto n = std::make_shared<Term::Node>();
    n->value = Empty{EmptyKind::kK};
    return std::shared_ptr<const Term::Node>(n);
  }();
  return node;
}

Term::Term() : node_(makeEmptyNode()) {}
Term::Term(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

Term Term::variable(Variable v) {
  auto n = std::make_shared<Node>();
  n->value = std::move(v);
  n->ground = false;
  return Term(std::move(n));
}

Term Term::token(std::string lexeme) {
  auto n = std::make_shared<Node>();
  n->value = Token{std::move(lexeme)};
  return Term(std::move(n));
}

Term Term::apply(std::string production, std::vector<Term> children) {
  auto n = std::make_shared<Node>();
  n->ground = std::all_of(children.begin(), children.end(), [](const Term& c) { return c.isGround(); });
  n->value = Apply{std::move(production), std::move(children)};
  return Term(std::move(n));
}

Term Term::list(std::vector<Term> elements, std::optional<Variable> rest, RestPosition position) {
  auto n = std::make_shared<Node>();
  n->ground = !rest && std::all_of(elements.begin(), elements.end(),
                                   [](const Term& c) { return c.isGround(); });
  if (!rest) position = RestPosition::kNone;
  if (rest && position == RestPosition::kNone) position = RestPosition::kAfter;
  n->value = ListTerm{std::move(elements), std::move(rest), position};
  return Term(std::move(n));
}

Term Term::map(std::vector<std::pair<Term, Term>> bindings, std::optional<Variable> rest) {
  auto n = std::make_shared<Node>();
  n->ground = !rest && std::all_of(bindings.begin(), bindings.end(), [](const auto& b) {
    return b.first.isGround() && b.second.isGround();
  });
  n->value = MapTerm{std::move(bindings), std::move(rest)};
  return Term(std::move(n));
}

Term Term::empty(EmptyKind kind) {
  if (kind == EmptyKind::kK) return Term();
  auto n = std::make_shared<Node>();
  n->value = Empty{kind};
  return Term(std::move(n));
}

Term Term::rewrite(Term lhs, Term rhs) {
  auto n = std::make_shared<Node>();
  n->ground = false;
  n->value = RewriteSplit{std::move(lhs), std::move(rhs)};
  return Term(std::move(n));
}

Term::Kind Term::kind() const { return static_cast<Kind>(node_->value.index()); }

const Variable& Term::asVariable() const { return std::get<Variable>(node_->value); }
const Token& Term::asToken() const { return std::get<Token>(node_->value); }
const Apply& Term::asApply() const { return std::get<Apply>(node_->value); }
const ListTerm& Term::asList() const { return std::get<ListTerm>(node_->value); }
const MapTerm& Term::asMap() const { return std::get<MapTerm>(node_->value); }
const Empty& Term::asEmpty() const { return std::get<Empty>(node_->value); }
const RewriteSplit& Term::asRewrite() const { return std::get<RewriteSplit>(node_->value); }

bool Term::isGround() const { return node_->ground; }

bool Term::isEmptyValue() const {
  switch (kind()) {
    case Kind::kEmpty: return true;
    case Kind::kList: return asList().elements.empty() && !asList().rest;
    case Kind::kMap: return asMap().bindings.empty() && !asMap().rest;
    default: return false;
  }
}

bool operator==(const Term& a, const Term& b) {
  if (a.node_ == b.node_) return true;
  if (a.kind() != b.kind()) return false;
  switch (a.kind()) {
    case Term::Kind::kVariable: return a.asVariable() == b.asVariable();
    case Term::Kind::kToken: return a.asToken().lexeme == b.asToken().lexeme;
    case Term::Kind::kApply:
      return a.asApply().production == b.asApply().production &&
             a.asApply().children == b.asApply().children;
    case Term::Kind::kList:
      return a.asList().elements == b.asList().elements && a.asList().rest == b.asList().rest &&
             a.asList().position == b.asList().position;
    case Term::Kind::kMap:
      return a.asMap().bindings == b.asMap().bindings && a.asMap().rest == b.asMap().rest;
    case Term::Kind::kEmpty: return a.asEmpty().kind == b.asEmpty().kind;
    case Term::Kind::kRewrite:
      return a.asRewrite().lhs == b.asRewrite().lhs && a.asRewrite().rhs == b.asRewrite().rhs;
  }
  return false;
}

// --- Substitution -----------------------------------------------------------

const Term* Substitution::lookup(const std::string& name) const {
  auto it = bindings_.find(name);
  return it == bindings_.end() ? nullptr : &it->second;
}

void Substitution::bind(const std::string& name, Term value) {
  bindings_.insert_or_assign(name, std::move(value));
}

bool operator==(const Substitution& a, const Substitution& b) {
  if (a.bindings_.size() != b.bindings_.size()) return false;
  for (const auto& [name, value] : a.bindings_) {
    const Term* other = b.lookup(name);
    if (!other || serialize(value) != serialize(*other)) return false;
  }
  return true;
}

namespace {

Term bindingFor(const Variable& v, const Substitution& theta) {
  if (const Term* t = theta.lookup(v.name)) return *t;
  if (v.kind == VarKind::kAnonymous) {
    throw Error(ErrorKind::kAnonymousOnRight, "anonymous variable in a construction position");
  }
  throw Error(ErrorKind::kUnboundVariable, v.name);
}

void appendListValue(const Term& value, std::vector<Term>& out, const std::string& var) {
  if (value.isEmptyValue()) return;
  if (!value.is(Term::Kind::kList)) {
    throw Error(ErrorKind::kTypeMismatch, "list rest variable " + var + " bound to a non-list");
  }
  const auto& l = value.asList();
  out.insert(out.end(), l.elements.begin(), l.elements.end());
}

void appendMapValue(const Term& value, std::vector<std::pair<Term, Term>>& out,
                    const std::string& var) {
  if (value.isEmptyValue()) return;
  if (!value.is(Term::Kind::kMap)) {
    throw Error(ErrorKind::kTypeMismatch, "map rest variable " + var + " bound to a non-map");
  }
  const auto& m = value.asMap();
  out.insert(out.end(), m.bindings.begin(), m.bindings.end());
}

}  // namespace

Term substitute(const Term& pattern, const Substitution& theta) {
  if (pattern.isGround()) return pattern;
  switch (pattern.kind()) {
    case Term::Kind::kVariable: return bindingFor(pattern.asVariable(), theta);
    case Term::Kind::kApply: {
      const auto& a = pattern.asApply();
      std::vector<Term> children;
      children.reserve(a.children.size());
      for (const auto& c : a.children) children.push_back(substitute(c, theta));
      return Term::apply(a.production, std::move(children));
    }
    case Term::Kind::kList: {
      const auto& l = pattern.asList();
      std::vector<Term> elements;
      if (l.rest && l.position == RestPosition::kBefore) {
        appendListValue(bindingFor(*l.rest, theta), elements, l.rest->name);
      }
      for (const auto& e : l.elements) elements.push_back(substitute(e, theta));
      if (l.rest && l.position == RestPosition::kAfter) {
        appendListValue(bindingFor(*l.rest, theta), elements, l.rest->name);
      }
      return Term::list(std::move(elements));
    }
    case Term::Kind::kMap: {
      const auto& m = pattern.asMap();
      std::vector<std::pair<Term, Term>> bindings;
      if (m.rest) appendMapValue(bindingFor(*m.rest, theta), bindings, m.rest->name);
      for (const auto& [k, v] : m.bindings) {
        bindings.emplace_back(substitute(k, theta), substitute(v, theta));
      }
      return Term::map(std::move(bindings));
    }
    case Term::Kind::kRewrite: {
      const auto& r = pattern.asRewrite();
      return Term::rewrite(substitute(r.lhs, theta), substitute(r.rhs, theta));
    }
    default: return pattern;
  }
}

bool structurallyEqual(const Term& a, const Term& b) {
  if (!a.isGround() || !b.isGround()) {
    throw Error(ErrorKind::kNotGround, "structural equality needs ground terms");
  }
  return serialize(a) == serialize(b);
}

Variable freshVariable(const std::string& base, const std::set<std::string>& taken) {
  for (int i = 0;; ++i) {
    std::string name = base + std::to_string(i);
    if (!taken.count(name)) return Variable::named(std::move(name));
  }
}

namespace {

void collectVariables(const Term& t, std::vector<Variable>& out, std::set<std::string>& seen) {
  auto add = [&](const Variable& v) {
    if (seen.insert(v.name).second) out.push_back(v);
  };
  switch (t.kind()) {
    case Term::Kind::kVariable: add(t.asVariable()); break;
    case Term::Kind::kApply:
      for (const auto& c : t.asApply().children) collectVariables(c, out, seen);
      break;
    case Term::Kind::kList: {
      const auto& l = t.asList();
      if (l.rest && l.position == RestPosition::kBefore) add(*l.rest);
      for (const auto& e : l.elements) collectVariables(e, out, seen);
      if (l.rest && l.position == RestPosition::kAfter) add(*l.rest);
      break;
    }
    case Term::Kind::kMap: {
      const auto& m = t.asMap();
      if (m.rest) add(*m.rest);
      for (const auto& [k, v] : m.bindings) {
        collectVariables(k, out, seen);
        collectVariables(v, out, seen);
      }
      break;
    }
    case Term::Kind::kRewrite:
      collectVariables(t.asRewrite().lhs, out, seen);
      collectVariables(t.asRewrite().rhs, out, seen);
      break;
    default: break;
  }
}

}  // namespace

std::vector<Variable> variablesOf(const Term& t) {
  std::vector<Variable> out;
  std::set<std::string> seen;
  collectVariables(t, out, seen);
  return out;
}

std::set<std::string> variableNames(const Term& t) {
  std::set<std::string> names;
  for (const auto& v : variablesOf(t)) names.insert(v.name);
  return names;
}

// --- canonical serialization ------------------------------------------------

namespace {

void writeVariable(const Variable& v, std::string& out) {
  out += "(var ";
  out += v.name;
  if (!v.sort.empty()) {
    out += ' ';
    out += v.sort;
  }
  out += ')';
}

void writeTerm(const Term& t, std::string& out) {
  switch (t.kind()) {
    case Term::Kind::kVariable: writeVariable(t.asVariable(), out); return;
    case Term::Kind::kToken: out += t.asToken().lexeme; return;
    case Term::Kind::kEmpty: out += ".K"; return;
    case Term::Kind::kApply: {
      const auto& a = t.asApply();
      out += "(|";
      for (char c : a.production) {
        if (c == '|' || c == '\\') out += '\\';
        out += c;
      }
      out += '|';
      for (const auto& c : a.children) {
        out += ' ';
        writeTerm(c, out);
      }
      out += ')';
      return;
    }
    case Term::Kind::kList: {
      const auto& l = t.asList();
      if (t.isEmptyValue()) {
        out += ".K";
        return;
      }
      out += "(list";
      if (l.rest && l.position == RestPosition::kBefore) {
        out += " (rest ";
        writeVariable(*l.rest, out);
        out += ')';
      }
      for (const auto& e : l.elements) {
        out += ' ';
        writeTerm(e, out);
      }
      if (l.rest && l.position == RestPosition::kAfter) {
        out += " (rest ";
        writeVariable(*l.rest, out);
        out += ')';
      }
      out += ')';
      return;
    }
    case Term::Kind::kMap: {
      const auto& m = t.asMap();
      if (t.isEmptyValue()) {
        out += ".K";
        return;
      }
      std::vector<std::pair<std::string, std::string>> entries;
      for (const auto& [k, v] : m.bindings) {
        std::string ks, vs;
        writeTerm(k, ks);
        writeTerm(v, vs);
        entries.emplace_back(std::move(ks), std::move(vs));
      }
      std::sort(entries.begin(), entries.end());
      out += "(map";
      if (m.rest) {
        out += " (rest ";
        writeVariable(*m.rest, out);
        out += ')';
      }
      for (const auto& [k, v] : entries) {
        out += " (";
        out += k;
        out += ' ';
        out += v;
        out += ')';
      }
      out += ')';
      return;
    }
    case Term::Kind::kRewrite:
      out += "(=> ";
      writeTerm(t.asRewrite().lhs, out);
      out += ' ';
      writeTerm(t.asRewrite().rhs, out);
      out += ')';
      return;
  }
}

class CanonicalReader {
 public:
  explicit CanonicalReader(const std::string& text) : text_(text) {}

  Term read() {
    Term t = term();
    skipSpace();
    if (pos_ != text_.size()) fail("trailing input");
    return t;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw Error(ErrorKind::kSyntaxError, "canonical term: " + what + " at offset " +
                                             std::to_string(pos_), 1, static_cast<long>(pos_));
  }

  void skipSpace() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool peek(char c) {
    skipSpace();
    return pos_ < text_.size() && text_[pos_] == c;
  }

  void expect(char c) {
    if (!peek(c)) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  std::string atom() {
    skipSpace();
    if (pos_ < text_.size() && text_[pos_] == '"') {
      std::size_t start = pos_++;
      while (pos_ < text_.size() && text_[pos_] != '"') {
        if (text_[pos_] == '\\') ++pos_;
        ++pos_;
      }
      if (pos_ >= text_.size()) fail("unterminated string");
      ++pos_;
      return text_.substr(start, pos_ - start);
    }
    std::size_t start = pos_;
    while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_])) &&
           text_[pos_] != '(' && text_[pos_] != ')') {
      ++pos_;
    }
    if (start == pos_) fail("expected atom");
    return text_.substr(start, pos_ - start);
  }

  Term term() {
    skipSpace();
    if (!peek('(')) {
      std::string a = atom();
      if (a == ".K") return Term();
      return Term::token(std::move(a));
    }
    ++pos_;
    skipSpace();
    if (pos_ < text_.size() && text_[pos_] == '|') {
      ++pos_;
      std::string production;
      while (pos_ < text_.size() && text_[pos_] != '|') {
        if (text_[pos_] == '\\' && pos_ + 1 < text_.size()) ++pos_;
        production += text_[pos_++];
      }
      if (pos_ >= text_.size()) fail("unterminated production name");
      ++pos_;
      std::vector<Term> children;
      while (!peek(')')) children.push_back(term());
      expect(')');
      return Term::apply(std::move(production), std::move(children));
    }
    std::string head = atom();
    if (head == "list") {
      std::vector<Term> elements;
      while (!peek(')')) elements.push_back(term());
      expect(')');
      return Term::list(std::move(elements));
    }
    if (head == "map") {
      std::vector<std::pair<Term, Term>> bindings;
      while (!peek(')')) {
        expect('(');
        Term k = term();
        Term v = term();
        expect(')');
        bindings.emplace_back(std::move(k), std::move(v));
      }
      expect(')');
      return Term::map(std::move(bindings));
    }
    fail("unknown form '" + head + "'");
  }

  const std::string& text_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string serialize(const Term& t) {
  std::string out;
  writeTerm(t, out);
  return out;
}

Term parseCanonical(const std::string& text) { return CanonicalReader(text).read(); }

// --- Signature --------------------------------------------------------------

void Signature::addProduction(const std::string& production, const std::string& sort) {
  productionSorts_[production] = sort;
}

void Signature::addSubsort(const std::string& sub, const std::string& super) {
  supers_[sub].insert(super);
}

void Signature::addTokenSort(const std::string& sort) { tokenSorts_.insert(sort); }
void Signature::addListSort(const std::string& sort) { listSorts_.insert(sort); }

std::string Signature::sortOf(const Term& t) const {
  switch (t.kind()) {
    case Term::Kind::kToken: return t.asToken().sort();
    case Term::Kind::kApply: {
      auto it = productionSorts_.find(t.asApply().production);
      return it == productionSorts_.end() ? std::string(kSortK) : it->second;
    }
    case Term::Kind::kList: return t.isEmptyValue() ? ".K" : kSortList;
    case Term::Kind::kMap: return t.isEmptyValue() ? ".K" : kSortMap;
    case Term::Kind::kEmpty: return ".K";
    default: return kSortK;
  }
}

bool Signature::leq(const std::string& sub, const std::string& super) const {
  if (super.empty() || super == kSortK || sub == super) return true;
  if (sub == ".K") return super == kSortList || super == kSortMap || isListSort(super);
  if (sub == "#") {
    if (isTokenSort(super)) return true;
    for (const auto& t : tokenSorts_) {
      if (leq(t, super)) return true;
    }
    return false;
  }
  if (sub == kSortList && isListSort(super)) return true;
  if (isListSort(sub) && super == kSortList) return true;
  std::set<std::string> seen{sub};
  std::vector<std::string> work{sub};
  while (!work.empty()) {
    std::string s = work.back();
    work.pop_back();
    auto it = supers_.find(s);
    if (it == supers_.end()) continue;
    for (const auto& up : it->second) {
      if (up == super) return true;
      if (seen.insert(up).second) work.push_back(up);
    }
  }
  return false;
}

bool Signature::admits(const std::string& varSort, const Term& value) const {
  if (varSort.empty() || varSort == kSortK) return true;
  return leq(sortOf(value), varSort);
}

}  // namespace kbx
