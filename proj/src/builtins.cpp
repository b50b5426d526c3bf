#include "kbx/builtins.hpp"

#include <algorithm>

namespace kbx::builtin {

namespace {

long long toInt(const Term& t, const char* op) {
  if (!t.is(Term::Kind::kToken) || t.asToken().sort() != kSortInt) {
    throw Error(ErrorKind::kTypeMismatch, std::string(op) + " expects Int, got " + serialize(t));
  }
  return std::stoll(t.asToken().lexeme);
}

bool toBool(const Term& t, const char* op) {
  if (!t.is(Term::Kind::kToken) || t.asToken().sort() != kSortBool) {
    throw Error(ErrorKind::kTypeMismatch, std::string(op) + " expects Bool, got " + serialize(t));
  }
  return t.asToken().lexeme == "true";
}

std::vector<std::pair<Term, Term>> mapEntries(const Term& t, const char* op) {
  if (t.isEmptyValue()) return {};
  if (!t.is(Term::Kind::kMap)) {
    throw Error(ErrorKind::kTypeMismatch, std::string(op) + " expects Map, got " + serialize(t));
  }
  return t.asMap().bindings;
}

void arity(const Apply& a, std::size_t n) {
  if (a.children.size() != n) {
    throw Error(ErrorKind::kTypeMismatch, a.production + " expects " + std::to_string(n) +
                                              " arguments");
  }
}

Term reduce(const Term& t) {
  const auto& a = t.asApply();
  const std::string& op = a.production;
  const auto& c = a.children;
  if (op == kUpdate) {
    arity(a, 3);
    auto entries = mapEntries(c[0], "_[_<-_]");
    std::string key = serialize(c[1]);
    auto it = std::find_if(entries.begin(), entries.end(),
                           [&](const auto& e) { return serialize(e.first) == key; });
    if (it != entries.end()) {
      it->second = c[2];
    } else {
      entries.emplace_back(c[1], c[2]);
    }
    return Term::map(std::move(entries));
  }
  if (op == kLookup) {
    arity(a, 3);
    std::string key = serialize(c[1]);
    for (const auto& [k, v] : mapEntries(c[0], "_[_]orDefault_")) {
      if (serialize(k) == key) return v;
    }
    return c[2];
  }
  if (op == kEqK) {
    arity(a, 2);
    return boolean(serialize(c[0]) == serialize(c[1]));
  }
  if (op == kOrBool) {
    arity(a, 2);
    return boolean(toBool(c[0], "orBool") || toBool(c[1], "orBool"));
  }
  if (op == kAndBool) {
    arity(a, 2);
    return boolean(toBool(c[0], "andBool") && toBool(c[1], "andBool"));
  }
  if (op == kNotBool) {
    arity(a, 1);
    return boolean(!toBool(c[0], "notBool"));
  }
  if (op == kLtInt) {
    arity(a, 2);
    return boolean(toInt(c[0], "<Int") < toInt(c[1], "<Int"));
  }
  if (op == kLeInt) {
    arity(a, 2);
    return boolean(toInt(c[0], "<=Int") <= toInt(c[1], "<=Int"));
  }
  if (op == kPlusInt) {
    arity(a, 2);
    long long sum = toInt(c[0], "+Int") + toInt(c[1], "+Int");
    if (sum < 0) throw Error(ErrorKind::kTypeMismatch, "+Int result is not a natural number");
    return Term::token(std::to_string(sum));
  }
  throw Error(ErrorKind::kUnknownBuiltin, op);
}

}  // namespace

Term boolean(bool value) { return Term::token(value ? "true" : "false"); }

bool isTrue(const Term& t) { return t.is(Term::Kind::kToken) && t.asToken().lexeme == "true"; }

Term evaluate(const Term& t) {
  return transform(t, [](const Term& node) {
    if (node.is(Term::Kind::kApply) && isBuiltinId(node.asApply().production)) {
      return reduce(node);
    }
    return node;
  });
}

Term evalBuiltin(const Term& expr, const Substitution& theta) {
  Term bound = substitute(expr, theta);
  if (!bound.isGround()) {
    throw Error(ErrorKind::kNonGroundSideCondition, serialize(bound));
  }
  return evaluate(bound);
}

}  // namespace kbx::builtin
