#pragma once

// The closed set of builtin operations usable in side conditions and in
// rule right-hand sides. Builtin applications are ordinary Apply nodes whose
// production id starts with '@'.

#include <string>
#include <string_view>

#include "kbx/term.hpp"

namespace kbx::builtin {

inline constexpr const char* kUpdate = "@update";   // M [ K <- V ]
inline constexpr const char* kLookup = "@lookup";   // M [ K ] orDefault D
inline constexpr const char* kEqK = "@eqK";         // A ==K B
inline constexpr const char* kOrBool = "@orBool";   // A orBool B
inline constexpr const char* kAndBool = "@andBool"; // A andBool B
inline constexpr const char* kNotBool = "@notBool"; // notBool A
inline constexpr const char* kLtInt = "@ltInt";     // A <Int B
inline constexpr const char* kLeInt = "@leInt";     // A <=Int B
inline constexpr const char* kPlusInt = "@plusInt"; // A +Int B

inline bool isBuiltinId(std::string_view production) {
  return !production.empty() && production.front() == '@';
}

/// Reduces every builtin application in a ground term, innermost first.
/// Throws UnknownBuiltin or TypeMismatch.
Term evaluate(const Term& t);

/// `evaluate(substitute(expr, theta))`; throws NonGroundSideCondition when
/// the substituted expression still has variables.
Term evalBuiltin(const Term& expr, const Substitution& theta);

Term boolean(bool value);
bool isTrue(const Term& t);

}  // namespace kbx::builtin
