#pragma once

#include <optional>
#include <string>
#include <vector>

#include "clpk/attvar.hpp"

namespace clpk {

class Engine;

// Registers the ic attribute, its builtins, goal expansions and printers.
void install_ic(Engine &e);

namespace ic {

// Rational extended with the two infinities.
struct XR {
    int inf = 0; // -1, 0 or +1
    Rational v;

    static XR finite(Rational r) { return {0, std::move(r)}; }
    static XR neg_inf() { return {-1, {}}; }
    static XR pos_inf() { return {1, {}}; }
    static XR from_double(double d);
    bool finite() const { return inf == 0; }
};
int compare(const XR &a, const XR &b);

struct Domain {
    double lo;
    double hi;
    bool integral;
    // Sorted, strictly inside (lo, hi).
    std::vector<Integer> holes;

    // Number of values of a finite integral domain.
    Integer size() const;
    bool contains(const Integer &v) const;
};

enum class Change { Fail, Same, Narrowed };

// Current domain; numbers yield a point domain, plain variables nullopt.
std::optional<Domain> domain_of(Kernel &k, const Term &x);
// Exact bounds of a variable or number; plain variables are unbounded.
std::pair<XR, XR> bounds(Kernel &k, const Term &x);

// Intersects `x` (variable or number) with [lo, hi].
bool declare_domain(Kernel &k, const Term &x, const XR &lo, const XR &hi, bool integral);
bool declare_values(Kernel &k, const Term &x, const std::vector<Integer> &values);

Change impose_min(Kernel &k, const Term &x, const XR &b);
Change impose_max(Kernel &k, const Term &x, const XR &b);
Change exclude_value(Kernel &k, const Term &x, const Integer &v);
Change impose_integrality(Kernel &k, const Term &x);

enum class LinRel { Le, Eq, Ne };

// sum(coef * var) + constant REL 0
struct LinCon {
    LinRel rel = LinRel::Le;
    bool integral = true;
    Rational constant;
    std::vector<std::pair<Rational, Term>> terms;
};

// Normalizes `Lhs Op Rhs` for Op one of #= #\= #< #> #=< #>= and the $
// variants. With `runtime` false subscripts are not resolved and the
// result is nullopt when they occur; nonlinear terms raise
// error(unsupported(nonlinear), Goal).
std::optional<LinCon> normalize_linear(const Store &s, const Term &goal, bool runtime);
// The internal goal ic_lin_con(Rel, Integral, [C*1, A*X, ...]).
Term lin_con_term(const LinCon &c);
// Rebuilds a LinCon from the arguments of the internal goal, folding
// instantiated variables into the constant.
LinCon lin_con_from(const Store &s, const Term &rel, const Term &integral, const Term &list);

enum class Status { Fail, Entailed, Pending };

// One bounds-consistency run of a linear constraint.
Status propagate(Kernel &k, const LinCon &c);
// Forward checking of alldifferent.
Status propagate_alldiff(Kernel &k, const std::vector<Term> &items);

std::string domain_text(Engine &e, const Domain &d);

} // namespace ic
} // namespace clpk
