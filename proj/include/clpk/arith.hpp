#pragma once

#include <optional>
#include <string_view>
#include <variant>
#include <vector>

#include "clpk/store.hpp"
#include "clpk/term.hpp"

namespace clpk::arith {

// Int | Rat | Float | Breal, ordered by the coercion lattice.
using Number = std::variant<Integer, Rational, double, Breal>;

bool is_number(const Term &t);
Number to_number(const Term &t);
Term to_term(const Number &n);

Number add(const Number &a, const Number &b);
Number sub(const Number &a, const Number &b);
Number mul(const Number &a, const Number &b);
// Int/Int yields an Int when exact and a Rat otherwise.
Number div(const Number &a, const Number &b);
Number neg(const Number &a);
Number min(const Number &a, const Number &b);
Number max(const Number &a, const Number &b);
Number abs(const Number &a);
Number power(const Number &base, const Number &exp);

// Smallest enclosing bounded real of any number.
Breal to_breal(const Number &n);

// Directed rounding of single floating-point operations.
double add_down(double a, double b);
double add_up(double a, double b);
double mul_down(double a, double b);
double mul_up(double a, double b);
double div_down(double a, double b);
double div_up(double a, double b);

Breal breal_add(Breal a, Breal b);
Breal breal_sub(Breal a, Breal b);
Breal breal_mul(Breal a, Breal b);
Breal breal_div(Breal a, Breal b);

enum class Rel { Lt, Le, Gt, Ge, Eq, Ne };
std::optional<Rel> rel_from_name(std::string_view name);

// Exact comparison after coercion. Bounded reals whose overlap leaves the
// relation undecided raise an uncertainty error.
bool compare_numeric(Rel rel, const Number &a, const Number &b);

// Evaluates arithmetic expressions over a store.
class Evaluator {
public:
    explicit Evaluator(const Store &store) : store_(store) {}
    Number eval(const Term &expr) const;
    // Evaluates and requires an integer result.
    Integer eval_integer(const Term &expr) const;

private:
    const Store &store_;
};

// Element at an index path into nested structures (generalised arg/3).
Term subscript(const Store &store, const Term &array, const std::vector<Term> &indices);

// Nested '[]'/N structures of fresh variables.
Term make_array(Store &store, const std::vector<std::int64_t> &dims);
std::vector<std::int64_t> array_dims(const Store &store, const Term &array);

} // namespace clpk::arith
