#include "clpk/arith.hpp"

#include <cmath>
#include <limits>

namespace clpk::arith {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kMax = std::numeric_limits<double>::max();
// Below this magnitude error-free transformations may lose bits.
constexpr double kTiny = 1e-290;

double step_down(double x) { return x == -kInf ? x : std::nextafter(x, -kInf); }

double int_to_double(const Integer &i) { return i.convert_to<double>(); }

[[noreturn]] void type_error_evaluable(Atom name, std::size_t arity) {
    throw_type_error("evaluable", mk_struct("/", {Term(name), Term::integer(static_cast<std::int64_t>(arity))}));
}

const Integer &need_int(const Number &n, const char *what) {
    if (auto *i = std::get_if<Integer>(&n))
        return *i;
    throw_type_error("integer", Term::atom(what));
}

double as_double(const Number &n) {
    switch (n.index()) {
    case 0: return int_to_double(std::get<Integer>(n));
    case 1: return to_double_nearest(std::get<Rational>(n));
    case 2: return std::get<double>(n);
    default: throw_type_error("float", Term::atom("breal"));
    }
}

Rational as_rational(const Number &n) {
    if (n.index() == 0)
        return Rational(std::get<Integer>(n));
    return std::get<Rational>(n);
}

// An interval endpoint over the extended rationals.
struct Ext {
    int inf = 0; // -1, 0, +1
    Rational v;
};

Ext ext_of(double d) {
    if (std::isnan(d))
        throw_evaluation_error("undefined");
    if (std::isinf(d))
        return Ext{d > 0 ? 1 : -1, Rational(0)};
    return Ext{0, exact_rational(d)};
}

int cmp(const Ext &a, const Ext &b) {
    if (a.inf != b.inf)
        return a.inf < b.inf ? -1 : 1;
    if (a.inf != 0)
        return 0;
    return a.v < b.v ? -1 : (a.v > b.v ? 1 : 0);
}

std::pair<Ext, Ext> interval_of(const Number &n) {
    switch (n.index()) {
    case 0: {
        Ext e{0, Rational(std::get<Integer>(n))};
        return {e, e};
    }
    case 1: {
        Ext e{0, std::get<Rational>(n)};
        return {e, e};
    }
    case 2: {
        Ext e = ext_of(std::get<double>(n));
        return {e, e};
    }
    default: {
        auto b = std::get<Breal>(n);
        return {ext_of(b.lo), ext_of(b.hi)};
    }
    }
}

int rank(const Number &a, const Number &b) { return static_cast<int>(std::max(a.index(), b.index())); }

// Rat combined with Float meets at Float.
bool float_context(const Number &a, const Number &b) { return a.index() == 2 || b.index() == 2; }

Breal hull_min(Breal a, Breal b) { return {std::min(a.lo, b.lo), std::min(a.hi, b.hi)}; }
Breal hull_max(Breal a, Breal b) { return {std::max(a.lo, b.lo), std::max(a.hi, b.hi)}; }

Number normalize_rat(const Rational &q) { return q; }

Integer ipow(const Integer &base, const Integer &exp) {
    if (exp > 100000)
        throw_evaluation_error("int_overflow");
    return boost::multiprecision::pow(base, exp.convert_to<unsigned>());
}

Integer round_half_away(const Rational &q) {
    Integer num = numerator(q), den = denominator(q);
    Integer twice = 2 * num + (num >= 0 ? den : -den);
    return twice / (2 * den);
}

Integer floor_rat(const Rational &q) {
    Integer num = numerator(q), den = denominator(q);
    Integer d = num / den;
    if (num % den != 0 && num < 0)
        --d;
    return d;
}

Integer ceil_rat(const Rational &q) { return -floor_rat(-q); }

Rational exact_of(const Number &n, const char *what) {
    switch (n.index()) {
    case 0: return Rational(std::get<Integer>(n));
    case 1: return std::get<Rational>(n);
    case 2: return exact_rational(std::get<double>(n));
    default: throw_type_error(what, Term::atom("breal"));
    }
}

} // namespace

double add_down(double a, double b) {
    double s = a + b;
    if (std::isnan(s))
        return -kInf;
    if (std::isinf(s))
        return (std::isinf(a) || std::isinf(b) || s < 0) ? s : kMax;
    double bb = s - a;
    double err = (a - (s - bb)) + (b - bb);
    return err < 0 ? step_down(s) : s;
}

double add_up(double a, double b) { return -add_down(-a, -b); }

double mul_down(double a, double b) {
    if (a == 0 || b == 0)
        return 0.0;
    double p = a * b;
    if (std::isnan(p))
        return -kInf;
    if (std::isinf(p))
        return (std::isinf(a) || std::isinf(b) || p < 0) ? p : kMax;
    if (std::fabs(p) < kTiny)
        return step_down(p);
    double err = std::fma(a, b, -p);
    return err < 0 ? step_down(p) : p;
}

double mul_up(double a, double b) { return -mul_down(-a, b); }

double div_down(double a, double b) {
    if (b == 0)
        throw_evaluation_error("zero_divisor");
    if (a == 0)
        return 0.0;
    double q = a / b;
    if (std::isnan(q))
        return -kInf;
    if (std::isinf(q))
        return (std::isinf(a) || q < 0) ? q : kMax;
    if (std::isinf(b))
        return q < 0 || (q == 0 && (a < 0) != (b < 0)) ? step_down(q) : q;
    if (std::fabs(q) < kTiny || std::fabs(a) < kTiny)
        return step_down(q);
    double r = std::fma(-q, b, a); // a - q*b, exact
    // true quotient - q = r / b
    bool below = r != 0 && ((r < 0) != (b < 0));
    return below ? step_down(q) : q;
}

double div_up(double a, double b) { return -div_down(-a, b); }

Breal breal_add(Breal a, Breal b) { return {add_down(a.lo, b.lo), add_up(a.hi, b.hi)}; }

Breal breal_sub(Breal a, Breal b) { return {add_down(a.lo, -b.hi), add_up(a.hi, -b.lo)}; }

Breal breal_mul(Breal a, Breal b) {
    double lo = std::min({mul_down(a.lo, b.lo), mul_down(a.lo, b.hi), mul_down(a.hi, b.lo), mul_down(a.hi, b.hi)});
    double hi = std::max({mul_up(a.lo, b.lo), mul_up(a.lo, b.hi), mul_up(a.hi, b.lo), mul_up(a.hi, b.hi)});
    return {lo, hi};
}

Breal breal_div(Breal a, Breal b) {
    if (b.lo == 0 && b.hi == 0)
        throw_evaluation_error("zero_divisor");
    if (b.lo <= 0 && b.hi >= 0)
        return {-kInf, kInf};
    double lo = std::min({div_down(a.lo, b.lo), div_down(a.lo, b.hi), div_down(a.hi, b.lo), div_down(a.hi, b.hi)});
    double hi = std::max({div_up(a.lo, b.lo), div_up(a.lo, b.hi), div_up(a.hi, b.lo), div_up(a.hi, b.hi)});
    return {lo, hi};
}

bool is_number(const Term &t) { return t.is_number(); }

Number to_number(const Term &t) {
    switch (t.kind()) {
    case Term::Kind::Int: return t.as_integer();
    case Term::Kind::Rat: return t.as_rational();
    case Term::Kind::Float: return t.as_float();
    case Term::Kind::Breal: return t.as_breal();
    default: throw_type_error("number", t);
    }
}

Term to_term(const Number &n) {
    switch (n.index()) {
    case 0: return Term::integer(std::get<Integer>(n));
    case 1: return Term::rational(std::get<Rational>(n));
    case 2: return Term::floating(std::get<double>(n));
    default: {
        auto b = std::get<Breal>(n);
        return Term::breal(b.lo, b.hi);
    }
    }
}

Breal to_breal(const Number &n) {
    switch (n.index()) {
    case 0: {
        Rational q(std::get<Integer>(n));
        return {to_double_down(q), to_double_up(q)};
    }
    case 1: {
        const auto &q = std::get<Rational>(n);
        return {to_double_down(q), to_double_up(q)};
    }
    case 2: {
        double d = std::get<double>(n);
        return {d, d};
    }
    default: return std::get<Breal>(n);
    }
}

Number add(const Number &a, const Number &b) {
    int r = rank(a, b);
    if (r == 3)
        return breal_add(to_breal(a), to_breal(b));
    if (float_context(a, b))
        return as_double(a) + as_double(b);
    if (r == 1)
        return normalize_rat(as_rational(a) + as_rational(b));
    return Integer(std::get<Integer>(a) + std::get<Integer>(b));
}

Number neg(const Number &a) {
    switch (a.index()) {
    case 0: return Integer(-std::get<Integer>(a));
    case 1: return Rational(-std::get<Rational>(a));
    case 2: return -std::get<double>(a);
    default: {
        auto b = std::get<Breal>(a);
        return Breal{-b.hi, -b.lo};
    }
    }
}

Number sub(const Number &a, const Number &b) {
    int r = rank(a, b);
    if (r == 3)
        return breal_sub(to_breal(a), to_breal(b));
    if (float_context(a, b))
        return as_double(a) - as_double(b);
    if (r == 1)
        return normalize_rat(as_rational(a) - as_rational(b));
    return Integer(std::get<Integer>(a) - std::get<Integer>(b));
}

Number mul(const Number &a, const Number &b) {
    int r = rank(a, b);
    if (r == 3)
        return breal_mul(to_breal(a), to_breal(b));
    if (float_context(a, b))
        return as_double(a) * as_double(b);
    if (r == 1)
        return normalize_rat(as_rational(a) * as_rational(b));
    return Integer(std::get<Integer>(a) * std::get<Integer>(b));
}

Number div(const Number &a, const Number &b) {
    int r = rank(a, b);
    if (r == 3)
        return breal_div(to_breal(a), to_breal(b));
    if (float_context(a, b)) {
        double d = as_double(b);
        if (d == 0.0)
            throw_evaluation_error("zero_divisor");
        return as_double(a) / d;
    }
    Rational qb = as_rational(b);
    if (qb == 0)
        throw_evaluation_error("zero_divisor");
    Rational q = as_rational(a) / qb;
    if (r == 0 && denominator(q) == 1)
        return Integer(numerator(q));
    return q;
}

Number min(const Number &a, const Number &b) {
    if (rank(a, b) == 3)
        return hull_min(to_breal(a), to_breal(b));
    return compare_numeric(Rel::Le, a, b) ? a : b;
}

Number max(const Number &a, const Number &b) {
    if (rank(a, b) == 3)
        return hull_max(to_breal(a), to_breal(b));
    return compare_numeric(Rel::Ge, a, b) ? a : b;
}

Number abs(const Number &a) {
    switch (a.index()) {
    case 0: return Integer(boost::multiprecision::abs(std::get<Integer>(a)));
    case 1: return Rational(boost::multiprecision::abs(std::get<Rational>(a)));
    case 2: return std::fabs(std::get<double>(a));
    default: {
        auto b = std::get<Breal>(a);
        if (b.lo >= 0)
            return b;
        if (b.hi <= 0)
            return Breal{-b.hi, -b.lo};
        return Breal{0.0, std::max(-b.lo, b.hi)};
    }
    }
}

Number power(const Number &base, const Number &exp) {
    if (base.index() == 3) {
        const auto *e = std::get_if<Integer>(&exp);
        if (!e)
            throw PrologError(error_term(mk_struct("unsupported", {Term::atom("breal_power")})),
                              "bounded reals support only integer exponents");
        Breal b = std::get<Breal>(base);
        Integer n = boost::multiprecision::abs(*e);
        Breal acc{1.0, 1.0};
        for (Integer i = 0; i < n; ++i)
            acc = breal_mul(acc, b);
        if (n % 2 == 0 && acc.lo < 0)
            acc.lo = 0.0;
        if (*e < 0)
            acc = breal_div(Breal{1.0, 1.0}, acc);
        return acc;
    }
    if (exp.index() == 3)
        throw PrologError(error_term(mk_struct("unsupported", {Term::atom("breal_power")})),
                          "bounded real exponents are not supported");
    if (float_context(base, exp))
        return std::pow(as_double(base), as_double(exp));
    const auto *e = std::get_if<Integer>(&exp);
    if (!e) // rational exponent
        return std::pow(as_double(base), as_double(exp));
    if (base.index() == 0) {
        const auto &b = std::get<Integer>(base);
        if (*e >= 0)
            return ipow(b, *e);
        if (b == 0)
            throw_evaluation_error("zero_divisor");
        Integer d = ipow(b, -*e);
        if (d == 1 || d == -1)
            return Integer(d);
        return Rational(Integer(1), d);
    }
    const auto &q = std::get<Rational>(base);
    Integer n = boost::multiprecision::abs(*e);
    Rational r(ipow(numerator(q), n), ipow(denominator(q), n));
    if (*e < 0) {
        if (r == 0)
            throw_evaluation_error("zero_divisor");
        r = 1 / r;
    }
    return r;
}

std::optional<Rel> rel_from_name(std::string_view name) {
    if (name == "<")
        return Rel::Lt;
    if (name == "=<")
        return Rel::Le;
    if (name == ">")
        return Rel::Gt;
    if (name == ">=")
        return Rel::Ge;
    if (name == "=:=")
        return Rel::Eq;
    if (name == "=\\=")
        return Rel::Ne;
    return std::nullopt;
}

bool compare_numeric(Rel rel, const Number &a, const Number &b) {
    auto [alo, ahi] = interval_of(a);
    auto [blo, bhi] = interval_of(b);
    // Normalize to a < b / a =< b / a =:= b.
    switch (rel) {
    case Rel::Gt: return compare_numeric(Rel::Lt, b, a);
    case Rel::Ge: return compare_numeric(Rel::Le, b, a);
    case Rel::Ne: return !compare_numeric(Rel::Eq, a, b);
    default: break;
    }
    std::optional<bool> res;
    if (rel == Rel::Lt) {
        if (cmp(ahi, blo) < 0)
            res = true;
        else if (cmp(alo, bhi) >= 0)
            res = false;
    } else if (rel == Rel::Le) {
        if (cmp(ahi, blo) <= 0)
            res = true;
        else if (cmp(alo, bhi) > 0)
            res = false;
    } else {
        if (cmp(alo, ahi) == 0 && cmp(blo, bhi) == 0 && cmp(alo, blo) == 0)
            res = true;
        else if (cmp(ahi, blo) < 0 || cmp(alo, bhi) > 0)
            res = false;
    }
    if (!res)
        throw PrologError(error_term(mk_struct("uncertain_comparison", {Term::atom("breal")})),
                          "comparison of overlapping bounded reals is undecidable");
    return *res;
}

Number Evaluator::eval(const Term &expr) const {
    static const Atom kSubscript("subscript");
    Term t = store_.deref(expr);
    if (t.is_var())
        throw_instantiation_error();
    if (t.is_number())
        return to_number(t);
    if (t.is_atom()) {
        const auto &n = t.atom().name();
        if (n == "pi")
            return M_PI;
        if (n == "e")
            return M_E;
        if (n == "inf" || n == "infinity")
            return kInf;
        type_error_evaluable(t.atom(), 0);
    }
    if (!t.is_struct())
        throw_type_error("evaluable", t);
    const auto &s = t.as_struct();
    const std::string &f = s->name.name();
    std::size_t n = s->args.size();

    if (s->name == kSubscript && n == 2) {
        Term el = subscript(store_, s->args[0], [&] {
            std::vector<Term> idx;
            Term l = store_.deref(s->args[1]);
            while (l.is_struct(".", 2)) {
                idx.push_back(l.arg(0));
                l = store_.deref(l.arg(1));
            }
            return idx;
        }());
        return eval(el);
    }
    if (n == 1) {
        if (f == "sum") {
            Number acc = Integer(0);
            Term l = store_.deref(s->args[0]);
            while (l.is_struct(".", 2)) {
                acc = add(acc, eval(l.arg(0)));
                l = store_.deref(l.arg(1));
            }
            return acc;
        }
        Number x = eval(s->args[0]);
        if (f == "-")
            return neg(x);
        if (f == "+")
            return x;
        if (f == "abs")
            return abs(x);
        if (f == "sign") {
            switch (x.index()) {
            case 0: return Integer(std::get<Integer>(x).sign());
            case 1: return Integer(std::get<Rational>(x).sign());
            case 2: {
                double d = std::get<double>(x);
                return d > 0 ? 1.0 : (d < 0 ? -1.0 : 0.0);
            }
            default: throw_type_error("number", Term::atom("breal"));
            }
        }
        if (f == "float")
            return x.index() == 3 ? x : Number(as_double(x));
        if (f == "breal")
            return to_breal(x);
        if (f == "rational" || f == "rationalize") {
            if (x.index() == 0)
                return Rational(std::get<Integer>(x));
            return exact_of(x, "rational");
        }
        if (f == "integer" || f == "round")
            return x.index() == 0 ? x : Number(round_half_away(exact_of(x, "integer")));
        if (f == "floor")
            return x.index() == 0 ? x : Number(floor_rat(exact_of(x, "integer")));
        if (f == "ceiling")
            return x.index() == 0 ? x : Number(ceil_rat(exact_of(x, "integer")));
        if (f == "truncate") {
            if (x.index() == 0)
                return x;
            Rational q = exact_of(x, "integer");
            return q >= 0 ? floor_rat(q) : ceil_rat(q);
        }
        if (f == "numerator" || f == "denominator") {
            Rational q = exact_of(x, "rational");
            return Integer(f == "numerator" ? numerator(q) : denominator(q));
        }
        if (f == "sqrt")
            return std::sqrt(as_double(x));
        if (f == "exp")
            return std::exp(as_double(x));
        if (f == "log")
            return std::log(as_double(x));
        if (f == "sin")
            return std::sin(as_double(x));
        if (f == "cos")
            return std::cos(as_double(x));
        type_error_evaluable(s->name, n);
    }
    if (n == 2) {
        Number a = eval(s->args[0]);
        Number b = eval(s->args[1]);
        if (f == "+")
            return add(a, b);
        if (f == "-")
            return sub(a, b);
        if (f == "*")
            return mul(a, b);
        if (f == "/")
            return div(a, b);
        if (f == "min")
            return min(a, b);
        if (f == "max")
            return max(a, b);
        if (f == "^" || f == "**")
            return power(a, b);
        if (f == "//" || f == "mod" || f == "rem" || f == "div") {
            const Integer &x = need_int(a, f.c_str());
            const Integer &y = need_int(b, f.c_str());
            if (y == 0)
                throw_evaluation_error("zero_divisor");
            if (f == "//")
                return Integer(x / y);
            Integer m = x % y;
            if (f == "rem")
                return m;
            if (m != 0 && ((m < 0) != (y < 0)))
                m += y;
            if (f == "mod")
                return m;
            return Integer((x - m) / y);
        }
        if (f == ">>" || f == "<<" || f == "/\\" || f == "\\/" || f == "xor") {
            const Integer &x = need_int(a, f.c_str());
            const Integer &y = need_int(b, f.c_str());
            if (f == ">>")
                return Integer(x >> y.convert_to<unsigned>());
            if (f == "<<")
                return Integer(x << y.convert_to<unsigned>());
            if (f == "/\\")
                return Integer(x & y);
            if (f == "\\/")
                return Integer(x | y);
            return Integer(x ^ y);
        }
        if (f == "breal_from_bounds") {
            double lo = to_breal(a).lo, hi = to_breal(b).hi;
            if (lo > hi)
                throw_domain_error("breal", to_term(a));
            return Breal{lo, hi};
        }
    }
    type_error_evaluable(s->name, n);
}

Integer Evaluator::eval_integer(const Term &expr) const {
    Number n = eval(expr);
    if (auto *i = std::get_if<Integer>(&n))
        return *i;
    throw_type_error("integer", to_term(n));
}

Term subscript(const Store &store, const Term &array, const std::vector<Term> &indices) {
    Evaluator ev(store);
    Term cur = store.deref(array);
    for (const auto &idx : indices) {
        if (cur.is_var())
            throw_instantiation_error();
        if (!cur.is_struct())
            throw_type_error("array", cur);
        Integer i = ev.eval_integer(idx);
        if (i < 1 || i > cur.arity())
            throw_range_error(Term::integer(i));
        cur = store.deref(cur.arg(static_cast<std::size_t>(i) - 1));
    }
    return cur;
}

Term make_array(Store &store, const std::vector<std::int64_t> &dims) {
    static const Atom kArray("[]");
    if (dims.empty())
        return store.new_var();
    for (auto d : dims)
        if (d < 1)
            throw_domain_error("positive_integer", Term::integer(d));
    std::vector<std::int64_t> rest(dims.begin() + 1, dims.end());
    std::vector<Term> elems;
    elems.reserve(static_cast<std::size_t>(dims.front()));
    for (std::int64_t i = 0; i < dims.front(); ++i)
        elems.push_back(make_array(store, rest));
    return mk_struct(kArray, std::move(elems));
}

std::vector<std::int64_t> array_dims(const Store &store, const Term &array) {
    static const Atom kArray("[]");
    std::vector<std::int64_t> dims;
    Term t = store.deref(array);
    while (t.is_struct() && t.as_struct()->name == kArray) {
        dims.push_back(static_cast<std::int64_t>(t.arity()));
        t = store.deref(t.arg(0));
    }
    return dims;
}

} // namespace clpk::arith
