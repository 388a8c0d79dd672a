#include <cmath>

#include "clpk/store.hpp"

namespace clpk {

namespace {

int class_rank(const Term &t) {
    switch (t.kind()) {
    case Term::Kind::Var: return 0;
    case Term::Kind::Int: case Term::Kind::Rat: case Term::Kind::Float: case Term::Kind::Breal: return 1;
    case Term::Kind::Atom: return 2;
    case Term::Kind::Str: return 3;
    case Term::Kind::Susp: return 4;
    case Term::Kind::Struct: return 5;
    }
    return 6;
}

int type_rank(const Term &t) {
    switch (t.kind()) {
    case Term::Kind::Int: return 0;
    case Term::Kind::Rat: return 1;
    case Term::Kind::Float: return 2;
    default: return 3;
    }
}

template <class T> int sign(const T &a, const T &b) { return a < b ? -1 : (b < a ? 1 : 0); }

// Compares two doubles that may be infinite or NaN (NaN sorts last).
int cmp_float(double a, double b) {
    if (std::isnan(a) || std::isnan(b))
        return std::isnan(a) - std::isnan(b);
    return sign(a, b);
}

int cmp_double_rational(double d, const Rational &q) {
    if (std::isnan(d))
        return 1;
    if (std::isinf(d))
        return d > 0 ? 1 : -1;
    return sign(exact_rational(d), q);
}

Rational exact_of(const Term &t) { return t.is_rat() ? t.as_rational() : Rational(t.as_integer()); }

double lead(const Term &t) { return t.is_float() ? t.as_float() : t.as_breal().lo; }

int compare_numbers(const Term &a, const Term &b) {
    bool fa = a.is_float() || a.is_breal(), fb = b.is_float() || b.is_breal();
    int c;
    if (!fa && !fb)
        c = sign(exact_of(a), exact_of(b));
    else if (fa && fb)
        c = cmp_float(lead(a), lead(b));
    else if (fa)
        c = cmp_double_rational(lead(a), exact_of(b));
    else
        c = -cmp_double_rational(lead(b), exact_of(a));
    if (c)
        return c;
    c = sign(type_rank(a), type_rank(b));
    if (c || !a.is_breal())
        return c;
    return cmp_float(a.as_breal().hi, b.as_breal().hi);
}

} // namespace

int compare_terms(const Store &store, const Term &a_in, const Term &b_in) {
    Term a = store.deref(a_in), b = store.deref(b_in);
    int ra = class_rank(a), rb = class_rank(b);
    if (ra != rb)
        return ra < rb ? -1 : 1;
    switch (a.kind()) {
    case Term::Kind::Var: return sign(a.var().id, b.var().id);
    case Term::Kind::Atom: return a.atom() == b.atom() ? 0 : sign(a.atom().name(), b.atom().name());
    case Term::Kind::Str: return sign(a.as_str(), b.as_str());
    case Term::Kind::Susp: return sign(a.susp().id, b.susp().id);
    case Term::Kind::Struct: {
        if (a.same_node(b))
            return 0;
        if (int c = sign(a.arity(), b.arity()))
            return c;
        if (a.functor() != b.functor())
            return sign(a.functor().name(), b.functor().name());
        for (std::size_t i = 0; i < a.arity(); ++i)
            if (int c = compare_terms(store, a.arg(i), b.arg(i)))
                return c;
        return 0;
    }
    default: return compare_numbers(a, b);
    }
}

} // namespace clpk
