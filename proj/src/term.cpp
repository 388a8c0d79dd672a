#include "clpk/term.hpp"

#include <cmath>
#include <deque>
#include <limits>
#include <mutex>
#include <unordered_map>

namespace clpk {

namespace {

struct AtomTable {
    std::mutex mu;
    std::deque<std::string> names;
    std::unordered_map<std::string_view, std::uint32_t> index;

    AtomTable() { intern("[]"); }

    std::uint32_t intern(std::string_view name) {
        auto it = index.find(name);
        if (it != index.end())
            return it->second;
        names.emplace_back(name);
        auto id = static_cast<std::uint32_t>(names.size() - 1);
        index.emplace(names.back(), id);
        return id;
    }
};

AtomTable &atom_table() {
    static AtomTable table;
    return table;
}

} // namespace

Atom::Atom(std::string_view name) {
    auto &t = atom_table();
    std::lock_guard lock(t.mu);
    id_ = t.intern(name);
}

const std::string &Atom::name() const {
    auto &t = atom_table();
    std::lock_guard lock(t.mu);
    return t.names[id_];
}

Term::Term(StructPtr s) : v_(std::move(s)) {}

Term Term::integer(const Integer &i) {
    if (i >= std::numeric_limits<std::int64_t>::min() && i <= std::numeric_limits<std::int64_t>::max())
        return Term(Small{i.convert_to<std::int64_t>()});
    return Term(std::make_shared<const Integer>(i));
}

Term Term::rational(const Rational &r) { return Term(std::make_shared<const Rational>(r)); }

Term Term::rational(const Integer &num, const Integer &den) {
    return Term(std::make_shared<const Rational>(normalize(num, den)));
}

Term Term::breal(double lo, double hi) {
    if (std::isnan(lo) || std::isnan(hi) || lo > hi)
        throw PrologError(error_term(mk_struct("domain_error", {Term::atom("breal"), Term::floating(lo)})),
                          "invalid bounded real bounds");
    return Term(Breal{lo, hi});
}

Term Term::string(std::string s) { return Term(std::make_shared<const std::string>(std::move(s))); }

Term::Kind Term::kind() const {
    switch (v_.index()) {
    case 0: return Kind::Var;
    case 1: return Kind::Atom;
    case 2:
    case 3: return Kind::Int;
    case 4: return Kind::Rat;
    case 5: return Kind::Float;
    case 6: return Kind::Breal;
    case 7: return Kind::Str;
    case 8: return Kind::Struct;
    default: return Kind::Susp;
    }
}

bool Term::is_atom(std::string_view name) const { return is_atom() && atom().name() == name; }

bool Term::is_int() const { return std::holds_alternative<Small>(v_) || std::holds_alternative<BigPtr>(v_); }

bool Term::is_number() const {
    auto k = kind();
    return k == Kind::Int || k == Kind::Rat || k == Kind::Float || k == Kind::Breal;
}

bool Term::is_struct(std::string_view name, std::size_t n) const {
    if (!is_struct())
        return false;
    const auto &s = as_struct();
    return s->args.size() == n && s->name.name() == name;
}

Integer Term::as_integer() const {
    if (auto *s = std::get_if<Small>(&v_))
        return Integer(s->v);
    return *std::get<BigPtr>(v_);
}

Atom Term::functor() const {
    if (is_struct())
        return as_struct()->name;
    return atom();
}

std::size_t Term::arity() const { return is_struct() ? as_struct()->args.size() : 0; }

const Term &Term::arg(std::size_t i) const { return as_struct()->args[i]; }

bool Term::same_node(const Term &o) const {
    if (v_.index() != o.v_.index())
        return false;
    switch (v_.index()) {
    case 0: return var() == o.var();
    case 1: return atom() == o.atom();
    case 2: return small_int() == o.small_int();
    case 3: return as_integer() == o.as_integer();
    case 4: return as_rational() == o.as_rational();
    case 5: {
        double a = as_float(), b = o.as_float();
        return a == b && std::signbit(a) == std::signbit(b);
    }
    case 6: return as_breal().lo == o.as_breal().lo && as_breal().hi == o.as_breal().hi;
    case 7: return as_str() == o.as_str();
    case 8: return as_struct() == o.as_struct();
    default: return susp() == o.susp();
    }
}

Term mk_struct(Atom name, std::vector<Term> args) {
    if (args.empty())
        throw PrologError(error_term(mk_struct("domain_error", {Term::atom("arity"), Term::integer(0)})),
                          "structure needs at least one argument");
    auto s = std::make_shared<Struct>();
    s->name = name;
    s->args = std::move(args);
    return Term(std::move(s));
}

Term mk_struct(std::string_view name, std::vector<Term> args) { return mk_struct(Atom(name), std::move(args)); }

Term mk_list(std::span<const Term> items, Term tail) {
    static const Atom dot(".");
    Term out = std::move(tail);
    for (auto it = items.rbegin(); it != items.rend(); ++it)
        out = mk_struct(dot, {*it, out});
    return out;
}

Term mk_list(const std::vector<Term> &items, Term tail) {
    return mk_list(std::span<const Term>(items.data(), items.size()), std::move(tail));
}

Term arg_at(std::size_t i, const Term &s) {
    if (!s.is_struct())
        throw_type_error("compound", s);
    if (i < 1 || i > s.arity())
        throw_range_error(Term::integer(static_cast<std::int64_t>(i)));
    return s.arg(i - 1);
}

Term error_term(Term formal, Term context) { return mk_struct("error", {std::move(formal), std::move(context)}); }

void throw_type_error(std::string_view type, const Term &culprit) {
    throw PrologError(error_term(mk_struct("type_error", {Term::atom(type), culprit})),
                      "type error: expected " + std::string(type));
}

void throw_domain_error(std::string_view domain, const Term &culprit) {
    throw PrologError(error_term(mk_struct("domain_error", {Term::atom(domain), culprit})),
                      "domain error: " + std::string(domain));
}

void throw_range_error(const Term &culprit) {
    throw PrologError(error_term(mk_struct("range_error", {culprit})), "index out of range");
}

void throw_instantiation_error() {
    throw PrologError(error_term(Term::atom("instantiation_error")), "instantiation error");
}

void throw_existence_error(std::string_view what, const Term &culprit) {
    throw PrologError(error_term(mk_struct("existence_error", {Term::atom(what), culprit})),
                      "existence error: " + std::string(what));
}

void throw_evaluation_error(std::string_view what) {
    throw PrologError(error_term(mk_struct("evaluation_error", {Term::atom(what)})),
                      "evaluation error: " + std::string(what));
}

Rational normalize(const Integer &num, const Integer &den) {
    if (den == 0)
        throw_evaluation_error("zero_divisor");
    return Rational(num, den);
}

Rational exact_rational(double d) {
    if (!std::isfinite(d))
        throw_evaluation_error("undefined");
    if (d == 0.0)
        return Rational(0);
    int exp = 0;
    double mant = std::frexp(d, &exp);
    // mant in [0.5, 1): scale to a 53-bit integer
    auto m = static_cast<std::int64_t>(std::ldexp(mant, 53));
    exp -= 53;
    Integer num(m);
    if (exp >= 0)
        return Rational(num << exp);
    Integer den(1);
    den <<= -exp;
    return Rational(num, den);
}

namespace {

// Value of d compared with q; d may be infinite.
int cmp_double(double d, const Rational &q) {
    if (std::isinf(d))
        return d > 0 ? 1 : -1;
    Rational e = exact_rational(d);
    return e < q ? -1 : (e > q ? 1 : 0);
}

} // namespace

double to_double_nearest(const Rational &q) { return q.convert_to<double>(); }

double to_double_down(const Rational &q) {
    double d = q.convert_to<double>();
    if (std::isnan(d))
        d = 0.0;
    while (cmp_double(d, q) > 0)
        d = std::nextafter(d, -std::numeric_limits<double>::infinity());
    for (;;) {
        double n = std::nextafter(d, std::numeric_limits<double>::infinity());
        if (std::isinf(n) || cmp_double(n, q) > 0)
            break;
        d = n;
    }
    return d;
}

double to_double_up(const Rational &q) { return -to_double_down(-q); }

} // namespace clpk
