#pragma once

#include <compare>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace clpk {

using Integer = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

// Interned symbol. Two atoms are equal iff their names are equal.
class Atom {
public:
    Atom() : id_(0) {}
    explicit Atom(std::string_view name);

    const std::string &name() const;
    std::uint32_t id() const { return id_; }
    static Atom from_id(std::uint32_t id) {
        Atom a;
        a.id_ = id;
        return a;
    }

    friend bool operator==(Atom a, Atom b) { return a.id_ == b.id_; }
    friend bool operator!=(Atom a, Atom b) { return a.id_ != b.id_; }

private:
    std::uint32_t id_;
};

struct VarRef {
    std::uint32_t id;
    friend bool operator==(VarRef a, VarRef b) { return a.id == b.id; }
};

struct SuspRef {
    std::uint32_t id;
    friend bool operator==(SuspRef a, SuspRef b) { return a.id == b.id; }
};

// Closed float interval known to contain an exact real value.
struct Breal {
    double lo;
    double hi;
};

class Term;
struct Struct;
using StructPtr = std::shared_ptr<Struct>;

class Term {
public:
    enum class Kind : std::uint8_t { Var, Atom, Int, Rat, Float, Breal, Str, Struct, Susp };

    Term() : v_(Atom()) {}
    Term(VarRef v) : v_(v) {}
    Term(Atom a) : v_(a) {}
    Term(SuspRef s) : v_(s) {}
    Term(StructPtr s);

    static Term integer(std::int64_t i) { return Term(Small{i}); }
    static Term integer(const Integer &i);
    // Normalizes; a rational with unit denominator is still a rational.
    static Term rational(const Rational &r);
    static Term rational(const Integer &num, const Integer &den);
    static Term floating(double d) { return Term(Float{d}); }
    static Term breal(double lo, double hi);
    static Term string(std::string s);
    static Term atom(std::string_view name) { return Term(Atom(name)); }

    Kind kind() const;
    bool is_var() const { return std::holds_alternative<VarRef>(v_); }
    bool is_atom() const { return std::holds_alternative<Atom>(v_); }
    bool is_atom(std::string_view name) const;
    bool is_int() const;
    bool is_small_int() const { return std::holds_alternative<Small>(v_); }
    bool is_rat() const { return std::holds_alternative<RatPtr>(v_); }
    bool is_float() const { return std::holds_alternative<Float>(v_); }
    bool is_breal() const { return std::holds_alternative<Breal>(v_); }
    bool is_number() const;
    bool is_str() const { return std::holds_alternative<StrPtr>(v_); }
    bool is_struct() const { return std::holds_alternative<StructPtr>(v_); }
    bool is_struct(std::string_view name, std::size_t arity) const;
    bool is_struct(Atom name, std::size_t arity) const;
    bool is_atom(Atom a) const { return is_atom() && atom() == a; }
    bool is_susp() const { return std::holds_alternative<SuspRef>(v_); }
    bool is_atomic() const { return !is_var() && !is_struct(); }
    bool is_callable() const { return is_atom() || is_struct(); }

    VarRef var() const { return std::get<VarRef>(v_); }
    Atom atom() const { return std::get<Atom>(v_); }
    std::int64_t small_int() const { return std::get<Small>(v_).v; }
    Integer as_integer() const;
    const Rational &as_rational() const { return *std::get<RatPtr>(v_); }
    double as_float() const { return std::get<Float>(v_).v; }
    Breal as_breal() const { return std::get<Breal>(v_); }
    const std::string &as_str() const { return *std::get<StrPtr>(v_); }
    const StructPtr &as_struct() const { return std::get<StructPtr>(v_); }
    SuspRef susp() const { return std::get<SuspRef>(v_); }

    // Functor name of a struct or the atom itself.
    Atom functor() const;
    std::size_t arity() const;
    // i is 0-based here; use arg_at for the 1-based checked accessor.
    const Term &arg(std::size_t i) const;

    // Identity: same variable, same atom, same number of the same type,
    // or the same struct object. Not structural equality.
    bool same_node(const Term &o) const;

private:
    struct Small { std::int64_t v; };
    struct Float { double v; };
    using BigPtr = std::shared_ptr<const Integer>;
    using RatPtr = std::shared_ptr<const Rational>;
    using StrPtr = std::shared_ptr<const std::string>;

    explicit Term(BigPtr b) : v_(std::move(b)) {}
    explicit Term(RatPtr r) : v_(std::move(r)) {}
    explicit Term(StrPtr s) : v_(std::move(s)) {}
    explicit Term(Small s) : v_(s) {}
    explicit Term(Float f) : v_(f) {}
    explicit Term(Breal b) : v_(b) {}

    std::variant<VarRef, Atom, Small, BigPtr, RatPtr, Float, Breal, StrPtr, StructPtr, SuspRef> v_;
};

struct Struct {
    Atom name;
    std::vector<Term> args;
    // Per-argument timestamp of the last value trail entry; sized lazily.
    std::vector<std::uint64_t> stamps;
};

inline bool Term::is_struct(Atom name, std::size_t arity) const {
    return is_struct() && as_struct()->name == name && as_struct()->args.size() == arity;
}

// Base class for errors raised with a Prolog error term attached.
class PrologError : public std::runtime_error {
public:
    PrologError(Term ball, std::string message)
        : std::runtime_error(std::move(message)), ball_(std::move(ball)) {}
    const Term &ball() const { return ball_; }

private:
    Term ball_;
};

Term mk_struct(std::string_view name, std::vector<Term> args);
Term mk_struct(Atom name, std::vector<Term> args);
Term mk_list(std::span<const Term> items, Term tail = Term(Atom("[]")));
Term mk_list(const std::vector<Term> &items, Term tail = Term(Atom("[]")));

// 1-based checked argument access on a structure.
Term arg_at(std::size_t i, const Term &s);

// error(Formal, Context) builders.
Term error_term(Term formal, Term context = Term(Atom("unknown")));
[[noreturn]] void throw_type_error(std::string_view type, const Term &culprit);
[[noreturn]] void throw_domain_error(std::string_view domain, const Term &culprit);
[[noreturn]] void throw_range_error(const Term &culprit);
[[noreturn]] void throw_instantiation_error();
[[noreturn]] void throw_existence_error(std::string_view what, const Term &culprit);
[[noreturn]] void throw_evaluation_error(std::string_view what);

// Number helpers shared by several modules.
Rational normalize(const Integer &num, const Integer &den);
// Exact rational value of a finite double.
Rational exact_rational(double d);
// Largest double <= q, and smallest double >= q.
double to_double_down(const Rational &q);
double to_double_up(const Rational &q);
double to_double_nearest(const Rational &q);

} // namespace clpk
