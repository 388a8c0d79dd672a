#include "clpk/ic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "clpk/arith.hpp"
#include "clpk/engine.hpp"

namespace clpk {
namespace ic {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
const Atom kIc("ic"), kInteger("integer"), kReal("real"), kNil("[]"), kDot("."), kStar("*"), kSubscript("subscript");

// Payload: ic(Lo, Hi, Type, Holes, MinL, MaxL, HoleL, TypeL)
enum Slot : std::size_t { kLo = 1, kHi, kType, kHoles, kMinL, kMaxL, kHoleL, kTypeL };

Integer floor_div(const Integer &n, const Integer &d) {
    Integer q = n / d;
    if (n % d != 0 && ((n < 0) != (d < 0)))
        q -= 1;
    return q;
}
Integer floor_q(const Rational &r) { return floor_div(numerator(r), denominator(r)); }
Integer ceil_q(const Rational &r) { return -floor_div(-numerator(r), denominator(r)); }

Integer to_int(double d) { return numerator(exact_rational(d)); }

XR xr(const Integer &i) { return XR::finite(Rational(i)); }

XR mul(const Rational &a, const XR &x) {
    if (!x.finite())
        return {a > 0 ? x.inf : -x.inf, {}};
    return XR::finite(a * x.v);
}

Term holes_term(const std::vector<Integer> &holes) {
    std::vector<Term> items;
    for (const auto &h : holes)
        items.push_back(Term::integer(h));
    return mk_list(items);
}

Term make_payload(double lo, double hi, bool integral, const std::vector<Integer> &holes = {}) {
    return mk_struct(kIc, {Term::floating(lo), Term::floating(hi), Term(integral ? kInteger : kReal), holes_term(holes),
                           Term(kNil), Term(kNil), Term(kNil), Term(kNil)});
}

Domain read(const Store &s, const Term &p) {
    Domain d;
    d.lo = s.deref(p.arg(kLo - 1)).as_float();
    d.hi = s.deref(p.arg(kHi - 1)).as_float();
    d.integral = s.deref(p.arg(kType - 1)).is_atom(kInteger);
    for (const auto &h : list_to_vector(s, p.arg(kHoles - 1)))
        d.holes.push_back(s.deref(h).as_integer());
    return d;
}

Term ensure(Kernel &k, VarRef v) {
    if (auto p = k.store.get_attr(v, kIc))
        return *p;
    Term p = make_payload(-kInf, kInf, false);
    k.store.put_attr(v, kIc, p);
    return p;
}

void wake(Kernel &k, VarRef v, std::string_view list) {
    k.attrs.wake(v, "ic", list);
}

// Binds a variable whose domain collapsed to one value.
bool settle(Kernel &k, VarRef v) {
    Term x = k.store.deref(Term(v));
    if (!x.is_var())
        return true;
    Domain d = read(k.store, *k.store.get_attr(x.var(), kIc));
    if (d.lo != d.hi)
        return true;
    Term val = d.integral ? Term::integer(to_int(d.lo)) : Term::floating(d.lo);
    return k.store.unify(x, val);
}

void prune_holes(Kernel &k, const Term &p, Domain &d) {
    auto old = d.holes.size();
    std::erase_if(d.holes, [&](const Integer &h) { return compare(xr(h), XR::from_double(d.lo)) <= 0 ||
                                                          compare(xr(h), XR::from_double(d.hi)) >= 0; });
    if (d.holes.size() != old)
        k.store.set_arg(kHoles, p, holes_term(d.holes));
}

Term concat_lists(const Store &s, const Term &front, const Term &back) {
    return mk_list(list_to_vector(s, front), back);
}

[[noreturn]] void unsupported(const std::string &what, const Term &culprit) {
    throw PrologError(error_term(mk_struct("unsupported", {Term::atom(what)}), culprit), "unsupported: " + what);
}

Rational exact_number(const Term &t) {
    if (t.is_int())
        return Rational(t.as_integer());
    if (t.is_rat())
        return t.as_rational();
    if (t.is_float()) {
        if (!std::isfinite(t.as_float()))
            unsupported("infinite_coefficient", t);
        return exact_rational(t.as_float());
    }
    unsupported("breal_coefficient", t);
}

Rational eval_rational(const Store &s, const Term &e) {
    arith::Number n = arith::Evaluator(s).eval(e);
    return exact_number(arith::to_term(n));
}

struct LinAcc {
    Rational c;
    std::vector<std::pair<Rational, Term>> terms;

    void add(const Rational &a, VarRef v) {
        for (auto &[coef, x] : terms)
            if (x.var() == v) {
                coef += a;
                return;
            }
        terms.emplace_back(a, Term(v));
    }
    void scale(const Rational &m) {
        c *= m;
        for (auto &t : terms)
            t.first *= m;
    }
};

// Accumulates m*e. Returns false when compile-time normalization has to
// give up (subscripts or anything that needs runtime values).
bool linearize(const Store &s, const Term &e_in, const Rational &m, LinAcc &acc, bool runtime, const Term &goal) {
    Term e = s.deref(e_in);
    if (e.is_var()) {
        acc.add(m, e.var());
        return true;
    }
    if (e.is_number()) {
        acc.c += m * exact_number(e);
        return true;
    }
    if (e.is_struct()) {
        const auto &st = e.as_struct();
        const std::string &f = st->name.name();
        std::size_t n = st->args.size();
        if (n == 2 && f == "+")
            return linearize(s, st->args[0], m, acc, runtime, goal) && linearize(s, st->args[1], m, acc, runtime, goal);
        if (n == 2 && f == "-")
            return linearize(s, st->args[0], m, acc, runtime, goal) && linearize(s, st->args[1], -m, acc, runtime, goal);
        if (n == 1 && f == "-")
            return linearize(s, st->args[0], -m, acc, runtime, goal);
        if (n == 1 && f == "+")
            return linearize(s, st->args[0], m, acc, runtime, goal);
        if (n == 2 && f == "*") {
            LinAcc l, r;
            if (!linearize(s, st->args[0], 1, l, runtime, goal) || !linearize(s, st->args[1], 1, r, runtime, goal))
                return false;
            if (!l.terms.empty() && !r.terms.empty())
                unsupported("nonlinear", goal);
            LinAcc &var_side = l.terms.empty() ? r : l;
            Rational k = (l.terms.empty() ? l.c : r.c) * m;
            var_side.scale(k);
            acc.c += var_side.c;
            for (auto &[a, x] : var_side.terms)
                acc.add(a, x.var());
            return true;
        }
        if (n == 2 && f == "/") {
            LinAcc l, r;
            if (!linearize(s, st->args[0], 1, l, runtime, goal) || !linearize(s, st->args[1], 1, r, runtime, goal))
                return false;
            if (!r.terms.empty() || r.c == 0)
                unsupported("nonlinear", goal);
            l.scale(m / r.c);
            acc.c += l.c;
            for (auto &[a, x] : l.terms)
                acc.add(a, x.var());
            return true;
        }
        if (n == 2 && st->name == kSubscript) {
            if (!runtime)
                return false;
            Term el = arith::subscript(s, st->args[0], list_to_vector(s, st->args[1]));
            return linearize(s, el, m, acc, runtime, goal);
        }
    }
    if (!runtime)
        return false;
    if (term_vars(s, e).empty() && !e.is_str()) {
        acc.c += m * eval_rational(s, e);
        return true;
    }
    unsupported("nonlinear", goal);
}

std::optional<LinRel> rel_of(Atom a) {
    const std::string &n = a.name();
    if (n == "=<")
        return LinRel::Le;
    if (n == "=")
        return LinRel::Eq;
    if (n == "=\\=")
        return LinRel::Ne;
    return std::nullopt;
}

const char *rel_name(LinRel r) { return r == LinRel::Le ? "=<" : r == LinRel::Eq ? "=" : "=\\="; }

Term rational_term(const Rational &q) {
    if (denominator(q) == 1)
        return Term::integer(numerator(q));
    return Term::rational(q);
}

// For real variables, narrowing by less than this is not worth a rerun.
bool negligible(double old_bound, const Rational &b) {
    if (!std::isfinite(old_bound))
        return false;
    double nb = to_double_nearest(b);
    return std::fabs(nb - old_bound) <= 1e-9 * std::max(1.0, std::fabs(old_bound));
}

Status le_pass(Kernel &k, const std::vector<std::pair<Rational, Term>> &terms, const Rational &c, bool &changed) {
    struct Item {
        Rational a;
        Term x;
        XR lo, hi, min;
    };
    std::vector<Item> items;
    int ninf = 0;
    Rational fsum = c;
    for (const auto &[a, x] : terms) {
        auto [lo, hi] = bounds(k, x);
        XR m = a > 0 ? mul(a, lo) : mul(a, hi);
        if (m.inf < 0)
            ++ninf;
        else if (m.inf == 0)
            fsum += m.v;
        items.push_back({a, k.store.deref(x), lo, hi, m});
    }
    if (ninf == 0 && fsum > 0)
        return Status::Fail;
    for (const auto &it : items) {
        Rational rest;
        if (it.min.inf < 0) {
            if (ninf > 1)
                continue;
            rest = fsum;
        } else {
            if (ninf > 0)
                continue;
            rest = fsum - it.min.v;
        }
        Rational b = -rest / it.a;
        Term x = k.store.deref(it.x);
        if (x.is_var()) {
            auto d = domain_of(k, x);
            if (d && !d->integral && negligible(it.a > 0 ? d->hi : d->lo, b))
                continue;
        }
        Change r = it.a > 0 ? impose_max(k, x, XR::finite(b)) : impose_min(k, x, XR::finite(b));
        if (r == Change::Fail)
            return Status::Fail;
        if (r == Change::Narrowed)
            changed = true;
    }
    return Status::Pending;
}

bool le_entailed(Kernel &k, const std::vector<std::pair<Rational, Term>> &terms, const Rational &c) {
    Rational sum = c;
    for (const auto &[a, x] : terms) {
        auto [lo, hi] = bounds(k, x);
        XR m = a > 0 ? mul(a, hi) : mul(a, lo);
        if (!m.finite())
            return false;
        sum += m.v;
    }
    return sum <= 0;
}

bool all_fixed(Kernel &k, const std::vector<std::pair<Rational, Term>> &terms) {
    for (const auto &t : terms)
        if (!k.store.deref(t.second).is_number())
            return false;
    return true;
}

constexpr int kMaxPasses = 64;

Status propagate_ne(Kernel &k, const LinCon &c) {
    std::vector<std::size_t> open;
    Rational sum = c.constant;
    bool fuzzy = false;
    for (std::size_t i = 0; i < c.terms.size(); ++i) {
        Term x = k.store.deref(c.terms[i].second);
        if (x.is_var())
            open.push_back(i);
        else if (x.is_breal())
            fuzzy = true;
        else
            sum += c.terms[i].first * exact_number(x);
    }
    if (fuzzy)
        return Status::Entailed;
    if (open.empty())
        return sum == 0 ? Status::Fail : Status::Entailed;
    if (open.size() > 1)
        return Status::Pending;
    const auto &[a, x] = c.terms[open[0]];
    Rational v = -sum / a;
    auto d = domain_of(k, x);
    if (d && d->integral) {
        if (denominator(v) == 1 && exclude_value(k, x, numerator(v)) == Change::Fail)
            return Status::Fail;
        return Status::Entailed;
    }
    return Status::Pending;
}

} // namespace

XR XR::from_double(double d) {
    if (std::isinf(d))
        return {d < 0 ? -1 : 1, {}};
    return finite(exact_rational(d));
}

int compare(const XR &a, const XR &b) {
    if (a.inf != 0 || b.inf != 0)
        return a.inf == b.inf ? 0 : (a.inf < b.inf ? -1 : 1);
    return a.v < b.v ? -1 : (a.v > b.v ? 1 : 0);
}

Integer Domain::size() const {
    if (!integral || !std::isfinite(lo) || !std::isfinite(hi))
        throw PrologError(error_term(mk_struct("unsupported", {Term::atom("infinite_domain")})),
                          "domain is not finite and integral");
    return to_int(hi) - to_int(lo) + 1 - Integer(holes.size());
}

bool Domain::contains(const Integer &v) const {
    if (compare(xr(v), XR::from_double(lo)) < 0 || compare(xr(v), XR::from_double(hi)) > 0)
        return false;
    return !std::binary_search(holes.begin(), holes.end(), v);
}

std::optional<Domain> domain_of(Kernel &k, const Term &x_in) {
    Term x = k.store.deref(x_in);
    if (x.is_var()) {
        auto p = k.store.get_attr(x.var(), kIc);
        if (!p)
            return std::nullopt;
        return read(k.store, *p);
    }
    if (x.is_int()) {
        double d = x.as_integer().convert_to<double>();
        return Domain{d, d, true, {}};
    }
    if (x.is_number()) {
        Breal b = arith::to_breal(arith::to_number(x));
        return Domain{b.lo, b.hi, false, {}};
    }
    throw_type_error("number", x);
}

std::pair<XR, XR> bounds(Kernel &k, const Term &x_in) {
    Term x = k.store.deref(x_in);
    if (x.is_var()) {
        auto p = k.store.get_attr(x.var(), kIc);
        if (!p)
            return {XR::neg_inf(), XR::pos_inf()};
        Domain d = read(k.store, *p);
        return {XR::from_double(d.lo), XR::from_double(d.hi)};
    }
    if (x.is_breal())
        return {XR::from_double(x.as_breal().lo), XR::from_double(x.as_breal().hi)};
    if (x.is_float())
        return {XR::from_double(x.as_float()), XR::from_double(x.as_float())};
    if (x.is_number()) {
        XR v = XR::finite(exact_number(x));
        return {v, v};
    }
    throw_type_error("number", x);
}

Change impose_min(Kernel &k, const Term &x_in, const XR &b) {
    Term x = k.store.deref(x_in);
    if (!x.is_var()) {
        auto [lo, hi] = bounds(k, x);
        return compare(hi, b) < 0 ? Change::Fail : Change::Same;
    }
    if (b.inf < 0)
        return Change::Same;
    VarRef v = x.var();
    Term p = ensure(k, v);
    Domain d = read(k.store, p);
    if (b.inf > 0)
        return Change::Fail;
    XR hi = XR::from_double(d.hi);
    double nlo;
    if (d.integral) {
        Integer c = ceil_q(b.v);
        for (const auto &h : d.holes) {
            if (h == c)
                ++c;
            else if (h > c)
                break;
        }
        if (compare(xr(c), XR::from_double(d.lo)) <= 0)
            return Change::Same;
        if (compare(xr(c), hi) > 0)
            return Change::Fail;
        nlo = c.convert_to<double>();
    } else {
        if (compare(b, hi) > 0)
            return Change::Fail;
        nlo = std::min(to_double_down(b.v), d.hi);
        if (nlo <= d.lo)
            return Change::Same;
    }
    d.lo = nlo;
    k.store.set_arg(kLo, p, Term::floating(nlo));
    prune_holes(k, p, d);
    wake(k, v, "min");
    k.attrs.notify_constrained(Term(v));
    return settle(k, v) ? Change::Narrowed : Change::Fail;
}

Change impose_max(Kernel &k, const Term &x_in, const XR &b) {
    Term x = k.store.deref(x_in);
    if (!x.is_var()) {
        auto [lo, hi] = bounds(k, x);
        return compare(lo, b) > 0 ? Change::Fail : Change::Same;
    }
    if (b.inf > 0)
        return Change::Same;
    VarRef v = x.var();
    Term p = ensure(k, v);
    Domain d = read(k.store, p);
    if (b.inf < 0)
        return Change::Fail;
    XR lo = XR::from_double(d.lo);
    double nhi;
    if (d.integral) {
        Integer c = floor_q(b.v);
        for (auto it = d.holes.rbegin(); it != d.holes.rend(); ++it) {
            if (*it == c)
                --c;
            else if (*it < c)
                break;
        }
        if (compare(xr(c), XR::from_double(d.hi)) >= 0)
            return Change::Same;
        if (compare(xr(c), lo) < 0)
            return Change::Fail;
        nhi = c.convert_to<double>();
    } else {
        if (compare(b, lo) < 0)
            return Change::Fail;
        nhi = std::max(to_double_up(b.v), d.lo);
        if (nhi >= d.hi)
            return Change::Same;
    }
    d.hi = nhi;
    k.store.set_arg(kHi, p, Term::floating(nhi));
    prune_holes(k, p, d);
    wake(k, v, "max");
    k.attrs.notify_constrained(Term(v));
    return settle(k, v) ? Change::Narrowed : Change::Fail;
}

Change exclude_value(Kernel &k, const Term &x_in, const Integer &val) {
    Term x = k.store.deref(x_in);
    if (!x.is_var())
        return x.is_int() && x.as_integer() == val ? Change::Fail : Change::Same;
    VarRef v = x.var();
    auto p = k.store.get_attr(v, kIc);
    if (!p)
        return Change::Same;
    Domain d = read(k.store, *p);
    if (!d.integral)
        return Change::Same;
    XR xv = xr(val);
    int cl = compare(xv, XR::from_double(d.lo)), ch = compare(xv, XR::from_double(d.hi));
    if (cl < 0 || ch > 0)
        return Change::Same;
    if (cl == 0)
        return impose_min(k, x, xr(val + 1));
    if (ch == 0)
        return impose_max(k, x, xr(val - 1));
    auto it = std::lower_bound(d.holes.begin(), d.holes.end(), val);
    if (it != d.holes.end() && *it == val)
        return Change::Same;
    d.holes.insert(it, val);
    k.store.set_arg(kHoles, *p, holes_term(d.holes));
    wake(k, v, "hole");
    k.attrs.notify_constrained(Term(v));
    return Change::Narrowed;
}

Change impose_integrality(Kernel &k, const Term &x_in) {
    Term x = k.store.deref(x_in);
    if (!x.is_var()) {
        if (x.is_int())
            return Change::Same;
        if (x.is_number())
            return Change::Fail;
        throw_type_error("number", x);
    }
    VarRef v = x.var();
    Term p = ensure(k, v);
    Domain d = read(k.store, p);
    if (d.integral)
        return Change::Same;
    double lo = std::isfinite(d.lo) ? std::ceil(d.lo) : d.lo;
    double hi = std::isfinite(d.hi) ? std::floor(d.hi) : d.hi;
    if (lo > hi)
        return Change::Fail;
    k.store.set_arg(kType, p, Term(kInteger));
    if (lo != d.lo)
        k.store.set_arg(kLo, p, Term::floating(lo));
    if (hi != d.hi)
        k.store.set_arg(kHi, p, Term::floating(hi));
    wake(k, v, "type");
    if (lo != d.lo)
        wake(k, v, "min");
    if (hi != d.hi)
        wake(k, v, "max");
    k.attrs.notify_constrained(Term(v));
    return settle(k, v) ? Change::Narrowed : Change::Fail;
}

bool declare_domain(Kernel &k, const Term &x_in, const XR &lo, const XR &hi, bool integral) {
    Term x = k.store.deref(x_in);
    if (x.is_var() && !k.store.get_attr(x.var(), kIc)) {
        double l = lo.inf < 0 ? -kInf : lo.inf > 0 ? kInf : to_double_down(lo.v);
        double h = hi.inf > 0 ? kInf : hi.inf < 0 ? -kInf : to_double_up(hi.v);
        if (l > h)
            return false;
        k.store.put_attr(x.var(), kIc, make_payload(l, h, false));
        k.attrs.notify_constrained(x);
        if (integral && impose_integrality(k, x) == Change::Fail)
            return false;
        return settle(k, x.var());
    }
    if (integral && impose_integrality(k, x) == Change::Fail)
        return false;
    return impose_min(k, x, lo) != Change::Fail && impose_max(k, x, hi) != Change::Fail;
}

bool declare_values(Kernel &k, const Term &x, const std::vector<Integer> &values_in) {
    std::vector<Integer> values = values_in;
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    if (values.empty())
        return false;
    if (!declare_domain(k, x, xr(values.front()), xr(values.back()), true))
        return false;
    for (std::size_t i = 0; i + 1 < values.size(); ++i)
        for (Integer g = values[i] + 1; g < values[i + 1]; ++g)
            if (exclude_value(k, x, g) == Change::Fail)
                return false;
    return true;
}

std::optional<LinCon> normalize_linear(const Store &s, const Term &goal_in, bool runtime) {
    Term goal = s.deref(goal_in);
    if (!goal.is_struct() || goal.arity() != 2)
        return std::nullopt;
    const std::string &name = goal.functor().name();
    if (name.size() < 2 || (name[0] != '#' && name[0] != '$'))
        return std::nullopt;
    std::string op = name.substr(1);
    LinCon c;
    c.integral = name[0] == '#';
    Term l = goal.arg(0), r = goal.arg(1);
    bool strict = false;
    Term pos = l, neg = r;
    if (op == "=<") {
        c.rel = LinRel::Le;
    } else if (op == ">=") {
        c.rel = LinRel::Le;
        pos = r, neg = l;
    } else if (op == "<") {
        c.rel = LinRel::Le, strict = true;
    } else if (op == ">") {
        c.rel = LinRel::Le, strict = true;
        pos = r, neg = l;
    } else if (op == "=") {
        c.rel = LinRel::Eq;
    } else if (op == "\\=") {
        c.rel = LinRel::Ne;
    } else {
        return std::nullopt;
    }
    LinAcc acc;
    if (!linearize(s, pos, 1, acc, runtime, goal) || !linearize(s, neg, -1, acc, runtime, goal))
        return std::nullopt;
    std::erase_if(acc.terms, [](const auto &t) { return t.first == 0; });
    if (c.integral) {
        Integer m = denominator(acc.c);
        for (const auto &t : acc.terms)
            m = boost::multiprecision::lcm(m, denominator(t.first));
        acc.scale(Rational(m));
        // Integer-valued left side: a strict < becomes =< after adding 1.
        if (strict)
            acc.c += 1;
    }
    c.constant = acc.c;
    c.terms = std::move(acc.terms);
    return c;
}

Term lin_con_term(const LinCon &c) {
    std::vector<Term> items;
    if (c.constant != 0)
        items.push_back(mk_struct(kStar, {rational_term(c.constant), Term::integer(1)}));
    for (const auto &[a, x] : c.terms)
        items.push_back(mk_struct(kStar, {rational_term(a), x}));
    return mk_struct("ic_lin_con", {Term::atom(rel_name(c.rel)), Term::integer(c.integral ? 1 : 0), mk_list(items)});
}

LinCon lin_con_from(const Store &s, const Term &rel_t, const Term &int_t, const Term &list) {
    Term rel = s.deref(rel_t), in = s.deref(int_t);
    if (!rel.is_atom() || !rel_of(rel.atom()))
        throw_domain_error("linear_relation", rel);
    if (!in.is_int())
        throw_type_error("integer", in);
    LinCon c;
    c.rel = *rel_of(rel.atom());
    c.integral = in.as_integer() != 0;
    LinAcc acc;
    Term whole = mk_struct("ic_lin_con", {rel, in, list});
    for (const auto &e : list_to_vector(s, list))
        linearize(s, e, 1, acc, true, whole);
    std::erase_if(acc.terms, [](const auto &t) { return t.first == 0; });
    c.constant = acc.c;
    c.terms = std::move(acc.terms);
    return c;
}

Status propagate(Kernel &k, const LinCon &c) {
    if (c.rel == LinRel::Ne)
        return propagate_ne(k, c);
    std::vector<std::pair<Rational, Term>> negated;
    if (c.rel == LinRel::Eq)
        for (const auto &[a, x] : c.terms)
            negated.emplace_back(-a, x);
    for (int pass = 0; pass < kMaxPasses; ++pass) {
        bool changed = false;
        if (le_pass(k, c.terms, c.constant, changed) == Status::Fail)
            return Status::Fail;
        if (c.rel == LinRel::Eq && le_pass(k, negated, -c.constant, changed) == Status::Fail)
            return Status::Fail;
        if (!changed)
            break;
    }
    if (c.rel == LinRel::Le)
        return le_entailed(k, c.terms, c.constant) ? Status::Entailed : Status::Pending;
    if (all_fixed(k, c.terms)) {
        if (!le_entailed(k, c.terms, c.constant) || !le_entailed(k, negated, -c.constant))
            return Status::Fail;
        return Status::Entailed;
    }
    return Status::Pending;
}

Status propagate_alldiff(Kernel &k, const std::vector<Term> &items) {
    std::vector<bool> done(items.size(), false);
    for (;;) {
        bool progress = false;
        for (std::size_t i = 0; i < items.size(); ++i) {
            Term xi = k.store.deref(items[i]);
            if (done[i] || !xi.is_int())
                continue;
            done[i] = true;
            for (std::size_t j = 0; j < items.size(); ++j) {
                if (j == i)
                    continue;
                Change r = exclude_value(k, items[j], xi.as_integer());
                if (r == Change::Fail)
                    return Status::Fail;
                if (r == Change::Narrowed)
                    progress = true;
            }
            progress = true;
        }
        if (!progress)
            break;
    }
    std::size_t open = 0;
    for (const auto &x : items)
        if (k.store.deref(x).is_var())
            ++open;
    return open <= 1 ? Status::Entailed : Status::Pending;
}

std::string domain_text(Engine &e, const Domain &d) {
    auto num = [&](double v) {
        if (std::isinf(v))
            return std::string(v < 0 ? "-inf" : "inf");
        if (d.integral)
            return to_int(v).str();
        return e.format(Term::floating(v));
    };
    if (d.holes.empty())
        return num(d.lo) + ".." + num(d.hi);
    // Runs of consecutive values between the holes.
    std::ostringstream os;
    os << "[";
    Integer start = to_int(d.lo), hi = to_int(d.hi);
    bool first = true;
    auto emit = [&](const Integer &a, const Integer &b) {
        if (a > b)
            return;
        if (!first)
            os << ", ";
        first = false;
        if (a == b)
            os << a.str();
        else
            os << a.str() << ".." << b.str();
    };
    for (const auto &h : d.holes) {
        emit(start, h - 1);
        start = h + 1;
    }
    emit(start, hi);
    os << "]";
    return os.str();
}

} // namespace ic

namespace {

using Args = std::span<const Term>;
using namespace ic;

const Atom kIcMod("ic"), kDotDot(".."), kDot("."), kNil("[]"), kColon(":"), kStar("*"), kPlus("+"), kMinus("-");

bool ok(Change c) { return c != Change::Fail; }

XR bound_value(const Store &s, const Term &t_in) {
    Term t = s.deref(t_in);
    if (t.is_var())
        throw_instantiation_error();
    arith::Number n = arith::Evaluator(s).eval(t);
    if (auto *d = std::get_if<double>(&n)) {
        if (std::isinf(*d))
            return *d < 0 ? XR::neg_inf() : XR::pos_inf();
        return XR::finite(exact_rational(*d));
    }
    if (auto *i = std::get_if<Integer>(&n))
        return XR::finite(Rational(*i));
    if (auto *q = std::get_if<Rational>(&n))
        return XR::finite(*q);
    throw_type_error("number", t);
}

bool is_integral_bound(const Store &s, const Term &t_in) {
    Term t = s.deref(t_in);
    if (t.is_atom("inf") || t.is_atom("infinity"))
        return true;
    if (t.is_struct("-", 1))
        return is_integral_bound(s, t.arg(0));
    arith::Number n = arith::Evaluator(s).eval(t);
    return std::holds_alternative<Integer>(n);
}

// X :: Dom for a single variable or number. `force` is 1 for integer,
// -1 for real, 0 to decide from the bounds.
bool declare(Engine &e, const Term &x, const Term &dom_in, int force) {
    Store &s = e.store();
    Term dom = s.deref(dom_in);
    if (dom.is_var())
        throw_instantiation_error();
    if (dom.is_struct(kDotDot, 2)) {
        bool integral = force > 0 || (force == 0 && is_integral_bound(s, dom.arg(0)) && is_integral_bound(s, dom.arg(1)));
        return declare_domain(e.k, x, bound_value(s, dom.arg(0)), bound_value(s, dom.arg(1)), integral);
    }
    if (dom.is_struct(kDot, 2) || dom.is_atom(kNil)) {
        std::vector<Integer> values;
        arith::Evaluator ev(s);
        for (const auto &item_in : list_to_vector(s, dom)) {
            Term item = s.deref(item_in);
            if (item.is_struct(kDotDot, 2)) {
                Integer lo = ev.eval_integer(item.arg(0)), hi = ev.eval_integer(item.arg(1));
                if (hi - lo > 1000000)
                    throw PrologError(error_term(mk_struct("unsupported", {Term::atom("domain_size")}), item),
                                      "domain list too large");
                for (Integer v = lo; v <= hi; ++v)
                    values.push_back(v);
            } else {
                values.push_back(ev.eval_integer(item));
            }
        }
        if (force < 0)
            throw_type_error("range", dom);
        return declare_values(e.k, x, values);
    }
    throw_type_error("domain", dom);
}

Term readable_lin(Engine &e, const Term &rel_t, const Term &int_t, const Term &list) {
    LinCon c = lin_con_from(e.store(), rel_t, int_t, list);
    std::vector<Term> pos, neg;
    auto add = [](std::vector<Term> &side, const Rational &a, const Term &x) {
        if (a == 1)
            side.push_back(x);
        else
            side.push_back(mk_struct(kStar, {rational_term(a), x}));
    };
    for (const auto &[a, x] : c.terms)
        add(a > 0 ? pos : neg, a > 0 ? a : Rational(-a), x);
    if (c.constant > 0)
        pos.push_back(rational_term(c.constant));
    else if (c.constant < 0)
        neg.push_back(rational_term(-c.constant));
    auto sum = [](const std::vector<Term> &side) {
        if (side.empty())
            return Term::integer(0);
        Term acc = side[0];
        for (std::size_t i = 1; i < side.size(); ++i)
            acc = mk_struct(kPlus, {acc, side[i]});
        return acc;
    };
    std::string op = std::string(c.integral ? "#" : "$") + (c.rel == LinRel::Le ? "=<" : c.rel == LinRel::Eq ? "=" : "\\=");
    return mk_struct(op, {sum(pos), sum(neg)});
}

SuspRef make_demon(Engine &e, Term goal, int priority) {
    return e.sched().make(std::move(goal), priority, true, kIcMod.id());
}

bool post_linear(Engine &e, LinCon c) {
    Kernel &k = e.k;
    for (const auto &[a, x] : c.terms) {
        if (c.integral) {
            if (!ok(impose_integrality(k, x)))
                return false;
        } else if (Term d = k.store.deref(x); d.is_var() && !domain_of(k, d)) {
            declare_domain(k, d, XR::neg_inf(), XR::pos_inf(), false);
        }
    }
    Status st = propagate(k, c);
    if (st != Status::Pending)
        return st == Status::Entailed;
    // Re-read: propagation may have instantiated some of the variables.
    c = lin_con_from(k.store, Term::atom(c.rel == LinRel::Le ? "=<" : c.rel == LinRel::Eq ? "=" : "=\\="),
                     Term::integer(c.integral ? 1 : 0), lin_con_term(c).arg(2));
    Term goal = lin_con_term(c);
    goal = mk_struct("ic_lin_prop", goal.as_struct()->args);
    SuspRef s = make_demon(e, goal, 5);
    for (const auto &[a, x] : c.terms) {
        if (c.rel == LinRel::Ne) {
            k.attrs.attach(s, x, WakingCondition::inst());
            continue;
        }
        if (c.rel == LinRel::Eq || a > 0)
            k.attrs.attach(s, x, {"ic", "min"});
        if (c.rel == LinRel::Eq || a < 0)
            k.attrs.attach(s, x, {"ic", "max"});
    }
    return true;
}

void kill_current(Engine &e) {
    if (auto s = e.current_suspension())
        e.sched().kill(*s);
}

Term get_bound(Engine &e, const Term &x, bool upper) {
    Term d = e.store().deref(x);
    if (d.is_number())
        return d;
    auto dom = domain_of(e.k, d);
    double b = dom ? (upper ? dom->hi : dom->lo) : (upper ? kInf : -kInf);
    if (dom && dom->integral && std::isfinite(b))
        return Term::integer(numerator(exact_rational(b)));
    return Term::floating(b);
}

std::optional<Term> expand_constraint(Engine &e, const Term &goal, Module *) {
    try {
        auto c = normalize_linear(e.store(), goal, false);
        if (!c)
            return std::nullopt;
        return mk_struct(kColon, {Term(kIcMod), lin_con_term(*c)});
    } catch (const PrologError &) {
        return std::nullopt;
    }
}

} // namespace

void install_ic(Engine &e) {
    e.module(kIcMod);

    AttributeSpec spec;
    spec.name = "ic";
    spec.lists = {{"min", kMinL}, {"max", kMaxL}, {"hole", kHoleL}, {"type", kTypeL}};
    spec.make_default = [](Kernel &) { return make_payload(-kInf, kInf, false); };
    spec.copy = [](Kernel &k, const Term &attr) -> std::optional<Term> {
        Domain d = read(k.store, attr);
        return make_payload(d.lo, d.hi, d.integral, d.holes);
    };
    spec.bounds_get = [](Kernel &k, const Term &attr) {
        Domain d = read(k.store, attr);
        return std::make_pair(d.lo, d.hi);
    };
    spec.bounds_set = [](Kernel &k, VarRef v, double lo, double hi) {
        return ok(impose_min(k, Term(v), XR::from_double(lo))) && ok(impose_max(k, Term(v), XR::from_double(hi)));
    };
    spec.unify = [](Kernel &k, VarRef var, const Term &attr, const Term &value) {
        Domain d = read(k.store, attr);
        XR lo = XR::from_double(d.lo), hi = XR::from_double(d.hi);
        if (!value.is_var()) {
            if (!value.is_number() || (d.integral && !value.is_int()))
                return false;
            auto [vlo, vhi] = bounds(k, value);
            if (compare(vhi, lo) < 0 || compare(vlo, hi) > 0)
                return false;
            if (value.is_int() && std::binary_search(d.holes.begin(), d.holes.end(), value.as_integer()))
                return false;
            if (compare(vlo, lo) != 0)
                k.attrs.wake(var, "ic", "min");
            if (compare(vhi, hi) != 0)
                k.attrs.wake(var, "ic", "max");
            return true;
        }
        VarRef other = value.var();
        auto theirs = k.store.get_attr(other, kIc);
        if (!theirs) {
            k.store.put_attr(other, kIc, attr);
            return true;
        }
        for (std::size_t i = kMinL; i <= kTypeL; ++i)
            k.store.set_arg(i, *theirs, concat_lists(k.store, attr.arg(i - 1), theirs->arg(i - 1)));
        Domain t = read(k.store, *theirs);
        Term o(other);
        if (d.integral && !ok(impose_integrality(k, o)))
            return false;
        if (!ok(impose_min(k, o, lo)) || !ok(impose_max(k, o, hi)))
            return false;
        for (const auto &h : d.holes)
            if (!ok(exclude_value(k, o, h)))
                return false;
        // The survivor may have been tighter than the bound variable.
        Term now = k.store.deref(o);
        if (now.is_var()) {
            if (t.lo != d.lo)
                k.attrs.wake(now.var(), "ic", "min");
            if (t.hi != d.hi)
                k.attrs.wake(now.var(), "ic", "max");
            if (t.integral != d.integral)
                k.attrs.wake(now.var(), "ic", "type");
        }
        return true;
    };
    e.k.attrs.register_attribute(std::move(spec));

    e.add_var_printer("ic", [](Engine &e, VarRef v) -> std::optional<std::string> {
        auto d = domain_of(e.k, Term(v));
        if (!d)
            return std::nullopt;
        return "_{" + domain_text(e, *d) + "}";
    });

    auto domain_builtin = [&e](const char *name, int force) {
        e.add_builtin(name, 2, [force](Engine &e, Args a) {
            for (const auto &x : collection_items(e.store(), a[0]))
                if (!declare(e, x, a[1], force))
                    return false;
            return true;
        });
    };
    domain_builtin("::", 0);
    domain_builtin("#::", 1);
    domain_builtin("$::", -1);
    e.add_builtin("integers", 1, [](Engine &e, Args a) {
        for (const auto &x : collection_items(e.store(), a[0]))
            if (!ok(impose_integrality(e.k, x)))
                return false;
        return true;
    });
    e.add_builtin("reals", 1, [](Engine &e, Args a) {
        for (const auto &x : collection_items(e.store(), a[0])) {
            Term d = e.store().deref(x);
            if (d.is_var() && !domain_of(e.k, d))
                declare_domain(e.k, d, XR::neg_inf(), XR::pos_inf(), false);
            else if (!d.is_var() && !d.is_number())
                throw_type_error("number", d);
        }
        return true;
    });

    for (const char *op : {"#=", "#\\=", "#<", "#>", "#=<", "#>=", "$=", "$\\=", "$<", "$>", "$=<", "$>="}) {
        e.add_builtin(op, 2, [op](Engine &e, Args a) {
            Term goal = mk_struct(op, {a[0], a[1]});
            return post_linear(e, *normalize_linear(e.store(), goal, true));
        });
        e.add_goal_expander(op, 2, expand_constraint);
    }
    e.add_builtin("ic_lin_con", 3, [](Engine &e, Args a) {
        return post_linear(e, lin_con_from(e.store(), a[0], a[1], a[2]));
    });
    e.add_builtin("ic_lin_prop", 3, [](Engine &e, Args a) {
        Status st = propagate(e.k, lin_con_from(e.store(), a[0], a[1], a[2]));
        if (st == Status::Entailed)
            kill_current(e);
        return st != Status::Fail;
    });

    e.add_builtin("alldifferent", 1, [](Engine &e, Args a) {
        auto items = collection_items(e.store(), a[0]);
        for (const auto &x : items)
            if (!ok(impose_integrality(e.k, x)))
                return false;
        Status st = propagate_alldiff(e.k, items);
        if (st != Status::Pending)
            return st == Status::Entailed;
        SuspRef s = make_demon(e, mk_struct("ic_alldiff_prop", {mk_list(items)}), 4);
        for (const auto &x : items)
            e.k.attrs.attach(s, x, WakingCondition::inst());
        return true;
    });
    e.add_builtin("ic_alldiff_prop", 1, [](Engine &e, Args a) {
        Status st = propagate_alldiff(e.k, list_to_vector(e.store(), a[0]));
        if (st == Status::Entailed)
            kill_current(e);
        return st != Status::Fail;
    });

    e.add_builtin("impose_min", 2, [](Engine &e, Args a) {
        return ok(impose_min(e.k, a[0], bound_value(e.store(), a[1])));
    });
    e.add_builtin("impose_max", 2, [](Engine &e, Args a) {
        return ok(impose_max(e.k, a[0], bound_value(e.store(), a[1])));
    });
    e.add_builtin("impose_integrality", 1, [](Engine &e, Args a) { return ok(impose_integrality(e.k, a[0])); });
    e.add_builtin("exclude", 2, [](Engine &e, Args a) {
        return ok(exclude_value(e.k, a[0], arith::Evaluator(e.store()).eval_integer(a[1])));
    });
    e.add_builtin("get_min", 2, [](Engine &e, Args a) { return e.store().unify(a[1], get_bound(e, a[0], false)); });
    e.add_builtin("get_max", 2, [](Engine &e, Args a) { return e.store().unify(a[1], get_bound(e, a[0], true)); });
    e.add_builtin("get_bounds", 3, [](Engine &e, Args a) {
        return e.store().unify(a[1], get_bound(e, a[0], false)) && e.store().unify(a[2], get_bound(e, a[0], true));
    });
    e.add_builtin("get_domain_size", 2, [](Engine &e, Args a) {
        auto d = domain_of(e.k, a[0]);
        if (!d)
            throw_type_error("domain_variable", e.store().deref(a[0]));
        return e.store().unify(a[1], Term::integer(d->size()));
    });
    e.add_builtin("get_domain_as_list", 2, [](Engine &e, Args a) {
        Term x = e.store().deref(a[0]);
        if (x.is_int())
            return e.store().unify(a[1], mk_list(std::vector<Term>{x}));
        auto d = domain_of(e.k, x);
        if (!d)
            throw PrologError(error_term(mk_struct("unsupported", {Term::atom("unbounded_domain")}), x),
                              "labeling needs a finite integer domain");
        d->size();
        std::vector<Term> values;
        Integer hi = to_int(d->hi);
        for (Integer v = to_int(d->lo); v <= hi; ++v)
            if (!std::binary_search(d->holes.begin(), d->holes.end(), v))
                values.push_back(Term::integer(v));
        return e.store().unify(a[1], mk_list(values));
    });
    e.add_builtin("is_in_domain", 2, [](Engine &e, Args a) {
        auto d = domain_of(e.k, a[1]);
        Term v = e.store().deref(a[0]);
        if (!d || !v.is_int())
            return false;
        return d->contains(v.as_integer());
    });
    // '$select_ff'(Vars, X, Rest): the unbound variable with the smallest
    // domain, earliest on ties; Rest keeps the others in order.
    e.add_builtin("$select_ff", 3, [](Engine &e, Args a) {
        auto items = collection_items(e.store(), a[0]);
        std::optional<std::size_t> best;
        Integer best_size;
        for (std::size_t i = 0; i < items.size(); ++i) {
            Term x = e.store().deref(items[i]);
            if (!x.is_var())
                continue;
            auto d = domain_of(e.k, x);
            if (!d)
                throw PrologError(error_term(mk_struct("unsupported", {Term::atom("unbounded_domain")}), x),
                                  "labeling needs a finite integer domain");
            Integer sz = d->size();
            if (!best || sz < best_size) {
                best = i;
                best_size = sz;
            }
        }
        if (!best)
            return false;
        std::vector<Term> rest;
        for (std::size_t i = 0; i < items.size(); ++i)
            if (i != *best && e.store().deref(items[i]).is_var())
                rest.push_back(items[i]);
        return e.store().unify(a[1], items[*best]) && e.store().unify(a[2], mk_list(rest));
    });
    e.add_builtin("$collection_list", 2, [](Engine &e, Args a) {
        return e.store().unify(a[1], mk_list(collection_items(e.store(), a[0])));
    });

    auto lin_portray = [](Engine &e, const Term &g) -> std::optional<Term> {
        try {
            return readable_lin(e, g.arg(0), g.arg(1), g.arg(2));
        } catch (const PrologError &) {
            return std::nullopt;
        }
    };
    e.add_portray("ic_lin_con", 3, lin_portray);
    e.add_portray("ic_lin_prop", 3, lin_portray);
    e.add_portray("ic_alldiff_prop", 1, [](Engine &, const Term &g) -> std::optional<Term> {
        return mk_struct("alldifferent", {g.arg(0)});
    });
    e.add_portray(":", 2, [lin_portray](Engine &e, const Term &g) -> std::optional<Term> {
        Term m = e.store().deref(g.arg(0)), inner = e.store().deref(g.arg(1));
        if (m.is_atom(kIcMod) && (inner.is_struct("ic_lin_con", 3) || inner.is_struct("ic_lin_prop", 3)))
            return lin_portray(e, inner);
        return std::nullopt;
    });
}

} // namespace clpk
