#include "clpk/attvar.hpp"

#include <algorithm>
#include <unordered_map>

namespace clpk {

namespace {

const Atom kDot(".");
const Atom kNil("[]");
const Atom kSuspend("suspend");

Term make_suspend_payload() { return mk_struct(kSuspend, {Term(kNil), Term(kNil), Term(kNil)}); }

// Appends the (newest-first) members of `extra` in front of `base`.
Term concat_lists(const Store &store, const Term &extra, const Term &base) {
    auto items = list_to_vector(store, extra);
    return mk_list(items, base);
}

} // namespace

std::vector<Term> list_to_vector(const Store &store, const Term &list) {
    std::vector<Term> out;
    Term t = store.deref(list);
    while (t.is_struct(kDot, 2)) {
        out.push_back(t.arg(0));
        t = store.deref(t.arg(1));
    }
    if (t.is_var())
        throw_instantiation_error();
    if (!t.is_atom(kNil))
        throw_type_error("list", list);
    return out;
}

bool is_proper_list(const Store &store, const Term &list) {
    Term t = store.deref(list);
    while (t.is_struct(kDot, 2))
        t = store.deref(t.arg(1));
    return t.is_atom(kNil);
}

Kernel::Kernel() {
    store.set_dispatch(&attrs);

    AttributeSpec spec;
    spec.name = "suspend";
    spec.lists = {{"inst", 1}, {"bound", 2}, {"constrained", 3}};
    spec.make_default = [](Kernel &) { return make_suspend_payload(); };
    spec.unify = [](Kernel &k, VarRef var, const Term &, const Term &value) {
        if (!value.is_var()) {
            k.attrs.wake(var, "suspend", "inst");
            k.attrs.wake(var, "suspend", "bound");
            k.attrs.wake(var, "suspend", "constrained");
            return true;
        }
        // Aliasing: both sides lose a degree of freedom.
        VarRef other = value.var();
        k.attrs.wake(var, "suspend", "bound");
        k.attrs.wake(var, "suspend", "constrained");
        k.attrs.wake(other, "suspend", "bound");
        k.attrs.wake(other, "suspend", "constrained");
        auto mine = k.store.get_attr(var, kSuspend);
        auto theirs = k.store.get_attr(other, kSuspend);
        if (!mine)
            return true;
        if (!theirs) {
            k.store.put_attr(other, kSuspend, mk_struct(kSuspend, mine->as_struct()->args));
            return true;
        }
        for (std::size_t i = 1; i <= 3; ++i) {
            Term merged = concat_lists(k.store, mine->arg(i - 1), theirs->arg(i - 1));
            k.store.set_arg(i, *theirs, merged);
        }
        return true;
    };
    attrs.register_attribute(std::move(spec));
}

AttrRegistry::AttrRegistry(Kernel &k) : k_(k) {}

void AttrRegistry::register_attribute(AttributeSpec spec) {
    if (find(spec.name))
        throw PrologError(error_term(mk_struct("registration_error", {Term::atom(spec.name)})),
                          "attribute already registered: " + spec.name);
    specs_.push_back(std::move(spec));
}

bool AttrRegistry::registered(std::string_view name) const { return find(name) != nullptr; }

const AttributeSpec *AttrRegistry::find(std::string_view name) const {
    for (const auto &s : specs_)
        if (s.name == name)
            return &s;
    return nullptr;
}

std::size_t AttrRegistry::list_slot(const AttributeSpec &spec, std::string_view list) const {
    for (const auto &[n, slot] : spec.lists)
        if (n == list)
            return slot;
    return 0;
}

void AttrRegistry::add_attr(const Term &v, std::string_view name, Term value) {
    Term t = k_.store.deref(v);
    if (!t.is_var())
        throw_instantiation_error();
    k_.store.put_attr(t.var(), Atom(name), std::move(value));
}

std::optional<Term> AttrRegistry::get_attr(const Term &v, std::string_view name) const {
    Term t = k_.store.deref(v);
    if (!t.is_var())
        return std::nullopt;
    return k_.store.get_attr(t.var(), Atom(name));
}

void AttrRegistry::attach(SuspRef s, const Term &var, const WakingCondition &cond) {
    const AttributeSpec *spec = find(cond.attribute);
    std::size_t slot = spec ? list_slot(*spec, cond.list) : 0;
    if (!spec || slot == 0)
        throw_domain_error("suspension_list", mk_struct(":", {Term::atom(cond.attribute), Term::atom(cond.list)}));
    Term t = k_.store.deref(var);
    if (!t.is_var())
        return;
    VarRef v = t.var();
    Atom name(cond.attribute);
    auto payload = k_.store.get_attr(v, name);
    if (!payload) {
        if (!spec->make_default)
            throw_domain_error("suspension_list", Term::atom(cond.attribute));
        k_.store.put_attr(v, name, spec->make_default(k_));
        payload = k_.store.get_attr(v, name);
    }
    Term old = payload->arg(slot - 1);
    k_.store.set_arg(slot, *payload, mk_struct(kDot, {Term(s), old}));
    k_.sched.note_attachment(s, t, cond.label());
}

std::vector<SuspRef> AttrRegistry::list_members(VarRef v, std::string_view attribute, std::string_view list) const {
    std::vector<SuspRef> out;
    const AttributeSpec *spec = find(attribute);
    if (!spec)
        return out;
    std::size_t slot = list_slot(*spec, list);
    auto payload = k_.store.get_attr(v, Atom(attribute));
    if (!payload || slot == 0 || !payload->is_struct())
        return out;
    for (const Term &e : list_to_vector(k_.store, payload->arg(slot - 1))) {
        Term d = k_.store.deref(e);
        if (d.is_susp() && k_.sched.get(d.susp()).state != SuspState::Executed)
            out.push_back(d.susp());
    }
    std::reverse(out.begin(), out.end());
    return out;
}

void AttrRegistry::wake(VarRef v, std::string_view attribute, std::string_view list) {
    const AttributeSpec *spec = find(attribute);
    if (!spec)
        return;
    std::size_t slot = list_slot(*spec, list);
    auto payload = k_.store.get_attr(v, Atom(attribute));
    if (!payload || slot == 0 || !payload->is_struct())
        return;
    auto items = list_to_vector(k_.store, payload->arg(slot - 1));
    std::vector<Term> live;
    live.reserve(items.size());
    for (auto it = items.rbegin(); it != items.rend(); ++it) {
        Term d = k_.store.deref(*it);
        if (!d.is_susp() || k_.sched.get(d.susp()).state == SuspState::Executed)
            continue;
        k_.sched.schedule(d.susp());
        live.push_back(d);
    }
    if (live.size() != items.size()) {
        std::reverse(live.begin(), live.end());
        k_.store.set_arg(slot, *payload, mk_list(live));
    }
}

void AttrRegistry::notify_constrained(const Term &v) {
    Term t = k_.store.deref(v);
    if (t.is_var())
        wake(t.var(), "suspend", "constrained");
}

std::pair<double, double> AttrRegistry::get_var_bounds(const Term &v) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    Term t = k_.store.deref(v);
    if (t.is_number()) {
        if (t.is_int())
            return {t.as_integer().convert_to<double>(), t.as_integer().convert_to<double>()};
        if (t.is_float())
            return {t.as_float(), t.as_float()};
        if (t.is_breal())
            return {t.as_breal().lo, t.as_breal().hi};
        return {to_double_down(t.as_rational()), to_double_up(t.as_rational())};
    }
    if (!t.is_var())
        throw_type_error("number", t);
    double lo = -inf, hi = inf;
    for (const auto &spec : specs_) {
        if (!spec.bounds_get)
            continue;
        auto payload = k_.store.get_attr(t.var(), Atom(spec.name));
        if (!payload)
            continue;
        auto [l, h] = spec.bounds_get(k_, *payload);
        lo = std::max(lo, l);
        hi = std::min(hi, h);
    }
    return {lo, hi};
}

bool AttrRegistry::set_var_bounds(const Term &v, double lo, double hi) {
    Term t = k_.store.deref(v);
    if (t.is_number()) {
        auto [l, h] = get_var_bounds(t);
        return lo <= l && h <= hi;
    }
    if (!t.is_var())
        throw_type_error("number", t);
    bool any = false;
    for (const auto &spec : specs_) {
        if (!spec.bounds_set)
            continue;
        t = k_.store.deref(t);
        if (!t.is_var())
            break;
        if (!k_.store.get_attr(t.var(), Atom(spec.name)))
            continue;
        any = true;
        if (!spec.bounds_set(k_, t.var(), lo, hi))
            return false;
    }
    if (!any)
        throw PrologError(error_term(mk_struct("unsupported", {Term::atom("set_var_bounds")})),
                          "variable has no bounds-capable attribute");
    return true;
}

bool AttrRegistry::on_bind(VarRef var, const Term &value) {
    // Copy: handlers may add attributes to other variables.
    AttrList attrs = k_.store.attrs(var);
    for (const auto &spec : specs_) {
        if (!spec.unify)
            continue;
        for (const auto &[name, payload] : attrs) {
            if (name.name() != spec.name)
                continue;
            if (!spec.unify(k_, var, payload, value))
                return false;
        }
    }
    return true;
}

namespace {

class Copier {
public:
    Copier(Kernel &k, const std::vector<AttributeSpec> &specs) : k_(k), specs_(specs) {}

    Term copy(const Term &in) {
        Term t = k_.store.deref(in);
        if (t.is_var())
            return copy_var(t.var());
        if (!t.is_struct())
            return t;
        // Lists are walked iteratively along their spine.
        if (t.is_struct(kDot, 2)) {
            std::vector<Term> heads;
            while (t.is_struct(kDot, 2)) {
                heads.push_back(copy(t.arg(0)));
                t = k_.store.deref(t.arg(1));
            }
            Term tail = copy(t);
            return mk_list(heads, tail);
        }
        const auto &s = t.as_struct();
        std::vector<Term> args;
        args.reserve(s->args.size());
        for (const auto &a : s->args)
            args.push_back(copy(a));
        return mk_struct(s->name, std::move(args));
    }

private:
    Term copy_var(VarRef v) {
        auto it = map_.find(v.id);
        if (it != map_.end())
            return it->second;
        Term fresh = k_.store.new_var();
        map_.emplace(v.id, fresh);
        for (const auto &spec : specs_) {
            if (!spec.copy)
                continue;
            auto payload = k_.store.get_attr(v, Atom(spec.name));
            if (!payload)
                continue;
            if (auto np = spec.copy(k_, *payload))
                k_.store.put_attr(fresh.var(), Atom(spec.name), *np);
        }
        return fresh;
    }

    Kernel &k_;
    const std::vector<AttributeSpec> &specs_;
    std::unordered_map<std::uint32_t, Term> map_;
};

} // namespace

Term AttrRegistry::copy_term(const Term &t) {
    Copier c(k_, specs_);
    return c.copy(t);
}

} // namespace clpk
