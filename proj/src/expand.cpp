#include "clpk/expand.hpp"

#include <algorithm>
#include <unordered_set>

#include "clpk/attvar.hpp"

namespace clpk {

namespace {

const Atom kComma(",");
const Atom kColon(":");
const Atom kTrue("true");
const Atom kCut("!");
const Atom kNeck(":-");
const Atom kEq("=");
const Atom kIs("is");
const Atom kPlus("+");
const Atom kArg("arg");
const Atom kDot(".");
const Atom kNil("[]");

Term call_of(Atom name, std::vector<Term> args) {
    if (args.empty())
        return Term(name);
    return mk_struct(name, std::move(args));
}

// One iterator's contribution to the auxiliary predicate.
struct IterParts {
    std::vector<Term> pre;      // goals before the first call
    std::vector<Term> call;     // initial arguments
    std::vector<Term> base;     // head arguments of the stop clause
    std::vector<Term> head;     // head arguments of the recursive clause
    std::vector<Term> body_pre; // goals before Body
    std::vector<Term> rec;      // arguments of the recursive call
};

void fromto(Store &s, IterParts &p, const Term &from, const Term &in, const Term &out, const Term &to) {
    Term last = s.new_var();
    Term last2 = s.new_var();
    p.call.insert(p.call.end(), {from, to});
    p.base.insert(p.base.end(), {last, last});
    p.head.insert(p.head.end(), {in, last2});
    p.rec.insert(p.rec.end(), {out, last2});
}

IterParts iterator(Store &s, const Term &spec_in) {
    IterParts p;
    Term spec = s.deref(spec_in);
    if (spec.is_struct("fromto", 4)) {
        fromto(s, p, spec.arg(0), spec.arg(1), spec.arg(2), spec.arg(3));
    } else if (spec.is_struct("foreach", 2)) {
        // foreach(E, L) == fromto(L, [E|T], T, [])
        Term t = s.new_var();
        fromto(s, p, spec.arg(1), mk_struct(kDot, {spec.arg(0), t}), t, Term(kNil));
    } else if (spec.is_struct("foreacharg", 2)) {
        Term stop = s.new_var(), a = s.new_var(), i = s.new_var(), i1 = s.new_var(), st = s.new_var(),
             l = s.new_var();
        p.pre.push_back(mk_struct("$loop_arity", {spec.arg(1), stop}));
        p.call.insert(p.call.end(), {spec.arg(1), Term::integer(1), stop});
        p.base.insert(p.base.end(), {s.new_var(), l, l});
        p.head.insert(p.head.end(), {a, i, st});
        p.body_pre.push_back(mk_struct(kArg, {i, a, spec.arg(0)}));
        p.body_pre.push_back(mk_struct(kIs, {i1, mk_struct(kPlus, {i, Term::integer(1)})}));
        p.rec.insert(p.rec.end(), {a, i1, st});
    } else if (spec.is_struct("for", 3) || spec.is_struct("for", 4)) {
        bool stepped = spec.arity() == 4;
        Term f1 = s.new_var(), stop = s.new_var(), l = s.new_var(), st = s.new_var(), i1 = s.new_var();
        Term step = stepped ? s.new_var() : Term::integer(1);
        Term bounds = stepped ? mk_struct("$loop_for", {spec.arg(1), spec.arg(2), spec.arg(3), f1, stop, step})
                              : mk_struct("$loop_for", {spec.arg(1), spec.arg(2), f1, stop});
        p.pre.push_back(bounds);
        p.call.insert(p.call.end(), {f1, stop});
        p.base.insert(p.base.end(), {l, l});
        p.head.insert(p.head.end(), {spec.arg(0), st});
        Term stepv = step;
        if (stepped) {
            stepv = s.new_var();
            p.call.push_back(step);
            p.base.push_back(s.new_var());
            p.head.push_back(stepv);
        }
        p.body_pre.push_back(mk_struct(kIs, {i1, mk_struct(kPlus, {spec.arg(0), stepv})}));
        p.rec.insert(p.rec.end(), {i1, st});
        if (stepped)
            p.rec.push_back(stepv);
    } else if (spec.is_struct() && spec.as_struct()->name == Atom("param")) {
        for (const auto &v : spec.as_struct()->args) {
            p.call.push_back(v);
            p.base.push_back(s.new_var());
            p.head.push_back(v);
            p.rec.push_back(v);
        }
    } else {
        throw_expansion_error("unknown loop iterator", spec);
    }
    return p;
}

std::unordered_set<std::uint32_t> var_set(const Store &s, const Term &t) {
    std::unordered_set<std::uint32_t> out;
    for (auto v : term_vars(s, t))
        out.insert(v.id);
    return out;
}

} // namespace

void throw_expansion_error(const std::string &what, const Term &culprit) {
    throw PrologError(error_term(mk_struct("expansion_error", {Term::atom(what)}), culprit), "expansion error: " + what);
}

std::vector<VarRef> term_vars(const Store &store, const Term &t) {
    std::vector<VarRef> out;
    std::unordered_set<std::uint32_t> seen;
    std::vector<Term> stack{t};
    while (!stack.empty()) {
        Term x = store.deref(stack.back());
        stack.pop_back();
        if (x.is_var()) {
            if (seen.insert(x.var().id).second)
                out.push_back(x.var());
        } else if (x.is_struct()) {
            const auto &args = x.as_struct()->args;
            for (auto it = args.rbegin(); it != args.rend(); ++it)
                stack.push_back(*it);
        }
    }
    return out;
}

std::vector<Term> conj_to_vector(const Store &store, const Term &t) {
    std::vector<Term> out;
    Term x = store.deref(t);
    while (x.is_struct(kComma, 2)) {
        auto left = conj_to_vector(store, x.arg(0));
        out.insert(out.end(), left.begin(), left.end());
        x = store.deref(x.arg(1));
    }
    out.push_back(x);
    return out;
}

Term vector_to_conj(const std::vector<Term> &goals) {
    if (goals.empty())
        return Term(kTrue);
    Term acc = goals.back();
    for (auto it = goals.rbegin() + 1; it != goals.rend(); ++it)
        acc = mk_struct(kComma, {*it, acc});
    return acc;
}

void StructTable::declare(const Store &store, const Term &decl_in) {
    Term decl = store.deref(decl_in);
    if (!decl.is_struct())
        throw_expansion_error("struct declaration must be a compound term", decl);
    StructDecl d;
    d.name = decl.functor();
    for (const auto &a : decl.as_struct()->args) {
        Term f = store.deref(a);
        if (!f.is_atom())
            throw_expansion_error("struct field names must be atoms", decl);
        if (std::find(d.fields.begin(), d.fields.end(), f.atom()) != d.fields.end())
            throw_expansion_error("duplicate struct field", f);
        d.fields.push_back(f.atom());
    }
    decls_[d.name.id()] = std::move(d);
}

const StructDecl *StructTable::find(Atom name) const {
    auto it = decls_.find(name.id());
    return it == decls_.end() ? nullptr : &it->second;
}

std::size_t StructTable::field_index(Atom name, Atom field) const {
    const StructDecl *d = find(name);
    if (!d)
        throw_expansion_error("unknown struct", Term(name));
    auto it = std::find(d->fields.begin(), d->fields.end(), field);
    if (it == d->fields.end())
        throw_expansion_error("unknown struct field", mk_struct(kColon, {Term(name), Term(field)}));
    return static_cast<std::size_t>(it - d->fields.begin()) + 1;
}

Term expand_with(Store &store, const StructTable &structs, const Term &with) {
    Term name = store.deref(with.arg(0));
    if (!name.is_atom())
        throw_expansion_error("struct name must be an atom", name);
    const StructDecl *d = structs.find(name.atom());
    if (!d)
        throw_expansion_error("unknown struct", name);
    std::vector<std::optional<Term>> slots(d->fields.size());
    for (const auto &f : list_to_vector(store, with.arg(1))) {
        Term fv = store.deref(f);
        if (!fv.is_struct(kColon, 2) || !store.deref(fv.arg(0)).is_atom())
            throw_expansion_error("struct field must be Name:Value", fv);
        std::size_t i = structs.field_index(name.atom(), store.deref(fv.arg(0)).atom());
        if (slots[i - 1])
            throw_expansion_error("duplicate struct field", fv);
        slots[i - 1] = fv.arg(1);
    }
    std::vector<Term> args;
    for (auto &s : slots)
        args.push_back(s ? *s : store.new_var());
    if (args.empty())
        return name;
    return mk_struct(name.atom(), std::move(args));
}

Term expand_of(const Store &store, const StructTable &structs, const Term &of) {
    Term field = store.deref(of.arg(0)), name = store.deref(of.arg(1));
    if (!field.is_atom() || !name.is_atom())
        throw_expansion_error("field of struct expects two atoms", of);
    return Term::integer(static_cast<std::int64_t>(structs.field_index(name.atom(), field.atom())));
}

Term expand_update_struct(Store &store, const StructTable &structs, const Term &name_in, const Term &updates,
                          const Term &old_t, const Term &new_t) {
    Term name = store.deref(name_in);
    if (!name.is_atom())
        throw_expansion_error("struct name must be an atom", name);
    const StructDecl *d = structs.find(name.atom());
    if (!d)
        throw_expansion_error("unknown struct", name);
    std::vector<Term> olds, news;
    for (std::size_t i = 0; i < d->fields.size(); ++i) {
        Term v = store.new_var();
        olds.push_back(v);
        news.push_back(v);
    }
    std::vector<bool> touched(d->fields.size(), false);
    for (const auto &u : list_to_vector(store, updates)) {
        Term uv = store.deref(u);
        if (!uv.is_struct(kColon, 2) || !store.deref(uv.arg(0)).is_atom())
            throw_expansion_error("struct update must be Field:Value", uv);
        std::size_t i = structs.field_index(name.atom(), store.deref(uv.arg(0)).atom()) - 1;
        if (touched[i])
            throw_expansion_error("duplicate struct field", uv);
        touched[i] = true;
        olds[i] = store.new_var();
        news[i] = uv.arg(1);
    }
    return mk_struct(kComma, {mk_struct(kEq, {old_t, mk_struct(name.atom(), olds)}),
                              mk_struct(kEq, {new_t, mk_struct(name.atom(), news)})});
}

LoopExpansion expand_do_loop(Store &store, const Term &specs, const Term &body, Atom aux,
                             const std::vector<VarRef> &outer_vars) {
    IterParts all;
    auto spec_list = conj_to_vector(store, specs);
    for (const auto &spec : spec_list) {
        IterParts p = iterator(store, spec);
        auto app = [](std::vector<Term> &a, const std::vector<Term> &b) { a.insert(a.end(), b.begin(), b.end()); };
        app(all.pre, p.pre);
        app(all.call, p.call);
        app(all.base, p.base);
        app(all.head, p.head);
        app(all.body_pre, p.body_pre);
        app(all.rec, p.rec);
    }

    LoopExpansion out;
    std::vector<Term> call_goals = all.pre;
    call_goals.push_back(call_of(aux, all.call));
    out.call = vector_to_conj(call_goals);

    out.clauses.push_back(mk_struct(kNeck, {call_of(aux, all.base), Term(kCut)}));
    std::vector<Term> rec_body = all.body_pre;
    rec_body.push_back(body);
    rec_body.push_back(call_of(aux, all.rec));
    out.clauses.push_back(mk_struct(kNeck, {call_of(aux, all.head), vector_to_conj(rec_body)}));

    // Variables a loop body shares with the outside must come in through
    // an iterator; anything else is silently local.
    auto passed = var_set(store, specs);
    std::unordered_set<std::uint32_t> outer;
    for (auto v : outer_vars)
        outer.insert(v.id);
    for (auto v : term_vars(store, body))
        if (outer.count(v.id) && !passed.count(v.id))
            out.leaked.push_back(v);
    return out;
}

} // namespace clpk
