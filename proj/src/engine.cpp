#include "clpk/engine.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "clpk/ic.hpp"

namespace clpk {

namespace {

const Atom kTrue("true"), kFail("fail"), kFalse("false"), kComma(","), kSemi(";"), kArrow("->"), kCut("!");
const Atom kNot("\\+"), kNot2("not"), kCall("call"), kFindall("findall"), kCatch("catch"), kThrow("throw");
const Atom kColon(":"), kDo("do"), kOnce("once"), kIgnore("ignore"), kForall("forall"), kNeck(":-");
const Atom kQuery("?-"), kLV("$LV"), kFrozen("$frozen_var"), kSlash("/"), kNil("[]"), kDot(".");
const Atom kUpdateStruct("update_struct"), kWith("with"), kOf("of"), kError("error");

enum class Ctl { True, Fail, Conj, Cut, Disj, IfThen, Not, Call, Findall, Catch, Throw, Qualified, Loop, Once,
                 Ignore, Forall };

const std::unordered_map<PredKey, Ctl> &control_table() {
    static const std::unordered_map<PredKey, Ctl> t = [] {
        std::unordered_map<PredKey, Ctl> m{
            {pred_key(kTrue, 0), Ctl::True},       {pred_key(kFail, 0), Ctl::Fail},
            {pred_key(kFalse, 0), Ctl::Fail},      {pred_key(kComma, 2), Ctl::Conj},
            {pred_key(kCut, 0), Ctl::Cut},         {pred_key(kSemi, 2), Ctl::Disj},
            {pred_key(kArrow, 2), Ctl::IfThen},    {pred_key(kNot, 1), Ctl::Not},
            {pred_key(kNot2, 1), Ctl::Not},        {pred_key(kFindall, 3), Ctl::Findall},
            {pred_key(kCatch, 3), Ctl::Catch},     {pred_key(kThrow, 1), Ctl::Throw},
            {pred_key(kColon, 2), Ctl::Qualified}, {pred_key(kDo, 2), Ctl::Loop},
            {pred_key(kOnce, 1), Ctl::Once},       {pred_key(kIgnore, 1), Ctl::Ignore},
            {pred_key(kForall, 2), Ctl::Forall},
        };
        for (std::size_t n = 1; n <= 8; ++n)
            m[pred_key(kCall, n)] = Ctl::Call;
        return m;
    }();
    return t;
}

Term pred_indicator(Atom name, std::size_t arity) {
    return mk_struct(kSlash, {Term(name), Term::integer(static_cast<std::int64_t>(arity))});
}

// Adds extra arguments to a callable, looking through module qualification.
Term add_args(const Store &s, const Term &g_in, std::span<const Term> extra) {
    Term g = s.deref(g_in);
    if (extra.empty())
        return g;
    if (g.is_struct(kColon, 2))
        return mk_struct(kColon, {g.arg(0), add_args(s, g.arg(1), extra)});
    if (g.is_var())
        throw_instantiation_error();
    if (g.is_atom())
        return mk_struct(g.atom(), std::vector<Term>(extra.begin(), extra.end()));
    if (!g.is_struct())
        throw_type_error("callable", g);
    std::vector<Term> args = g.as_struct()->args;
    args.insert(args.end(), extra.begin(), extra.end());
    return mk_struct(g.functor(), std::move(args));
}

void collect_vars_outside(const Store &s, const Term &t_in, const Term &skip, std::vector<VarRef> &out,
                          std::unordered_set<std::uint32_t> &seen) {
    Term t = s.deref(t_in);
    if (t.is_var()) {
        if (seen.insert(t.var().id).second)
            out.push_back(t.var());
    } else if (t.is_struct()) {
        if (skip.is_struct() && t.same_node(skip))
            return;
        for (const auto &a : t.as_struct()->args)
            collect_vars_outside(s, a, skip, out, seen);
    }
}

} // namespace

struct Engine::Frame {
    enum Kind : std::uint8_t { Goal, Stop, EndWake, CutTo, PopCatch };
    Kind kind = Goal;
    Term goal;
    // Goal: cut barrier. CutTo / PopCatch: choicepoint height.
    std::size_t cutb = 0;
    Module *m = nullptr;
    int prio = 0;
    std::optional<SuspRef> susp;
    mutable Cont next;

    // Long continuation chains would otherwise be freed recursively.
    ~Frame() {
        Cont n = std::move(next);
        while (n && n.use_count() == 1) {
            Cont nn = std::move(n->next);
            n = std::move(nn);
        }
    }
};

struct Engine::ChoicePoint {
    enum Kind : std::uint8_t { Clauses, Alt, Barrier, Catch };
    Kind kind = Barrier;
    Store::Mark mark{};
    Cont cont;
    int prio = 13;
    std::optional<SuspRef> susp;
    // Clauses
    Pred *pred = nullptr;
    std::size_t next = 0;
    std::uint64_t key = 0;
    Term goal;
    // Alt: the alternative. Catch: catcher and recovery.
    Term alt;
    Term recovery;
    std::size_t cutb = 0;
    Module *m = nullptr;
};

#define FRAME(...) std::make_shared<const Frame>(Frame{__VA_ARGS__})

Engine::Engine() {
    sys_ = module(Atom("sys"));
    user_ = module(Atom("user"));
    ctx_module_ = user_;
    warn = [](const std::string &msg) { std::cerr << "warning: " << msg << "\n"; };
    out = &std::cout;
    install_builtins();
    install_ic(*this);
    load_prelude();
}

Engine::~Engine() {
    cont_.reset();
    cps_.clear();
}

Module *Engine::module(Atom name, bool create) {
    auto it = modules_.find(name.id());
    if (it != modules_.end())
        return it->second.get();
    if (!create)
        return nullptr;
    auto m = std::make_unique<Module>();
    m->name = name;
    Module *raw = m.get();
    modules_.emplace(name.id(), std::move(m));
    return raw;
}

void Engine::add_builtin(const std::string &name, std::size_t arity, Builtin fn) {
    builtins_[pred_key(Atom(name), arity)] = std::move(fn);
}

bool Engine::is_builtin(Atom name, std::size_t arity) const {
    PredKey k = pred_key(name, arity);
    return builtins_.count(k) || control_table().count(k);
}

void Engine::add_var_printer(const std::string &attribute,
                             std::function<std::optional<std::string>(Engine &, VarRef)> fn) {
    var_printers_.emplace_back(Atom(attribute), std::move(fn));
}

void Engine::add_goal_expander(const std::string &name, std::size_t arity, GoalExpander fn) {
    cxx_goal_expanders_[pred_key(Atom(name), arity)] = std::move(fn);
}

void Engine::add_portray(const std::string &name, std::size_t arity, Portray fn) {
    cxx_portrays_[pred_key(Atom(name), arity)] = std::move(fn);
}

// ---------------------------------------------------------------------------
// Choicepoints

void Engine::push_cp(ChoicePoint cp) {
    cp.mark = store().push_choicepoint();
    cp.prio = prio_;
    cp.susp = cur_susp_;
    cps_.push_back(std::move(cp));
}

void Engine::pop_cp() {
    store().pop_choicepoint();
    cps_.pop_back();
}

void Engine::cut_to(std::size_t height) {
    if (cps_.size() <= height)
        return;
    store().cut_to(height);
    cps_.erase(cps_.begin() + static_cast<std::ptrdiff_t>(height), cps_.end());
}

void Engine::drop_barrier(std::size_t index, bool keep) {
    ChoicePoint &bar = cps_[index];
    cont_ = bar.cont;
    prio_ = bar.prio;
    cur_susp_ = bar.susp;
    if (keep) {
        cut_to(index);
        return;
    }
    store().backtrack_to(bar.mark);
    cps_.erase(cps_.begin() + static_cast<std::ptrdiff_t>(index) + 1, cps_.end());
    pop_cp();
    run_undos();
}

// ---------------------------------------------------------------------------
// Clause storage

Clause Engine::compile_clause(const Term &head, const Term &body) {
    std::unordered_map<std::uint32_t, std::uint32_t> slots;
    std::function<Term(const Term &)> walk = [&](const Term &in) -> Term {
        Term t = store().deref(in);
        if (t.is_var()) {
            auto [it, fresh] = slots.emplace(t.var().id, static_cast<std::uint32_t>(slots.size()));
            return mk_struct(kLV, {Term::integer(it->second)});
        }
        if (!t.is_struct())
            return t;
        std::vector<Term> args;
        args.reserve(t.arity());
        for (const auto &a : t.as_struct()->args)
            args.push_back(walk(a));
        return mk_struct(t.functor(), std::move(args));
    };
    Clause c;
    c.head = walk(head);
    c.body = walk(body);
    c.nvars = static_cast<std::uint32_t>(slots.size());
    Term h = store().deref(head);
    c.key = h.is_struct() ? index_key(h.arg(0)) : 0;
    return c;
}

Term Engine::instantiate(const Term &tmpl, std::vector<std::optional<Term>> &frame) {
    if (!tmpl.is_struct())
        return tmpl;
    const StructPtr &s = tmpl.as_struct();
    if (s->name == kLV && s->args.size() == 1) {
        auto i = static_cast<std::size_t>(s->args[0].small_int());
        if (!frame[i])
            frame[i] = store().new_var();
        return *frame[i];
    }
    std::vector<Term> args;
    args.reserve(s->args.size());
    for (const auto &a : s->args)
        args.push_back(instantiate(a, frame));
    return mk_struct(s->name, std::move(args));
}

std::uint64_t Engine::index_key(const Term &in) const {
    Term t = k.store.deref(in);
    std::uint64_t h = 0;
    switch (t.kind()) {
    case Term::Kind::Var: return 0;
    case Term::Kind::Atom: h = 0x100000000ull + t.atom().id(); break;
    case Term::Kind::Int:
        h = t.is_small_int() ? std::hash<std::int64_t>{}(t.small_int()) * 0x9E3779B97F4A7C15ull : 0x2001;
        break;
    case Term::Kind::Float: h = std::hash<double>{}(t.as_float()) ^ 0x3003; break;
    case Term::Kind::Struct: h = (pred_key(t.functor(), t.arity()) << 4) ^ 0x4004; break;
    default: h = 0x5000 + static_cast<std::uint64_t>(t.kind()); break;
    }
    return h | 1;
}

std::size_t Engine::next_clause(const Pred *p, std::size_t from, std::uint64_t key) const {
    for (std::size_t i = from; i < p->clauses.size(); ++i)
        if (key == 0 || p->clauses[i].key == 0 || p->clauses[i].key == key)
            return i;
    return static_cast<std::size_t>(-1);
}

void Engine::add_clause(Module *m, const Term &clause, bool expand) {
    Term c = store().deref(clause);
    Term head = c, body = Term(kTrue);
    if (c.is_struct(kNeck, 2)) {
        head = store().deref(c.arg(0));
        body = c.arg(1);
    }
    if (head.is_var())
        throw_instantiation_error();
    if (!head.is_callable())
        throw_type_error("callable", head);
    Atom name = head.functor();
    std::size_t arity = head.arity();
    if (is_builtin(name, arity))
        throw PrologError(error_term(mk_struct("permission_error", {Term::atom("modify"), Term::atom("static_procedure"),
                                                                    pred_indicator(name, arity)})),
                          "cannot redefine built-in " + name.name() + "/" + std::to_string(arity));
    if (expand)
        body = expand_goal(body, m, c);
    Clause cl = compile_clause(head, body);
    PredKey key = pred_key(name, arity);
    Pred &p = m->preds[key];
    if (!p.home) {
        p.name = name;
        p.arity = arity;
        p.home = m;
    }
    if (load_seen_ && !load_seen_->count(&p)) {
        if (!p.clauses.empty()) {
            warn("redefining " + name.name() + "/" + std::to_string(arity));
            p.clauses.clear();
        }
        load_seen_->insert(&p);
    }
    p.clauses.push_back(std::move(cl));
}

Pred *Engine::resolve(Module *m, Atom name, std::size_t arity) {
    PredKey key = pred_key(name, arity);
    if (auto it = m->preds.find(key); it != m->preds.end())
        return &it->second;
    for (Module *imp : m->imports)
        if (auto it = imp->preds.find(key); it != imp->preds.end() && it->second.exported)
            return &it->second;
    if (m != sys_)
        if (auto it = sys_->preds.find(key); it != sys_->preds.end())
            return &it->second;
    return nullptr;
}

Module *Engine::lookup_module_term(const Term &t_in) {
    Term t = store().deref(t_in);
    if (t.is_var())
        throw_instantiation_error();
    if (!t.is_atom())
        throw_type_error("atom", t);
    Module *m = module(t.atom(), false);
    if (!m)
        throw_existence_error("module", t);
    return m;
}

// ---------------------------------------------------------------------------
// The machine

bool Engine::run(std::size_t base) {
    for (;;) {
        try {
            if (sched().has_more_urgent(prio_)) {
                if (auto s = sched().next_more_urgent(prio_)) {
                    const Suspension &su = sched().get(*s);
                    Module *sm = su.module ? module(Atom::from_id(su.module), false) : nullptr;
                    Cont back = FRAME(Frame::EndWake, Term(), 0, nullptr, prio_, cur_susp_, cont_);
                    cont_ = FRAME(Frame::Goal, su.goal, cps_.size(), sm ? sm : user_, 0, std::nullopt, back);
                    prio_ = su.priority;
                    cur_susp_ = *s;
                    continue;
                }
            }
            Cont f = cont_;
            cont_ = f->next;
            bool ok = true;
            switch (f->kind) {
            case Frame::Stop: return true;
            case Frame::EndWake:
                prio_ = f->prio;
                cur_susp_ = f->susp;
                break;
            case Frame::CutTo: cut_to(f->cutb); break;
            case Frame::PopCatch:
                if (cps_.size() == f->cutb + 1 && cps_.back().kind == ChoicePoint::Catch)
                    pop_cp();
                break;
            case Frame::Goal: ok = step(f->goal, f->cutb, f->m); break;
            }
            if (!ok && !backtrack(base))
                return false;
        } catch (const PrologError &e) {
            handle_error(e.ball(), base);
        }
    }
}

bool Engine::backtrack(std::size_t base) {
    while (cps_.size() > base) {
        store().backtrack_to(cps_.back().mark);
        run_undos();
        ChoicePoint &cp = cps_.back();
        prio_ = cp.prio;
        cur_susp_ = cp.susp;
        switch (cp.kind) {
        case ChoicePoint::Clauses: {
            Pred *p = cp.pred;
            std::size_t i = cp.next;
            Term goal = cp.goal;
            cont_ = cp.cont;
            std::size_t h = cps_.size() - 1;
            std::size_t j = next_clause(p, i + 1, cp.key);
            if (j == static_cast<std::size_t>(-1))
                pop_cp();
            else
                cp.next = j;
            if (try_clause(p, i, goal, h))
                return true;
            continue;
        }
        case ChoicePoint::Alt: {
            Cont k = cp.cont;
            cont_ = FRAME(Frame::Goal, cp.alt, cp.cutb, cp.m, 0, std::nullopt, k);
            pop_cp();
            return true;
        }
        default: pop_cp(); continue;
        }
    }
    return false;
}

void Engine::run_undos() {
    while (!pending_undo_.empty()) {
        std::vector<Term> goals;
        goals.swap(pending_undo_);
        for (const auto &g : goals) {
            try {
                once(thaw(g), sys_);
            } catch (const PrologError &e) {
                warn("undo goal raised " + format_error(*this, e));
            }
        }
    }
}

bool Engine::handle_error(const Term &ball, std::size_t base) {
    Term frozen = freeze(ball);
    while (cps_.size() > base) {
        ChoicePoint &cp = cps_.back();
        store().backtrack_to(cp.mark);
        if (cp.kind != ChoicePoint::Catch) {
            pop_cp();
            continue;
        }
        ChoicePoint c = cp;
        pop_cp();
        prio_ = c.prio;
        cur_susp_ = c.susp;
        Term b = thaw(frozen);
        Store::Mark trial = store().push_choicepoint();
        if (store().unify(c.alt, b)) {
            store().pop_choicepoint();
            cont_ = FRAME(Frame::Goal, c.recovery, c.cutb, c.m, 0, std::nullopt, c.cont);
            return true;
        }
        store().backtrack_to(trial);
        store().pop_choicepoint();
    }
    Term b = thaw(frozen);
    throw PrologError(b, "uncaught exception");
}

Term Engine::freeze(const Term &t) {
    std::unordered_map<std::uint32_t, std::int64_t> ids;
    std::function<Term(const Term &)> walk = [&](const Term &in) -> Term {
        Term x = store().deref(in);
        if (x.is_var()) {
            auto [it, _] = ids.emplace(x.var().id, static_cast<std::int64_t>(ids.size()));
            return mk_struct(kFrozen, {Term::integer(it->second)});
        }
        if (!x.is_struct())
            return x;
        std::vector<Term> args;
        for (const auto &a : x.as_struct()->args)
            args.push_back(walk(a));
        return mk_struct(x.functor(), std::move(args));
    };
    return walk(t);
}

Term Engine::thaw(const Term &t) {
    std::unordered_map<std::int64_t, Term> vars;
    std::function<Term(const Term &)> walk = [&](const Term &x) -> Term {
        if (!x.is_struct())
            return x;
        if (x.is_struct(kFrozen, 1)) {
            auto i = x.arg(0).small_int();
            auto it = vars.find(i);
            if (it == vars.end())
                it = vars.emplace(i, store().new_var()).first;
            return it->second;
        }
        std::vector<Term> args;
        for (const auto &a : x.as_struct()->args)
            args.push_back(walk(a));
        return mk_struct(x.functor(), std::move(args));
    };
    return walk(t);
}

bool Engine::try_clause(Pred *p, std::size_t i, const Term &goal, std::size_t cutb) {
    const Clause &c = p->clauses[i];
    std::vector<std::optional<Term>> frame(c.nvars);
    if (c.head.is_struct()) {
        const auto &ha = c.head.as_struct()->args;
        const auto &ga = goal.as_struct()->args;
        for (std::size_t k = 0; k < ha.size(); ++k)
            if (!store().unify(instantiate(ha[k], frame), ga[k]))
                return false;
    }
    if (!c.body.is_atom(kTrue))
        cont_ = FRAME(Frame::Goal, instantiate(c.body, frame), cutb, p->home, 0, std::nullopt, cont_);
    return true;
}

bool Engine::call_pred(Pred *p, const Term &goal, Module *) {
    std::uint64_t key = goal.is_struct() ? index_key(goal.arg(0)) : 0;
    std::size_t i = next_clause(p, 0, key);
    if (i == static_cast<std::size_t>(-1))
        return false;
    std::size_t j = next_clause(p, i + 1, key);
    std::size_t h = cps_.size();
    if (j != static_cast<std::size_t>(-1)) {
        ChoicePoint cp;
        cp.kind = ChoicePoint::Clauses;
        cp.cont = cont_;
        cp.pred = p;
        cp.next = j;
        cp.key = key;
        cp.goal = goal;
        push_cp(std::move(cp));
    }
    return try_clause(p, i, goal, h);
}

bool Engine::solve_nested(const Term &goal, Module *m, const std::function<bool()> &on_solution) {
    ChoicePoint bar;
    bar.cont = cont_;
    push_cp(std::move(bar));
    std::size_t index = cps_.size() - 1;
    std::size_t base = cps_.size();
    cont_ = FRAME(Frame::Goal, goal, base, m, 0, std::nullopt, FRAME(Frame::Stop));
    try {
        bool ok = run(base);
        bool any = ok;
        while (ok) {
            if (!on_solution())
                break;
            ok = backtrack(base) && run(base);
        }
        drop_barrier(index, false);
        return any;
    } catch (...) {
        drop_barrier(index, false);
        throw;
    }
}

bool Engine::step(const Term &goal_in, std::size_t cutb, Module *m) {
    Term g = store().deref(goal_in);
    if (g.is_var())
        throw_instantiation_error();
    if (!g.is_callable())
        throw_type_error("callable", g);
    Atom name = g.functor();
    std::size_t n = g.arity();
    PredKey key = pred_key(name, n);
    ctx_module_ = m;

    auto ctl = control_table().find(key);
    if (ctl != control_table().end()) {
        switch (ctl->second) {
        case Ctl::True: return true;
        case Ctl::Fail: return false;
        case Ctl::Conj:
            cont_ = FRAME(Frame::Goal, g.arg(0), cutb, m, 0, std::nullopt,
                          FRAME(Frame::Goal, g.arg(1), cutb, m, 0, std::nullopt, cont_));
            return true;
        case Ctl::Cut: cut_to(cutb); return true;
        case Ctl::Disj: {
            Term left = store().deref(g.arg(0));
            ChoicePoint cp;
            cp.kind = ChoicePoint::Alt;
            cp.cont = cont_;
            cp.alt = g.arg(1);
            cp.cutb = cutb;
            cp.m = m;
            std::size_t h = cps_.size();
            push_cp(std::move(cp));
            if (left.is_struct(kArrow, 2)) {
                cont_ = FRAME(Frame::Goal, left.arg(0), h + 1, m, 0, std::nullopt,
                              FRAME(Frame::CutTo, Term(), h, nullptr, 0, std::nullopt,
                                    FRAME(Frame::Goal, left.arg(1), cutb, m, 0, std::nullopt, cont_)));
            } else {
                cont_ = FRAME(Frame::Goal, left, cutb, m, 0, std::nullopt, cont_);
            }
            return true;
        }
        case Ctl::IfThen: return step(mk_struct(kSemi, {g, Term(kFail)}), cutb, m);
        case Ctl::Not: {
            ChoicePoint cp;
            cp.kind = ChoicePoint::Alt;
            cp.cont = cont_;
            cp.alt = Term(kTrue);
            cp.cutb = cutb;
            cp.m = m;
            std::size_t h = cps_.size();
            push_cp(std::move(cp));
            cont_ = FRAME(Frame::Goal, g.arg(0), h + 1, m, 0, std::nullopt,
                          FRAME(Frame::CutTo, Term(), h, nullptr, 0, std::nullopt,
                                FRAME(Frame::Goal, Term(kFail), h, m, 0, std::nullopt, nullptr)));
            return true;
        }
        case Ctl::Call: {
            const auto &args = g.as_struct()->args;
            Term inner = add_args(store(), args[0], std::span<const Term>(args).subspan(1));
            cont_ = FRAME(Frame::Goal, inner, cps_.size(), m, 0, std::nullopt, cont_);
            return true;
        }
        case Ctl::Once:
            return step(mk_struct(kSemi, {mk_struct(kArrow, {g.arg(0), Term(kTrue)}), Term(kFail)}), cutb, m);
        case Ctl::Ignore:
            return step(mk_struct(kSemi, {mk_struct(kArrow, {g.arg(0), Term(kTrue)}), Term(kTrue)}), cutb, m);
        case Ctl::Forall:
            return step(mk_struct(kNot, {mk_struct(kComma, {g.arg(0), mk_struct(kNot, {g.arg(1)})})}), cutb, m);
        case Ctl::Findall: {
            std::vector<Term> results;
            std::size_t start = sched().created();
            Term tmpl = g.arg(0), sub = g.arg(1);
            solve_nested(sub, m, [&] {
                auto left = sched().suspended_since(start);
                if (!left.empty()) {
                    std::vector<Term> goals;
                    for (auto s : left)
                        goals.push_back(sched().get(s).goal);
                    Term ball = error_term(mk_struct("floundering", {mk_list(goals)}), pred_indicator(kFindall, 3));
                    throw PrologError(ball, "floundering: goals left delayed inside findall/3");
                }
                results.push_back(k.attrs.copy_term(tmpl));
                return true;
            });
            return store().unify(g.arg(2), mk_list(results));
        }
        case Ctl::Catch: {
            ChoicePoint cp;
            cp.kind = ChoicePoint::Catch;
            cp.cont = cont_;
            cp.alt = g.arg(1);
            cp.recovery = g.arg(2);
            cp.cutb = cutb;
            cp.m = m;
            std::size_t h = cps_.size();
            push_cp(std::move(cp));
            cont_ = FRAME(Frame::Goal, g.arg(0), h + 1, m, 0, std::nullopt,
                          FRAME(Frame::PopCatch, Term(), h, nullptr, 0, std::nullopt, cont_));
            return true;
        }
        case Ctl::Throw: {
            Term ball = store().deref(g.arg(0));
            if (ball.is_var())
                throw_instantiation_error();
            throw PrologError(ball, "uncaught exception");
        }
        case Ctl::Qualified: {
            Term mod = store().deref(g.arg(0));
            if (mod.is_atom(kNil))
                throw_domain_error("nonempty_list", mod);
            if (mod.is_struct(kDot, 2)) {
                auto mods = list_to_vector(store(), mod);
                std::vector<Term> goals;
                for (const auto &mm : mods)
                    goals.push_back(mk_struct(kColon, {mm, g.arg(1)}));
                cont_ = FRAME(Frame::Goal, vector_to_conj(goals), cutb, m, 0, std::nullopt, cont_);
                return true;
            }
            Module *target = lookup_module_term(mod);
            cont_ = FRAME(Frame::Goal, g.arg(1), cutb, target, 0, std::nullopt, cont_);
            return true;
        }
        case Ctl::Loop: {
            auto saved = cur_names_;
            cur_names_.clear();
            Term expanded = expand_goal(g, m, g);
            cur_names_ = std::move(saved);
            cont_ = FRAME(Frame::Goal, expanded, cutb, m, 0, std::nullopt, cont_);
            return true;
        }
        }
    }

    if (auto it = builtins_.find(key); it != builtins_.end()) {
        std::span<const Term> args;
        if (n)
            args = std::span<const Term>(g.as_struct()->args);
        return it->second(*this, args);
    }
    Pred *p = resolve(m, name, n);
    if (!p)
        throw PrologError(error_term(mk_struct("existence_error", {Term::atom("procedure"), pred_indicator(name, n)}),
                                     mk_struct(kColon, {Term(m->name), pred_indicator(name, n)})),
                          "unknown procedure " + name.name() + "/" + std::to_string(n));
    return call_pred(p, g, m);
}

// ---------------------------------------------------------------------------
// Queries

Query::Query(Engine &e, const Term &goal, Module *m, std::vector<std::pair<std::string, Term>> vars)
    : e_(e), goal_(goal), module_(m ? m : e.user()), vars_(std::move(vars)) {
    Engine::ChoicePoint bar;
    bar.cont = e_.cont_;
    e_.push_cp(std::move(bar));
    base_ = e_.cps_.size();
    first_susp_ = e_.sched().created();
}

Query::~Query() { e_.drop_barrier(base_ - 1, false); }

bool Query::next() {
    using Frame = Engine::Frame;
    if (done_)
        return false;
    try {
        bool ok;
        if (!started_) {
            started_ = true;
            e_.cont_ = FRAME(Frame::Goal, goal_, base_, module_, 0, std::nullopt, FRAME(Frame::Stop));
            ok = e_.run(base_);
        } else {
            ok = e_.backtrack(base_) && e_.run(base_);
        }
        if (!ok)
            done_ = true;
        return ok;
    } catch (...) {
        done_ = true;
        throw;
    }
}

std::vector<SuspRef> Query::delayed() const { return e_.sched().suspended_since(first_susp_); }

bool Engine::once(const Term &goal, Module *m) {
    if (!m)
        m = user_;
    ChoicePoint bar;
    bar.cont = cont_;
    push_cp(std::move(bar));
    std::size_t index = cps_.size() - 1;
    std::size_t base = cps_.size();
    cont_ = FRAME(Frame::Goal, goal, base, m, 0, std::nullopt, FRAME(Frame::Stop));
    bool ok;
    try {
        ok = run(base);
    } catch (...) {
        drop_barrier(index, false);
        throw;
    }
    drop_barrier(index, ok);
    return ok;
}

std::size_t Engine::count_solutions(const Term &goal, Module *m) {
    std::size_t count = 0;
    std::size_t start = sched().created();
    solve_nested(goal, m ? m : user_, [&] {
        auto left = sched().suspended_since(start);
        if (!left.empty()) {
            std::vector<Term> goals;
            for (auto s : left)
                goals.push_back(sched().get(s).goal);
            throw PrologError(error_term(mk_struct("floundering", {mk_list(goals)}), Term::atom("count_solutions")),
                              "floundering: goals left delayed");
        }
        ++count;
        return true;
    });
    return count;
}

// ---------------------------------------------------------------------------
// Loading

const StructTable *Engine::struct_table(Module *m, Atom name) {
    if (m->structs.find(name))
        return &m->structs;
    for (Module *imp : m->imports)
        if (imp->exported_structs.count(name.id()) && imp->structs.find(name))
            return &imp->structs;
    return nullptr;
}

const Transform *Engine::visible_transform(Module *m, std::unordered_map<PredKey, Transform> Module::*table,
                                           PredKey key) {
    auto &own = m->*table;
    if (auto it = own.find(key); it != own.end())
        return &it->second;
    for (Module *imp : m->imports) {
        auto &t = imp->*table;
        if (auto it = t.find(key); it != t.end() && it->second.exported)
            return &it->second;
    }
    if (m != sys_) {
        auto &t = sys_->*table;
        if (auto it = t.find(key); it != t.end())
            return &it->second;
    }
    return nullptr;
}

std::optional<Term> Engine::apply_transform(const Transform &tr, const Term &in, Module *m) {
    Term outv = store().new_var();
    std::vector<Term> args{in, outv};
    if (tr.arity == 3)
        args.push_back(Term(m->name));
    if (!once(mk_struct(tr.pred, std::move(args)), tr.module))
        return std::nullopt;
    return store().deref(outv);
}

Term Engine::expand_term_macros(Module *m, const Term &t) {
    if (!t.is_struct())
        return t;
    if (t.is_struct(kWith, 2)) {
        Term name = store().deref(t.arg(0));
        const StructTable *tab = name.is_atom() ? struct_table(m, name.atom()) : nullptr;
        if (!tab)
            throw_expansion_error("unknown struct", name);
        return expand_with(store(), *tab, t);
    }
    if (t.is_struct(kOf, 2)) {
        Term name = store().deref(t.arg(1));
        const StructTable *tab = name.is_atom() ? struct_table(m, name.atom()) : nullptr;
        if (!tab)
            throw_expansion_error("unknown struct", name);
        return expand_of(store(), *tab, t);
    }
    if (const Transform *tr = visible_transform(m, &Module::term_macros, pred_key(t.functor(), t.arity())))
        if (auto r = apply_transform(*tr, t, m))
            return *r;
    return t;
}

Term Engine::read_hooked(Parser &p, Module *m, ReadResult &rr) {
    (void)m;
    rr = p.next();
    return rr.term;
}

ReadResult Engine::read_term(const std::string &text, Module *m) {
    if (!m)
        m = user_;
    std::string src = text;
    auto pos = src.find_last_not_of(" \t\r\n");
    if (pos == std::string::npos || src[pos] != '.')
        src += " .";
    ReadHooks hooks;
    hooks.new_var = [this] { return store().new_var(); };
    hooks.term_macro = [this, m](const Term &t) -> std::optional<Term> {
        Term r = expand_term_macros(m, t);
        if (r.same_node(t))
            return std::nullopt;
        return r;
    };
    Parser p(tokenize(src), m->ops, hooks);
    ReadResult rr = p.next();
    if (!p.at_eof())
        throw SyntaxError("extra input after term", p.position());
    return rr;
}

void Engine::consult_file(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw PrologError(error_term(mk_struct("existence_error", {Term::atom("file"), Term::string(path)})),
                          "cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    load_string(ss.str(), path, user_);
}

void Engine::load_string(const std::string &text, const std::string &file, Module *m) {
    if (!m)
        m = user_;
    std::unordered_set<const Pred *> seen;
    auto *outer_seen = load_seen_;
    load_seen_ = &seen;
    struct Restore {
        Engine &e;
        std::unordered_set<const Pred *> *prev;
        ~Restore() { e.load_seen_ = prev; }
    } restore{*this, outer_seen};

    int errors = 0;
    auto report = [&](const SourcePos &pos, const std::string &msg) {
        ++errors;
        warn(pos.str() + ": " + msg);
    };

    std::vector<Token> toks;
    try {
        toks = tokenize(text, file);
    } catch (const SyntaxError &e) {
        ++errors;
        warn(e.what());
        throw PrologError(error_term(mk_struct("load_errors", {Term::integer(errors)}), Term::string(file)),
                          std::to_string(errors) + " error(s) loading " + (file.empty() ? "input" : file));
    }
    ReadHooks hooks;
    hooks.new_var = [this] { return store().new_var(); };
    hooks.term_macro = [this, &m](const Term &t) -> std::optional<Term> {
        Term r = expand_term_macros(m, t);
        if (r.same_node(t))
            return std::nullopt;
        return r;
    };
    Parser p(std::move(toks), m->ops, hooks);
    while (!p.at_eof()) {
        SourcePos pos = p.position();
        // Each clause is processed inside a choicepoint so the store
        // space it used is reclaimed.
        ChoicePoint bar;
        bar.cont = cont_;
        push_cp(std::move(bar));
        std::size_t index = cps_.size() - 1;
        std::optional<ReadResult> rr;
        try {
            rr = p.next();
        } catch (const SyntaxError &e) {
            ++errors;
            warn(e.what());
            p.skip_clause();
        } catch (const PrologError &e) {
            // A term macro failed halfway through the clause.
            report(pos, format_error(*this, e));
            p.skip_clause();
        }
        if (rr) {
            try {
                handle_clause(m, *rr, file);
            } catch (const PrologError &e) {
                report(pos, format_error(*this, e));
            }
        }
        drop_barrier(index, false);
        p.set_ops(m->ops);
    }
    if (errors)
        throw PrologError(error_term(mk_struct("load_errors", {Term::integer(errors)}), Term::string(file)),
                          std::to_string(errors) + " error(s) loading " + (file.empty() ? "input" : file));
}

void Engine::handle_clause(Module *&m, const ReadResult &rr, const std::string &file) {
    Term t = store().deref(rr.term);
    cur_names_ = rr.var_names;
    if (t.is_struct(kNeck, 1) || t.is_struct(kQuery, 1)) {
        run_directive(m, t.arg(0), file);
        return;
    }
    Term head = t.is_struct(kNeck, 2) ? store().deref(t.arg(0)) : t;
    if (head.is_callable()) {
        if (const Transform *tr = visible_transform(m, &Module::clause_macros, pred_key(head.functor(), head.arity()))) {
            if (auto r = apply_transform(*tr, t, m)) {
                Term res = store().deref(*r);
                if (res.is_atom(kNil) || res.is_struct(kDot, 2)) {
                    for (const auto &c : list_to_vector(store(), res))
                        add_clause(m, c);
                } else {
                    add_clause(m, res);
                }
                return;
            }
        }
    }
    add_clause(m, t);
}

namespace {

void for_each_item(const Store &s, const Term &spec_in, const std::function<void(const Term &)> &fn) {
    Term spec = s.deref(spec_in);
    if (spec.is_struct(kComma, 2)) {
        for_each_item(s, spec.arg(0), fn);
        for_each_item(s, spec.arg(1), fn);
    } else if (spec.is_struct(kDot, 2)) {
        for (const auto &x : list_to_vector(s, spec))
            for_each_item(s, x, fn);
    } else if (!spec.is_atom(kNil)) {
        fn(spec);
    }
}

std::pair<Atom, std::size_t> parse_indicator(const Store &s, const Term &t_in) {
    Term t = s.deref(t_in);
    if (!t.is_struct(kSlash, 2))
        throw_type_error("predicate_indicator", t);
    Term n = s.deref(t.arg(0)), a = s.deref(t.arg(1));
    if (!n.is_atom() || !a.is_small_int() || a.small_int() < 0)
        throw_type_error("predicate_indicator", t);
    return {n.atom(), static_cast<std::size_t>(a.small_int())};
}

void declare_op(const Store &s, OpTable &ops, const Term &p_in, const Term &t_in, const Term &names) {
    Term p = s.deref(p_in), ty = s.deref(t_in);
    if (!p.is_small_int())
        throw_type_error("integer", p);
    if (!ty.is_atom())
        throw_type_error("atom", ty);
    auto type = op_type_from_name(ty.atom().name());
    if (!type)
        throw_domain_error("operator_specifier", ty);
    for_each_item(s, names, [&](const Term &n) {
        if (!n.is_atom())
            throw_type_error("atom", n);
        ops.declare(static_cast<int>(p.small_int()), *type, n.atom().name());
    });
}

} // namespace

void Engine::register_transform(Module *m, const Term &spec, bool exported, bool portray) {
    auto [fname, farity] = parse_indicator(store(), spec.arg(0));
    auto [tname, tarity] = parse_indicator(store(), spec.arg(1));
    if (tarity != 2 && tarity != 3)
        throw_domain_error("transformation_arity", spec.arg(1));
    Transform tr{tname, tarity, m, exported};
    PredKey key = pred_key(fname, farity);
    if (portray) {
        m->portrays[key] = tr;
        return;
    }
    auto *table = &m->term_macros;
    if (spec.arity() >= 3) {
        for_each_item(store(), spec.arg(2), [&](const Term &o) {
            if (o.is_atom("clause"))
                table = &m->clause_macros;
            else if (o.is_atom("goal"))
                table = &m->goal_expansions;
        });
    }
    (*table)[key] = tr;
}

void Engine::declare(Module *m, const Term &spec_in, bool exported) {
    for_each_item(store(), spec_in, [&](const Term &item) {
        if (item.is_struct("struct", 1)) {
            m->structs.declare(store(), item.arg(0));
            Atom name = store().deref(item.arg(0)).functor();
            if (exported)
                m->exported_structs.insert(name.id());
        } else if (item.is_struct("macro", 3) || item.is_struct("macro", 2)) {
            register_transform(m, item, exported, false);
        } else if (item.is_struct("portray", 3) || item.is_struct("portray", 2)) {
            register_transform(m, item, exported, true);
        } else if (item.is_struct("op", 3)) {
            declare_op(store(), m->ops, item.arg(0), item.arg(1), item.arg(2));
        } else {
            auto [name, arity] = parse_indicator(store(), item);
            Pred &p = m->preds[pred_key(name, arity)];
            if (!p.home) {
                p.name = name;
                p.arity = arity;
                p.home = m;
            }
            if (exported)
                p.exported = true;
        }
    });
}

void Engine::run_directive(Module *&m, const Term &d_in, const std::string &file) {
    Term d = store().deref(d_in);
    auto sibling = [&](const Term &f_in) {
        Term f = store().deref(f_in);
        std::string name = f.is_str() ? f.as_str() : f.is_atom() ? f.atom().name() : "";
        if (name.empty())
            throw_type_error("file_name", f);
        std::filesystem::path path(name);
        if (path.is_relative() && !file.empty())
            path = std::filesystem::path(file).parent_path() / path;
        if (!std::filesystem::exists(path) && path.extension().empty())
            path += ".pl";
        consult_file(path.string());
    };
    if (d.is_struct("module", 1) || d.is_struct("module", 2)) {
        Term name = store().deref(d.arg(0));
        if (!name.is_atom())
            throw_type_error("atom", name);
        m = module(name.atom());
        if (d.arity() == 2)
            declare(m, d.arg(1), true);
    } else if (d.is_struct("export", 1)) {
        declare(m, d.arg(0), true);
    } else if (d.is_struct("local", 1)) {
        declare(m, d.arg(0), false);
    } else if (d.is_struct("import", 1)) {
        for_each_item(store(), d.arg(0), [&](const Term &x) {
            Module *imp = lookup_module_term(x);
            if (imp != m && std::find(m->imports.begin(), m->imports.end(), imp) == m->imports.end())
                m->imports.push_back(imp);
        });
    } else if (d.is_struct("lib", 1) || d.is_struct("use_module", 1)) {
        // The solver libraries are built in.
    } else if (d.is_struct("inline", 2)) {
        auto [fname, farity] = parse_indicator(store(), d.arg(0));
        auto [tname, tarity] = parse_indicator(store(), d.arg(1));
        m->goal_expansions[pred_key(fname, farity)] = Transform{tname, tarity, m, true};
    } else if (d.is_struct("demon", 1)) {
        for_each_item(store(), d.arg(0), [&](const Term &x) {
            auto [name, arity] = parse_indicator(store(), x);
            Pred &p = m->preds[pred_key(name, arity)];
            if (!p.home) {
                p.name = name;
                p.arity = arity;
                p.home = m;
            }
            p.demon = true;
        });
    } else if (d.is_struct("op", 3)) {
        declare_op(store(), m->ops, d.arg(0), d.arg(1), d.arg(2));
    } else if (d.is_struct("dynamic", 1) || d.is_struct("discontiguous", 1)) {
    } else if (d.is_struct("ensure_loaded", 1) || d.is_struct("compile", 1) || d.is_struct("consult", 1)) {
        for_each_item(store(), d.arg(0), sibling);
    } else if (d.is_struct(kDot, 2)) {
        for_each_item(store(), d, sibling);
    } else {
        Term body = expand_goal(d, m, d);
        if (!once(body, m))
            warn((file.empty() ? std::string() : file + ": ") + "directive failed: " + format(d, false, cur_names_, m));
    }
}

// ---------------------------------------------------------------------------
// Goal expansion

Term Engine::expand_goal(const Term &goal, Module *m, const Term &clause) {
    Term x = store().deref(goal);
    if (x.is_var())
        return mk_struct(kCall, {x});
    if (!x.is_struct())
        return x;
    auto e = [&](const Term &t) { return expand_goal(t, m, clause); };
    Atom f = x.functor();
    std::size_t n = x.arity();
    if ((f == kComma || f == kSemi || f == kArrow) && n == 2)
        return mk_struct(f, {e(x.arg(0)), e(x.arg(1))});
    if ((f == kNot || f == kNot2 || f == kOnce || f == kIgnore) && n == 1)
        return mk_struct(f, {e(x.arg(0))});
    if (f == kForall && n == 2)
        return mk_struct(f, {e(x.arg(0)), e(x.arg(1))});
    if (f == kFindall && n == 3)
        return mk_struct(f, {x.arg(0), e(x.arg(1)), x.arg(2)});
    if (f == kCatch && n == 3)
        return mk_struct(f, {e(x.arg(0)), x.arg(1), e(x.arg(2))});
    if (f == kColon && n == 2) {
        Term mod = store().deref(x.arg(0));
        Module *mm = mod.is_atom() ? module(mod.atom(), false) : nullptr;
        if (!mm)
            return x;
        return mk_struct(kColon, {mod, expand_goal(x.arg(1), mm, clause)});
    }
    if (f == kDo && n == 2) {
        Term body = e(x.arg(1));
        Atom aux("do__" + std::to_string(++aux_counter_));
        std::vector<VarRef> outer;
        std::unordered_set<std::uint32_t> seen;
        collect_vars_outside(store(), clause, x, outer, seen);
        LoopExpansion le = expand_do_loop(store(), x.arg(0), body, aux, outer);
        for (auto v : le.leaked) {
            std::string name = "_" + std::to_string(v.id);
            for (const auto &[nm, t] : cur_names_) {
                Term d = store().deref(t);
                if (d.is_var() && d.var() == v)
                    name = nm;
            }
            warn("variable " + name + " is shared with the context of a do-loop but not declared as param");
        }
        for (const auto &c : le.clauses)
            add_clause(m, c, false);
        return le.call;
    }
    if (f == kUpdateStruct && n == 4) {
        Term name = store().deref(x.arg(0));
        if (name.is_atom() && is_proper_list(store(), x.arg(1))) {
            const StructTable *tab = struct_table(m, name.atom());
            if (!tab)
                throw_expansion_error("unknown struct", name);
            return expand_update_struct(store(), *tab, name, x.arg(1), x.arg(2), x.arg(3));
        }
        return x;
    }
    PredKey key = pred_key(f, n);
    if (auto it = cxx_goal_expanders_.find(key); it != cxx_goal_expanders_.end()) {
        if (auto r = it->second(*this, x, m)) {
            Term rt = store().deref(*r);
            if (rt.is_struct() && pred_key(rt.functor(), rt.arity()) == key)
                return rt;
            return expand_goal(rt, m, clause);
        }
    }
    if (const Transform *tr = visible_transform(m, &Module::goal_expansions, key)) {
        if (auto r = apply_transform(*tr, x, m)) {
            Term rt = store().deref(*r);
            if (rt.is_struct() && pred_key(rt.functor(), rt.arity()) == key)
                return rt;
            return expand_goal(rt, m, clause);
        }
    }
    return x;
}

// ---------------------------------------------------------------------------
// Printing

std::string Engine::format(const Term &t, bool canonical, const std::vector<std::pair<std::string, Term>> &names,
                           Module *m, bool quoted) {
    if (!m)
        m = user_;
    WriteOptions o;
    o.quoted = quoted;
    o.canonical = canonical;
    o.ops = &m->ops;
    for (const auto &[name, v] : names) {
        Term d = store().deref(v);
        if (d.is_var())
            o.var_names.emplace(d.var().id, name);
    }
    o.portray = [this, m](const Term &x) -> std::optional<Term> {
        PredKey key = pred_key(x.functor(), x.arity());
        if (auto it = cxx_portrays_.find(key); it != cxx_portrays_.end())
            if (auto r = it->second(*this, x))
                return r;
        if (const Transform *tr = visible_transform(m, &Module::portrays, key))
            return apply_transform(*tr, x, m);
        return std::nullopt;
    };
    o.var_text = [this](VarRef v) -> std::optional<std::string> {
        for (const auto &[attr, fn] : var_printers_)
            if (store().get_attr(v, attr))
                if (auto s = fn(*this, v))
                    return s;
        return std::nullopt;
    };
    return write_term(store(), t, o);
}

std::string Engine::format_goal(SuspRef s, const std::vector<std::pair<std::string, Term>> &names) {
    return format(sched().get(s).goal, false, names);
}

std::string Engine::describe_suspension(SuspRef s, const std::vector<std::pair<std::string, Term>> &names) {
    const Suspension &su = sched().get(s);
    std::string out = format(su.goal, false, names) + "  (priority " + std::to_string(su.priority);
    if (su.demon)
        out += ", demon";
    for (const auto &[v, cond] : su.attachments) {
        Term d = store().deref(v);
        if (!d.is_var())
            continue;
        WriteOptions o;
        for (const auto &[name, t] : names) {
            Term dt = store().deref(t);
            if (dt.is_var())
                o.var_names.emplace(dt.var().id, name);
        }
        out += ", " + write_term(store(), d, o) + "->" + cond;
    }
    return out + ")";
}

std::string format_error(Engine &e, const PrologError &err) {
    Term ball = e.store().deref(err.ball());
    if (ball.is_struct(kError, 2)) {
        std::string msg = e.format(ball.arg(0));
        Term ctx = e.store().deref(ball.arg(1));
        if (!ctx.is_var() && !ctx.is_atom("unknown"))
            msg += " in " + e.format(ctx);
        if (auto *se = dynamic_cast<const SyntaxError *>(&err))
            return se->what();
        return "error: " + msg;
    }
    if (auto *se = dynamic_cast<const SyntaxError *>(&err))
        return se->what();
    return "uncaught exception: " + e.format(ball);
}

} // namespace clpk
