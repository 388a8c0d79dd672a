#include "clpk/store.hpp"

#include <stdexcept>

namespace clpk {

namespace {
const AttrList kNoAttrs;
}

Term Store::new_var() {
    auto id = static_cast<std::uint32_t>(cells_.size());
    cells_.emplace_back();
    cells_.back().attr_stamp = timestamp();
    return Term(VarRef{id});
}

Term Store::deref(Term t) const {
    while (t.is_var()) {
        auto id = t.var().id;
        if (id >= cells_.size() || !cells_[id].ref)
            return t;
        t = *cells_[id].ref;
    }
    return t;
}

bool Store::is_bound(VarRef v) const { return v.id < cells_.size() && cells_[v.id].ref.has_value(); }

bool Store::has_attrs(VarRef v) const { return v.id < cells_.size() && !cells_[v.id].attrs.empty(); }

const AttrList &Store::attrs(VarRef v) const { return v.id < cells_.size() ? cells_[v.id].attrs : kNoAttrs; }

std::optional<Term> Store::get_attr(VarRef v, Atom name) const {
    for (const auto &[n, val] : attrs(v))
        if (n == name)
            return val;
    return std::nullopt;
}

void Store::put_attr(VarRef v, Atom name, Term value) {
    if (is_bound(v))
        throw_instantiation_error();
    auto &cell = cells_[v.id];
    AttrList old = cell.attrs;
    trail_value(cell.attr_stamp, [this, id = v.id, old = std::move(old)](std::uint64_t stamp) {
        cells_[id].attrs = old;
        cells_[id].attr_stamp = stamp;
    });
    auto &list = cells_[v.id].attrs;
    for (auto &[n, val] : list) {
        if (n == name) {
            val = std::move(value);
            return;
        }
    }
    list.emplace_back(name, std::move(value));
}

void Store::bind(VarRef v, Term value) {
    cells_[v.id].ref = std::move(value);
    if (!cps_.empty() && v.id < cps_.back().heap_top)
        push_entry(Entry{TrailKind::Binding, v.id, {}});
}

bool Store::unify(const Term &a, const Term &b) {
    std::vector<std::pair<Term, Term>> todo;
    todo.emplace_back(a, b);
    while (!todo.empty()) {
        auto [x, y] = std::move(todo.back());
        todo.pop_back();
        x = deref(std::move(x));
        y = deref(std::move(y));
        if (x.is_var() && y.is_var()) {
            VarRef vx = x.var(), vy = y.var();
            if (vx == vy)
                continue;
            bool ax = has_attrs(vx), ay = has_attrs(vy);
            // Plain variables bind to attributed ones; otherwise the younger
            // variable binds to the older one.
            VarRef from = vx, to = vy;
            if (ax != ay) {
                from = ax ? vy : vx;
                to = ax ? vx : vy;
            } else if (vx.id < vy.id) {
                from = vy;
                to = vx;
            }
            bind(from, Term(to));
            if (ax && ay && dispatch_ && !dispatch_->on_bind(from, Term(to)))
                return false;
            continue;
        }
        if (x.is_var() || y.is_var()) {
            if (y.is_var())
                std::swap(x, y);
            VarRef v = x.var();
            bind(v, y);
            if (has_attrs(v) && dispatch_ && !dispatch_->on_bind(v, y))
                return false;
            continue;
        }
        if (x.kind() != y.kind())
            return false;
        if (!x.is_struct()) {
            if (!x.same_node(y))
                return false;
            continue;
        }
        const auto &sx = x.as_struct();
        const auto &sy = y.as_struct();
        if (sx == sy)
            continue;
        if (sx->name != sy->name || sx->args.size() != sy->args.size())
            return false;
        for (std::size_t i = sx->args.size(); i-- > 0;)
            todo.emplace_back(sx->args[i], sy->args[i]);
    }
    return true;
}

Store::Mark Store::push_choicepoint() {
    ++clock_;
    cps_.push_back(ChoicePoint{trail_.size(), cells_.size(), clock_});
    return Mark{cps_.size() - 1, clock_};
}

Store::Mark Store::top_mark() const {
    if (cps_.empty())
        throw std::logic_error("no choicepoint");
    return Mark{cps_.size() - 1, cps_.back().stamp};
}

void Store::backtrack_to(const Mark &m) {
    if (m.index >= cps_.size() || cps_[m.index].stamp != m.stamp)
        throw std::logic_error("backtrack to a dead choicepoint mark");
    cps_.resize(m.index + 1);
    unwind(cps_.back().trail_top);
    cells_.resize(cps_.back().heap_top);
}

void Store::pop_choicepoint() {
    if (cps_.empty())
        throw std::logic_error("choicepoint stack underflow");
    cps_.pop_back();
}

void Store::cut_to(std::size_t height) {
    if (height < cps_.size())
        cps_.resize(height);
}

void Store::set_arg(std::size_t i, const Term &s, Term value) {
    if (!s.is_struct())
        throw_type_error("compound", s);
    const auto &st = s.as_struct();
    if (i < 1 || i > st->args.size())
        throw_range_error(Term::integer(static_cast<std::int64_t>(i)));
    if (st->stamps.size() < st->args.size())
        st->stamps.resize(st->args.size(), 0);
    Term old = st->args[i - 1];
    trail_value(st->stamps[i - 1], [st, i, old = std::move(old)](std::uint64_t stamp) {
        st->args[i - 1] = old;
        st->stamps[i - 1] = stamp;
    });
    st->args[i - 1] = std::move(value);
}

void Store::trail_value(std::uint64_t &stamp, std::function<void(std::uint64_t)> restore) {
    std::uint64_t now = timestamp();
    if (stamp >= now)
        return;
    std::uint64_t old = stamp;
    stamp = now;
    push_entry(Entry{TrailKind::Value, 0, [old, restore = std::move(restore)]() { restore(old); }});
}

void Store::register_undo(std::function<void()> fn) { push_entry(Entry{TrailKind::Undo, 0, std::move(fn)}); }

void Store::push_entry(Entry e) {
    ++counts_[static_cast<int>(e.kind)];
    trail_.push_back(std::move(e));
}

void Store::unwind(std::size_t trail_top) {
    while (trail_.size() > trail_top) {
        Entry e = std::move(trail_.back());
        trail_.pop_back();
        --counts_[static_cast<int>(e.kind)];
        if (e.kind == TrailKind::Binding)
            cells_[e.var].ref.reset();
        else
            e.fn();
    }
}

} // namespace clpk
