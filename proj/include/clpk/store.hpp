#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "clpk/term.hpp"

namespace clpk {

enum class TrailKind : std::uint8_t { Binding, Value, Undo };

// Receives control right after an attributed variable has been bound.
class AttrDispatch {
public:
    virtual ~AttrDispatch() = default;
    // `value` is what the variable now dereferences to (possibly another
    // variable). Returning false vetoes the unification.
    virtual bool on_bind(VarRef var, const Term &value) = 0;
};

using AttrList = std::vector<std::pair<Atom, Term>>;

//
// Mutable engine state: variable cells, the trail and the choicepoint
// stack. Every destructive change that must survive backtracking goes
// through the trail; value entries are deduplicated per location with
// the timestamp of the newest choicepoint.
//
class Store {
public:
    struct Mark {
        std::size_t index;
        std::uint64_t stamp;
    };

    Store() = default;
    Store(const Store &) = delete;
    Store &operator=(const Store &) = delete;

    Term new_var();
    std::size_t var_count() const { return cells_.size(); }

    Term deref(Term t) const;
    bool is_bound(VarRef v) const;
    bool has_attrs(VarRef v) const;
    const AttrList &attrs(VarRef v) const;
    std::optional<Term> get_attr(VarRef v, Atom name) const;
    // Adds or replaces an attribute. The variable must be unbound.
    void put_attr(VarRef v, Atom name, Term value);

    // Low-level binding, trailed when the variable predates the newest choicepoint.
    void bind(VarRef v, Term value);
    bool unify(const Term &a, const Term &b);
    void set_dispatch(AttrDispatch *d) { dispatch_ = d; }

    Mark push_choicepoint();
    // Unwinds the trail to the mark; newer choicepoints are discarded, the
    // marked one stays live.
    void backtrack_to(const Mark &m);
    void pop_choicepoint();
    // Discards choicepoints above `height` without touching the trail.
    void cut_to(std::size_t height);
    std::size_t choicepoint_count() const { return cps_.size(); }
    Mark top_mark() const;

    // Destructive argument update; `i` is 1-based.
    void set_arg(std::size_t i, const Term &s, Term value);
    // Records `restore` unless `stamp` shows the location was already
    // trailed in the current choicepoint segment. On backtracking `restore`
    // receives the previous stamp and must put it back along with the value.
    void trail_value(std::uint64_t &stamp, std::function<void(std::uint64_t)> restore);
    void register_undo(std::function<void()> fn);

    std::uint64_t timestamp() const { return cps_.empty() ? 0 : cps_.back().stamp; }
    std::size_t trail_size() const { return trail_.size(); }
    std::size_t trail_count(TrailKind k) const { return counts_[static_cast<int>(k)]; }

private:
    struct Cell {
        std::optional<Term> ref;
        AttrList attrs;
        std::uint64_t attr_stamp = 0;
    };
    struct Entry {
        TrailKind kind;
        std::uint32_t var;
        std::function<void()> fn;
    };
    struct ChoicePoint {
        std::size_t trail_top;
        std::size_t heap_top;
        std::uint64_t stamp;
    };

    void push_entry(Entry e);
    void unwind(std::size_t trail_top);

    std::vector<Cell> cells_;
    std::vector<Entry> trail_;
    std::vector<ChoicePoint> cps_;
    std::uint64_t clock_ = 0;
    std::array<std::size_t, 3> counts_{};
    AttrDispatch *dispatch_ = nullptr;
};

// Standard order of terms: Var < Number < Atom < String < Susp < Struct.
// Numbers compare by value, then int < rat < float < breal.
int compare_terms(const Store &store, const Term &a, const Term &b);

} // namespace clpk
