#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "clpk/store.hpp"
#include "clpk/susp.hpp"

namespace clpk {

class Kernel;

// Handlers an attribute may install. All are optional.
struct AttributeSpec {
    std::string name;
    // Runs right after `var` (carrying `attr`) was bound to `value`.
    std::function<bool(Kernel &, VarRef var, const Term &attr, const Term &value)> unify;
    // Payload for the copy of a variable; nullopt leaves the copy plain.
    std::function<std::optional<Term>(Kernel &, const Term &attr)> copy;
    std::function<std::pair<double, double>(Kernel &, const Term &attr)> bounds_get;
    std::function<bool(Kernel &, VarRef var, double lo, double hi)> bounds_set;
    // Payload installed when a suspension list is requested on a variable
    // that does not carry the attribute yet.
    std::function<Term(Kernel &)> make_default;
    // Named suspension lists and their 1-based argument slot in the payload.
    std::vector<std::pair<std::string, std::size_t>> lists;
};

// A waking condition: the generic ones live in the `suspend` attribute.
struct WakingCondition {
    std::string attribute;
    std::string list;

    static WakingCondition inst() { return {"suspend", "inst"}; }
    static WakingCondition bound() { return {"suspend", "bound"}; }
    static WakingCondition constrained() { return {"suspend", "constrained"}; }
    std::string label() const { return attribute == "suspend" ? list : attribute + ":" + list; }
};

class AttrRegistry : public AttrDispatch {
public:
    explicit AttrRegistry(Kernel &k);

    void register_attribute(AttributeSpec spec);
    bool registered(std::string_view name) const;

    void add_attr(const Term &v, std::string_view name, Term value);
    std::optional<Term> get_attr(const Term &v, std::string_view name) const;

    void attach(SuspRef s, const Term &var, const WakingCondition &cond);
    // Schedules every live suspension on the given list and drops dead ones.
    void wake(VarRef v, std::string_view attribute, std::string_view list);
    void notify_constrained(const Term &v);
    // Live suspensions on a list, oldest first.
    std::vector<SuspRef> list_members(VarRef v, std::string_view attribute, std::string_view list) const;

    std::pair<double, double> get_var_bounds(const Term &v);
    bool set_var_bounds(const Term &v, double lo, double hi);

    bool on_bind(VarRef var, const Term &value) override;

    // Fresh-variable renaming honouring copy handlers.
    Term copy_term(const Term &t);

private:
    const AttributeSpec *find(std::string_view name) const;
    std::size_t list_slot(const AttributeSpec &spec, std::string_view list) const;

    Kernel &k_;
    std::vector<AttributeSpec> specs_;
};

// The engine state shared by the solver, the scheduler and the solvers.
class Kernel {
public:
    Kernel();
    Kernel(const Kernel &) = delete;
    Kernel &operator=(const Kernel &) = delete;

    Store store;
    Scheduler sched{store};
    AttrRegistry attrs{*this};
};

// Elements of a proper list; throws a type error otherwise.
std::vector<Term> list_to_vector(const Store &store, const Term &list);
bool is_proper_list(const Store &store, const Term &list);

} // namespace clpk
