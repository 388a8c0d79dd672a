#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "clpk/engine.hpp"
#include "clpk/ic.hpp"

namespace clpk::test {

using Names = std::vector<std::pair<std::string, Term>>;

// Outcome of running a goal to its first solution; bindings stay in place.
struct Solved {
    Engine *e = nullptr;
    bool ok = false;
    Names names;

    Term operator[](const std::string &name) const {
        for (const auto &[n, v] : names)
            if (n == name)
                return e->store().deref(v);
        throw std::runtime_error("no variable " + name);
    }
    std::string show(const std::string &name) const { return e->format((*this)[name], false, names); }
};

inline Term goal_of(Engine &e, const std::string &text, Names *names = nullptr) {
    ReadResult rr = e.read_term(text);
    if (names)
        *names = rr.var_names;
    return e.expand_goal(rr.term, e.user(), rr.term);
}

inline Solved solve(Engine &e, const std::string &text) {
    Solved s;
    s.e = &e;
    Term g = goal_of(e, text, &s.names);
    s.ok = e.once(g);
    return s;
}

inline bool holds(Engine &e, const std::string &text) { return solve(e, text).ok; }

inline std::size_t count(Engine &e, const std::string &text) { return e.count_solutions(goal_of(e, text), e.user()); }

// Text of one variable in every solution.
inline std::vector<std::string> all(Engine &e, const std::string &text, const std::string &var) {
    Names names;
    Term g = goal_of(e, text, &names);
    Query q(e, g, e.user(), names);
    std::vector<std::string> out;
    while (q.next())
        for (const auto &[n, v] : names)
            if (n == var)
                out.push_back(e.format(v));
    return out;
}

// Canonical text with variables numbered by first occurrence, so two
// terms print alike iff they are variants.
inline std::string variant_text(const Store &s, const Term &t) {
    std::unordered_map<std::uint32_t, std::size_t> ids;
    std::function<std::string(const Term &)> go = [&](const Term &x_in) -> std::string {
        Term x = s.deref(x_in);
        if (x.is_var()) {
            auto [it, _] = ids.emplace(x.var().id, ids.size());
            return "V" + std::to_string(it->second);
        }
        if (!x.is_struct()) {
            WriteOptions o;
            o.canonical = true;
            return write_term(s, x, o);
        }
        std::string out = quote_atom_if_needed(x.functor().name()) + "(";
        for (std::size_t i = 0; i < x.arity(); ++i)
            out += (i ? "," : "") + go(x.arg(i));
        return out + ")";
    };
    return go(t);
}

inline bool variant(Engine &e, const Term &a, const Term &b) {
    return variant_text(e.store(), a) == variant_text(e.store(), b);
}

inline std::string data_path(const std::string &name) { return std::string(CLPK_TEST_DATA) + "/" + name; }

} // namespace clpk::test
