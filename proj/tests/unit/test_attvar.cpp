#include <doctest.h>

#include "clpk/attvar.hpp"
#include "support.hpp"

using namespace clpk;
using namespace clpk::test;

TEST_SUITE("attvar") {

TEST_CASE("suspend lists wake on binding") {
    Engine e;
    auto r = solve(e, "suspend(X = woke, 3, Y->inst), Y = 1");
    REQUIRE(r.ok);
    CHECK(r.show("X") == "woke");
}

TEST_CASE("inst does not wake on aliasing, bound does") {
    Engine e;
    CHECK(solve(e, "suspend(X = woke, 3, Y->inst), Y = Z, var(X)").ok);
    CHECK(solve(e, "suspend(X = woke, 3, Y->bound), suspend(true, 3, Z->inst), Y = Z, X == woke").ok);
    // A fresh variable is bound to the suspending one, which stays unbound.
    CHECK(solve(e, "suspend(X = woke, 3, Y->bound), Y = Z, var(X)").ok);
}

TEST_CASE("unify handler can veto") {
    Engine e;
    AttributeSpec spec;
    spec.name = "even";
    spec.unify = [](Kernel &k, VarRef, const Term &, const Term &value) {
        Term v = k.store.deref(value);
        return !v.is_small_int() || v.small_int() % 2 == 0;
    };
    e.k.attrs.register_attribute(spec);
    Term x = e.store().new_var();
    e.k.attrs.add_attr(x, "even", Term::atom("yes"));
    auto m = e.store().push_choicepoint();
    CHECK_FALSE(e.store().unify(x, Term::integer(3)));
    e.store().backtrack_to(m);
    CHECK(e.store().unify(x, Term::integer(4)));
}

TEST_CASE("a plain variable binds to an attributed one") {
    Engine e;
    auto r = solve(e, "X :: 1..3, Y = X, Y = 2");
    REQUIRE(r.ok);
    CHECK(r.show("X") == "2");
    auto r2 = solve(e, "X :: 1..3, X = Y");
    CHECK(e.format(r2["X"]).find("1..3") != std::string::npos);
}

TEST_CASE("copy_term drops suspensions but keeps domains") {
    Engine e;
    auto r = solve(e, "X :: 1..3, copy_term(X, C)");
    REQUIRE(r.ok);
    CHECK(e.format(r["C"]) == "_{1..3}");
}

TEST_CASE("list members leave with backtracking") {
    Engine e;
    Term x = e.store().new_var();
    auto m = e.store().push_choicepoint();
    auto s = e.sched().make(Term::atom("true"), 3, false);
    e.k.attrs.attach(s, x, WakingCondition::inst());
    CHECK(e.k.attrs.list_members(x.var(), "suspend", "inst").size() == 1);
    e.store().backtrack_to(m);
    CHECK(e.k.attrs.list_members(x.var(), "suspend", "inst").empty());
}

}
