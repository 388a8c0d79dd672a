#include <doctest.h>

#include <sstream>

#include "support.hpp"

using namespace clpk;
using namespace clpk::test;

TEST_SUITE("solve") {

TEST_CASE("backtracking and cut") {
    Engine e;
    CHECK(all(e, "member(X, [a, b, c])", "X") == std::vector<std::string>{"a", "b", "c"});
    CHECK(all(e, "(member(X, [a, b, c]), !)", "X") == std::vector<std::string>{"a"});
    CHECK(all(e, "(X = 1 ; X = 2)", "X") == std::vector<std::string>{"1", "2"});
    CHECK(all(e, "(member(X, [1, 2, 3]) -> true ; X = 0)", "X") == std::vector<std::string>{"1"});
    CHECK(all(e, "\\+ member(z, [a]), X = ok", "X") == std::vector<std::string>{"ok"});
}

TEST_CASE("cut is local to the clause") {
    Engine e;
    e.load_string("t(X) :- member(X, [1, 2, 3]), !.\nt(9).\ns(X) :- t(X).\ns(7).\n");
    CHECK(all(e, "s(X)", "X") == std::vector<std::string>{"1", "7"});
}

TEST_CASE("catch and throw restore bindings") {
    Engine e;
    auto r = solve(e, "catch((X = 1, throw(oops)), B, true)");
    REQUIRE(r.ok);
    CHECK(r.show("B") == "oops");
    CHECK(r["X"].is_var());
    CHECK(holds(e, "catch(undefined_pred_xyz, error(existence_error(procedure, undefined_pred_xyz/0), _), true)"));
}

TEST_CASE("findall, count and once") {
    Engine e;
    CHECK(solve(e, "findall(X-Y, (member(X, [1, 2]), member(Y, [a, b])), L)").show("L") ==
          "[1 - a, 1 - b, 2 - a, 2 - b]");
    CHECK(count(e, "between(1, 10, _)") == 10);
    CHECK(all(e, "once(member(X, [a, b]))", "X") == std::vector<std::string>{"a"});
}

TEST_CASE("deep recursion does not exhaust the C++ stack") {
    Engine e;
    e.load_string("nat(0, []) :- !.\nnat(N, [N|T]) :- M is N - 1, nat(M, T).\n");
    CHECK(solve(e, "nat(200000, L), length(L, N)").show("N") == "200000");
}

TEST_CASE("modules isolate local predicates") {
    Engine e;
    e.load_string(":- module(m).\n:- export p/1.\np(X) :- q(X).\nq(inside).\n");
    e.load_string(":- module(user).\n:- import m.\n");
    CHECK(solve(e, "p(X)").show("X") == "inside");
    CHECK(solve(e, "m:q(X)").show("X") == "inside");
    CHECK(holds(e, "catch(q(_), error(existence_error(_, _), _), true)"));
}

TEST_CASE("undo goals run when bindings are undone") {
    Engine e;
    std::ostringstream out;
    e.out = &out;
    CHECK(holds(e, "(undo(write(undone)), fail ; true)"));
    CHECK(out.str() == "undone");
}

TEST_CASE("delayed goals run when woken inside a conjunction") {
    Engine e;
    auto r = solve(e, "suspend(Z is X + 1, 3, X->inst), X = 4");
    REQUIRE(r.ok);
    CHECK(r.show("Z") == "5");
}

TEST_CASE("solved queries leave no suspensions") {
    Engine e;
    Names names;
    Term g = goal_of(e, "X :: 1..3, X #> 2", &names);
    Query q(e, g, e.user(), names);
    REQUIRE(q.next());
    CHECK(q.delayed().empty());
}

}
