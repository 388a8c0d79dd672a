#include <doctest.h>

#include "support.hpp"

using namespace clpk;
using namespace clpk::test;

TEST_SUITE("expand") {

TEST_CASE("do loops over each kind of iterator") {
    Engine e;
    CHECK(solve(e, "(foreach(X, [1,2,3]), foreach(Y, L) do Y is X * 2)").show("L") == "[2, 4, 6]");
    CHECK(solve(e, "(for(I, 1, 4), fromto(0, S0, S1, S) do S1 is S0 + I)").show("S") == "10");
    CHECK(solve(e, "(foreacharg(A, f(a, b)), foreach(A, L) do true)").show("L") == "[a, b]");
    CHECK(solve(e, "(for(I, 5, 1, -2), foreach(I, L) do true)").show("L") == "[5, 3, 1]");
    CHECK(solve(e, "dim(M, [2, 2]), (for(I, 1, 2), param(M) do (for(J, 1, 2), param(M, I) do "
                   "subscript(M, [I, J], I - J))), subscript(M, [2, 1], X)").show("X") == "2 - 1");
    CHECK_THROWS(solve(e, "(bogus(I) do true)"));
    CHECK(solve(e, "(for(I, 3, 1), fromto(0, N0, N1, N) do N1 is N0 + 1)").show("N") == "0");
}

TEST_CASE("param makes outer variables visible") {
    Engine e;
    CHECK(solve(e, "K = 10, (foreach(X, [1, 2]), foreach(Y, L), param(K) do Y is X + K)").show("L") == "[11, 12]");
}

TEST_CASE("loop bodies see fresh variables per iteration") {
    Engine e;
    CHECK(solve(e, "(foreach(X, [1, 2]), foreach(P, L) do P = X - _)").ok);
}

TEST_CASE("loops in clause bodies") {
    Engine e;
    e.load_string("sq(L, R) :- (foreach(X, L), foreach(Y, R) do Y is X * X).\n");
    CHECK(solve(e, "sq([1, 2, 3], R)").show("R") == "[1, 4, 9]");
}

TEST_CASE("struct declarations and field access") {
    Engine e;
    e.load_string(":- local struct(emp(name, age, salary)).\n"
                  "age_of(emp{age:A}, A).\n"
                  "pos(P) :- P is age of emp.\n");
    CHECK(solve(e, "age_of(emp(bob, 42, 0), A)").show("A") == "42");
    CHECK(solve(e, "pos(P)").show("P") == "2");
    CHECK(solve(e, "E = emp{name:ann}, arg(1, E, N)").show("N") == "ann");
}

TEST_CASE("unknown fields are expansion errors") {
    Engine e;
    std::vector<std::string> warnings;
    e.warn = [&](const std::string &w) { warnings.push_back(w); };
    CHECK_THROWS(e.load_string(":- local struct(pt(x, y)).\nbad(pt{z:1}).\n"));
    CHECK_FALSE(warnings.empty());
}

TEST_CASE("term macros rewrite clauses as they are read") {
    Engine e;
    e.load_string("tr_fact(fact(X), fact(X, extra)).\n"
                  ":- local macro(fact/1, tr_fact/2, [clause]).\n"
                  "fact(1).\n");
    CHECK(solve(e, "fact(1, E)").show("E") == "extra");
}

TEST_CASE("goal expansion inlines calls") {
    Engine e;
    // The inline form differs from the definition so that its use shows.
    e.load_string("double(X, Y) :- Y is 2 * X.\n"
                  "tr_double(double(X, Y), Y is 3 * X).\n"
                  ":- inline(double/2, tr_double/2).\n"
                  "use(Y) :- double(4, Y).\n");
    CHECK(solve(e, "use(Y)").show("Y") == "12");
}

}
