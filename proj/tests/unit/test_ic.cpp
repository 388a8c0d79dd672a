#include <doctest.h>

#include "oracles.hpp"
#include "support.hpp"

using namespace clpk;
using namespace clpk::test;

TEST_SUITE("ic") {

TEST_CASE("domain declarations") {
    Engine e;
    CHECK(e.format(solve(e, "X :: 1..5")["X"]) == "_{1..5}");
    CHECK(e.format(solve(e, "X :: [1..2, 4..5]")["X"]) == "_{[1..2, 4..5]}");
    CHECK(e.format(solve(e, "X :: 1.0..2.5")["X"]) == "_{1.0..2.5}");
    CHECK(e.format(solve(e, "X :: 1..5, X :: 3..8")["X"]) == "_{3..5}");
    CHECK_FALSE(holds(e, "X :: 1..5, X = 7"));
    CHECK_FALSE(holds(e, "X :: 1..5, X :: 6..9"));
    CHECK(solve(e, "X :: [3], Y = X").show("Y") == "3");
}

TEST_CASE("domain queries") {
    Engine e;
    auto r = solve(e, "X :: [1..3, 7], get_min(X, L), get_max(X, H), get_domain_size(X, S), get_domain_as_list(X, D)");
    REQUIRE(r.ok);
    CHECK(r.show("L") == "1");
    CHECK(r.show("H") == "7");
    CHECK(r.show("S") == "4");
    CHECK(r.show("D") == "[1, 2, 3, 7]");
    CHECK(holds(e, "X :: 1..3, is_in_domain(2, X)"));
    CHECK_FALSE(holds(e, "X :: [1, 3], is_in_domain(2, X)"));
}

TEST_CASE("primitives narrow and report failure") {
    Engine e;
    CHECK(e.format(solve(e, "X :: 1..9, impose_min(X, 3), impose_max(X, 5)")["X"]) == "_{3..5}");
    CHECK(e.format(solve(e, "X :: 1..5, exclude(X, 3)")["X"]) == "_{[1..2, 4..5]}");
    CHECK(solve(e, "X :: 1..5, exclude(X, 1), exclude(X, 2), exclude(X, 4), exclude(X, 5)").show("X") == "3");
    CHECK_FALSE(holds(e, "X :: 1..3, impose_min(X, 4)"));
    CHECK(e.format(solve(e, "X :: 0.5..3.5, integers([X])")["X"]) == "_{1..3}");
}

TEST_CASE("linear constraints propagate bounds") {
    Engine e;
    auto r = solve(e, "[X, Y] :: 1..5, X #>= Y, Y #>= 3");
    REQUIRE(r.ok);
    CHECK(e.format(r["X"]) == "_{3..5}");
    CHECK(e.format(r["Y"]) == "_{3..5}");
    CHECK(all(e, "[X, Y] :: 0..10, X + Y #= 10, X - Y #= 4, labeling([X, Y])", "X") == std::vector<std::string>{"7"});
    CHECK_FALSE(holds(e, "[X, Y] :: 0..3, X + Y #> 6"));
    CHECK(solve(e, "X :: 1..10, 3 * X #= 12").show("X") == "4");
    CHECK_FALSE(holds(e, "X :: 1..10, 3 * X #= 10"));
}

TEST_CASE("disequality waits for the last variable") {
    Engine e;
    CHECK(e.format(solve(e, "X :: 1..3, X #\\= 2")["X"]) == "_{[1, 3]}");
    CHECK_FALSE(holds(e, "X :: 1..3, Y = 2, X #\\= Y, X = 2"));
}

TEST_CASE("alldifferent removes assigned values") {
    Engine e;
    auto r = solve(e, "[X, Y, Z] :: 1..3, alldifferent([X, Y, Z]), X = 1, Y = 2");
    REQUIRE(r.ok);
    CHECK(r.show("Z") == "3");
    CHECK_FALSE(holds(e, "[X, Y] :: 1..1, alldifferent([X, Y])"));
}

TEST_CASE("nonlinear constraints are rejected") {
    Engine e;
    CHECK(holds(e, "catch(X * Y #= 1, error(unsupported(_), _), true)"));
}

TEST_CASE("propagation is sound against brute force on small systems") {
    Engine e;
    // X + 2Y = Z, X != Y, in 0..4
    auto sols = oracle::solutions({{0, 4}, {0, 4}, {0, 4}},
                                  {{{{1, 0}, {2, 1}, {-1, 2}}, 0, "#="}, {{{1, 0}, {-1, 1}}, 0, "#\\="}});
    std::size_t n = count(e, "[X, Y, Z] :: 0..4, X + 2 * Y #= Z, X #\\= Y, labeling([X, Y, Z])");
    CHECK(n == sols.size());
}

}
