#include <doctest.h>

#include <random>

#include "clpk/arith.hpp"
#include "support.hpp"

using namespace clpk;
using namespace clpk::arith;
using namespace clpk::test;

TEST_SUITE("arith") {

TEST_CASE("exact integer and rational arithmetic") {
    Engine e;
    CHECK(solve(e, "X is 7 / 2").show("X") == "7_2");
    CHECK(solve(e, "X is 6 / 2").show("X") == "3");
    CHECK(solve(e, "X is 1_3 + 1_6").show("X") == "1_2");
    CHECK(solve(e, "X is 2 ^ 100").show("X") == "1267650600228229401496703205376");
    CHECK(solve(e, "X is 7 // 2, Y is -7 mod 2").show("X") == "3");
    CHECK(solve(e, "X is max(1, 2.0)").show("X") == "2.0");
}

TEST_CASE("coercion lattice") {
    CHECK(std::holds_alternative<Rational>(add(Integer(1), Rational(1, 2))));
    CHECK(std::holds_alternative<double>(add(Rational(1, 2), 0.5)));
    CHECK(std::holds_alternative<Breal>(add(0.5, Breal{1.0, 2.0})));
}

TEST_CASE("comparison across types") {
    Engine e;
    CHECK(holds(e, "3 =:= 3.0"));
    CHECK(holds(e, "1_2 < 0.6"));
    CHECK(holds(e, "3 =:= 3_1"));
    CHECK_FALSE(holds(e, "3 = 3.0"));
}

TEST_CASE("overlapping breals make comparison uncertain") {
    Engine e;
    CHECK(holds(e, "catch(1.0__2.0 < 1.5__3.0, error(E, _), true), nonvar(E)"));
    CHECK(holds(e, "1.0__2.0 < 2.5__3.0"));
}

TEST_CASE("directed rounding brackets the exact result") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> d(-1e6, 1e6);
    for (int i = 0; i < 1000; ++i) {
        double a = d(rng), b = d(rng);
        Rational exact = exact_rational(a) * exact_rational(b);
        CHECK(exact_rational(mul_down(a, b)) <= exact);
        CHECK(exact_rational(mul_up(a, b)) >= exact);
        Rational sum = exact_rational(a) + exact_rational(b);
        CHECK(exact_rational(add_down(a, b)) <= sum);
        CHECK(exact_rational(add_up(a, b)) >= sum);
    }
}

TEST_CASE("type errors") {
    Engine e;
    CHECK(holds(e, "catch(X is foo + 1, error(type_error(evaluable, foo/0), _), true)"));
    CHECK(holds(e, "catch(X is Y + 1, error(instantiation_error, _), true)"));
    CHECK(holds(e, "catch(X is 1 / 0, error(evaluation_error(zero_divisor), _), true)"));
}

TEST_CASE("arrays and subscripts") {
    Engine e;
    CHECK(solve(e, "dim(M, [2, 3]), dim(M, D)").show("D") == "[2, 3]");
    CHECK(solve(e, "M = []([](a, b), [](c, d)), subscript(M, [2, 1], X)").show("X") == "c");
    CHECK(solve(e, "M = [](1, 2, 3), X is M[2] + M[3]").show("X") == "5");
}

}
