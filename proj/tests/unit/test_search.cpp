#include <doctest.h>

#include "oracles.hpp"
#include "support.hpp"

using namespace clpk;
using namespace clpk::test;

TEST_SUITE("search") {

TEST_CASE("indomain enumerates in ascending order") {
    Engine e;
    CHECK(all(e, "X :: [1, 3..4], indomain(X)", "X") == std::vector<std::string>{"1", "3", "4"});
}

TEST_CASE("labeling input order") {
    Engine e;
    CHECK(all(e, "[X, Y] :: 1..2, labeling([X, Y]), Z = X - Y", "Z") ==
          std::vector<std::string>{"1 - 1", "1 - 2", "2 - 1", "2 - 2"});
}

TEST_CASE("first fail picks the smallest domain") {
    Engine e;
    auto first = all(e, "X :: 1..5, Y :: 1..2, labeling([X, Y], [first_fail]), P = X - Y", "P");
    REQUIRE(first.size() == 10);
    CHECK(first[0] == "1 - 1");
    CHECK(first[1] == "2 - 1");
}

TEST_CASE("unknown labeling options are domain errors") {
    Engine e;
    CHECK(holds(e, "X :: 1..2, catch(labeling([X], bogus), error(domain_error(_, bogus), _), true)"));
}

TEST_CASE("queens counts match enumeration") {
    Engine e;
    e.consult_file(data_path("queens.pl"));
    for (int n = 4; n <= 7; ++n)
        CHECK(count(e, "queens_array(" + std::to_string(n) + ", Q), labeling(Q)") == oracle::queens(n));
}

TEST_CASE("collections: lists, arrays and subscripts") {
    Engine e;
    CHECK(count(e, "dim(M, [3]), M :: 1..2, labeling(M)") == 8);
    CHECK(count(e, "L = [A, B], L :: 0..1, labeling(L)") == 4);
}

}
