#include <doctest.h>

#include <sstream>

#include "clpk/cli.hpp"
#include "support.hpp"

using namespace clpk;

namespace {

struct Run {
    int code;
    std::string out, err;
};

Run run(CliOptions opts, const std::string &input = "") {
    std::istringstream in(input);
    std::ostringstream out, err;
    int code = run_cli(opts, in, out, err);
    return {code, out.str(), err.str()};
}

CliOptions goal(const std::string &g) {
    CliOptions o;
    o.goal = g;
    return o;
}

} // namespace

TEST_SUITE("cli") {

TEST_CASE("answers and exit codes") {
    CHECK(run(goal("X = f(Y)")).out == "X = f(Y)\n");
    CHECK(run(goal("X = f(_)")).out == "X = f(_)\n");
    auto r = run(goal("fail"));
    CHECK(r.code == 1);
    CHECK(r.out == "no\n");
    CHECK(run(goal("throw(x)")).code == 2);
    CHECK(run(goal("halt(3)")).code == 3);
    CHECK(run(goal("X = (a :- b)")).out == "X = (a :- b)\n");
    CHECK(run(goal("X = Y")).out == "Y = X\n");
}

TEST_CASE("delayed goals are listed") {
    auto r = run(goal("dif(X, a)"));
    CHECK(r.out == "\nDelayed goals:\n    dif(X, a)\n");
}

TEST_CASE("count and all") {
    auto o = goal("member(X, [a, b])");
    o.all = true;
    CHECK(run(o).out == "X = a\n\nX = b\n");
    o.all = false;
    o.count = true;
    CHECK(run(o).out == "2\n");
}

TEST_CASE("canonical output") {
    auto o = goal("X = 1 + 2");
    o.canonical = true;
    CHECK(run(o).out == "X = +(1, 2)\n");
}

TEST_CASE("interactive toplevel") {
    CliOptions o;
    auto r = run(o, "member(X, [a, b]).\n;\nfail.\n");
    CHECK(r.out == "?- X = a\n\nX = b\nyes\n?- no\n?- ");
}

TEST_CASE("program files") {
    CliOptions o;
    o.files.push_back(clpk::test::data_path("queens.pl"));
    o.goal = "queens_array(4, Q), labeling(Q)";
    o.count = true;
    CHECK(run(o).out == "2\n");
    CliOptions bad;
    bad.files.push_back("/nonexistent/x.pl");
    bad.goal = "true";
    CHECK(run(bad).code == 2);
}

}
