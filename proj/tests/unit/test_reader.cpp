#include <doctest.h>

#include <random>

#include "support.hpp"

using namespace clpk;
using namespace clpk::test;

TEST_SUITE("reader") {

TEST_CASE("numeric literals") {
    Engine e;
    CHECK(e.read_term("1_3").term.as_rational() == Rational(1, 3));
    CHECK(e.read_term("2_4").term.as_rational() == Rational(1, 2));
    Term b = e.read_term("0.99__1.01").term;
    REQUIRE(b.is_breal());
    CHECK(b.as_breal().lo <= 0.99);
    CHECK(b.as_breal().hi >= 1.01);
    CHECK(e.read_term("- 3").term.is_struct("-", 1));
    CHECK(e.read_term("-3").term.small_int() == -3);
    CHECK(e.read_term("2.5").term.as_float() == 2.5);
    CHECK(e.read_term("0'a").term.small_int() == 'a');
    CHECK(e.read_term("0.5").term.as_float() == 0.5);
    CHECK(e.read_term("08").term.small_int() == 8);
}

TEST_CASE("subscripts parse to subscript/2 and print back") {
    Engine e;
    auto rr = e.read_term("M[3,4]");
    Term t = rr.term;
    REQUIRE(t.is_struct("subscript", 2));
    CHECK(e.format(t.arg(1)) == "[3, 4]");
    CHECK(e.format(t, false, rr.var_names) == "M[3, 4]");
    CHECK(e.format(t, true, rr.var_names) == "subscript(M, [3, 4])");
}

TEST_CASE("operators and canonical form") {
    Engine e;
    CHECK(e.format(e.read_term("a :- b, c ; d -> e").term, true) == ":-(a, ;(','(b, c), ->(d, e)))");
    CHECK(e.format(e.read_term("a | b").term, true) == ";(a, b)");
    CHECK(e.format(e.read_term("X :: 1..N").term, true).find("::(") == 0);
    CHECK(e.format(e.read_term("(for(I,1,N) do p(I))").term, true).find("do(for(") == 0);
}

TEST_CASE("writer output") {
    Engine e;
    CHECK(e.format(e.read_term("f(a+b*c, (a:-b), [1,2|x], 'hello world', \"str\")").term) ==
          "f(a + b * c, (a :- b), [1, 2|x], 'hello world', \"str\")");
    CHECK(e.format(e.read_term("1 - (2 - 3)").term) == "1 - (2 - 3)");
    CHECK(e.format(e.read_term("1 - -1").term) == "1 - -1");
    CHECK(e.format(e.read_term("a:b:c").term) == "a:b:c");
    CHECK(e.format(e.read_term("1..2").term) == "1..2");
    CHECK(e.format(e.read_term("f(1_3, 1.9__2.1)").term) == "f(1_3, 1.9__2.1)");
    CHECK(e.format(e.read_term("'[]'").term) == "[]");
}

TEST_CASE("syntax errors carry a position") {
    Engine e;
    try {
        e.read_term("f(a,");
        FAIL("no error");
    } catch (const SyntaxError &err) {
        CHECK(err.pos().line == 1);
    }
}

TEST_CASE("parse(write(t)) is a variant of t") {
    Engine e;
    std::mt19937 rng(11);
    std::vector<Term> vars{e.store().new_var(), e.store().new_var(), e.store().new_var()};
    const char *ops[] = {"+", "-", "*", "=", ":-", ",", ";", "->", ":", "^", "is", "..", "#=", "\\+", "f", "[]"};
    std::function<Term(int)> gen = [&](int depth) -> Term {
        switch (rng() % (depth > 3 ? 5 : 9)) {
        case 0: return Term::integer(static_cast<std::int64_t>(rng() % 7) - 3);
        case 1: return Term::rational(Integer(rng() % 5 + 1), Integer(rng() % 4 + 2));
        case 2: return Term::atom(std::vector<std::string>{"a", "[]", "Hello", "x y", "-", ";", "{}"}[rng() % 7]);
        case 3: return vars[rng() % 3];
        case 4: return Term::floating((rng() % 9) / 4.0 - 1.0);
        case 5: return mk_list(std::vector<Term>{gen(depth + 1), gen(depth + 1)});
        default: {
            const char *op = ops[rng() % std::size(ops)];
            std::size_t n = std::string(op) == "\\+" ? 1 : std::string(op) == "-" && rng() % 2 ? 1 : 2;
            std::vector<Term> args;
            for (std::size_t i = 0; i < n; ++i)
                args.push_back(gen(depth + 1));
            return mk_struct(op, args);
        }
        }
    };
    Names names{{"A", vars[0]}, {"B", vars[1]}, {"C", vars[2]}};
    for (int i = 0; i < 500; ++i) {
        Term t = gen(0);
        for (bool canonical : {true, false}) {
            std::string text = e.format(t, canonical, names);
            ReadResult rr = e.read_term(text);
            // Map the names back onto the original variables.
            for (const auto &[n, v] : rr.var_names)
                for (const auto &[n2, v2] : names)
                    if (n == n2)
                        e.store().unify(v, v2);
            INFO(text, " ", variant_text(e.store(), t), " ", variant_text(e.store(), rr.term));
            REQUIRE(variant(e, rr.term, t));
        }
    }
}

}
