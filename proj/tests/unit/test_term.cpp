#include <doctest.h>

#include <random>

#include "clpk/store.hpp"
#include "support.hpp"

using namespace clpk;

TEST_SUITE("term") {

TEST_CASE("atoms are interned") {
    CHECK(Atom("foo") == Atom("foo"));
    CHECK(Atom("foo") != Atom("bar"));
    CHECK(Atom("foo").name() == "foo");
    CHECK(Atom::from_id(Atom("x").id()) == Atom("x"));
}

TEST_CASE("numbers keep their type") {
    CHECK(Term::integer(3).kind() == Term::Kind::Int);
    CHECK(Term::rational(Integer(2), Integer(4)).as_rational() == Rational(1, 2));
    CHECK(Term::rational(Integer(4), Integer(2)).is_rat());
    CHECK(Term::floating(3.0).is_float());
    CHECK(Term::breal(1.0, 2.0).is_breal());
    CHECK_FALSE(Term::integer(3).same_node(Term::floating(3.0)));
    CHECK(Term::integer(3).same_node(Term::integer(3)));
}

TEST_CASE("big integers") {
    Integer big = Integer(1) << 200;
    Term t = Term::integer(big);
    CHECK(t.is_int());
    CHECK(t.as_integer() == big);
}

TEST_CASE("standard order of terms") {
    Store s;
    Term v = s.new_var();
    std::vector<Term> ordered{v, Term::integer(1), Term::atom("a"), Term::string("s"), mk_struct("f", {Term::integer(1)})};
    for (std::size_t i = 0; i + 1 < ordered.size(); ++i)
        CHECK(compare_terms(s, ordered[i], ordered[i + 1]) < 0);
    // Equal values: integer before float.
    CHECK(compare_terms(s, Term::integer(1), Term::floating(1.0)) < 0);
    CHECK(compare_terms(s, Term::floating(0.5), Term::integer(1)) < 0);
    CHECK(compare_terms(s, mk_struct("g", {Term::integer(1)}), mk_struct("f", {Term::integer(1), Term::integer(2)})) < 0);
}

TEST_CASE("compare_terms is a total order on random triples") {
    Store s;
    std::mt19937 rng(7);
    std::vector<Term> vars{s.new_var(), s.new_var()};
    std::function<Term(int)> gen = [&](int depth) -> Term {
        switch (rng() % (depth > 2 ? 6 : 8)) {
        case 0: return Term::integer(static_cast<std::int64_t>(rng() % 5) - 2);
        case 1: return Term::floating((rng() % 5) / 2.0);
        case 2: return Term::rational(Integer(rng() % 5 + 1), Integer(rng() % 3 + 1));
        case 3: return Term::atom(std::string(1, char('a' + rng() % 3)));
        case 4: return vars[rng() % 2];
        case 5: return Term::string(std::string(1, char('a' + rng() % 2)));
        default: {
            std::vector<Term> args;
            for (std::size_t i = 0, n = 1 + rng() % 2; i < n; ++i)
                args.push_back(gen(depth + 1));
            return mk_struct(rng() % 2 ? "f" : "g", args);
        }
        }
    };
    for (int i = 0; i < 2000; ++i) {
        Term a = gen(0), b = gen(0), c = gen(0);
        int ab = compare_terms(s, a, b), ba = compare_terms(s, b, a);
        REQUIRE((ab > 0) - (ab < 0) == -((ba > 0) - (ba < 0)));
        if (ab <= 0 && compare_terms(s, b, c) <= 0)
            REQUIRE(compare_terms(s, a, c) <= 0);
    }
}

TEST_CASE("error terms") {
    try {
        throw_type_error("integer", Term::atom("x"));
    } catch (const PrologError &e) {
        CHECK(e.ball().is_struct("error", 2));
        CHECK(e.ball().arg(0).is_struct("type_error", 2));
    }
}

}
