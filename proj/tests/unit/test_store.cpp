#include <doctest.h>

#include "clpk/store.hpp"
#include "support.hpp"

using namespace clpk;

TEST_SUITE("store") {

TEST_CASE("binding and dereferencing") {
    Store s;
    Term x = s.new_var(), y = s.new_var();
    CHECK(s.unify(x, y));
    CHECK(s.unify(y, Term::atom("a")));
    CHECK(s.deref(x).is_atom("a"));
    CHECK_FALSE(s.unify(x, Term::atom("b")));
}

TEST_CASE("unification of structures") {
    Store s;
    Term x = s.new_var(), y = s.new_var();
    Term a = mk_struct("f", {x, Term::atom("b")});
    Term b = mk_struct("f", {Term::atom("a"), y});
    CHECK(s.unify(a, b));
    CHECK(s.deref(x).is_atom("a"));
    CHECK(s.deref(y).is_atom("b"));
    CHECK_FALSE(s.unify(mk_struct("f", {x}), mk_struct("g", {x})));
    CHECK_FALSE(s.unify(Term::integer(3), Term::floating(3.0)));
}

TEST_CASE("backtracking undoes bindings made after the choicepoint") {
    Store s;
    Term x = s.new_var(), y = s.new_var();
    s.unify(x, Term::integer(1));
    auto m = s.push_choicepoint();
    s.unify(y, Term::integer(2));
    CHECK(s.deref(y).is_int());
    s.backtrack_to(m);
    CHECK(s.deref(y).is_var());
    CHECK(s.deref(x).small_int() == 1);
}

TEST_CASE("bindings of variables newer than the choicepoint are not trailed") {
    Store s;
    auto m = s.push_choicepoint();
    std::size_t before = s.trail_size();
    Term v = s.new_var();
    s.unify(v, Term::atom("x"));
    CHECK(s.trail_size() == before);
    s.backtrack_to(m);
}

TEST_CASE("set_arg is undone and trailed once per segment") {
    Store s;
    Term t = mk_struct("f", {Term::integer(0)});
    auto m = s.push_choicepoint();
    for (int i = 1; i <= 5; ++i)
        s.set_arg(1, t, Term::integer(i));
    CHECK(s.trail_count(TrailKind::Value) == 1);
    CHECK(s.deref(t.arg(0)).small_int() == 5);
    auto m2 = s.push_choicepoint();
    s.set_arg(1, t, Term::integer(9));
    s.set_arg(1, t, Term::integer(10));
    CHECK(s.trail_count(TrailKind::Value) == 2);
    s.backtrack_to(m2);
    CHECK(s.deref(t.arg(0)).small_int() == 5);
    s.backtrack_to(m);
    CHECK(s.deref(t.arg(0)).small_int() == 0);
    CHECK(s.trail_count(TrailKind::Value) == 0);
}

TEST_CASE("undo functions run on backtracking, newest first") {
    Store s;
    std::vector<int> log;
    auto m = s.push_choicepoint();
    s.register_undo([&] { log.push_back(1); });
    s.register_undo([&] { log.push_back(2); });
    s.backtrack_to(m);
    CHECK(log == std::vector<int>{2, 1});
}

TEST_CASE("attributes are restored on backtracking") {
    Store s;
    Term x = s.new_var();
    Atom a("tag");
    s.put_attr(x.var(), a, Term::integer(1));
    auto m = s.push_choicepoint();
    s.put_attr(x.var(), a, Term::integer(2));
    CHECK(s.get_attr(x.var(), a)->small_int() == 2);
    s.backtrack_to(m);
    CHECK(s.get_attr(x.var(), a)->small_int() == 1);
}

TEST_CASE("cut keeps the trail but drops choicepoints") {
    Store s;
    Term x = s.new_var();
    auto m = s.push_choicepoint();
    s.push_choicepoint();
    s.cut_to(1);
    CHECK(s.choicepoint_count() == 1);
    s.unify(x, Term::atom("a"));
    s.backtrack_to(m);
    CHECK(s.deref(x).is_var());
}

}
