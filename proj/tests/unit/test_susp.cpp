#include <doctest.h>

#include "clpk/susp.hpp"
#include "support.hpp"

using namespace clpk;

TEST_SUITE("susp") {

TEST_CASE("dequeue order follows priority, FIFO within a priority") {
    Store st;
    Scheduler s(st);
    auto a = s.make(Term::atom("a"), 5, false);
    auto b = s.make(Term::atom("b"), 2, false);
    auto c = s.make(Term::atom("c"), 5, false);
    auto d = s.make(Term::atom("d"), 2, false);
    for (auto x : {a, b, c, d})
        s.schedule(x);
    std::vector<std::string> order;
    while (auto n = s.next_more_urgent(13))
        order.push_back(s.get(*n).goal.atom().name());
    CHECK(order == std::vector<std::string>{"b", "d", "a", "c"});
}

TEST_CASE("only strictly more urgent goals run") {
    Store st;
    Scheduler s(st);
    auto a = s.make(Term::atom("a"), 5, false);
    s.schedule(a);
    CHECK_FALSE(s.has_more_urgent(5));
    CHECK_FALSE(s.next_more_urgent(5));
    CHECK(s.has_more_urgent(6));
}

TEST_CASE("non-demons execute once, demons go back to suspended") {
    Store st;
    Scheduler s(st);
    auto g = s.make(Term::atom("g"), 3, false);
    auto d = s.make(Term::atom("d"), 3, true);
    s.schedule(g);
    s.schedule(d);
    s.next_more_urgent(13);
    s.next_more_urgent(13);
    CHECK(s.get(g).state == SuspState::Executed);
    CHECK(s.get(d).state == SuspState::Suspended);
    s.schedule(g);
    CHECK(s.queued() == 0);
    s.schedule(d);
    CHECK(s.queued() == 1);
}

TEST_CASE("scheduling twice queues once") {
    Store st;
    Scheduler s(st);
    auto g = s.make(Term::atom("g"), 3, false);
    s.schedule(g);
    s.schedule(g);
    CHECK(s.queued() == 1);
}

TEST_CASE("states and queue are restored by backtracking") {
    Store st;
    Scheduler s(st);
    auto g = s.make(Term::atom("g"), 3, false);
    auto m = st.push_choicepoint();
    s.schedule(g);
    s.next_more_urgent(13);
    CHECK(s.get(g).state == SuspState::Executed);
    st.backtrack_to(m);
    CHECK(s.get(g).state == SuspState::Suspended);
    CHECK(s.queued() == 0);
    CHECK(s.suspended().size() == 1);
}

TEST_CASE("killed suspensions are not scheduled") {
    Store st;
    Scheduler s(st);
    auto g = s.make(Term::atom("g"), 3, false);
    s.kill(g);
    s.schedule(g);
    CHECK(s.queued() == 0);
    CHECK(s.suspended().empty());
}

}
