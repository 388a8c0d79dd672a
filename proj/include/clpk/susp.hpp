#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "clpk/store.hpp"

namespace clpk {

enum class SuspState : std::uint8_t { Suspended, Scheduled, Executed };

// A delayed goal in the suspended part of the resolvent.
struct Suspension {
    std::uint32_t id = 0;
    Term goal;
    std::uint32_t module = 0;
    int priority = 12;
    bool demon = false;
    SuspState state = SuspState::Suspended;
    std::uint64_t state_stamp = 0;
    // (variable, condition) pairs, kept for display only.
    std::vector<std::pair<Term, std::string>> attachments;
};

//
// Owns every suspension created in the engine plus the priority queue of
// scheduled ones. Priorities run from 1 (most urgent) to 12; buckets are
// FIFO. All state changes are trailed so backtracking restores both the
// suspension states and the queue contents.
//
class Scheduler {
public:
    static constexpr int kMinPriority = 1;
    static constexpr int kMaxPriority = 12;

    explicit Scheduler(Store &store) : store_(store) {}

    SuspRef make(Term goal, int priority, bool demon, std::uint32_t module = 0);
    const Suspension &get(SuspRef s) const { return table_.at(s.id); }
    std::size_t created() const { return table_.size(); }

    void note_attachment(SuspRef s, Term var, std::string condition);

    // Moves suspended members to the queue; others are skipped.
    void schedule(SuspRef s);
    void schedule(std::span<const SuspRef> list);

    bool has_more_urgent(int running_priority) const;
    // Dequeues the most urgent suspension with a priority number below
    // `running_priority`. Non-demons become executed, demons suspended.
    std::optional<SuspRef> next_more_urgent(int running_priority);

    void kill(SuspRef s);

    // The suspended resolvent, in creation order.
    std::vector<SuspRef> suspended() const;
    std::vector<SuspRef> suspended_since(std::size_t first_id) const;
    std::size_t queued() const;

private:
    void set_state(Suspension &s, SuspState st);

    Store &store_;
    std::deque<Suspension> table_;
    std::array<std::deque<std::uint32_t>, kMaxPriority> buckets_;
};

} // namespace clpk
