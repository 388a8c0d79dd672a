#include "clpk/susp.hpp"

namespace clpk {

SuspRef Scheduler::make(Term goal, int priority, bool demon, std::uint32_t module) {
    if (priority < kMinPriority || priority > kMaxPriority)
        throw_domain_error("priority", Term::integer(priority));
    Suspension s;
    s.id = static_cast<std::uint32_t>(table_.size());
    s.goal = std::move(goal);
    s.module = module;
    s.priority = priority;
    s.demon = demon;
    s.state_stamp = store_.timestamp();
    table_.push_back(std::move(s));
    store_.register_undo([this]() { table_.pop_back(); });
    return SuspRef{table_.back().id};
}

void Scheduler::note_attachment(SuspRef s, Term var, std::string condition) {
    table_.at(s.id).attachments.emplace_back(std::move(var), std::move(condition));
    store_.register_undo([this, id = s.id]() { table_[id].attachments.pop_back(); });
}

void Scheduler::set_state(Suspension &s, SuspState st) {
    if (s.state == st)
        return;
    SuspState old = s.state;
    store_.trail_value(s.state_stamp, [this, id = s.id, old](std::uint64_t stamp) {
        table_[id].state = old;
        table_[id].state_stamp = stamp;
    });
    s.state = st;
}

void Scheduler::schedule(SuspRef ref) {
    auto &s = table_.at(ref.id);
    if (s.state != SuspState::Suspended)
        return;
    set_state(s, SuspState::Scheduled);
    auto &bucket = buckets_[s.priority - 1];
    bucket.push_back(s.id);
    store_.register_undo([&bucket]() { bucket.pop_back(); });
}

void Scheduler::schedule(std::span<const SuspRef> list) {
    for (auto s : list)
        schedule(s);
}

bool Scheduler::has_more_urgent(int running_priority) const {
    for (int p = kMinPriority; p < running_priority && p <= kMaxPriority; ++p)
        if (!buckets_[p - 1].empty())
            return true;
    return false;
}

std::optional<SuspRef> Scheduler::next_more_urgent(int running_priority) {
    for (int p = kMinPriority; p < running_priority && p <= kMaxPriority; ++p) {
        auto &bucket = buckets_[p - 1];
        while (!bucket.empty()) {
            std::uint32_t id = bucket.front();
            bucket.pop_front();
            store_.register_undo([&bucket, id]() { bucket.push_front(id); });
            auto &s = table_[id];
            // killed while waiting in the queue
            if (s.state != SuspState::Scheduled)
                continue;
            set_state(s, s.demon ? SuspState::Suspended : SuspState::Executed);
            return SuspRef{id};
        }
    }
    return std::nullopt;
}

void Scheduler::kill(SuspRef ref) { set_state(table_.at(ref.id), SuspState::Executed); }

std::vector<SuspRef> Scheduler::suspended() const { return suspended_since(0); }

std::vector<SuspRef> Scheduler::suspended_since(std::size_t first_id) const {
    std::vector<SuspRef> out;
    for (std::size_t i = first_id; i < table_.size(); ++i)
        if (table_[i].state == SuspState::Suspended)
            out.push_back(SuspRef{table_[i].id});
    return out;
}

std::size_t Scheduler::queued() const {
    std::size_t n = 0;
    for (const auto &b : buckets_)
        n += b.size();
    return n;
}

} // namespace clpk
