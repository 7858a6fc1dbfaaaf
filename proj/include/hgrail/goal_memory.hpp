#pragma once

#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

#include "hgrail/env.hpp"
#include "hgrail/events.hpp"
#include "hgrail/scenario.hpp"

namespace hgrail {

struct GoalMemoryError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct GoalRecord {
    std::string goal_id;
    Signature signature;
    int discovery_epoch = 0;
    std::string discovery_context;  // start-state id in effect at discovery
};

// The agent's goal memory (GR-M): discovered percept-change signatures with
// stable ids in discovery order.
class GoalRepresentationMap {
  public:
    const std::vector<GoalRecord>& records() const { return records_; }
    size_t size() const { return records_.size(); }
    bool empty() const { return records_.empty(); }

    bool contains(const std::string& goal_id) const { return find(goal_id) != nullptr; }

    const GoalRecord& record(const std::string& goal_id) const {
        const GoalRecord* r = find(goal_id);
        if (!r) throw GoalMemoryError("unknown goal id: " + goal_id);
        return *r;
    }

    const GoalRecord* find_by_signature(const Signature& sig) const {
        for (const auto& r : records_)
            if (r.signature == sig) return &r;
        return nullptr;
    }

    std::vector<std::string> goal_ids() const {
        std::vector<std::string> ids;
        ids.reserve(records_.size());
        for (const auto& r : records_) ids.push_back(r.goal_id);
        return ids;
    }

    // Adds every event whose signature is new and contains at least one
    // false->true transition (reverse-only transitions are not goals).
    std::vector<std::string> discover(const EventList& events, int epoch,
                                      const std::string& context) {
        std::vector<std::string> fresh;
        for (const auto& ev : events) {
            if (ev.signature.empty() || !ev.signature.has_positive()) continue;
            if (find_by_signature(ev.signature)) continue;
            char buf[16];
            std::snprintf(buf, sizeof buf, "g%03zu", records_.size());
            records_.push_back({buf, ev.signature, epoch, context});
            fresh.push_back(records_.back().goal_id);
        }
        return fresh;
    }

    // Binary achievement feedback: true iff some event equals the stored
    // signature exactly (all predicates, matching directions).
    bool match_goal(const std::string& goal_id, const EventList& events) const {
        const GoalRecord& r = record(goal_id);
        for (const auto& ev : events)
            if (ev.signature == r.signature) return true;
        return false;
    }

  private:
    const GoalRecord* find(const std::string& goal_id) const {
        for (const auto& r : records_)
            if (r.goal_id == goal_id) return &r;
        return nullptr;
    }

    std::vector<GoalRecord> records_;
};

// Diffs two percepts and groups all boolean changes of the step into a
// single multi-predicate event. Continuous distances never generate events.
inline EventList detect_events(const PerceptVector& prev, const PerceptVector& curr,
                               const PerceptLayout& layout) {
    if (prev.bits.size() != curr.bits.size() || prev.bits.size() != layout.bool_names.size())
        throw GoalMemoryError("percept dimensionality mismatch");
    std::vector<PredicateTransition> ts;
    for (size_t i = 0; i < curr.bits.size(); ++i)
        if (prev.bits[i] != curr.bits[i])
            ts.push_back({layout.bool_names[i], curr.bits[i] != 0});
    EventList out;
    if (!ts.empty()) out.push_back({make_signature(std::move(ts))});
    return out;
}

}  // namespace hgrail
