#pragma once

#include <algorithm>
#include <string>
#include <vector>

namespace hgrail {

// A single predicate flip. target == true means the predicate went
// false -> true, target == false means true -> false.
struct PredicateTransition {
    std::string predicate;
    bool target = true;

    friend bool operator==(const PredicateTransition& a, const PredicateTransition& b) {
        return a.predicate == b.predicate && a.target == b.target;
    }
    friend bool operator<(const PredicateTransition& a, const PredicateTransition& b) {
        if (a.predicate != b.predicate) return a.predicate < b.predicate;
        return a.target < b.target;
    }
};

// Ordered, duplicate-free set of transitions that happened in one time step.
struct Signature {
    std::vector<PredicateTransition> transitions;

    void normalize() {
        std::sort(transitions.begin(), transitions.end());
        transitions.erase(std::unique(transitions.begin(), transitions.end()),
                          transitions.end());
    }
    bool empty() const { return transitions.empty(); }
    bool has_positive() const {
        return std::any_of(transitions.begin(), transitions.end(),
                           [](const PredicateTransition& t) { return t.target; });
    }

    friend bool operator==(const Signature& a, const Signature& b) {
        return a.transitions == b.transitions;
    }
    friend bool operator<(const Signature& a, const Signature& b) {
        return a.transitions < b.transitions;
    }
};

inline Signature make_signature(std::vector<PredicateTransition> ts) {
    Signature s{std::move(ts)};
    s.normalize();
    return s;
}

struct Event {
    Signature signature;
};

using EventList = std::vector<Event>;

inline std::string to_string(const Signature& s) {
    std::string out;
    for (const auto& t : s.transitions) {
        if (!out.empty()) out += '&';
        out += t.predicate;
        out += t.target ? "+" : "-";
    }
    return out;
}

}  // namespace hgrail
