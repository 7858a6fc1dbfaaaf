#pragma once

#include <algorithm>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "hgrail/env.hpp"
#include "hgrail/goal_memory.hpp"
#include "hgrail/motivation.hpp"

namespace hgrail {

// Abstract meta-level state: the set of known goals whose defining
// predicates currently hold, plus the gripper-occupied flag. Built from
// percepts only, never from simulator ground truth. The key lists held
// goal ids rather than a positional bit per goal so that discovering a new
// goal leaves the keys of already-visited states (where the new goal's
// predicates do not hold) unchanged, preserving learned Q rows.
struct AbstractState {
    std::string key;  // comma-joined held goal ids, then "|G" if gripper occupied

    friend bool operator==(const AbstractState&, const AbstractState&) = default;
};

inline bool signature_holds(const Signature& sig, const PerceptVector& percept,
                            const PerceptLayout& layout) {
    for (const auto& t : sig.transitions) {
        int idx = layout.bool_index(t.predicate);
        if (idx < 0) return false;
        if ((percept.bits[idx] != 0) != t.target) return false;
    }
    return true;
}

inline AbstractState encode_abstract_state(const PerceptVector& percept,
                                           const PerceptLayout& layout,
                                           const GoalRepresentationMap& grm) {
    AbstractState s;
    for (const auto& r : grm.records()) {
        if (!signature_holds(r.signature, percept, layout)) continue;
        if (!s.key.empty()) s.key.push_back(',');
        s.key += r.goal_id;
    }
    int g = layout.bool_index("gripper_occupied");
    if (g >= 0 && percept.bits[g]) s.key += "|G";
    return s;
}

// Per-goal Q-table over (abstract state, sub-goal). Rows are created lazily;
// the action set is whatever goal list the caller passes, so it grows with
// discovery without touching stored values.
class MetaPolicy {
  public:
    MetaPolicy() = default;
    MetaPolicy(std::string target, double alpha = 0.2, double gamma = 0.9,
               double eps_min = 0.05)
        : target_(std::move(target)), alpha_(alpha), gamma_(gamma), eps_min_(eps_min) {}

    const std::string& target() const { return target_; }
    double eps_min() const { return eps_min_; }

    double q(const AbstractState& s, const std::string& a) const {
        auto row = q_.find(s.key);
        if (row == q_.end()) return 0.0;
        auto it = row->second.find(a);
        return it == row->second.end() ? 0.0 : it->second;
    }

    double max_q(const AbstractState& s, const std::vector<std::string>& actions) const {
        double m = 0.0;
        for (const auto& a : actions) m = std::max(m, q(s, a));
        // unseen actions default to 0, so the max is never below 0
        auto row = q_.find(s.key);
        if (row != q_.end())
            for (const auto& [a, v] : row->second) m = std::max(m, v);
        return m;
    }

    static double exploration_rate(double competence, double eps_min) {
        return std::max(eps_min, 1.0 - competence);
    }

    // Epsilon-greedy with competence-modulated epsilon; greedy ties are
    // broken uniformly at random.
    std::string select_subgoal(const AbstractState& s, double competence,
                               const std::vector<std::string>& actions, Rng& rng) const {
        if (actions.empty()) throw MotivationError("sub-goal selection with no known goals");
        double eps = exploration_rate(competence, eps_min_);
        if (std::uniform_real_distribution<double>(0.0, 1.0)(rng) < eps) {
            size_t i = std::uniform_int_distribution<size_t>(0, actions.size() - 1)(rng);
            return actions[i];
        }
        return greedy_action(s, actions, &rng);
    }

    void update(const AbstractState& s, const std::string& a, double r,
                const AbstractState& s_next, bool terminal,
                const std::vector<std::string>& actions) {
        double target = r + (terminal ? 0.0 : gamma_ * max_q(s_next, actions));
        double& qv = q_[s.key][a];
        qv += alpha_ * (target - qv);
        observed_next_[s.key][a] = s_next.key;
    }

    // Greedy argmax rollout over transitions observed so far. For logging
    // and evaluation only; never touches the environment.
    std::vector<std::string> greedy_plan(AbstractState s, size_t max_len,
                                         const std::vector<std::string>& actions) const {
        std::vector<std::string> plan;
        while (plan.size() < max_len) {
            std::string a = greedy_action(s, actions, nullptr);
            plan.push_back(a);
            if (a == target_) break;
            auto row = observed_next_.find(s.key);
            if (row == observed_next_.end()) break;
            auto it = row->second.find(a);
            if (it == row->second.end()) break;
            if (it->second == s.key) break;  // no progress observed
            s.key = it->second;
        }
        return plan;
    }

    size_t num_rows() const { return q_.size(); }

    // Flat dump for the per-run text serialization.
    std::vector<std::tuple<std::string, std::string, double>> entries() const {
        std::vector<std::tuple<std::string, std::string, double>> out;
        for (const auto& [sk, row] : q_)
            for (const auto& [a, v] : row) out.emplace_back(sk, a, v);
        std::sort(out.begin(), out.end());
        return out;
    }

  private:
    std::string greedy_action(const AbstractState& s, const std::vector<std::string>& actions,
                              Rng* rng) const {
        double best = -1e300;
        std::vector<const std::string*> ties;
        for (const auto& a : actions) {
            double v = q(s, a);
            if (v > best + 1e-12) {
                best = v;
                ties.clear();
                ties.push_back(&a);
            } else if (v > best - 1e-12) {
                ties.push_back(&a);
            }
        }
        if (ties.size() == 1 || !rng) return *ties.front();
        size_t i = std::uniform_int_distribution<size_t>(0, ties.size() - 1)(*rng);
        return *ties[i];
    }

    std::string target_;
    double alpha_ = 0.2, gamma_ = 0.9, eps_min_ = 0.05;
    std::unordered_map<std::string, std::unordered_map<std::string, double>> q_;
    std::unordered_map<std::string, std::unordered_map<std::string, std::string>> observed_next_;
};

}  // namespace hgrail
