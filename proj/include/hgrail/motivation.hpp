#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace hgrail {

struct MotivationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

using Rng = std::mt19937_64;

// Numerically stabilized softmax draw: index i with probability
// exp(v_i / tau) / sum_j exp(v_j / tau).
inline size_t softmax_sample(const std::vector<double>& values, double temperature, Rng& rng) {
    if (values.empty()) throw MotivationError("softmax over empty value list");
    if (!(temperature > 0)) throw MotivationError("softmax temperature must be positive");
    double vmax = *std::max_element(values.begin(), values.end());
    std::vector<double> w(values.size());
    double total = 0;
    for (size_t i = 0; i < values.size(); ++i) {
        w[i] = std::exp((values[i] - vmax) / temperature);
        total += w[i];
    }
    double u = std::uniform_real_distribution<double>(0.0, total)(rng);
    double acc = 0;
    for (size_t i = 0; i < w.size(); ++i) {
        acc += w[i];
        if (u <= acc) return i;
    }
    return w.size() - 1;
}

inline std::vector<double> softmax_probabilities(const std::vector<double>& values,
                                                 double temperature) {
    if (values.empty()) throw MotivationError("softmax over empty value list");
    if (!(temperature > 0)) throw MotivationError("softmax temperature must be positive");
    double vmax = *std::max_element(values.begin(), values.end());
    std::vector<double> p(values.size());
    double total = 0;
    for (size_t i = 0; i < values.size(); ++i) {
        p[i] = std::exp((values[i] - vmax) / temperature);
        total += p[i];
    }
    for (auto& x : p) x /= total;
    return p;
}

// Per-goal competence estimate: EMA of the epoch-level success bit, plus the
// improvement from the latest update.
class CompetenceTracker {
  public:
    explicit CompetenceTracker(double alpha = 0.1) : alpha_(alpha) {}

    void add_goal(const std::string& goal) { entries_.emplace(goal, Entry{}); }
    bool knows(const std::string& goal) const { return entries_.count(goal) != 0; }

    double competence(const std::string& goal) const { return at(goal).c; }
    double last_improvement(const std::string& goal) const { return at(goal).delta; }

    double update(const std::string& goal, bool success) {
        Entry& e = mutable_at(goal);
        double before = e.c;
        e.c = (1 - alpha_) * e.c + alpha_ * (success ? 1.0 : 0.0);
        e.delta = e.c - before;
        return e.delta;
    }

    std::map<std::string, double> snapshot() const {
        std::map<std::string, double> out;
        for (const auto& [g, e] : entries_) out[g] = e.c;
        return out;
    }

  private:
    struct Entry {
        double c = 0;
        double delta = 0;
    };
    const Entry& at(const std::string& goal) const {
        auto it = entries_.find(goal);
        if (it == entries_.end()) throw MotivationError("unknown goal: " + goal);
        return it->second;
    }
    Entry& mutable_at(const std::string& goal) {
        auto it = entries_.find(goal);
        if (it == entries_.end()) throw MotivationError("unknown goal: " + goal);
        return it->second;
    }
    double alpha_;
    std::map<std::string, Entry> entries_;
};

// Competence-based goal bandit. Arm values are EMAs of signed competence
// improvement (CB-IM), clamped to [-1, 1]; new goals start optimistic.
class GoalSelector {
  public:
    GoalSelector(double alpha = 0.2, double temperature = 0.05, double prior = 0.5,
                 bool use_absolute_delta = false)
        : alpha_(alpha), tau_(temperature), prior_(prior), absolute_(use_absolute_delta) {}

    void add_goal(const std::string& goal) {
        if (!values_.count(goal)) {
            order_.push_back(goal);
            values_[goal] = prior_;
        }
    }
    bool knows(const std::string& goal) const { return values_.count(goal) != 0; }
    size_t num_goals() const { return order_.size(); }

    double value(const std::string& goal) const {
        auto it = values_.find(goal);
        if (it == values_.end()) throw MotivationError("unknown goal: " + goal);
        return it->second;
    }

    double max_value() const {
        double m = 0;
        bool first = true;
        for (const auto& [g, v] : values_) {
            if (first || v > m) m = v;
            first = false;
        }
        return first ? 0.0 : m;
    }

    void update(const std::string& goal, double delta_c) {
        auto it = values_.find(goal);
        if (it == values_.end()) throw MotivationError("unknown goal: " + goal);
        double d = absolute_ ? std::fabs(delta_c) : delta_c;
        it->second = std::clamp((1 - alpha_) * it->second + alpha_ * d, -1.0, 1.0);
    }

    std::string select(Rng& rng) const {
        if (order_.empty()) throw MotivationError("goal selection with no known goals");
        std::vector<double> vals;
        vals.reserve(order_.size());
        for (const auto& g : order_) vals.push_back(values_.at(g));
        return order_[softmax_sample(vals, tau_, rng)];
    }

    std::map<std::string, double> snapshot() const {
        std::map<std::string, double> out(values_.begin(), values_.end());
        return out;
    }

  private:
    double alpha_, tau_, prior_;
    bool absolute_;
    std::vector<std::string> order_;  // insertion order, stable
    std::map<std::string, double> values_;
};

enum class MotivationKind { Discover, Exploit };

// Two-armed bandit over discovery (EMA of novelty yield) and exploitation
// (max CB-IM, recomputed, never accumulated).
class MotivationSelector {
  public:
    MotivationSelector(double alpha = 0.1, double temperature = 0.05)
        : alpha_(alpha), tau_(temperature) {}

    double discover_value() const { return discover_; }
    double exploit_value() const { return exploit_; }

    void update_discover(int discoveries) {
        discover_ = (1 - alpha_) * discover_ + alpha_ * static_cast<double>(discoveries);
    }
    void set_exploit(double max_cbim) { exploit_ = max_cbim; }

    MotivationKind select(bool any_known_goal, Rng& rng) const {
        if (!any_known_goal) return MotivationKind::Discover;
        size_t i = softmax_sample({discover_, exploit_}, tau_, rng);
        return i == 0 ? MotivationKind::Discover : MotivationKind::Exploit;
    }

  private:
    double alpha_, tau_;
    double discover_ = 0;
    double exploit_ = 0;
};

// Go-Explore style archive of canonical start states ("default" plus one
// per discovered goal), valued by an EMA of discovery yield.
class StateSelector {
  public:
    static constexpr const char* kDefault = "default";

    StateSelector(double alpha = 0.1, double temperature = 0.05, double prior = 0.5)
        : alpha_(alpha), tau_(temperature), prior_(prior) {
        order_.push_back(kDefault);
        values_[kDefault] = 0.0;
    }

    void add_start_state(const std::string& id) {
        if (!values_.count(id)) {
            order_.push_back(id);
            values_[id] = prior_;
        }
    }
    bool knows(const std::string& id) const { return values_.count(id) != 0; }
    const std::vector<std::string>& archive() const { return order_; }

    double value(const std::string& id) const {
        auto it = values_.find(id);
        if (it == values_.end()) throw MotivationError("unknown start state: " + id);
        return it->second;
    }

    void update(const std::string& id, int discoveries) {
        auto it = values_.find(id);
        if (it == values_.end()) throw MotivationError("unknown start state: " + id);
        it->second = (1 - alpha_) * it->second + alpha_ * static_cast<double>(discoveries);
    }

    // Softmax restricted to the achievable candidates; "default" is always
    // expected to be among them.
    std::string select(const std::vector<std::string>& achievable, Rng& rng) const {
        if (achievable.empty()) throw MotivationError("no achievable start states");
        std::vector<double> vals;
        vals.reserve(achievable.size());
        for (const auto& id : achievable) vals.push_back(value(id));
        return achievable[softmax_sample(vals, tau_, rng)];
    }

  private:
    double alpha_, tau_, prior_;
    std::vector<std::string> order_;
    std::map<std::string, double> values_;
};

}  // namespace hgrail
