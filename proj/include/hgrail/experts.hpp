#pragma once

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "hgrail/env.hpp"
#include "hgrail/motivation.hpp"

namespace hgrail {

// Full discrete action set: 9 headings (8 compass + none) x {raise, lower}
// x {open, close, hold} = 54 candidates.
inline const std::vector<Action>& propose_candidates() {
    static const std::vector<Action> actions = [] {
        std::vector<Action> out;
        out.reserve(54);
        for (int h = 0; h <= 8; ++h)
            for (Vertical v : {Vertical::Raise, Vertical::Lower})
                for (GripperCmd g : {GripperCmd::Open, GripperCmd::Close, GripperCmd::Hold})
                    out.push_back({static_cast<Heading>(h), v, g});
        return out;
    }();
    return actions;
}

inline int candidate_index(const Action& a) {
    int h = static_cast<int>(a.heading);
    int v = a.vertical == Vertical::Raise ? 0 : 1;
    int g = static_cast<int>(a.gripper);
    return h * 6 + v * 3 + g;
}

inline Action exploratory_action(Rng& rng) {
    const auto& c = propose_candidates();
    return c[std::uniform_int_distribution<size_t>(0, c.size() - 1)(rng)];
}

// One hidden layer (tanh), sigmoid output: (percept features, one-hot
// action) -> success score in [0, 1]. The one-hot action encoding enters
// the hidden layer, so each action contributes a per-hidden-unit bias
// column (w_act_) on top of the shared percept preactivation; scoring all
// 54 candidates therefore costs a single percept pass plus 54 cheap
// hidden evaluations.
class UtilityModel {
  public:
    UtilityModel() = default;
    UtilityModel(int n_features, Rng& rng, int n_hidden = 16)
        : n_features_(n_features), n_hidden_(n_hidden) {
        std::uniform_real_distribution<double> u(-0.1, 0.1);
        w_in_.resize(static_cast<size_t>(n_hidden_) * n_features_);
        w_act_.resize(static_cast<size_t>(n_hidden_) * kNumActions);
        b_h_.resize(n_hidden_);
        w_out_.resize(n_hidden_);
        for (auto& w : w_in_) w = u(rng);
        for (auto& w : w_act_) w = u(rng);
        for (auto& b : b_h_) b = u(rng);
        for (auto& w : w_out_) w = u(rng);
        b_out_ = u(rng);
    }

    static constexpr int kNumActions = 54;

    int n_features() const { return n_features_; }

    double score(const std::vector<double>& x, int action) const {
        std::vector<double> base = percept_preactivation(x);
        return score_with_base(base, action);
    }

    void score_all(const std::vector<double>& x, std::vector<double>& out) const {
        std::vector<double> base = percept_preactivation(x);
        out.resize(kNumActions);
        for (int a = 0; a < kNumActions; ++a) out[a] = score_with_base(base, a);
    }

    void train_step(const std::vector<double>& x, int action, double label, double lr) {
        std::vector<double> z(n_hidden_), h(n_hidden_);
        std::vector<double> base = percept_preactivation(x);
        for (int j = 0; j < n_hidden_; ++j) {
            z[j] = base[j] + w_act_[static_cast<size_t>(j) * kNumActions + action];
            h[j] = std::tanh(z[j]);
        }
        double out_z = b_out_;
        for (int j = 0; j < n_hidden_; ++j) out_z += w_out_[j] * h[j];
        double p = sigmoid(out_z);
        double dz_out = p - label;
        b_out_ -= lr * dz_out;
        for (int j = 0; j < n_hidden_; ++j) {
            double dh = dz_out * w_out_[j];
            w_out_[j] -= lr * dz_out * h[j];
            double dz = dh * (1 - h[j] * h[j]);
            b_h_[j] -= lr * dz;
            w_act_[static_cast<size_t>(j) * kNumActions + action] -= lr * dz;
            double* wrow = &w_in_[static_cast<size_t>(j) * n_features_];
            for (int k = 0; k < n_features_; ++k) wrow[k] -= lr * dz * x[k];
        }
    }

    double bce_loss(const std::vector<double>& x, int action, double label) const {
        double p = score(x, action);
        const double eps = 1e-12;
        return -(label * std::log(p + eps) + (1 - label) * std::log(1 - p + eps));
    }

    std::vector<double>& parameters_flat(std::vector<double>& buf) {
        buf.clear();
        for (double* v : param_ptrs_()) buf.push_back(*v);
        return buf;
    }
    void set_parameters_flat(const std::vector<double>& buf) {
        auto ptrs = param_ptrs_();
        for (size_t i = 0; i < ptrs.size(); ++i) *ptrs[i] = buf[i];
    }
    size_t num_parameters() const {
        return w_in_.size() + w_act_.size() + b_h_.size() + w_out_.size() + 1;
    }

  private:
    static double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

    std::vector<double> percept_preactivation(const std::vector<double>& x) const {
        std::vector<double> base(b_h_);
        for (int j = 0; j < n_hidden_; ++j) {
            const double* wrow = &w_in_[static_cast<size_t>(j) * n_features_];
            double acc = 0;
            for (int k = 0; k < n_features_; ++k) acc += wrow[k] * x[k];
            base[j] += acc;
        }
        return base;
    }

    double score_with_base(const std::vector<double>& base, int action) const {
        double out_z = b_out_;
        for (int j = 0; j < n_hidden_; ++j)
            out_z += w_out_[j] * std::tanh(base[j] + w_act_[static_cast<size_t>(j) * kNumActions + action]);
        return sigmoid(out_z);
    }

    std::vector<double*> param_ptrs_() {
        std::vector<double*> p;
        p.reserve(num_parameters());
        for (auto& v : w_in_) p.push_back(&v);
        for (auto& v : w_act_) p.push_back(&v);
        for (auto& v : b_h_) p.push_back(&v);
        for (auto& v : w_out_) p.push_back(&v);
        p.push_back(&b_out_);
        return p;
    }

    int n_features_ = 0, n_hidden_ = 16;
    std::vector<double> w_in_, w_act_, b_h_, w_out_;
    double b_out_ = 0;
};

// Normalized percept features: distances divided by the table diagonal,
// then the boolean fields as 0/1.
inline std::vector<double> percept_features(const PerceptVector& p, double table_diagonal) {
    std::vector<double> x;
    x.reserve(p.distances.size() + p.bits.size());
    for (double d : p.distances) x.push_back(d / table_diagonal);
    for (uint8_t b : p.bits) x.push_back(b ? 1.0 : 0.0);
    return x;
}

inline int percept_feature_count(size_t n_distances, size_t n_bits) {
    return static_cast<int>(n_distances + n_bits);
}

struct TrajectoryBuffer {
    std::vector<std::pair<std::vector<double>, int>> samples;  // (features, action idx)
    bool outcome = false;

    void clear() {
        samples.clear();
        outcome = false;
    }
};

// Low-level goal-specific policy: utility-model action scoring with
// epsilon-greedy selection, trained per trial from the binary outcome.
class Expert {
  public:
    Expert() = default;
    // Success and failure passes use different step sizes (a class-weighted
    // cross-entropy): successful trials are rare and informative, so they get
    // the full step; failure trials are abundant -- most trials of a
    // still-learning curriculum fail, often from states where the goal is not
    // even achievable -- and a full-size failure pass (70 gradient steps)
    // would erase a consolidated skill corridor faster than successes can
    // rebuild it.
    Expert(std::string goal_id, int n_features, Rng& rng, double lr = 0.1,
           double eps_low = 0.1, double fail_lr = 0.02)
        : goal_id_(std::move(goal_id)),
          model_(n_features, rng),
          lr_(lr),
          fail_lr_(fail_lr),
          eps_low_(eps_low) {}

    static constexpr double kTieTolerance = 1e-3;

    const std::string& goal_id() const { return goal_id_; }
    UtilityModel& model() { return model_; }
    const UtilityModel& model() const { return model_; }
    double eps_low() const { return eps_low_; }

    Action select_action(const std::vector<double>& features, Rng& rng,
                         double eps_override = -1) const {
        const auto& candidates = propose_candidates();
        double eps = eps_override >= 0 ? eps_override : eps_low_;
        if (eps > 0 && std::uniform_real_distribution<double>(0.0, 1.0)(rng) < eps)
            return candidates[std::uniform_int_distribution<size_t>(0, candidates.size() - 1)(rng)];
        std::vector<double> scores;
        model_.score_all(features, scores);
        double best = scores[0];
        for (double s : scores) best = std::max(best, s);
        // Near-ties are resolved uniformly at random. The tolerance doubles
        // as an exploration mechanism: a model whose scores have collapsed
        // (all candidates look equally bad) degenerates to a random search,
        // and a succeeding corridor of actions lifts back out of the tie
        // band, so exploration fades exactly where the model is confident.
        std::vector<size_t> ties;
        for (size_t i = 0; i < scores.size(); ++i)
            if (scores[i] >= best - kTieTolerance) ties.push_back(i);
        size_t pick = ties.size() == 1
                          ? ties[0]
                          : ties[std::uniform_int_distribution<size_t>(0, ties.size() - 1)(rng)];
        return candidates[pick];
    }

    // One supervised pass: every (percept, action) of the trial gets the
    // trial outcome as its label. Empty buffer is a no-op.
    void train(const TrajectoryBuffer& buffer) {
        double label = buffer.outcome ? 1.0 : 0.0;
        double lr = buffer.outcome ? lr_ : fail_lr_;
        for (const auto& [x, a] : buffer.samples) model_.train_step(x, a, label, lr);
    }

  private:
    std::string goal_id_;
    UtilityModel model_;
    double lr_ = 0.1;
    double fail_lr_ = 0.02;
    double eps_low_ = 0.1;
};

}  // namespace hgrail
