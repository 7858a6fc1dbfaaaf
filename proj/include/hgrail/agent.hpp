#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hgrail/curriculum.hpp"
#include "hgrail/env.hpp"
#include "hgrail/experts.hpp"
#include "hgrail/goal_memory.hpp"
#include "hgrail/motivation.hpp"
#include "hgrail/scenario.hpp"

namespace hgrail {

enum class Variant { HGrail, RndGd, SGd };

inline std::string to_string(Variant v) {
    switch (v) {
        case Variant::HGrail: return "hgrail";
        case Variant::RndGd: return "rnd-gd";
        case Variant::SGd: return "s-gd";
    }
    return "?";
}

inline Variant variant_from_string(const std::string& s) {
    if (s == "hgrail") return Variant::HGrail;
    if (s == "rnd-gd") return Variant::RndGd;
    if (s == "s-gd") return Variant::SGd;
    throw ConfigError("unknown variant: " + s);
}

struct Hyperparams {
    double alpha_c = 0.1;       // competence EMA
    double alpha_im = 0.2;      // CB-IM EMA
    double alpha_mot = 0.1;     // discover-arm EMA
    double alpha_state = 0.1;   // start-state yield EMA
    double tau_goal = 0.05;
    double tau_mot = 0.05;
    double tau_state = 0.05;
    double goal_prior = 0.5;    // optimistic CB-IM for fresh goals
    double state_prior = 0.5;
    bool absolute_delta = false;
    double alpha_q = 0.2;
    double gamma = 0.9;
    double eps_min = 0.05;
    // Asymmetric expert step sizes: full-size passes on the rare successful
    // trials so fresh skills consolidate quickly, small passes on the
    // abundant failure trials so one bad epoch cannot erase a consolidated
    // skill corridor.
    double expert_lr = 0.1;
    double expert_fail_lr = 0.02;
    double eps_low = 0.1;
    int trials_per_epoch = 8;
    int steps_per_trial = 70;
};

struct EpochRecord {
    int epoch = 0;
    std::string motivation;    // "discover" or "exploit"
    std::string goal;          // exploit target, empty for discovery epochs
    std::string start_state;   // discovery epochs only
    int trials_used = 0;
    std::vector<std::string> subgoals;
    std::vector<std::string> discovered;
    bool success = false;
    std::map<std::string, double> competence;
};

// One H-GRAIL (or ablated baseline) agent: goal memory, selectors, per-goal
// meta-policies and experts, all driven by a single rng stream.
class Agent {
  public:
    Agent(Variant variant, const ScenarioConfig& config, uint64_t seed,
          Hyperparams hp = {})
        : variant_(variant),
          hp_(hp),
          rng_(seed),
          layout_(config.percept_layout()),
          table_diagonal_(config.table_diagonal()),
          n_features_(percept_feature_count(layout_.distance_ids.size(), layout_.bool_names.size())),
          competence_(hp.alpha_c),
          goal_selector_(hp.alpha_im, hp.tau_goal, hp.goal_prior, hp.absolute_delta) {
        if (variant_ != Variant::RndGd)
            motivation_.emplace(hp.alpha_mot, hp.tau_mot);
        if (variant_ == Variant::HGrail)
            state_selector_.emplace(hp.alpha_state, hp.tau_state, hp.state_prior);
    }

    Variant variant() const { return variant_; }
    const GoalRepresentationMap& goal_map() const { return grm_; }
    const CompetenceTracker& competence() const { return competence_; }
    const GoalSelector& goal_selector() const { return goal_selector_; }
    const std::optional<MotivationSelector>& motivation() const { return motivation_; }
    const std::optional<StateSelector>& state_selector() const { return state_selector_; }
    const MetaPolicy& policy(const std::string& goal) const { return policies_.at(goal); }
    const Expert& expert(const std::string& goal) const { return experts_.at(goal); }
    long motivation_selector_calls() const { return motivation_calls_; }
    long state_selector_calls() const { return state_calls_; }
    Rng& rng() { return rng_; }

    EpochRecord run_epoch(TabletopEnv& env, int epoch) {
        env.reset(env.state().phase);
        EpochRecord rec;
        rec.epoch = epoch;
        if (variant_ == Variant::RndGd) {
            // no Motivation Selector: always exploit, incidental discovery only
            if (grm_.empty()) {
                rec.motivation = "exploit";
                run_random_trials(env, epoch, StateSelector::kDefault, rec,
                                  hp_.trials_per_epoch);
            } else {
                run_exploit_epoch(env, epoch, goal_selector_.select(rng_), rec);
            }
        } else {
            ++motivation_calls_;
            MotivationKind kind = motivation_->select(!grm_.empty(), rng_);
            if (kind == MotivationKind::Discover) {
                run_discovery_epoch(env, epoch, rec);
            } else {
                run_exploit_epoch(env, epoch, goal_selector_.select(rng_), rec);
            }
        }
        rec.competence = competence_.snapshot();
        return rec;
    }

    void run_exploit_epoch(TabletopEnv& env, int epoch, const std::string& target,
                           EpochRecord& rec) {
        rec.motivation = "exploit";
        rec.goal = target;
        PerceptVector prev = env.percept();
        bool target_matched = false;
        for (int trial = 0; trial < hp_.trials_per_epoch && !target_matched; ++trial) {
            AbstractState s = encode_abstract_state(prev, layout_, grm_);
            double c = competence_.competence(target);
            std::string sub =
                policies_.at(target).select_subgoal(s, c, grm_.goal_ids(), rng_);
            rec.subgoals.push_back(sub);
            TrajectoryBuffer buffer;
            bool sub_matched = run_trial(env, prev, &sub, &experts_.at(sub), hp_.eps_low,
                                         true, epoch, StateSelector::kDefault, &rec,
                                         &buffer, &target, &target_matched);
            buffer.outcome = sub_matched;
            experts_.at(sub).train(buffer);
            AbstractState s_next = encode_abstract_state(prev, layout_, grm_);
            double r = target_matched ? 1.0 : 0.0;
            bool terminal = target_matched || trial + 1 == hp_.trials_per_epoch;
            policies_.at(target).update(s, sub, r, s_next, terminal, grm_.goal_ids());
            ++rec.trials_used;
        }
        rec.success = target_matched;
        double delta = competence_.update(target, rec.success);
        goal_selector_.update(target, delta);
        if (motivation_) motivation_->set_exploit(goal_selector_.max_value());
    }

    void run_discovery_epoch(TabletopEnv& env, int epoch, EpochRecord& rec) {
        rec.motivation = "discover";
        std::string start = StateSelector::kDefault;
        if (variant_ == Variant::HGrail) {
            ++state_calls_;
            start = state_selector_->select(state_selector_->archive(), rng_);
        }
        rec.start_state = start;
        PerceptVector prev = env.percept();
        int trials_used = 0;
        if (start != StateSelector::kDefault) {
            // Move toward the start state with the agent's own skills. If the
            // attempt made verified progress (some plan step succeeded),
            // explore from wherever it ended -- a lit button or a held
            // cylinder is a deeper frontier than the home position. If the
            // very first step failed, the skills are not ready: restart from
            // home rather than exploring from wherever the failure drifted.
            bool progress = false;
            realize_start_state(env, prev, start, epoch, rec, trials_used, progress);
            if (!progress) {
                env.reset(env.state().phase);
                prev = env.percept();
            }
        }
        while (trials_used < hp_.trials_per_epoch) {
            run_trial(env, prev, nullptr, nullptr, 1.0, true, epoch, start, &rec, nullptr,
                      nullptr, nullptr);
            ++trials_used;
        }
        rec.trials_used = trials_used;
        int discoveries = static_cast<int>(rec.discovered.size());
        if (motivation_) {
            motivation_->update_discover(discoveries);
            motivation_->set_exploit(goal_selector_.max_value());
        }
        if (variant_ == Variant::HGrail) state_selector_->update(start, discoveries);
    }

    // Frozen-policy evaluation: one epoch per known goal with greedy experts
    // (eps_low = 0), meta epsilon at its floor, no learning, no discovery,
    // on a fresh environment. The agent itself is untouched.
    std::map<std::string, bool> evaluate_greedy(const ScenarioConfig& config, int phase,
                                                uint64_t seed) const {
        std::map<std::string, bool> result;
        Rng eval_rng(seed);
        for (const auto& r : grm_.records()) {
            TabletopEnv env(config, phase, seed);
            PerceptVector prev = env.percept();
            bool matched = false;
            for (int trial = 0; trial < hp_.trials_per_epoch && !matched; ++trial) {
                AbstractState s = encode_abstract_state(prev, layout_, grm_);
                std::string sub = policies_.at(r.goal_id)
                                      .select_subgoal(s, 1.0, grm_.goal_ids(), eval_rng);
                matched = eval_trial(env, prev, sub, r.goal_id, eval_rng);
            }
            result[r.goal_id] = matched;
        }
        return result;
    }

  private:
    // Runs up to steps_per_trial steps. Returns whether `subgoal` (if any)
    // was matched; stops early on sub-goal or target match. All novel event
    // signatures pass through discovery when learning is on.
    bool run_trial(TabletopEnv& env, PerceptVector& prev, const std::string* subgoal,
                   const Expert* expert, double eps, bool learn, int epoch,
                   const std::string& context, EpochRecord* rec, TrajectoryBuffer* buffer,
                   const std::string* target, bool* target_matched) {
        bool sub_matched = false;
        TrajectoryBuffer local;
        for (int step = 0; step < hp_.steps_per_trial; ++step) {
            std::vector<double> feats = percept_features(prev, table_diagonal_);
            Action a = expert ? expert->select_action(feats, rng_, eps)
                              : exploratory_action(rng_);
            local.samples.push_back({std::move(feats), candidate_index(a)});
            StepResult res = env.step(a);
            EventList events = detect_events(prev, res.percept, layout_);
            prev = std::move(res.percept);
            if (learn && !events.empty()) {
                auto fresh = grm_.discover(events, epoch, context);
                for (const auto& g : fresh) {
                    create_goal_structures(g);
                    if (rec) rec->discovered.push_back(g);
                }
            }
            if (subgoal && grm_.contains(*subgoal) && grm_.match_goal(*subgoal, events))
                sub_matched = true;
            if (target && grm_.match_goal(*target, events) && target_matched)
                *target_matched = true;
            if (sub_matched || (target_matched && *target_matched)) break;
        }
        if (buffer) *buffer = std::move(local);
        return sub_matched;
    }

    bool eval_trial(TabletopEnv& env, PerceptVector& prev, const std::string& subgoal,
                    const std::string& target, Rng& eval_rng) const {
        bool target_matched = false;
        for (int step = 0; step < hp_.steps_per_trial; ++step) {
            std::vector<double> feats = percept_features(prev, table_diagonal_);
            Action a = experts_.at(subgoal).select_action(feats, eval_rng, 0.0);
            StepResult res = env.step(a);
            EventList events = detect_events(prev, res.percept, layout_);
            prev = std::move(res.percept);
            if (grm_.match_goal(target, events)) {
                target_matched = true;
                break;
            }
            if (grm_.match_goal(subgoal, events)) break;
        }
        return target_matched;
    }

    // Greedy meta-policy/expert trials toward the start state's goal,
    // consuming the epoch's trial budget.
    bool realize_start_state(TabletopEnv& env, PerceptVector& prev, const std::string& goal,
                             int epoch, EpochRecord& rec, int& trials_used,
                             bool& progress) {
        bool realized = false;
        while (trials_used < hp_.trials_per_epoch && !realized) {
            AbstractState s = encode_abstract_state(prev, layout_, grm_);
            std::string sub =
                policies_.at(goal).select_subgoal(s, 1.0, grm_.goal_ids(), rng_);
            bool matched_goal = false;
            bool sub_matched = run_trial(env, prev, &sub, &experts_.at(sub), 0.0, true,
                                         epoch, rec.start_state, &rec, nullptr, &goal,
                                         &matched_goal);
            ++trials_used;
            if (sub_matched || matched_goal) progress = true;
            if (matched_goal) realized = true;
            else if (!sub_matched) break;  // plan step failed
        }
        return realized;
    }

    void run_random_trials(TabletopEnv& env, int epoch, const std::string& context,
                           EpochRecord& rec, int trials) {
        PerceptVector prev = env.percept();
        for (int t = 0; t < trials; ++t) {
            run_trial(env, prev, nullptr, nullptr, 1.0, true, epoch, context, &rec, nullptr,
                      nullptr, nullptr);
            ++rec.trials_used;
        }
        rec.success = false;
    }

    void create_goal_structures(const std::string& goal_id) {
        competence_.add_goal(goal_id);
        goal_selector_.add_goal(goal_id);
        policies_.emplace(goal_id,
                          MetaPolicy(goal_id, hp_.alpha_q, hp_.gamma, hp_.eps_min));
        experts_.emplace(goal_id,
                         Expert(goal_id, n_features_, rng_, hp_.expert_lr, hp_.eps_low,
                                hp_.expert_fail_lr));
        if (state_selector_) state_selector_->add_start_state(goal_id);
    }

    Variant variant_;
    Hyperparams hp_;
    Rng rng_;
    PerceptLayout layout_;
    double table_diagonal_;
    int n_features_;
    GoalRepresentationMap grm_;
    CompetenceTracker competence_;
    GoalSelector goal_selector_;
    std::optional<MotivationSelector> motivation_;
    std::optional<StateSelector> state_selector_;
    std::map<std::string, MetaPolicy> policies_;
    std::map<std::string, Expert> experts_;
    long motivation_calls_ = 0;
    long state_calls_ = 0;
};

}  // namespace hgrail
