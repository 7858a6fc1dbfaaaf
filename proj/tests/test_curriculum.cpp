#include <doctest.h>

#include <map>
#include <set>

#include "hgrail/curriculum.hpp"
#include "hgrail/env.hpp"
#include "hgrail/goal_memory.hpp"

using namespace hgrail;

namespace {

// Deterministic abstract environment over a frozen dependency DAG: choosing
// an achievable sub-goal makes its predicate true (grasp fills the gripper,
// placements empty it and clear the other box). Used as the value-iteration
// oracle target for meta-policy training.
struct AbstractDag {
    // goal -> prerequisite goals
    std::map<std::string, std::vector<std::string>> deps;
    std::vector<std::string> goals;
    std::set<std::string> unachievable;

    std::set<std::string> apply(std::set<std::string> have, const std::string& g) const {
        if (unachievable.count(g)) return have;
        auto it = deps.find(g);
        if (it != deps.end())
            for (const auto& r : it->second)
                if (!have.count(r)) return have;
        if (g == "G5" || g == "G6") {
            if (!have.count("G4")) return have;
            have.erase("G4");
            have.erase(g == "G5" ? "G6" : "G5");
        }
        have.insert(g);
        return have;
    }

    std::string key(const std::set<std::string>& have) const {
        std::string k;
        for (const auto& g : goals) k.push_back(have.count(g) ? '1' : '0');
        k.push_back(have.count("G4") ? '1' : '0');  // gripper flag
        return k;
    }

    AbstractState state(const std::set<std::string>& have) const { return {key(have)}; }
};

AbstractDag phase0_dag() {
    AbstractDag d;
    d.goals = {"G1", "G2", "G3", "G4", "G5"};
    d.deps = {{"G4", {"G1"}}, {"G5", {"G4"}}};
    return d;
}

AbstractDag phase1_dag() {
    AbstractDag d;
    d.goals = {"G1", "G2", "G3", "G4", "G5", "G6"};
    d.deps = {{"G4", {"G2"}}, {"G5", {"G4"}}, {"G6", {"G4"}}};
    d.unachievable = {"G1"};
    return d;
}

// Breadth-first shortest sub-goal sequence achieving `target`; the optimal
// plan of the discounted MDP coincides with it for gamma in (0,1).
std::vector<std::string> oracle_plan(const AbstractDag& dag, const std::string& target) {
    std::set<std::string> start;
    std::map<std::string, std::pair<std::string, std::string>> parent;  // key -> (prev key, action)
    std::vector<std::set<std::string>> frontier{start};
    std::map<std::string, std::set<std::string>> by_key{{dag.key(start), start}};
    std::set<std::string> seen{dag.key(start)};
    while (!frontier.empty()) {
        std::vector<std::set<std::string>> next;
        for (const auto& have : frontier) {
            for (const auto& g : dag.goals) {
                auto after = dag.apply(have, g);
                std::string k = dag.key(after);
                bool achieved = after.count(g) && !have.count(g);
                if (achieved && g == target) {
                    std::vector<std::string> plan{g};
                    std::string cur = dag.key(have);
                    while (parent.count(cur)) {
                        plan.insert(plan.begin(), parent[cur].second);
                        cur = parent[cur].first;
                    }
                    return plan;
                }
                if (seen.count(k)) continue;
                seen.insert(k);
                parent[k] = {dag.key(have), g};
                next.push_back(after);
            }
        }
        frontier = std::move(next);
    }
    return {};
}

// Q-learning training episodes on the abstract DAG: uniform exploration for
// the first half (coverage), then a mostly-greedy tail (refinement). The
// competence proxy feeds select_subgoal's epsilon = max(eps_min, 1 - c).
void train_policy(MetaPolicy& policy, const AbstractDag& dag, const std::string& target,
                  Rng& rng, int episodes, int max_steps = 8) {
    for (int ep = 0; ep < episodes; ++ep) {
        std::set<std::string> have;
        double competence = ep < episodes / 2 ? 0.0 : 0.75;
        for (int t = 0; t < max_steps; ++t) {
            AbstractState s = dag.state(have);
            std::string a = policy.select_subgoal(s, competence, dag.goals, rng);
            auto next = dag.apply(have, a);
            bool achieved_target = next.count(target) && (a == target);
            double r = achieved_target ? 1.0 : 0.0;
            bool terminal = achieved_target || t + 1 == max_steps;
            policy.update(s, a, r, dag.state(next), terminal, dag.goals);
            have = std::move(next);
            if (achieved_target) break;
        }
    }
}

}  // namespace

TEST_CASE("encode_abstract_state: initial, post-press, gripper bit") {
    ScenarioConfig cfg = default_scenario();
    PerceptLayout lay = cfg.percept_layout();
    GoalRepresentationMap grm;
    for (const auto& g : cfg.canonical_goals())
        grm.discover({{g.signature}}, 0, "default");
    REQUIRE(grm.size() == 6);

    TabletopEnv env(cfg, 0, 0);
    AbstractState s0 = encode_abstract_state(env.percept(), lay, grm);
    CHECK(s0.key == "");  // nothing held, gripper empty

    env.teleport_to_canonical("orange_button_lit");
    AbstractState s1 = encode_abstract_state(env.percept(), lay, grm);
    CHECK(s1.key == grm.records()[0].goal_id);  // orange-press goal holds

    env.teleport_to_canonical("gripper_occupied");
    AbstractState s2 = encode_abstract_state(env.percept(), lay, grm);
    // prerequisite button lit + grasp goal held + gripper flag
    CHECK(s2.key ==
          grm.records()[0].goal_id + "," + grm.records()[3].goal_id + "|G");
}

TEST_CASE("encode_abstract_state: keys survive later goal discovery") {
    ScenarioConfig cfg = default_scenario();
    PerceptLayout lay = cfg.percept_layout();
    GoalRepresentationMap grm;
    for (const auto& g : cfg.canonical_goals())
        grm.discover({{g.signature}}, 0, "default");

    TabletopEnv env(cfg, 0, 0);
    env.teleport_to_canonical("gripper_occupied");
    AbstractState before = encode_abstract_state(env.percept(), lay, grm);

    // a goal discovered later, whose predicates do not hold here, must not
    // change the key of this state
    grm.discover(
        {{make_signature({{"cylinder_visible", true}, {"gripper_occupied", false}})}},
        100, "default");
    AbstractState after = encode_abstract_state(env.percept(), lay, grm);
    CHECK(before.key == after.key);
}

TEST_CASE("select_subgoal: competence-modulated epsilon limits") {
    Rng rng(1);
    MetaPolicy p("T", 0.2, 0.9, 0.05);
    std::vector<std::string> actions{"a", "b", "c"};
    AbstractState s{"000"};
    p.update(s, "b", 1.0, s, true, actions);  // unique argmax at b

    // competence 1 -> epsilon = eps_min: argmax dominates
    int b_count = 0;
    for (int i = 0; i < 10000; ++i)
        if (p.select_subgoal(s, 1.0, actions, rng) == "b") ++b_count;
    CHECK(b_count > 9500);

    // competence 0 -> epsilon = 1: uniform
    std::map<std::string, int> counts;
    for (int i = 0; i < 90000; ++i) ++counts[p.select_subgoal(s, 0.0, actions, rng)];
    for (const auto& [a, c] : counts) CHECK(std::abs(c - 30000) < 700);

    // all-zero row, full competence: uniform tie-break
    MetaPolicy fresh("T");
    counts.clear();
    for (int i = 0; i < 90000; ++i) ++counts[fresh.select_subgoal(s, 1.0, actions, rng)];
    for (const auto& [a, c] : counts) CHECK(std::abs(c - 30000) < 700);
}

TEST_CASE("exploration rate: non-increasing in competence, floor at eps_min") {
    double prev = 2.0;
    for (double c = 0.0; c <= 1.0001; c += 0.01) {
        double eps = MetaPolicy::exploration_rate(c, 0.05);
        CHECK(eps <= prev);
        CHECK(eps >= 0.05);
        prev = eps;
    }
    CHECK(MetaPolicy::exploration_rate(1.0, 0.05) == doctest::Approx(0.05));
    CHECK(MetaPolicy::exploration_rate(0.96, 0.05) == doctest::Approx(0.05));
}

TEST_CASE("q_update: closed forms") {
    std::vector<std::string> actions{"a", "b"};
    MetaPolicy p("T", 0.2, 0.9, 0.05);
    AbstractState s{"00"}, s2{"01"};
    p.update(s, "a", 1.0, s2, true, actions);
    CHECK(p.q(s, "a") == doctest::Approx(0.2));

    MetaPolicy p2("T", 0.2, 0.9, 0.05);
    p2.update(s2, "b", 1.0, s2, true, actions);
    for (int i = 0; i < 200; ++i) p2.update(s2, "b", 1.0, s2, true, actions);
    // max_b Q(s2) ~= 1 now; non-terminal backup with r = 0
    double max_next = p2.max_q(s2, actions);
    p2.update(s, "a", 0.0, s2, false, actions);
    CHECK(p2.q(s, "a") == doctest::Approx(0.2 * 0.9 * max_next));
}

TEST_CASE("q_update: 2-step dependency chain converges to gamma") {
    // press -> grab with reward at grab; value iteration fixed point:
    // Q(start, press) = gamma * 1
    Rng rng(3);
    AbstractDag dag;
    dag.goals = {"P", "G"};
    dag.deps = {{"G", {"P"}}};
    MetaPolicy p("G", 0.2, 0.9, 0.05);
    train_policy(p, dag, "G", rng, 3000, 4);
    AbstractState start = dag.state({});
    CHECK(p.q(start, "P") == doctest::Approx(0.9).epsilon(1e-3));
}

TEST_CASE("greedy_plan: oracle sequences for both phase DAGs") {
    Rng rng(7);
    SUBCASE("phase 0, goal 5") {
        AbstractDag dag = phase0_dag();
        MetaPolicy p("G5", 1.0, 0.9, 0.05);  // deterministic transitions: alpha = 1
        train_policy(p, dag, "G5", rng, 500);
        auto plan = p.greedy_plan(dag.state({}), 8, dag.goals);
        CHECK(plan == std::vector<std::string>{"G1", "G4", "G5"});
        CHECK(plan == oracle_plan(dag, "G5"));
    }
    SUBCASE("phase 1, goal 6") {
        AbstractDag dag = phase1_dag();
        MetaPolicy p("G6", 1.0, 0.9, 0.05);
        train_policy(p, dag, "G6", rng, 500);
        auto plan = p.greedy_plan(dag.state({}), 8, dag.goals);
        CHECK(plan == std::vector<std::string>{"G2", "G4", "G6"});
        CHECK(plan == oracle_plan(dag, "G6"));
    }
    SUBCASE("goal without preconditions plans itself alone") {
        AbstractDag dag = phase0_dag();
        MetaPolicy p("G2", 1.0, 0.9, 0.05);
        train_policy(p, dag, "G2", rng, 500);
        auto plan = p.greedy_plan(dag.state({}), 8, dag.goals);
        CHECK(plan == std::vector<std::string>{"G2"});
        CHECK(plan == oracle_plan(dag, "G2"));
    }
}

TEST_CASE("action-set growth leaves existing Q-values untouched") {
    std::vector<std::string> actions{"a", "b"};
    MetaPolicy p("T");
    AbstractState s{"00"};
    p.update(s, "a", 1.0, s, true, actions);
    double qa = p.q(s, "a");
    std::vector<std::string> grown{"a", "b", "c"};
    CHECK(p.q(s, "c") == 0.0);
    CHECK(p.q(s, "a") == qa);
    CHECK(p.max_q(s, grown) == qa);
}
