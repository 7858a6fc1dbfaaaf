#pragma once

#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "hgrail/events.hpp"

namespace hgrail {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class ObjectKind { Button, Cylinder, Box };

struct ObjectSpec {
    std::string id;
    ObjectKind kind = ObjectKind::Button;
    double x = 0, y = 0;
    double radius = 10.0;
    // Boxes the cylinder can be placed into as a goal. The start container
    // (open circular box) is a box with goal_target = false.
    bool goal_target = false;
};

struct PhaseSpec {
    int id = 0;
    std::vector<std::string> active_objects;
    // goal predicate -> prerequisite predicates that must hold before an
    // event for that predicate may fire
    std::map<std::string, std::vector<std::string>> dependencies;
    std::vector<std::pair<std::string, std::string>> mutual_exclusions;
    // "table" or the id of a box the cylinder starts in
    std::string cylinder_start = "table";
};

// A goal of the scenario as ground truth: the percept-change signature that
// marks its achievement plus the predicate that holds once it is achieved.
struct CanonicalGoal {
    std::string name;        // "goal_1" .. "goal_6" in the default scenario
    std::string predicate;   // defining predicate, e.g. "orange_button_lit"
    Signature signature;
};

// Fixed ordering of the percept's boolean fields and distance slots.
struct PerceptLayout {
    std::vector<std::string> distance_ids;  // object ids, config order
    std::vector<std::string> bool_names;    // lit flags, gripper, visibility, in-box flags

    int bool_index(const std::string& name) const {
        for (size_t i = 0; i < bool_names.size(); ++i)
            if (bool_names[i] == name) return static_cast<int>(i);
        return -1;
    }
};

struct ScenarioConfig {
    double table_w = 120.0, table_h = 80.0;
    double home_x = 60.0, home_y = 40.0;
    double sentinel_distance = 200.0;
    std::vector<ObjectSpec> objects;
    std::vector<PhaseSpec> phases;
    std::vector<std::pair<int, int>> phase_schedule;  // (epoch, phase id)

    double table_diagonal() const { return std::hypot(table_w, table_h); }

    const ObjectSpec* find_object(const std::string& id) const {
        for (const auto& o : objects)
            if (o.id == id) return &o;
        return nullptr;
    }
    const PhaseSpec* find_phase(int id) const {
        for (const auto& p : phases)
            if (p.id == id) return &p;
        return nullptr;
    }
    const PhaseSpec& phase_or_throw(int id) const {
        const PhaseSpec* p = find_phase(id);
        if (!p) throw ConfigError("unknown phase id " + std::to_string(id));
        return *p;
    }

    int phase_for_epoch(int epoch) const {
        int phase = phase_schedule.empty() ? 0 : phase_schedule.front().second;
        for (const auto& [e, p] : phase_schedule)
            if (e <= epoch) phase = p;
        return phase;
    }

    static std::string lit_predicate(const std::string& button_id) { return button_id + "_lit"; }
    static std::string in_box_predicate(const std::string& box_id) { return "in_" + box_id; }

    // Every predicate that can appear in events/dependencies.
    std::vector<std::string> predicate_universe() const {
        std::vector<std::string> preds;
        for (const auto& o : objects)
            if (o.kind == ObjectKind::Button) preds.push_back(lit_predicate(o.id));
        preds.push_back("gripper_occupied");
        preds.push_back("cylinder_visible");
        for (const auto& o : objects)
            if (o.kind == ObjectKind::Box && o.goal_target) preds.push_back(in_box_predicate(o.id));
        return preds;
    }

    PerceptLayout percept_layout() const {
        PerceptLayout lay;
        for (const auto& o : objects) lay.distance_ids.push_back(o.id);
        lay.bool_names = predicate_universe();
        return lay;
    }

    // Ground-truth goal list in reporting order: one per button, the grasp
    // goal, one per goal box.
    std::vector<CanonicalGoal> canonical_goals() const {
        std::vector<CanonicalGoal> goals;
        int n = 0;
        auto next_name = [&n] { return "goal_" + std::to_string(++n); };
        for (const auto& o : objects) {
            if (o.kind != ObjectKind::Button) continue;
            std::string pred = lit_predicate(o.id);
            goals.push_back({next_name(), pred, make_signature({{pred, true}})});
        }
        goals.push_back({next_name(), "gripper_occupied",
                         make_signature({{"cylinder_visible", false}, {"gripper_occupied", true}})});
        for (const auto& o : objects) {
            if (o.kind != ObjectKind::Box || !o.goal_target) continue;
            std::string pred = in_box_predicate(o.id);
            goals.push_back({next_name(), pred,
                             make_signature({{pred, true}, {"gripper_occupied", false}})});
        }
        return goals;
    }

    void validate() const {
        if (table_w <= 0 || table_h <= 0) throw ConfigError("table bounds must be positive");
        std::set<std::string> ids;
        int n_cyl = 0;
        for (const auto& o : objects) {
            if (!ids.insert(o.id).second) throw ConfigError("duplicate object id: " + o.id);
            if (o.radius <= 0) throw ConfigError("non-positive radius on " + o.id);
            if (o.kind == ObjectKind::Cylinder) ++n_cyl;
        }
        if (n_cyl != 1) throw ConfigError("scenario needs exactly one cylinder");
        auto preds = predicate_universe();
        std::set<std::string> pred_set(preds.begin(), preds.end());
        if (phases.empty()) throw ConfigError("at least one phase required");
        for (const auto& ph : phases) {
            for (const auto& oid : ph.active_objects)
                if (!find_object(oid)) throw ConfigError("phase references unknown object " + oid);
            for (const auto& [p, reqs] : ph.dependencies) {
                if (!pred_set.count(p)) throw ConfigError("dependency on unknown predicate " + p);
                for (const auto& r : reqs)
                    if (!pred_set.count(r)) throw ConfigError("unknown prerequisite predicate " + r);
            }
            check_acyclic(ph);
            for (const auto& [a, b] : ph.mutual_exclusions) {
                if (a.rfind("in_", 0) != 0 || b.rfind("in_", 0) != 0)
                    throw ConfigError("mutual exclusions must pair placement predicates");
            }
            if (ph.cylinder_start != "table") {
                const ObjectSpec* box = find_object(ph.cylinder_start);
                if (!box || box->kind != ObjectKind::Box)
                    throw ConfigError("cylinder_start must be \"table\" or a box id");
            }
        }
        if (phase_schedule.empty()) throw ConfigError("phase_schedule must be non-empty");
        if (phase_schedule.front().first != 0) throw ConfigError("phase_schedule must start at epoch 0");
        for (size_t i = 1; i < phase_schedule.size(); ++i)
            if (phase_schedule[i].first <= phase_schedule[i - 1].first)
                throw ConfigError("phase_schedule epochs must be strictly increasing");
        for (const auto& [e, p] : phase_schedule)
            if (!find_phase(p)) throw ConfigError("phase_schedule references unknown phase");
    }

  private:
    void check_acyclic(const PhaseSpec& ph) const {
        // colors: 0 unvisited, 1 in progress, 2 done
        std::map<std::string, int> color;
        std::function<void(const std::string&)> visit = [&](const std::string& p) {
            int& c = color[p];
            if (c == 1) throw ConfigError("dependency cycle through " + p);
            if (c == 2) return;
            c = 1;
            auto it = ph.dependencies.find(p);
            if (it != ph.dependencies.end())
                for (const auto& r : it->second) visit(r);
            c = 2;
        };
        for (const auto& [p, _] : ph.dependencies) visit(p);
    }
};

// ---------------------------------------------------------------------------
// JSON serialization

inline ObjectKind object_kind_from_string(const std::string& s) {
    if (s == "button") return ObjectKind::Button;
    if (s == "cylinder") return ObjectKind::Cylinder;
    if (s == "box") return ObjectKind::Box;
    throw ConfigError("unknown object kind: " + s);
}

inline std::string to_string(ObjectKind k) {
    switch (k) {
        case ObjectKind::Button: return "button";
        case ObjectKind::Cylinder: return "cylinder";
        case ObjectKind::Box: return "box";
    }
    return "?";
}

inline nlohmann::json to_json(const ScenarioConfig& c) {
    nlohmann::json j;
    j["table"] = {{"width", c.table_w}, {"height", c.table_h}, {"home", {c.home_x, c.home_y}}};
    j["sentinel_distance"] = c.sentinel_distance;
    for (const auto& o : c.objects) {
        nlohmann::json jo{{"id", o.id},
                          {"kind", to_string(o.kind)},
                          {"pos", {o.x, o.y}},
                          {"radius", o.radius}};
        if (o.kind == ObjectKind::Box) jo["goal_target"] = o.goal_target;
        j["objects"].push_back(jo);
    }
    for (const auto& p : c.phases) {
        nlohmann::json jp{{"id", p.id},
                          {"active_objects", p.active_objects},
                          {"cylinder_start", p.cylinder_start}};
        jp["dependencies"] = nlohmann::json::object();
        for (const auto& [pred, reqs] : p.dependencies) jp["dependencies"][pred] = reqs;
        jp["mutual_exclusions"] = nlohmann::json::array();
        for (const auto& [a, b] : p.mutual_exclusions)
            jp["mutual_exclusions"].push_back({a, b});
        j["phases"].push_back(jp);
    }
    for (const auto& [e, p] : c.phase_schedule) j["phase_schedule"].push_back({e, p});
    return j;
}

inline ScenarioConfig scenario_from_json(const nlohmann::json& j) {
    ScenarioConfig c;
    try {
        const auto& t = j.at("table");
        c.table_w = t.at("width").get<double>();
        c.table_h = t.at("height").get<double>();
        c.home_x = t.at("home").at(0).get<double>();
        c.home_y = t.at("home").at(1).get<double>();
        c.sentinel_distance = j.value("sentinel_distance", 200.0);
        for (const auto& jo : j.at("objects")) {
            ObjectSpec o;
            o.id = jo.at("id").get<std::string>();
            o.kind = object_kind_from_string(jo.at("kind").get<std::string>());
            o.x = jo.at("pos").at(0).get<double>();
            o.y = jo.at("pos").at(1).get<double>();
            o.radius = jo.value("radius", 10.0);
            o.goal_target = jo.value("goal_target", false);
            c.objects.push_back(o);
        }
        for (const auto& jp : j.at("phases")) {
            PhaseSpec p;
            p.id = jp.at("id").get<int>();
            p.active_objects = jp.at("active_objects").get<std::vector<std::string>>();
            p.cylinder_start = jp.value("cylinder_start", std::string("table"));
            if (jp.contains("dependencies"))
                for (const auto& [pred, reqs] : jp.at("dependencies").items())
                    p.dependencies[pred] = reqs.get<std::vector<std::string>>();
            if (jp.contains("mutual_exclusions"))
                for (const auto& pair : jp.at("mutual_exclusions"))
                    p.mutual_exclusions.emplace_back(pair.at(0).get<std::string>(),
                                                     pair.at(1).get<std::string>());
            c.phases.push_back(p);
        }
        for (const auto& e : j.at("phase_schedule"))
            c.phase_schedule.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
    } catch (const nlohmann::json::exception& ex) {
        throw ConfigError(std::string("scenario parse error: ") + ex.what());
    }
    c.validate();
    return c;
}

inline ScenarioConfig load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open scenario file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& ex) {
        throw ConfigError("scenario parse error in " + path + ": " + ex.what());
    }
    return scenario_from_json(j);
}

// The tabletop used throughout: three buttons, a cylinder starting inside an
// open circular container, a square goal box, and a round goal box that only
// exists in phase 1 (where the orange button is gone and the grasp
// prerequisite rewires from orange to green).
// Geometry rationale: every chained leg (home->button, button->cylinder,
// cylinder->box) is 23-27cm, short enough for a fresh policy to bootstrap
// from its own undirected phase within a few hundred trials, while the
// generous empty margin around the cluster keeps an undirected random walk
// from stumbling through the full press-grasp-place chain more than ~15% of
// epochs. The green button sits within one leg of the cylinder because the
// grasp prerequisite rewires to it in phase 1. Button zones keep >= 24 cm
// (twice the interaction radius) from each other, the cylinder, and the goal
// boxes, so no single step can trigger two predicate changes at once -- the
// achievable event signatures stay exactly the canonical goal set.
inline ScenarioConfig default_scenario() {
    ScenarioConfig c;
    c.table_w = 220;
    c.table_h = 150;
    c.home_x = 110;
    c.home_y = 75;
    c.objects = {
        {"orange_button", ObjectKind::Button, 88, 59, 12, false},
        {"green_button", ObjectKind::Button, 112, 61, 12, false},
        {"blue_button", ObjectKind::Button, 136, 69, 12, false},
        {"cylinder", ObjectKind::Cylinder, 98, 83, 12, false},
        {"circle_box", ObjectKind::Box, 98, 83, 12, false},
        {"square_box", ObjectKind::Box, 124, 91, 12, true},
        {"round_box", ObjectKind::Box, 76, 91, 12, true},
    };
    PhaseSpec p0;
    p0.id = 0;
    p0.active_objects = {"orange_button", "green_button", "blue_button",
                         "cylinder", "circle_box", "square_box"};
    p0.cylinder_start = "circle_box";
    p0.dependencies = {
        {"gripper_occupied", {"orange_button_lit"}},
        {"in_square_box", {"gripper_occupied"}},
    };
    PhaseSpec p1;
    p1.id = 1;
    p1.active_objects = {"green_button", "blue_button",
                         "cylinder", "circle_box", "square_box", "round_box"};
    p1.cylinder_start = "circle_box";
    p1.dependencies = {
        {"gripper_occupied", {"green_button_lit"}},
        {"in_square_box", {"gripper_occupied"}},
        {"in_round_box", {"gripper_occupied"}},
    };
    p1.mutual_exclusions = {{"in_square_box", "in_round_box"}};
    c.phases = {p0, p1};
    c.phase_schedule = {{0, 0}, {750, 1}};
    c.validate();
    return c;
}

}  // namespace hgrail
