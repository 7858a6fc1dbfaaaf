#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hgrail/events.hpp"
#include "hgrail/scenario.hpp"

namespace hgrail {

enum class Heading : uint8_t { N, NE, E, SE, S, SW, W, NW, None };
enum class Vertical : uint8_t { Raise, Lower, Hold };
enum class GripperCmd : uint8_t { Open, Close, Hold };
enum class Height : uint8_t { Low, High };

struct Action {
    Heading heading = Heading::None;
    Vertical vertical = Vertical::Hold;
    GripperCmd gripper = GripperCmd::Hold;

    friend bool operator==(const Action&, const Action&) = default;
};

inline std::pair<double, double> heading_unit(Heading h) {
    constexpr double s = 0.70710678118654752440;
    switch (h) {
        case Heading::N: return {0, 1};
        case Heading::NE: return {s, s};
        case Heading::E: return {1, 0};
        case Heading::SE: return {s, -s};
        case Heading::S: return {0, -1};
        case Heading::SW: return {-s, -s};
        case Heading::W: return {-1, 0};
        case Heading::NW: return {-s, s};
        case Heading::None: return {0, 0};
    }
    return {0, 0};
}

enum class CylinderLocation : uint8_t { OnTable, InBox, Held, Absent };

struct EnvState {
    double effector_x = 0, effector_y = 0;
    Height height = Height::High;
    bool holding = false;  // gripper closed on the cylinder
    std::map<std::string, bool> button_lit;
    CylinderLocation cyl_loc = CylinderLocation::Absent;
    double cyl_x = 0, cyl_y = 0;   // valid when OnTable
    std::string cyl_box;           // valid when InBox
    int phase = 0;
    long step_count = 0;

    friend bool operator==(const EnvState&, const EnvState&) = default;
};

struct PerceptVector {
    std::vector<double> distances;  // layout.distance_ids order, cm; sentinel when absent
    std::vector<uint8_t> bits;      // layout.bool_names order

    friend bool operator==(const PerceptVector&, const PerceptVector&) = default;
};

struct StepResult {
    PerceptVector percept;
    EventList events;
};

constexpr double kStepSizeCm = 5.0;

// Deterministic discrete-time simulation of the tabletop. One instance per
// run; no internal randomness (the seed only tags the instance).
class TabletopEnv {
  public:
    TabletopEnv(const ScenarioConfig& config, int phase, uint64_t seed = 0)
        : cfg_(&config), layout_(config.percept_layout()), seed_(seed) {
        reset(phase);
    }

    const ScenarioConfig& config() const { return *cfg_; }
    const PerceptLayout& layout() const { return layout_; }
    const EnvState& state() const { return state_; }
    void set_state(const EnvState& s) { state_ = s; }

    // Restores the phase-initial state: effector home, buttons unlit,
    // cylinder at its phase start location.
    void reset(int phase) {
        const PhaseSpec& ph = cfg_->phase_or_throw(phase);
        state_ = EnvState{};
        state_.phase = phase;
        state_.effector_x = cfg_->home_x;
        state_.effector_y = cfg_->home_y;
        state_.height = Height::High;
        for (const auto& oid : ph.active_objects) {
            const ObjectSpec* o = cfg_->find_object(oid);
            if (o->kind == ObjectKind::Button) state_.button_lit[oid] = false;
        }
        if (is_active("cylinder_object", ph)) {
            if (ph.cylinder_start == "table") {
                state_.cyl_loc = CylinderLocation::OnTable;
                const ObjectSpec* cyl = cylinder_spec();
                state_.cyl_x = cyl->x;
                state_.cyl_y = cyl->y;
            } else {
                state_.cyl_loc = CylinderLocation::InBox;
                state_.cyl_box = ph.cylinder_start;
            }
        } else {
            state_.cyl_loc = CylinderLocation::Absent;
        }
    }

    StepResult step(const Action& a) {
        const PhaseSpec& ph = cfg_->phase_or_throw(state_.phase);
        EventList events;

        // translation, clamped to table bounds
        auto [ux, uy] = heading_unit(a.heading);
        state_.effector_x = clamp(state_.effector_x + ux * kStepSizeCm, 0.0, cfg_->table_w);
        state_.effector_y = clamp(state_.effector_y + uy * kStepSizeCm, 0.0, cfg_->table_h);
        if (a.vertical == Vertical::Raise) state_.height = Height::High;
        if (a.vertical == Vertical::Lower) state_.height = Height::Low;

        // grasp: close over a grabbable cylinder with prerequisites met;
        // the close command includes the reach, so height does not gate it
        if (a.gripper == GripperCmd::Close && !state_.holding &&
            cylinder_grabbable() && within(cylinder_position(), cylinder_spec()->radius) &&
            deps_hold("gripper_occupied", ph)) {
            bool was_visible = check_predicate("cylinder_visible");
            state_.holding = true;
            state_.cyl_loc = CylinderLocation::Held;
            state_.cyl_box.clear();
            std::vector<PredicateTransition> ts{{"gripper_occupied", true}};
            if (was_visible) ts.push_back({"cylinder_visible", false});
            events.push_back({make_signature(std::move(ts))});
        }

        // release: into an active goal box (with prerequisites met) when the
        // effector is over one, otherwise onto the table at the current spot
        if (a.gripper == GripperCmd::Open && state_.holding) {
            bool boxed = false;
            for (const auto& oid : ph.active_objects) {
                const ObjectSpec* o = cfg_->find_object(oid);
                if (o->kind != ObjectKind::Box || !o->goal_target) continue;
                if (!within({o->x, o->y}, o->radius)) continue;
                std::string pred = ScenarioConfig::in_box_predicate(oid);
                if (!deps_hold(pred, ph)) continue;
                state_.holding = false;
                state_.cyl_loc = CylinderLocation::InBox;
                state_.cyl_box = oid;
                events.push_back({make_signature({{pred, true}, {"gripper_occupied", false}})});
                boxed = true;
                break;
            }
            if (!boxed) {
                state_.holding = false;
                state_.cyl_loc = CylinderLocation::OnTable;
                state_.cyl_x = state_.effector_x;
                state_.cyl_y = state_.effector_y;
                events.push_back({make_signature(
                    {{"cylinder_visible", true}, {"gripper_occupied", false}})});
            }
        }

        // button presses. The gripper performs at most one interaction per
        // step: a step that grasped or released cannot also press (the hand
        // is busy manipulating the cylinder). Without this rule a release or
        // grasp inside a button zone would merge with the press into a
        // compound event signature.
        if (state_.height == Height::Low && events.empty()) {
            for (auto& [bid, lit] : state_.button_lit) {
                if (lit) continue;
                const ObjectSpec* o = cfg_->find_object(bid);
                if (!within({o->x, o->y}, o->radius)) continue;
                std::string pred = ScenarioConfig::lit_predicate(bid);
                if (!deps_hold(pred, ph)) continue;
                lit = true;
                events.push_back({make_signature({{pred, true}})});
            }
        }

        ++state_.step_count;
        return {percept(), std::move(events)};
    }

    // Replaces the active object set and dependency graph. Lit/placement
    // state of removed objects is cleared; surviving objects keep state.
    void apply_phase_change(int phase) {
        const PhaseSpec& ph = cfg_->phase_or_throw(phase);
        if (phase == state_.phase) return;
        std::map<std::string, bool> lit;
        for (const auto& oid : ph.active_objects) {
            const ObjectSpec* o = cfg_->find_object(oid);
            if (o->kind != ObjectKind::Button) continue;
            auto it = state_.button_lit.find(oid);
            lit[oid] = it != state_.button_lit.end() && it->second;
        }
        state_.button_lit = std::move(lit);
        if (!is_active("cylinder_object", ph)) {
            state_.cyl_loc = CylinderLocation::Absent;
            state_.holding = false;
        } else if (state_.cyl_loc == CylinderLocation::InBox &&
                   !is_object_active(state_.cyl_box, ph)) {
            // containing box removed: cylinder drops onto the table there
            const ObjectSpec* box = cfg_->find_object(state_.cyl_box);
            state_.cyl_loc = CylinderLocation::OnTable;
            state_.cyl_x = box->x;
            state_.cyl_y = box->y;
            state_.cyl_box.clear();
        }
        state_.phase = phase;
    }

    bool check_predicate(const std::string& pred) const {
        if (pred == "gripper_occupied") return state_.holding;
        if (pred == "cylinder_visible") {
            if (state_.cyl_loc == CylinderLocation::OnTable) return true;
            if (state_.cyl_loc == CylinderLocation::InBox) {
                const ObjectSpec* box = cfg_->find_object(state_.cyl_box);
                return box && !box->goal_target;  // goal boxes occlude
            }
            return false;
        }
        if (pred.rfind("in_", 0) == 0) {
            std::string box = pred.substr(3);
            if (!cfg_->find_object(box)) throw ConfigError("unknown predicate: " + pred);
            return state_.cyl_loc == CylinderLocation::InBox && state_.cyl_box == box;
        }
        if (pred.size() > 4 && pred.substr(pred.size() - 4) == "_lit") {
            std::string button = pred.substr(0, pred.size() - 4);
            if (!cfg_->find_object(button)) throw ConfigError("unknown predicate: " + pred);
            auto it = state_.button_lit.find(button);
            return it != state_.button_lit.end() && it->second;
        }
        throw ConfigError("unknown predicate: " + pred);
    }

    PerceptVector percept() const {
        const PhaseSpec& ph = cfg_->phase_or_throw(state_.phase);
        PerceptVector p;
        p.distances.reserve(layout_.distance_ids.size());
        for (const auto& oid : layout_.distance_ids) {
            const ObjectSpec* o = cfg_->find_object(oid);
            if (!is_object_active(oid, ph)) {
                p.distances.push_back(cfg_->sentinel_distance);
                continue;
            }
            if (o->kind == ObjectKind::Cylinder) {
                if (state_.cyl_loc == CylinderLocation::Held ||
                    state_.cyl_loc == CylinderLocation::Absent) {
                    p.distances.push_back(cfg_->sentinel_distance);
                } else {
                    auto [cx, cy] = cylinder_position();
                    p.distances.push_back(distance_to(cx, cy));
                }
            } else {
                p.distances.push_back(distance_to(o->x, o->y));
            }
        }
        p.bits.reserve(layout_.bool_names.size());
        for (const auto& name : layout_.bool_names)
            p.bits.push_back(predicate_defined_and_true(name, ph) ? 1 : 0);
        return p;
    }

    // Test-only shortcut: builds a state in which `predicate` (and its
    // transitive prerequisites) hold. "default" returns the reset state.
    void teleport_to_canonical(const std::string& start_predicate) {
        int phase = state_.phase;
        reset(phase);
        if (start_predicate == "default") return;
        const PhaseSpec& ph = cfg_->phase_or_throw(phase);
        std::vector<std::string> todo{start_predicate};
        std::vector<std::string> order;
        while (!todo.empty()) {
            std::string p = todo.back();
            todo.pop_back();
            order.insert(order.begin(), p);
            auto it = ph.dependencies.find(p);
            if (it != ph.dependencies.end())
                for (const auto& r : it->second) todo.push_back(r);
        }
        for (const auto& p : order) force_predicate(p, ph);
    }

  private:
    static double clamp(double v, double lo, double hi) {
        return v < lo ? lo : (v > hi ? hi : v);
    }

    const ObjectSpec* cylinder_spec() const {
        for (const auto& o : cfg_->objects)
            if (o.kind == ObjectKind::Cylinder) return &o;
        return nullptr;
    }

    bool is_object_active(const std::string& id, const PhaseSpec& ph) const {
        for (const auto& oid : ph.active_objects)
            if (oid == id) return true;
        return false;
    }
    bool is_active(const std::string& what, const PhaseSpec& ph) const {
        if (what == "cylinder_object") {
            const ObjectSpec* cyl = cylinder_spec();
            return cyl && is_object_active(cyl->id, ph);
        }
        return is_object_active(what, ph);
    }

    std::pair<double, double> cylinder_position() const {
        switch (state_.cyl_loc) {
            case CylinderLocation::OnTable: return {state_.cyl_x, state_.cyl_y};
            case CylinderLocation::InBox: {
                const ObjectSpec* box = cfg_->find_object(state_.cyl_box);
                return {box->x, box->y};
            }
            case CylinderLocation::Held: return {state_.effector_x, state_.effector_y};
            case CylinderLocation::Absent: return {1e9, 1e9};
        }
        return {1e9, 1e9};
    }

    // Grabbable: on the table or in an open (non-goal) box. Goal boxes do
    // not allow re-grasping, which keeps the achievable event signatures
    // exactly one per scenario goal.
    bool cylinder_grabbable() const {
        if (state_.cyl_loc == CylinderLocation::OnTable) return true;
        if (state_.cyl_loc == CylinderLocation::InBox) {
            const ObjectSpec* box = cfg_->find_object(state_.cyl_box);
            return box && !box->goal_target;
        }
        return false;
    }

    bool within(std::pair<double, double> pos, double radius) const {
        return distance_to(pos.first, pos.second) <= radius;
    }
    double distance_to(double x, double y) const {
        return std::hypot(x - state_.effector_x, y - state_.effector_y);
    }

    bool deps_hold(const std::string& pred, const PhaseSpec& ph) const {
        auto it = ph.dependencies.find(pred);
        if (it == ph.dependencies.end()) return true;
        for (const auto& r : it->second)
            if (!check_predicate(r)) return false;
        return true;
    }

    bool predicate_defined_and_true(const std::string& pred, const PhaseSpec& ph) const {
        if (pred.size() > 4 && pred.substr(pred.size() - 4) == "_lit") {
            std::string button = pred.substr(0, pred.size() - 4);
            if (!is_object_active(button, ph)) return false;
        }
        return check_predicate(pred);
    }

    void force_predicate(const std::string& pred, const PhaseSpec& ph) {
        if (pred == "gripper_occupied") {
            if (!is_active("cylinder_object", ph))
                throw ConfigError("start state unrealizable: no cylinder in phase");
            state_.holding = true;
            state_.cyl_loc = CylinderLocation::Held;
            state_.cyl_box.clear();
            return;
        }
        if (pred.rfind("in_", 0) == 0) {
            std::string box = pred.substr(3);
            if (!is_object_active(box, ph))
                throw ConfigError("start state unrealizable: box absent: " + box);
            state_.holding = false;
            state_.cyl_loc = CylinderLocation::InBox;
            state_.cyl_box = box;
            return;
        }
        if (pred.size() > 4 && pred.substr(pred.size() - 4) == "_lit") {
            std::string button = pred.substr(0, pred.size() - 4);
            if (!is_object_active(button, ph))
                throw ConfigError("start state unrealizable: button absent: " + button);
            state_.button_lit[button] = true;
            return;
        }
        throw ConfigError("unknown start predicate: " + pred);
    }

    const ScenarioConfig* cfg_;
    PerceptLayout layout_;
    uint64_t seed_;
    EnvState state_;
};

}  // namespace hgrail
