#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "hgrail/agent.hpp"
#include "hgrail/env.hpp"
#include "hgrail/scenario.hpp"

namespace hgrail {

constexpr const char* kArtifactVersion = "0.1.0";

struct ExperimentConfig {
    ScenarioConfig scenario;
    std::vector<Variant> variants = {Variant::HGrail, Variant::RndGd, Variant::SGd};
    int runs = 10;
    int epochs = 1500;
    int eval_interval = 25;
    uint64_t base_seed = 1;
    Hyperparams hp;
    int threads = 0;  // 0: hardware concurrency

    void validate() const {
        if (runs <= 0 || epochs <= 0 || eval_interval <= 0)
            throw ConfigError("runs, epochs and eval_interval must be positive");
        if (variants.empty()) throw ConfigError("no variants selected");
    }
};

struct EvalPoint {
    int epoch = 0;                  // 1-based epoch count at evaluation time
    double competence = 0;          // fraction of the scenario's goals achieved
    std::vector<uint8_t> achieved;  // per canonical goal
};

struct RunResult {
    Variant variant = Variant::HGrail;
    int run_index = 0;
    uint64_t seed = 0;
    std::vector<EvalPoint> curve;
    std::vector<std::optional<int>> discovery_epoch;  // per canonical goal
    std::vector<EpochRecord> records;
};

struct ResultsBundle {
    ExperimentConfig config;
    std::vector<CanonicalGoal> goals;
    std::vector<RunResult> runs;
};

inline RunResult run_single(const ExperimentConfig& cfg, Variant variant, int run_index) {
    const ScenarioConfig& sc = cfg.scenario;
    const auto goals = sc.canonical_goals();
    RunResult rr;
    rr.variant = variant;
    rr.run_index = run_index;
    rr.seed = cfg.base_seed + static_cast<uint64_t>(run_index);
    rr.records.reserve(cfg.epochs);

    TabletopEnv env(sc, sc.phase_for_epoch(0), rr.seed);
    Agent agent(variant, sc, rr.seed, cfg.hp);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        int phase = sc.phase_for_epoch(epoch);
        if (phase != env.state().phase) env.apply_phase_change(phase);
        rr.records.push_back(agent.run_epoch(env, epoch));
        if ((epoch + 1) % cfg.eval_interval == 0) {
            uint64_t eval_seed = rr.seed * 1000003ull + static_cast<uint64_t>(epoch);
            auto eval = agent.evaluate_greedy(sc, phase, eval_seed);
            EvalPoint pt;
            pt.epoch = epoch + 1;
            pt.achieved.resize(goals.size(), 0);
            int hits = 0;
            for (size_t g = 0; g < goals.size(); ++g) {
                const GoalRecord* rec = agent.goal_map().find_by_signature(goals[g].signature);
                bool ok = rec && eval.count(rec->goal_id) && eval.at(rec->goal_id);
                pt.achieved[g] = ok ? 1 : 0;
                hits += ok ? 1 : 0;
            }
            pt.competence = goals.empty() ? 0.0 : static_cast<double>(hits) / goals.size();
            rr.curve.push_back(std::move(pt));
        }
    }
    rr.discovery_epoch.resize(goals.size());
    for (size_t g = 0; g < goals.size(); ++g) {
        const GoalRecord* rec = agent.goal_map().find_by_signature(goals[g].signature);
        if (rec) rr.discovery_epoch[g] = rec->discovery_epoch;
    }
    return rr;
}

// Runs are embarrassingly parallel; results land in preassigned slots so the
// bundle ordering is independent of scheduling.
inline ResultsBundle run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    cfg.scenario.validate();
    ResultsBundle bundle;
    bundle.config = cfg;
    bundle.goals = cfg.scenario.canonical_goals();

    struct Job {
        Variant variant;
        int run_index;
    };
    std::vector<Job> jobs;
    for (Variant v : cfg.variants)
        for (int r = 0; r < cfg.runs; ++r) jobs.push_back({v, r});
    bundle.runs.resize(jobs.size());

    unsigned n_threads = cfg.threads > 0 ? static_cast<unsigned>(cfg.threads)
                                         : std::max(1u, std::thread::hardware_concurrency());
    n_threads = std::min<unsigned>(n_threads, jobs.size());
    std::atomic<size_t> next{0};
    auto worker = [&] {
        for (;;) {
            size_t i = next.fetch_add(1);
            if (i >= jobs.size()) return;
            bundle.runs[i] = run_single(cfg, jobs[i].variant, jobs[i].run_index);
        }
    };
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    return bundle;
}

// ---------------------------------------------------------------------------
// Summary statistics

// One-sided Mann-Whitney rank-sum test, alternative "x tends smaller than y".
// Normal approximation with tie correction.
inline double rank_sum_p_less(const std::vector<double>& x, const std::vector<double>& y) {
    size_t n1 = x.size(), n2 = y.size();
    if (n1 == 0 || n2 == 0) return 1.0;
    std::vector<std::pair<double, int>> all;  // value, group (0 = x)
    for (double v : x) all.push_back({v, 0});
    for (double v : y) all.push_back({v, 1});
    std::sort(all.begin(), all.end());
    std::vector<double> ranks(all.size());
    double tie_sum = 0;
    for (size_t i = 0; i < all.size();) {
        size_t j = i;
        while (j < all.size() && all[j].first == all[i].first) ++j;
        double r = (static_cast<double>(i) + static_cast<double>(j - 1)) / 2.0 + 1.0;
        for (size_t k = i; k < j; ++k) ranks[k] = r;
        double t = static_cast<double>(j - i);
        tie_sum += t * t * t - t;
        i = j;
    }
    double r1 = 0;
    for (size_t i = 0; i < all.size(); ++i)
        if (all[i].second == 0) r1 += ranks[i];
    double u1 = r1 - static_cast<double>(n1) * (n1 + 1) / 2.0;
    double n = static_cast<double>(n1 + n2);
    double mu = static_cast<double>(n1) * n2 / 2.0;
    double var = (static_cast<double>(n1) * n2 / 12.0) *
                 ((n + 1) - tie_sum / (n * (n - 1)));
    if (var <= 0) return u1 < mu ? 0.0 : 1.0;
    double z = (u1 - mu + 0.5) / std::sqrt(var);  // continuity corrected
    return 0.5 * std::erfc(-z / std::sqrt(2.0));  // P(U <= u1), small U = x smaller
}

struct QuartileStats {
    double min = 0, q1 = 0, median = 0, q3 = 0, max = 0;
    int n = 0;
    int missed = 0;
};

inline double quantile_sorted(const std::vector<double>& v, double q) {
    if (v.empty()) return 0;
    double pos = q * (v.size() - 1);
    size_t lo = static_cast<size_t>(pos);
    size_t hi = std::min(lo + 1, v.size() - 1);
    double frac = pos - lo;
    return v[lo] * (1 - frac) + v[hi] * frac;
}

inline QuartileStats quartiles(std::vector<double> v, int missed) {
    QuartileStats s;
    s.missed = missed;
    s.n = static_cast<int>(v.size());
    if (v.empty()) return s;
    std::sort(v.begin(), v.end());
    s.min = v.front();
    s.max = v.back();
    s.q1 = quantile_sorted(v, 0.25);
    s.median = quantile_sorted(v, 0.5);
    s.q3 = quantile_sorted(v, 0.75);
    return s;
}

// Per-variant view of what summarize consumes; reconstructible from the
// written output files.
struct VariantData {
    std::string variant;
    std::vector<std::string> goal_names;
    std::vector<std::vector<EvalPoint>> curves;                 // [run][eval]
    std::vector<std::vector<std::optional<int>>> discoveries;   // [goal][run]
};

inline std::vector<VariantData> extract_variant_data(const ResultsBundle& bundle) {
    std::vector<VariantData> out;
    for (Variant v : bundle.config.variants) {
        VariantData vd;
        vd.variant = to_string(v);
        for (const auto& g : bundle.goals) vd.goal_names.push_back(g.name);
        vd.discoveries.assign(bundle.goals.size(), {});
        for (const auto& rr : bundle.runs) {
            if (rr.variant != v) continue;
            vd.curves.push_back(rr.curve);
            for (size_t g = 0; g < bundle.goals.size(); ++g)
                vd.discoveries[g].push_back(rr.discovery_epoch[g]);
        }
        out.push_back(std::move(vd));
    }
    return out;
}

// Discovery-epoch order statistics, mean +/- sd competence curves, and the
// pairwise rank-sum comparisons on the precondition goals (goal_5, goal_6).
inline nlohmann::json summarize(const std::vector<VariantData>& variants,
                                int censor_epoch) {
    nlohmann::json out;
    for (const auto& vd : variants) {
        nlohmann::json jv;
        for (size_t g = 0; g < vd.goal_names.size(); ++g) {
            std::vector<double> epochs;
            int missed = 0;
            for (const auto& d : vd.discoveries[g]) {
                if (d) epochs.push_back(*d);
                else ++missed;
            }
            QuartileStats qs = quartiles(std::move(epochs), missed);
            jv["discovery"][vd.goal_names[g]] = {
                {"n", qs.n},       {"missed", qs.missed}, {"min", qs.min},
                {"q1", qs.q1},     {"median", qs.median}, {"q3", qs.q3},
                {"max", qs.max}};
        }
        // mean +/- sd competence per evaluation epoch
        nlohmann::json curve = nlohmann::json::array();
        if (!vd.curves.empty()) {
            size_t n_points = vd.curves.front().size();
            for (size_t i = 0; i < n_points; ++i) {
                double mean = 0, m2 = 0;
                size_t n = 0;
                for (const auto& run : vd.curves) {
                    double c = run[i].competence;
                    ++n;
                    double d = c - mean;
                    mean += d / n;
                    m2 += d * (c - mean);
                }
                double sd = n > 1 ? std::sqrt(m2 / (n - 1)) : 0.0;
                curve.push_back({{"epoch", vd.curves.front()[i].epoch},
                                 {"mean", mean},
                                 {"sd", sd}});
            }
        }
        jv["competence_curve"] = curve;
        out["variants"][vd.variant] = jv;
    }

    auto censored = [&](const VariantData& vd, size_t g) {
        std::vector<double> v;
        for (const auto& d : vd.discoveries[g])
            v.push_back(d ? static_cast<double>(*d) : static_cast<double>(censor_epoch));
        return v;
    };
    for (size_t a = 0; a < variants.size(); ++a) {
        for (size_t b = 0; b < variants.size(); ++b) {
            if (a == b) continue;
            for (size_t g = 0; g < variants[a].goal_names.size(); ++g) {
                const std::string& name = variants[a].goal_names[g];
                if (name != "goal_5" && name != "goal_6") continue;
                std::string key =
                    variants[a].variant + "_earlier_than_" + variants[b].variant;
                out["rank_sum"][name][key] =
                    rank_sum_p_less(censored(variants[a], g), censored(variants[b], g));
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Output files

struct HarnessIoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Shortest decimal form that parses back to the exact same double, so the
// CSV round-trips losslessly.
inline std::string csv_double(double v) {
    char buf[40];
    for (int prec = 6; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

inline void write_outputs(const ResultsBundle& bundle, const std::string& out_dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    auto open_out = [&](const std::string& name) {
        std::ofstream f(fs::path(out_dir) / name);
        if (!f) throw HarnessIoError("cannot write " + (fs::path(out_dir) / name).string());
        return f;
    };

    auto variants = extract_variant_data(bundle);
    for (const auto& vd : variants) {
        // competence_<variant>.csv
        auto csv = open_out("competence_" + vd.variant + ".csv");
        csv << "epoch,run,competence";
        for (const auto& g : vd.goal_names) csv << "," << g;
        csv << "\n";
        for (size_t run = 0; run < vd.curves.size(); ++run) {
            for (const auto& pt : vd.curves[run]) {
                csv << pt.epoch << "," << run << "," << csv_double(pt.competence);
                for (uint8_t a : pt.achieved) csv << "," << int(a);
                csv << "\n";
            }
        }
        // discovery_<variant>.json
        nlohmann::json jd;
        for (size_t g = 0; g < vd.goal_names.size(); ++g) {
            nlohmann::json arr = nlohmann::json::array();
            for (const auto& d : vd.discoveries[g]) {
                if (d) arr.push_back(*d);
                else arr.push_back(nullptr);
            }
            jd[vd.goal_names[g]] = arr;
        }
        open_out("discovery_" + vd.variant + ".json") << jd.dump(2) << "\n";
    }

    open_out("summary.json") << summarize(variants, bundle.config.epochs).dump(2) << "\n";

    nlohmann::json manifest;
    manifest["artifact_version"] = kArtifactVersion;
    manifest["base_seed"] = bundle.config.base_seed;
    manifest["runs"] = bundle.config.runs;
    manifest["epochs"] = bundle.config.epochs;
    manifest["eval_interval"] = bundle.config.eval_interval;
    manifest["trials_per_epoch"] = bundle.config.hp.trials_per_epoch;
    manifest["steps_per_trial"] = bundle.config.hp.steps_per_trial;
    manifest["competence_metric"] = "fraction_of_scenario_goals_achieved_in_frozen_eval";
    for (Variant v : bundle.config.variants)
        manifest["variants"].push_back(to_string(v));
    nlohmann::json seeds = nlohmann::json::array();
    for (int r = 0; r < bundle.config.runs; ++r)
        seeds.push_back(bundle.config.base_seed + static_cast<uint64_t>(r));
    manifest["seeds"] = seeds;
    manifest["scenario"] = to_json(bundle.config.scenario);
    open_out("manifest.json") << manifest.dump(2) << "\n";
}

// Re-reads the written outputs; used by the `summarize` subcommand and the
// round-trip tests.
inline std::vector<VariantData> read_outputs(const std::string& in_dir,
                                             int* epochs_out = nullptr) {
    namespace fs = std::filesystem;
    std::ifstream mf(fs::path(in_dir) / "manifest.json");
    if (!mf) throw HarnessIoError("cannot open " + in_dir + "/manifest.json");
    nlohmann::json manifest;
    mf >> manifest;
    if (epochs_out) *epochs_out = manifest.at("epochs").get<int>();

    std::vector<VariantData> out;
    for (const auto& jv : manifest.at("variants")) {
        std::string variant = jv.get<std::string>();
        VariantData vd;
        vd.variant = variant;

        std::ifstream csv(fs::path(in_dir) / ("competence_" + variant + ".csv"));
        if (!csv) throw HarnessIoError("missing competence_" + variant + ".csv in " + in_dir);
        std::string line;
        std::getline(csv, line);
        {
            std::stringstream hs(line);
            std::string col;
            int i = 0;
            while (std::getline(hs, col, ','))
                if (++i > 3) vd.goal_names.push_back(col);
        }
        while (std::getline(csv, line)) {
            if (line.empty()) continue;
            std::stringstream ls(line);
            std::string cell;
            std::getline(ls, cell, ',');
            int epoch = std::stoi(cell);
            std::getline(ls, cell, ',');
            size_t run = static_cast<size_t>(std::stoul(cell));
            std::getline(ls, cell, ',');
            double comp = std::stod(cell);
            EvalPoint pt;
            pt.epoch = epoch;
            pt.competence = comp;
            while (std::getline(ls, cell, ','))
                pt.achieved.push_back(static_cast<uint8_t>(std::stoi(cell)));
            if (vd.curves.size() <= run) vd.curves.resize(run + 1);
            vd.curves[run].push_back(std::move(pt));
        }

        std::ifstream df(fs::path(in_dir) / ("discovery_" + variant + ".json"));
        if (!df) throw HarnessIoError("missing discovery_" + variant + ".json in " + in_dir);
        nlohmann::json jd;
        df >> jd;
        vd.discoveries.assign(vd.goal_names.size(), {});
        for (size_t g = 0; g < vd.goal_names.size(); ++g) {
            for (const auto& e : jd.at(vd.goal_names[g])) {
                if (e.is_null()) vd.discoveries[g].push_back(std::nullopt);
                else vd.discoveries[g].push_back(e.get<int>());
            }
        }
        out.push_back(std::move(vd));
    }
    return out;
}

}  // namespace hgrail
