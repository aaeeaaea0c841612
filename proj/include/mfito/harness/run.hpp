#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mfito/harness/config.hpp"
#include "mfito/harness/report.hpp"
#include "mfito/harness/suites.hpp"
#include "mfito/parallel.hpp"

namespace mfito::harness {

enum ExitCode : int { exit_pass = 0, exit_gate_failure = 1, exit_config_error = 2, exit_runtime_error = 3 };

/// Command-line overrides applied after parsing.
struct Overrides {
    std::optional<std::uint64_t> seed;          // new seed base; the seed count is kept
    std::optional<std::vector<std::size_t>> levels;  // ladder indices to keep
    std::optional<std::string> out;
    std::size_t jobs = 1;
    double tol_scale = 1.0;  // multiplies upper-bound thresholds
};

struct RunResult {
    std::vector<Row> rows;
    std::vector<GateResult> gates;
    std::vector<double> task_seconds;
    double seconds = 0.0;
    bool pass = false;
};

inline void apply_overrides(ExperimentConfig& c, const Overrides& o) {
    if (o.seed)
        for (std::size_t i = 0; i < c.seeds.size(); ++i) c.seeds[i] = *o.seed + i;
    if (o.levels) {
        std::vector<Level> kept;
        for (std::size_t l : *o.levels) {
            if (l >= c.ladder.size())
                throw ConfigError("--levels: index " + std::to_string(l) + " outside the ladder of " +
                                  std::to_string(c.ladder.size()));
            if (!kept.empty() && l <= (*o.levels)[kept.size() - 1])
                throw ConfigError("--levels: indices must increase");
            kept.push_back(c.ladder[l]);
        }
        if (kept.empty()) throw ConfigError("--levels: no level selected");
        c.ladder = std::move(kept);
    }
    if (o.out) c.output = *o.out;
    if (!(o.tol_scale > 0.0)) throw ConfigError("--tol-scale must be positive");
}

/// Runs every (level, seed) task and evaluates the gates. The DP suites are
/// seed-free: one task per level, with `jobs` used inside the solver.
inline RunResult run_suite(const ExperimentConfig& c, std::size_t jobs, double tol_scale) {
    const bool dp = c.suite == "mfc" || c.suite == "stopping";
    const bool seedless = dp || c.suite == "functional_oracle" || c.suite == "transport_oracle";
    const std::vector<std::uint64_t> seeds = dp ? std::vector<std::uint64_t>{0} : c.seeds;
    // The oracle suites have no ladder dependence; they run on level 0 only.
    const std::size_t levels = seedless && !dp ? 1 : c.ladder.size();
    const std::size_t tasks = levels * seeds.size();

    std::vector<std::vector<Row>> out(tasks);
    std::vector<double> secs(tasks);
    const auto start = std::chrono::steady_clock::now();
    parallel_for(tasks, dp ? 1 : jobs, [&](std::size_t i) {
        const auto t0 = std::chrono::steady_clock::now();
        out[i] = run_task(c, i / seeds.size(), seeds[i % seeds.size()], dp ? jobs : 1);
        secs[i] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    });
    RunResult r;
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    for (auto& rows : out) r.rows.insert(r.rows.end(), rows.begin(), rows.end());
    r.task_seconds = std::move(secs);
    r.gates = evaluate_gates(c.gates, r.rows, tol_scale);
    r.pass = true;
    for (const auto& g : r.gates) r.pass = r.pass && g.pass;
    return r;
}

inline nlohmann::json summary_json(const ExperimentConfig& c, const RunResult& r, double tol_scale) {
    nlohmann::json j;
    j["schema_version"] = 1;
    j["suite"] = c.suite;
    j["config"] = c.source;
    j["description"] = c.description;
    j["pass"] = r.pass;
    j["tol_scale"] = tol_scale;
    j["seeds"] = c.seeds;
    for (const auto& l : c.ladder) j["ladder"].push_back({{"N", l.N}, {"step", l.step}});
    j["gates"] = nlohmann::json::array();
    for (const auto& g : r.gates)
        j["gates"].push_back({{"name", g.spec.name},
                              {"kind", g.spec.kind},
                              {"metric", g.spec.metric},
                              {"level", g.spec.level},
                              {"statistic", g.statistic},
                              {"bound", g.bound},
                              {"samples", g.samples},
                              {"pass", g.pass},
                              {"note", g.note}});
    // Per-metric statistics per level, and RMS ratio of the first to the last level.
    std::map<std::string, std::map<std::size_t, std::vector<double>>> by;
    for (const auto& row : r.rows) by[row.metric][row.level].push_back(row.value);
    for (const auto& [metric, levels] : by) {
        auto& m = j["metrics"][metric];
        for (const auto& [level, v] : levels) {
            const auto st = sample_stats(v);
            double worst = 0.0;
            for (double x : v) worst = std::max(worst, std::abs(x));
            m["levels"].push_back({{"level", level},
                                   {"count", v.size()},
                                   {"mean", st.mean},
                                   {"standard_error", st.standard_error()},
                                   {"rms", detail::rms(v)},
                                   {"max_abs", worst}});
        }
        if (levels.size() >= 2) {
            const double last = detail::rms(levels.rbegin()->second);
            m["rms_ratio_first_to_last"] = detail::rms(levels.begin()->second) / last;
        }
    }
    j["runtime_seconds"] = r.seconds;
    j["task_seconds"] = r.task_seconds;
    return j;
}

inline void write_outputs(const ExperimentConfig& c, const RunResult& r, double tol_scale) {
    namespace fs = std::filesystem;
    fs::create_directories(c.output);
    const fs::path base = fs::path(c.output) / c.suite;
    std::ofstream csv(base.string() + ".csv", std::ios::binary);
    write_csv(csv, r.rows);
    std::ofstream js(base.string() + ".json", std::ios::binary);
    js << summary_json(c, r, tol_scale).dump(2) << '\n';
    if (!csv || !js) throw Error("cannot write outputs under " + c.output);
}

inline void print_gates(std::ostream& os, const ExperimentConfig& c, const RunResult& r) {
    for (const auto& g : r.gates) {
        os << (g.pass ? "PASS " : "FAIL ") << c.suite << '/' << g.spec.name << ": " << g.spec.kind << ' '
           << g.spec.metric << " statistic=" << g.statistic << " bound=" << g.bound << " samples=" << g.samples;
        if (!g.note.empty()) os << " (" << g.note << ')';
        os << '\n';
    }
    os << (r.pass ? "PASS " : "FAIL ") << c.suite << " in " << r.seconds << " s\n";
}

/// Bundled default config for a suite.
inline std::string bundled_config(const std::string& suite) {
#ifdef MFITO_CONFIG_DIR
    return std::string(MFITO_CONFIG_DIR) + "/" + suite + ".yaml";
#else
    return "configs/" + suite + ".yaml";
#endif
}

/// Full CLI flow for one suite. `config_path` empty selects the bundled config.
inline int run_command(const std::string& suite, const std::string& config_path, const Overrides& o,
                       std::ostream& log, std::ostream& err) {
    ExperimentConfig c;
    try {
        const std::string path = config_path.empty() ? bundled_config(suite) : config_path;
        c = load_config(path);
        if (c.suite != suite) throw ConfigError(path + ": config is for suite '" + c.suite + "', not '" + suite + "'");
        apply_overrides(c, o);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return exit_config_error;
    }
    try {
        const auto r = run_suite(c, o.jobs, o.tol_scale);
        write_outputs(c, r, o.tol_scale);
        print_gates(log, c, r);
        return r.pass ? exit_pass : exit_gate_failure;
    } catch (const std::exception& e) {
        err << "runtime error: " << e.what() << '\n';
        return exit_runtime_error;
    }
}

}  // namespace mfito::harness
