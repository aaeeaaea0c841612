// Runs the bundled configs and prints one PASS/FAIL line per acceptance criterion.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "mfito/harness/run.hpp"

using namespace mfito::harness;
namespace fs = std::filesystem;

namespace {

const std::vector<std::string> kBundle{"functional_oracle", "transport_oracle", "ito",           "ito_poisson",
                                       "ito_mixed",         "lemma_bracket",    "lemma_bracket_jump",
                                       "wentzell",          "wentzell_counter", "lemma_field",
                                       "lemma_field_diffusion", "mfc",          "mfc_generator", "stopping",
                                       "stopping_up"};

struct Outcome {
    ExperimentConfig config;
    RunResult result;
    std::string csv;
    bool recomputed = false;  // gates recomputed from the written CSV agree
};

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

Outcome run_one(const std::string& name, const fs::path& root, std::size_t jobs) {
    Outcome o;
    o.config = load_config(std::string(MFITO_CONFIG_DIR) + "/" + name + ".yaml");
    o.config.output = (root / name).string();
    o.result = run_suite(o.config, jobs, 1.0);
    write_outputs(o.config, o.result, 1.0);
    const fs::path csv = fs::path(o.config.output) / (o.config.suite + ".csv");
    o.csv = slurp(csv);
    std::ifstream is(csv);
    const auto again = evaluate_gates(o.config.gates, read_csv(is), 1.0);
    bool pass = true;
    o.recomputed = again.size() == o.result.gates.size();
    for (std::size_t i = 0; o.recomputed && i < again.size(); ++i) {
        o.recomputed = again[i].pass == o.result.gates[i].pass;
        pass = pass && again[i].pass;
    }
    o.recomputed = o.recomputed && pass == o.result.pass;
    return o;
}

bool ok(const Outcome& o) { return o.result.pass && o.recomputed; }

std::string gate_summary(const Outcome& o) {
    std::ostringstream os;
    for (const auto& g : o.result.gates) {
        if (os.tellp() > 0) os << "; ";
        os << g.spec.name << ' ' << g.statistic << (g.pass ? " ok" : " FAIL");
    }
    return os.str();
}

double max_abs_metric(const Outcome& o, const std::string& metric, std::size_t* count = nullptr) {
    double m = 0.0;
    std::size_t n = 0;
    for (const auto& r : o.result.rows)
        if (r.metric == metric) {
            m = std::max(m, std::abs(r.value));
            ++n;
        }
    if (count) *count += n;
    return m;
}

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

bool is_level(const Level& l, std::size_t N, double step) { return l.N == N && l.step == step; }

}  // namespace

int main(int argc, char** argv) {
    const fs::path root = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "mfito_acceptance";
    fs::remove_all(root);
    std::map<std::string, Outcome> out;
    for (const auto& name : kBundle) out[name] = run_one(name, root / "first", 1);

    int failures = 0;
    auto report = [&](int id, const std::string& title, bool pass, const std::string& detail) {
        std::printf("%s criterion %2d: %s | %s\n", pass ? "PASS" : "FAIL", id, title.c_str(), detail.c_str());
        std::fflush(stdout);
        failures += pass ? 0 : 1;
    };
    auto secs = [](const Outcome& o) { return o.result.seconds; };

    {
        const auto& o = out["functional_oracle"];
        const bool shape = o.config.seeds.size() == 100 && o.config.max_degree <= 4 && o.config.max_atoms <= 10;
        report(1, "flat-derivative identity", ok(o) && shape && secs(o) < 5.0,
               "100 triples, " + gate_summary(o) + ", " + num(secs(o)) + " s");
    }
    {
        const auto& o = out["transport_oracle"];
        const bool shape = o.config.seeds.size() == 200 && o.config.max_atoms <= 6;
        report(2, "sorted coupling vs assignment", ok(o) && shape && secs(o) < 5.0,
               "200 pairs, " + gate_summary(o) + ", " + num(secs(o)) + " s");
    }
    {
        double worst = 0.0;
        std::size_t rows = 0, scenarios = 0;
        for (const auto& [name, o] : out) {
            const auto& s = o.config.suite;
            if (s != "ito" && s != "wentzell" && s != "lemma_bracket" && s != "lemma_field") continue;
            scenarios += o.config.ladder.size() * o.config.seeds.size();
            worst = std::max(worst, max_abs_metric(o, "telescoping", &rows));
        }
        report(3, "telescoping on every simulated scenario", rows == scenarios && worst <= 1e-12,
               std::to_string(rows) + "/" + std::to_string(scenarios) + " scenarios, max " + num(worst));
    }
    {
        const auto& o = out["ito"];
        const auto& l = o.config.ladder;
        const bool shape = o.config.seeds.size() == 32 && is_level(l.front(), 100, 1e-2) && is_level(l.back(), 1600, 2.5e-3);
        report(4, "common-noise oracle residual", ok(o) && shape && secs(o) < 120.0,
               gate_summary(o) + ", " + num(secs(o)) + " s");
    }
    {
        const auto& o = out["ito_poisson"];
        report(5, "Poisson jump oracle", ok(o) && o.config.seeds.size() == 32, gate_summary(o));
    }
    {
        const auto& a = out["lemma_bracket"];
        const auto& b = out["lemma_bracket_jump"];
        report(6, "bracket partition sums", ok(a) && ok(b), gate_summary(a) + " | " + gate_summary(b));
    }
    {
        const auto& a = out["wentzell"];
        const auto& b = out["wentzell_counter"];
        const auto& c = out["lemma_field"];
        const auto& d = out["lemma_field_diffusion"];
        report(7, "random-field formula", ok(a) && ok(b) && ok(c) && ok(d),
               gate_summary(a) + " | " + gate_summary(b) + " | field sums " + (ok(c) && ok(d) ? "ok" : "FAIL"));
    }
    {
        const auto& o = out["mfc"];
        const auto& g = out["mfc_generator"];
        bool shape = o.config.control->points <= 15;
        std::vector<double> hs;
        for (const auto& l : o.config.ladder) {
            shape = shape && l.N <= 3;
            hs.push_back(l.step);
        }
        shape = shape && hs == std::vector<double>{0.1, 0.05, 0.025};
        report(8, "analytic control problem", ok(o) && ok(g) && shape && secs(o) < 60.0,
               gate_summary(o) + " | " + gate_summary(g) + ", " + num(secs(o)) + " s");
    }
    {
        const auto& a = out["stopping"];
        const auto& b = out["stopping_up"];
        report(9, "analytic stopping problems", ok(a) && ok(b), gate_summary(a) + " | " + gate_summary(b));
    }
    {
        // Second pass with a different worker count; raw rows must match byte for byte.
        std::size_t same = 0;
        for (const auto& name : kBundle) {
            const auto again = run_one(name, root / "second", 2);
            same += again.csv == out[name].csv && !again.csv.empty() ? 1 : 0;
        }
        report(10, "byte-identical raw CSV on rerun", same == kBundle.size(),
               std::to_string(same) + "/" + std::to_string(kBundle.size()) + " configs identical");
    }
    return failures == 0 ? 0 : 1;
}
