#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mfito/harness/run.hpp"

namespace {

std::vector<std::size_t> parse_levels(const std::string& s) {
    std::vector<std::size_t> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        const unsigned long v = std::stoul(item, &used);
        if (used != item.size()) throw std::invalid_argument(item);
        out.push_back(v);
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    using namespace mfito::harness;
    CLI::App app{"mfito: verification experiments for mean-field Ito calculus"};
    app.require_subcommand(1);

    std::string config, out, levels, section;
    std::uint64_t seed = 0;
    std::size_t jobs = 1;
    double tol_scale = 1.0;

    for (const auto& name : suite_names()) {
        auto* sub = app.add_subcommand(name, "run the " + name + " suite");
        sub->add_option("--config", config, "YAML experiment config (default: bundled " + name + ".yaml)");
        sub->add_option("--seed", seed, "seed base; seeds become base, base+1, ...");
        sub->add_option("--levels", levels, "comma-separated ladder indices to run, e.g. 0,2");
        sub->add_option("--out", out, "output directory for <suite>.csv and <suite>.json");
        sub->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
        sub->add_option("--tol-scale", tol_scale, "multiply every upper-bound gate threshold");
    }
    app.add_subcommand("list-suites", "print the suite names");
    auto* describe_cmd = app.add_subcommand("describe", "print the schema of a config section");
    describe_cmd->add_option("section", section, "config | model | functional | field | problem | gates | ladder | seeds | H")
        ->required();

    CLI11_PARSE(app, argc, argv);
    auto* sub = app.get_subcommands().front();
    const std::string cmd = sub->get_name();

    if (cmd == "list-suites") {
        for (const auto& s : suite_names()) std::cout << s << '\n';
        return exit_pass;
    }
    if (cmd == "describe") {
        const auto text = describe(section);
        if (!text) {
            std::cerr << "unknown section '" << section << "'\n";
            return exit_config_error;
        }
        std::cout << *text;
        return exit_pass;
    }

    Overrides o;
    if (sub->count("--seed")) o.seed = seed;
    if (sub->count("--out")) o.out = out;
    if (sub->count("--levels")) {
        try {
            o.levels = parse_levels(levels);
        } catch (const std::exception&) {
            std::cerr << "config error: --levels expects comma-separated indices, got '" << levels << "'\n";
            return exit_config_error;
        }
    }
    o.jobs = jobs;
    o.tol_scale = tol_scale;
    return run_command(cmd, config, o, std::cout, std::cerr);
}
