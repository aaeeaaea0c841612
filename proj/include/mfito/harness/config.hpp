#pragma once

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "mfito/control.hpp"
#include "mfito/errors.hpp"
#include "mfito/functional.hpp"
#include "mfito/model.hpp"
#include "mfito/stopping.hpp"
#include "mfito/wentzell.hpp"

namespace mfito::harness {

/// Configuration does not parse against the schema. Maps to exit code 2.
class ConfigError : public Error {
public:
    using Error::Error;
};

inline const std::vector<std::string>& suite_names() {
    static const std::vector<std::string> names{"ito",         "wentzell", "lemma_bracket",    "lemma_field",
                                                "mfc",         "stopping", "transport_oracle", "functional_oracle"};
    return names;
}

struct Level {
    std::size_t N = 0;
    double step = 0.0;  // dt for simulation suites, h for the DP suites
};

struct GateSpec {
    std::string name;
    std::string kind;
    std::string metric;
    std::string scale_metric;  // rms_relative only
    double threshold = 0.0;
    double floor = 0.0;
    std::string level = "last";  // all | first | last
};

struct ValueOracle {
    std::string kind = "none";  // none | mean_plus_rate | stop_now | run_alive
    double rate = 0.0;
    std::optional<std::int32_t> decision;
};

struct ExperimentConfig {
    std::string source;
    std::string suite;
    std::string description;
    std::optional<ModelSpec> model;
    std::optional<CylindricalFunctional> functional;
    std::optional<RandomFieldSpec> field;
    std::optional<ControlProblemSpec> control;
    std::optional<StoppingProblemSpec> stopping;
    Coefficient H = Coefficient::make_constant(1.0);
    ValueOracle oracle;
    std::vector<Level> ladder;
    std::vector<std::uint64_t> seeds;
    std::vector<GateSpec> gates;
    std::string output = "out";
    // Suite options.
    int dyadic_levels = 3;
    bool left_limit_idio = false;
    double spacing_over_h = 1.0;  // DP lattice spacing when spacing is not fixed
    std::optional<double> spacing;
    long origin_cells = 0;  // lattice origin x0 = origin_cells * spacing
    double tol_c1 = 8.0;
    double tol_c2 = 1.0;
    int max_degree = 4;
    std::size_t max_atoms = 10;
    double interval_lo = -2.0;
    double interval_hi = 2.0;
};

namespace detail {

inline std::string where(const YAML::Node& n, const std::string& field) {
    const auto m = n.Mark();
    if (m.line < 0) return "field '" + field + "'";
    return "line " + std::to_string(m.line + 1) + ", field '" + field + "'";
}

[[noreturn]] inline void fail(const YAML::Node& n, const std::string& field, const std::string& what) {
    throw ConfigError(where(n, field) + ": " + what);
}

template <typename T>
T scalar(const YAML::Node& n, const std::string& field) {
    if (!n.IsScalar()) fail(n, field, "expected a scalar");
    try {
        return n.as<T>();
    } catch (const YAML::Exception&) {
        fail(n, field, "cannot convert '" + n.Scalar() + "'");
    }
}

template <typename T>
T get(const YAML::Node& parent, const std::string& key, const std::string& path, T fallback) {
    const auto n = parent[key];
    if (!n) return fallback;
    return scalar<T>(n, path + "." + key);
}

template <typename T>
std::vector<T> list(const YAML::Node& n, const std::string& field) {
    if (!n.IsSequence()) fail(n, field, "expected a list");
    std::vector<T> out;
    for (std::size_t i = 0; i < n.size(); ++i) out.push_back(scalar<T>(n[i], field + "[" + std::to_string(i) + "]"));
    return out;
}

inline void known_keys(const YAML::Node& n, const std::string& field, const std::set<std::string>& keys) {
    if (!n.IsMap()) fail(n, field, "expected a mapping");
    for (const auto& kv : n) {
        const auto k = kv.first.as<std::string>();
        if (!keys.count(k)) fail(kv.first, field + "." + k, "unknown key");
    }
}

inline Coefficient coefficient(const YAML::Node& n, const std::string& field) {
    if (n.IsScalar()) return Coefficient::make_constant(scalar<double>(n, field));
    known_keys(n, field, {"c0", "ct", "cx", "cm", "bound"});
    const double c0 = get<double>(n, "c0", field, 0.0);
    const double ct = get<double>(n, "ct", field, 0.0);
    const double cx = get<double>(n, "cx", field, 0.0);
    const double cm = get<double>(n, "cm", field, 0.0);
    if (!n["bound"]) {
        if (ct != 0.0 || cx != 0.0 || cm != 0.0) fail(n, field + ".bound", "a varying coefficient needs a bound");
        return Coefficient::make_constant(c0);
    }
    const double bound = scalar<double>(n["bound"], field + ".bound");
    if (!(bound >= 0.0)) fail(n["bound"], field + ".bound", "bound must be nonnegative");
    return Coefficient::affine(c0, ct, cx, cm, bound);
}

inline DiscreteLaw law(const YAML::Node& n, const std::string& field) {
    if (n.IsScalar()) return DiscreteLaw::dirac(scalar<double>(n, field));
    known_keys(n, field, {"values", "probs"});
    if (!n["values"]) fail(n, field + ".values", "missing");
    DiscreteLaw d;
    d.values = list<double>(n["values"], field + ".values");
    d.probs = n["probs"] ? list<double>(n["probs"], field + ".probs")
                         : std::vector<double>(d.values.size(), 1.0 / static_cast<double>(d.values.size()));
    try {
        d.validate();
    } catch (const PreconditionError& e) {
        fail(n, field, e.what());
    }
    return d;
}

inline CylindricalFunctional functional(const YAML::Node& n, const std::string& field) {
    known_keys(n, field, {"kind", "inner", "outer", "wrap"});
    const auto kind = get<std::string>(n, "kind", field, "polynomial");
    if (!n["inner"]) fail(n, field + ".inner", "missing");
    try {
        if (kind == "linear" || kind == "squared") {
            Polynomial p(list<double>(n["inner"], field + ".inner"));
            return kind == "linear" ? CylindricalFunctional::linear(std::move(p))
                                    : CylindricalFunctional::squared(std::move(p));
        }
        if (kind != "polynomial") fail(n["kind"], field + ".kind", "expected linear, squared or polynomial");
        const auto& in = n["inner"];
        if (!in.IsSequence() || in.size() == 0) fail(in, field + ".inner", "expected a nonempty list of coefficient lists");
        std::vector<Polynomial> inner;
        for (std::size_t j = 0; j < in.size(); ++j)
            inner.emplace_back(list<double>(in[j], field + ".inner[" + std::to_string(j) + "]"));
        if (!n["outer"] || !n["outer"].IsSequence()) fail(n, field + ".outer", "expected a list of monomials");
        std::vector<Monomial> terms;
        for (std::size_t t = 0; t < n["outer"].size(); ++t) {
            const auto& m = n["outer"][t];
            const std::string f = field + ".outer[" + std::to_string(t) + "]";
            known_keys(m, f, {"coef", "exp"});
            if (!m["coef"] || !m["exp"]) fail(m, f, "monomial needs coef and exp");
            terms.push_back({scalar<double>(m["coef"], f + ".coef"), list<int>(m["exp"], f + ".exp")});
        }
        const auto wrap = get<std::string>(n, "wrap", field, "none");
        if (wrap != "none" && wrap != "tanh") fail(n["wrap"], field + ".wrap", "expected none or tanh");
        MultiPolynomial outer(inner.size(), std::move(terms));
        return CylindricalFunctional(std::move(outer), std::move(inner),
                                     wrap == "tanh" ? CylindricalFunctional::Wrap::tanh
                                                    : CylindricalFunctional::Wrap::none);
    } catch (const PreconditionError& e) {
        fail(n, field, e.what());
    }
}

inline EmpiricalMeasure measure(const YAML::Node& n, const std::string& field) {
    known_keys(n, field, {"atoms", "weights"});
    if (!n["atoms"]) fail(n, field + ".atoms", "missing");
    const auto xs = list<double>(n["atoms"], field + ".atoms");
    try {
        if (!n["weights"]) return EmpiricalMeasure::uniform(xs);
        const auto ws = list<double>(n["weights"], field + ".weights");
        if (ws.size() != xs.size()) fail(n["weights"], field + ".weights", "needs one weight per atom");
        std::vector<Atom> atoms;
        for (std::size_t i = 0; i < xs.size(); ++i) atoms.push_back({xs[i], ws[i], false});
        return EmpiricalMeasure(Space::real, std::move(atoms));
    } catch (const PreconditionError& e) {
        fail(n, field, e.what());
    }
}

inline ModelSpec model(const YAML::Node& n) {
    const std::string f = "model";
    known_keys(n, f, {"horizon", "m0", "placement", "b", "sigma", "sigma0", "gamma", "gamma0", "lambda", "lambda0", "nu",
                      "nu0"});
    ModelSpec s;
    s.horizon = get<double>(n, "horizon", f, 1.0);
    if (!(s.horizon >= 0.0)) fail(n["horizon"], f + ".horizon", "must be nonnegative");
    if (n["m0"]) s.m0 = measure(n["m0"], f + ".m0");
    const auto placement = get<std::string>(n, "placement", f, "quantile");
    if (placement != "quantile" && placement != "sample") fail(n["placement"], f + ".placement", "expected quantile or sample");
    s.placement = placement == "quantile" ? InitialPlacement::quantile : InitialPlacement::sample;
    auto coef = [&](const char* key, Coefficient& c) {
        if (n[key]) c = coefficient(n[key], f + "." + key);
    };
    coef("b", s.b);
    coef("sigma", s.sigma);
    coef("sigma0", s.sigma0);
    coef("gamma", s.gamma);
    coef("gamma0", s.gamma0);
    coef("lambda", s.lambda);
    coef("lambda0", s.lambda0);
    if (n["nu"]) s.nu = law(n["nu"], f + ".nu");
    if (n["nu0"]) s.nu0 = law(n["nu0"], f + ".nu0");
    return s;
}

inline TimeProfile profile(const YAML::Node& n, const std::string& field) {
    if (!n) return TimeProfile::constant(1.0);
    if (n.IsScalar()) return TimeProfile::constant(scalar<double>(n, field));
    known_keys(n, field, {"breaks", "pieces"});
    TimeProfile p;
    p.breaks = n["breaks"] ? list<double>(n["breaks"], field + ".breaks") : std::vector<double>{};
    if (!n["pieces"] || !n["pieces"].IsSequence()) fail(n, field + ".pieces", "expected a list of coefficient lists");
    p.pieces.clear();
    for (std::size_t k = 0; k < n["pieces"].size(); ++k)
        p.pieces.emplace_back(list<double>(n["pieces"][k], field + ".pieces[" + std::to_string(k) + "]"));
    try {
        p.validate();
    } catch (const PreconditionError& e) {
        fail(n, field, e.what());
    }
    return p;
}

inline std::vector<FieldTerm> terms(const YAML::Node& n, const std::string& field) {
    std::vector<FieldTerm> out;
    if (!n) return out;
    if (!n.IsSequence()) fail(n, field, "expected a list of terms");
    for (std::size_t r = 0; r < n.size(); ++r) {
        const std::string f = field + "[" + std::to_string(r) + "]";
        known_keys(n[r], f, {"functional", "profile"});
        if (!n[r]["functional"]) fail(n[r], f + ".functional", "missing");
        out.push_back({functional(n[r]["functional"], f + ".functional"), profile(n[r]["profile"], f + ".profile")});
    }
    return out;
}

inline RandomFieldSpec field(const YAML::Node& n) {
    const std::string f = "field";
    known_keys(n, f, {"U0", "phi", "psi", "A", "N"});
    RandomFieldSpec U;
    if (n["U0"]) U.U0 = functional(n["U0"], f + ".U0");
    U.phi = terms(n["phi"], f + ".phi");
    U.psi = terms(n["psi"], f + ".psi");
    const auto A = get<std::string>(n, "A", f, "none");
    if (A == "none") U.A = FvDriver::none;
    else if (A == "time") U.A = FvDriver::time;
    else if (A == "common_counter") U.A = FvDriver::common_counter;
    else fail(n["A"], f + ".A", "expected none, time or common_counter");
    const auto N = get<std::string>(n, "N", f, "none");
    if (N == "none") U.N = MartingaleDriver::none;
    else if (N == "common_brownian") U.N = MartingaleDriver::common_brownian;
    else if (N == "compensated_counter") U.N = MartingaleDriver::compensated_counter;
    else fail(n["N"], f + ".N", "expected none, common_brownian or compensated_counter");
    return U;
}

inline ControlAction action(const YAML::Node& n, const std::string& field) {
    known_keys(n, field, {"value", "b", "sigma", "f", "gamma", "lambda"});
    ControlAction a;
    a.value = get<double>(n, "value", field, 0.0);
    if (n["b"]) a.b = coefficient(n["b"], field + ".b");
    if (n["sigma"]) a.sigma = coefficient(n["sigma"], field + ".sigma");
    if (n["f"]) a.f = coefficient(n["f"], field + ".f");
    a.gamma = get<double>(n, "gamma", field, 0.0);
    a.lambda = get<double>(n, "lambda", field, 0.0);
    if (a.lambda < 0.0) fail(n["lambda"], field + ".lambda", "must be nonnegative");
    return a;
}

inline const std::set<std::string>& problem_keys() {
    static const std::set<std::string> keys{"actions", "nu0",    "g",           "horizon", "points", "spacing",
                                            "spacing_over_h", "origin_cells", "budget", "b", "sigma", "sigma0",
                                            "f",       "oracle", "tol_c1",      "tol_c2"};
    return keys;
}

inline void lattice_common(const YAML::Node& n, const std::string& f, ExperimentConfig& c, double& horizon,
                           std::size_t& points, std::size_t& budget, CylindricalFunctional& g) {
    horizon = get<double>(n, "horizon", f, 1.0);
    points = get<std::size_t>(n, "points", f, 9);
    budget = get<std::size_t>(n, "budget", f, 2'000'000);
    if (n["spacing"]) c.spacing = scalar<double>(n["spacing"], f + ".spacing");
    c.spacing_over_h = get<double>(n, "spacing_over_h", f, 1.0);
    c.origin_cells = get<long>(n, "origin_cells", f, 0);
    c.tol_c1 = get<double>(n, "tol_c1", f, 8.0);
    c.tol_c2 = get<double>(n, "tol_c2", f, 1.0);
    if (!n["g"]) fail(n, f + ".g", "missing terminal reward");
    g = functional(n["g"], f + ".g");
    if (n["oracle"]) {
        const auto& o = n["oracle"];
        known_keys(o, f + ".oracle", {"kind", "rate", "decision"});
        c.oracle.kind = get<std::string>(o, "kind", f + ".oracle", "none");
        static const std::set<std::string> kinds{"none", "mean_plus_rate", "stop_now", "run_alive"};
        if (!kinds.count(c.oracle.kind)) fail(o["kind"], f + ".oracle.kind", "unknown oracle");
        c.oracle.rate = get<double>(o, "rate", f + ".oracle", 0.0);
        if (o["decision"]) c.oracle.decision = scalar<std::int32_t>(o["decision"], f + ".oracle.decision");
    }
}

inline void problem(const YAML::Node& n, ExperimentConfig& c) {
    const std::string f = "problem";
    known_keys(n, f, problem_keys());
    if (c.suite == "mfc") {
        ControlProblemSpec s;
        lattice_common(n, f, c, s.horizon, s.points, s.budget, s.g);
        if (!n["actions"] || !n["actions"].IsSequence() || n["actions"].size() == 0)
            fail(n, f + ".actions", "expected a nonempty list of controls");
        for (std::size_t a = 0; a < n["actions"].size(); ++a)
            s.actions.push_back(action(n["actions"][a], f + ".actions[" + std::to_string(a) + "]"));
        if (n["nu0"]) s.nu0 = law(n["nu0"], f + ".nu0");
        s.description = c.source;
        c.control = std::move(s);
    } else {
        StoppingProblemSpec s;
        lattice_common(n, f, c, s.horizon, s.points, s.budget, s.g);
        if (n["actions"]) fail(n["actions"], f + ".actions", "stopping problems have no control set");
        if (n["b"]) s.b = coefficient(n["b"], f + ".b");
        if (n["sigma"]) s.sigma = coefficient(n["sigma"], f + ".sigma");
        if (n["sigma0"]) s.sigma0 = coefficient(n["sigma0"], f + ".sigma0");
        if (n["f"]) s.f = coefficient(n["f"], f + ".f");
        s.description = c.source;
        c.stopping = std::move(s);
    }
}

inline std::vector<GateSpec> gates(const YAML::Node& n) {
    static const std::set<std::string> kinds{"max_abs", "max", "min", "rms_ratio", "rms_relative", "mean_zero",
                                             "order", "max_over_step"};
    std::vector<GateSpec> out;
    if (!n) return out;
    if (!n.IsSequence()) fail(n, "gates", "expected a list");
    for (std::size_t i = 0; i < n.size(); ++i) {
        const std::string f = "gates[" + std::to_string(i) + "]";
        known_keys(n[i], f, {"name", "kind", "metric", "scale_metric", "threshold", "floor", "level"});
        GateSpec g;
        g.kind = get<std::string>(n[i], "kind", f, "");
        if (!kinds.count(g.kind)) fail(n[i], f + ".kind", "unknown gate kind '" + g.kind + "'");
        g.metric = get<std::string>(n[i], "metric", f, "");
        if (g.metric.empty()) fail(n[i], f + ".metric", "missing");
        g.name = get<std::string>(n[i], "name", f, g.kind + ":" + g.metric);
        if (!n[i]["threshold"]) fail(n[i], f + ".threshold", "missing");
        g.threshold = scalar<double>(n[i]["threshold"], f + ".threshold");
        g.floor = get<double>(n[i], "floor", f, 0.0);
        g.level = get<std::string>(n[i], "level", f, g.kind == "mean_zero" || g.kind == "rms_relative" ? "last" : "all");
        if (g.level != "all" && g.level != "first" && g.level != "last") fail(n[i]["level"], f + ".level", "expected all, first or last");
        if (g.kind == "rms_relative") {
            g.scale_metric = get<std::string>(n[i], "scale_metric", f, "");
            if (g.scale_metric.empty()) fail(n[i], f + ".scale_metric", "missing");
        }
        out.push_back(std::move(g));
    }
    return out;
}

inline std::vector<std::uint64_t> seeds(const YAML::Node& n) {
    if (!n) return {1};
    if (n.IsSequence()) return list<std::uint64_t>(n, "seeds");
    known_keys(n, "seeds", {"base", "count"});
    const auto base = get<std::uint64_t>(n, "base", "seeds", 1);
    const auto count = get<std::size_t>(n, "count", "seeds", 1);
    if (count == 0) fail(n, "seeds.count", "must be positive");
    std::vector<std::uint64_t> out(count);
    for (std::size_t i = 0; i < count; ++i) out[i] = base + i;
    return out;
}

inline std::vector<Level> ladder(const YAML::Node& n) {
    if (!n || !n.IsSequence() || n.size() == 0) fail(n, "ladder", "expected a nonempty list of levels");
    std::vector<Level> out;
    for (std::size_t i = 0; i < n.size(); ++i) {
        const std::string f = "ladder[" + std::to_string(i) + "]";
        known_keys(n[i], f, {"N", "dt", "h"});
        Level l;
        l.N = get<std::size_t>(n[i], "N", f, 0);
        if (n[i]["dt"] && n[i]["h"]) fail(n[i], f, "give dt or h, not both");
        l.step = n[i]["dt"] ? scalar<double>(n[i]["dt"], f + ".dt") : get<double>(n[i], "h", f, 0.0);
        if (!(l.step >= 0.0)) fail(n[i], f, "step must be nonnegative");
        if (i > 0) {
            const auto& p = out.back();
            const bool refines = l.N >= p.N && l.step <= p.step && (l.N > p.N || l.step < p.step);
            if (!refines) fail(n[i], f, "ladder must strictly refine (N nondecreasing, step nonincreasing)");
        }
        out.push_back(l);
    }
    return out;
}

}  // namespace detail

/// Parses a YAML experiment config. Throws ConfigError with line and field.
inline ExperimentConfig parse_config(const YAML::Node& root, const std::string& source) {
    using namespace detail;
    if (!root.IsMap()) throw ConfigError(source + ": top level must be a mapping");
    known_keys(root, "", {"suite", "description", "model", "functional", "field", "problem", "H", "ladder", "seeds",
                          "gates", "output", "options"});
    ExperimentConfig c;
    c.source = source;
    c.suite = get<std::string>(root, "suite", "", "");
    bool known = false;
    for (const auto& s : suite_names()) known = known || s == c.suite;
    if (!known) fail(root["suite"] ? root["suite"] : root, "suite", "unknown suite '" + c.suite + "'");
    c.description = get<std::string>(root, "description", "", "");
    c.output = get<std::string>(root, "output", "", "out/" + c.suite);

    const bool sim = c.suite == "ito" || c.suite == "wentzell" || c.suite == "lemma_bracket" || c.suite == "lemma_field";
    if (sim) {
        if (!root["model"]) fail(root, "model", "suite '" + c.suite + "' needs a model section");
        c.model = model(root["model"]);
    }
    if (root["functional"]) c.functional = functional(root["functional"], "functional");
    if (c.suite == "ito" && !c.functional) fail(root, "functional", "suite 'ito' needs a functional section");
    if (root["field"]) c.field = field(root["field"]);
    if ((c.suite == "wentzell" || c.suite == "lemma_field") && !c.field)
        fail(root, "field", "suite '" + c.suite + "' needs a field section");
    if (c.suite == "mfc" || c.suite == "stopping") {
        if (!root["problem"]) fail(root, "problem", "suite '" + c.suite + "' needs a problem section");
        problem(root["problem"], c);
    }
    if (root["H"]) c.H = coefficient(root["H"], "H");
    const bool oracle_suite = c.suite == "functional_oracle" || c.suite == "transport_oracle";
    c.ladder = oracle_suite && !root["ladder"] ? std::vector<Level>{Level{}} : ladder(root["ladder"]);
    c.seeds = seeds(root["seeds"]);
    c.gates = gates(root["gates"]);
    if (const auto& o = root["options"]) {
        known_keys(o, "options", {"dyadic_levels", "left_limit_idio", "max_degree", "max_atoms", "interval"});
        c.dyadic_levels = get<int>(o, "dyadic_levels", "options", 3);
        if (c.dyadic_levels < 0 || c.dyadic_levels > 20) fail(o["dyadic_levels"], "options.dyadic_levels", "must be in [0,20]");
        c.left_limit_idio = get<bool>(o, "left_limit_idio", "options", false);
        c.max_degree = get<int>(o, "max_degree", "options", 4);
        c.max_atoms = get<std::size_t>(o, "max_atoms", "options", 10);
        if (o["interval"]) {
            const auto iv = list<double>(o["interval"], "options.interval");
            if (iv.size() != 2 || !(iv[0] < iv[1])) fail(o["interval"], "options.interval", "expected [lo, hi] with lo < hi");
            c.interval_lo = iv[0];
            c.interval_hi = iv[1];
        }
    }
    for (const auto& l : c.ladder)
        if (sim && !(l.step > 0.0)) throw ConfigError("field 'ladder': simulation suites need dt > 0");
    return c;
}

inline ExperimentConfig load_config(const std::string& path) {
    YAML::Node root;
    try {
        root = YAML::LoadFile(path);
    } catch (const YAML::BadFile&) {
        throw ConfigError(path + ": cannot open config file");
    } catch (const YAML::ParserException& e) {
        throw ConfigError(path + ": line " + std::to_string(e.mark.line + 1) + ": " + e.msg);
    }
    try {
        return parse_config(root, path);
    } catch (const ConfigError& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

/// Schema documentation per config section.
inline std::optional<std::string> describe(const std::string& section) {
    if (section == "config")
        return "suite: one of list_suites\n"
               "description: free text\n"
               "model | functional | field | problem | H: spec sections (see describe <section>)\n"
               "ladder: list of {N, dt} or {N, h}, strictly refining (optional for the oracle suites)\n"
               "seeds: list of integers, or {base, count}\n"
               "gates: list of pass/fail rules (see describe gates)\n"
               "options: {dyadic_levels, left_limit_idio, max_degree, max_atoms, interval: [lo, hi]}\n"
               "output: directory for <suite>.csv and <suite>.json\n";
    if (section == "model")
        return "horizon: T >= 0\n"
               "m0: {atoms: [...], weights: [...]} (weights default uniform)\n"
               "placement: quantile | sample\n"
               "b, sigma, sigma0, gamma, gamma0: coefficient\n"
               "lambda: idiosyncratic intensity; its bound is the dominating rate Lambda >= lambda\n"
               "lambda0: common intensity; its bound is the dominating rate Lambda0 >= lambda0\n"
               "nu, nu0: jump-size law, a number (Dirac) or {values: [...], probs: [...]}\n"
               "coefficient: a number, or {c0, ct, cx, cm, bound} meaning c0 + ct t + cx x + cm mean(m),\n"
               "  bound required when any slope is nonzero\n";
    if (section == "functional")
        return "kind: linear | squared | polynomial\n"
               "inner: coefficient list (linear, squared) or list of coefficient lists (polynomial)\n"
               "outer: list of {coef, exp: [...]} monomials in the features (polynomial)\n"
               "wrap: none | tanh\n";
    if (section == "field")
        return "U0: functional\n"
               "phi, psi: lists of {functional, profile}\n"
               "profile: a number or {breaks: [...], pieces: [[...], ...]} piecewise polynomial in t\n"
               "A: none | time | common_counter\n"
               "N: none | common_brownian | compensated_counter\n";
    if (section == "problem")
        return "horizon, points (base lattice size), spacing or spacing_over_h, origin_cells, budget\n"
               "g: functional (terminal reward)\n"
               "mfc: actions: list of {value, b, sigma, f, gamma, lambda}; nu0: jump law\n"
               "stopping: b, sigma, sigma0, f: coefficients; tol_c1, tol_c2: tolerance c1 h + c2 / N\n"
               "oracle: {kind: none | mean_plus_rate | stop_now | run_alive, rate, decision}\n";
    if (section == "gates")
        return "kind: max_abs | max | min | rms_ratio | rms_relative | mean_zero | order | max_over_step\n"
               "metric: CSV metric name; threshold: number; level: all | first | last\n"
               "floor: exact-zero floor (order, mean_zero); scale_metric: rms_relative denominator\n";
    if (section == "ladder") return "list of {N, dt} (simulation suites) or {N, h} (DP suites)\n";
    if (section == "seeds") return "list of integers or {base, count}\n";
    if (section == "H") return "coefficient used as the integrand of the bracket diagnostic\n";
    return std::nullopt;
}

}  // namespace mfito::harness
