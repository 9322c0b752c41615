#pragma once

// JSON-configured experiments: parse a config, run GPM, render every output
// file in memory, and write them only once the whole run has succeeded.
// Needs nlohmann/json (single header json.hpp on the include path).

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "tqoc/tqoc.hpp"

namespace tqoc {

using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

/// Bad config: `where` is a JSON path (or "line L, column C" for syntax errors).
class ConfigError : public Error {
public:
    ConfigError(const std::string& where, const std::string& what) : Error(where + ": " + what), where_(where) {}
    const std::string& where() const { return where_; }

private:
    std::string where_;
};

/// offset + amplitude * f(frequency t + phase), f in {constant 1, sin, cos}.
struct ControlFunction {
    enum class Shape { Constant, Sin, Cos } shape = Shape::Constant;
    double value = 0.0;  // Constant
    double amplitude = 1.0;
    double frequency = 1.0;
    double phase = 0.0;
    double offset = 0.0;

    double operator()(double t) const
    {
        switch (shape) {
        case Shape::Constant: return value;
        case Shape::Sin: return offset + amplitude * std::sin(frequency * t + phase);
        case Shape::Cos: return offset + amplitude * std::cos(frequency * t + phase);
        }
        return 0.0;
    }
};

struct InitialControls {
    ControlFunction u, n1, n2;

    ControlGrid sample(double T, std::size_t N) const { return init_from_functions(T, N, u, n1, n2); }
};

/// Controls that are only propagated, never optimized.
struct Probe {
    std::string name;
    InitialControls controls;
    std::size_t N = 0;  // 0: the experiment's N
};

struct ExperimentConfig {
    std::string name = "experiment";
    SystemParams system;
    ComplexMatrix4 rho0;
    ComplexMatrix4 rho_target;
    ObjectiveSpec objective;
    double T = 1.0;
    std::size_t N = 100;
    std::size_t K = 0;  // trajectory nodes; 0 means N
    ConstraintSet constraints;
    InitialControls initial;
    std::optional<GpmConfig> optimizer;
    IntegratorOptions integrator;
    std::vector<Probe> probes;
    std::string outputs;  // may be empty
};

namespace detail {

inline std::string child(const std::string& path, const std::string& key) { return path + "." + key; }
inline std::string child(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

inline void reject_unknown(const json& j, const std::string& path, std::initializer_list<const char*> known)
{
    for (const auto& [key, _] : j.items()) {
        if (std::none_of(known.begin(), known.end(), [&](const char* k) { return key == k; }))
            throw ConfigError(child(path, key), "unknown field");
    }
}

inline const json& require_object(const json& j, const std::string& path)
{
    if (!j.is_object()) throw ConfigError(path, "expected an object");
    return j;
}

inline double number(const json& j, const std::string& path)
{
    if (!j.is_number()) throw ConfigError(path, "expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) throw ConfigError(path, "expected a finite number");
    return v;
}

inline double number_or(const json& obj, const char* key, const std::string& path, double fallback)
{
    if (!obj.contains(key) || obj.at(key).is_null()) return fallback;
    return number(obj.at(key), child(path, key));
}

inline double required_number(const json& obj, const char* key, const std::string& path)
{
    if (!obj.contains(key)) throw ConfigError(child(path, key), "missing required field");
    return number(obj.at(key), child(path, key));
}

inline std::size_t count(const json& j, const std::string& path)
{
    if (!j.is_number_integer() || j.get<long long>() < 0) throw ConfigError(path, "expected a nonnegative integer");
    return static_cast<std::size_t>(j.get<long long>());
}

inline std::string text(const json& j, const std::string& path)
{
    if (!j.is_string()) throw ConfigError(path, "expected a string");
    return j.get<std::string>();
}

inline ComplexMatrix4 parse_square(const json& re, const json* im, const std::string& path)
{
    ComplexMatrix4 m;
    auto fill = [&](const json& rows, const std::string& p, bool imag) {
        if (!rows.is_array() || rows.size() != 4) throw ConfigError(p, "expected 4 rows");
        for (std::size_t i = 0; i < 4; ++i) {
            const json& row = rows[i];
            if (!row.is_array() || row.size() != 4) throw ConfigError(child(p, i), "expected 4 entries");
            for (std::size_t k = 0; k < 4; ++k) {
                const double v = number(row[k], child(child(p, i), k));
                m(i, k) += imag ? Complex{0.0, v} : Complex{v, 0.0};
            }
        }
    };
    fill(re, child(path, "re"), false);
    if (im) fill(*im, child(path, "im"), true);
    return m;
}

// A density matrix as 4 diagonal entries or {"re": 4x4, "im": 4x4}.
inline ComplexMatrix4 parse_density(const json& j, const std::string& path)
{
    ComplexMatrix4 rho;
    if (j.is_array()) {
        if (j.size() != 4) throw ConfigError(path, "diagonal shorthand needs 4 entries");
        std::array<double, 4> d{};
        for (std::size_t i = 0; i < 4; ++i) d[i] = number(j[i], child(path, i));
        rho = ComplexMatrix4::diagonal(d);
    } else if (j.is_object()) {
        reject_unknown(j, path, {"re", "im"});
        if (!j.contains("re")) throw ConfigError(child(path, "re"), "missing required field");
        rho = parse_square(j.at("re"), j.contains("im") ? &j.at("im") : nullptr, path);
    } else {
        throw ConfigError(path, "expected a 4-vector or {re, im}");
    }
    try {
        checked_density_spectrum(rho, "density matrix");
    } catch (const Error& e) {
        throw ConfigError(path, e.what());
    }
    return rho;
}

inline SystemParams parse_system(const json& j, const std::string& path)
{
    require_object(j, path);
    reject_unknown(j, path, {"epsilon", "omega1", "omega2", "Omega1", "Omega2", "Lambda1", "Lambda2", "interaction"});
    SystemParams p;
    p.epsilon = number_or(j, "epsilon", path, p.epsilon);
    p.omega1 = number_or(j, "omega1", path, p.omega1);
    p.omega2 = number_or(j, "omega2", path, p.omega2);
    p.Omega1 = number_or(j, "Omega1", path, p.Omega1);
    p.Omega2 = number_or(j, "Omega2", path, p.Omega2);
    p.Lambda1 = number_or(j, "Lambda1", path, p.Lambda1);
    p.Lambda2 = number_or(j, "Lambda2", path, p.Lambda2);
    if (j.contains("interaction")) {
        const json& v = j.at("interaction");
        const std::string vp = child(path, "interaction");
        if (v.is_string()) {
            const std::string s = v.get<std::string>();
            if (s == "V1")
                p.interaction = Interaction::v1();
            else if (s == "V2")
                p.interaction = Interaction::v2();
            else
                throw ConfigError(vp, "expected \"V1\", \"V2\" or {re, im}");
        } else if (v.is_object()) {
            reject_unknown(v, vp, {"re", "im"});
            if (!v.contains("re")) throw ConfigError(child(vp, "re"), "missing required field");
            const ComplexMatrix4 m = parse_square(v.at("re"), v.contains("im") ? &v.at("im") : nullptr, vp);
            try {
                p.interaction = Interaction::from_matrix(m);
            } catch (const Error& e) {
                throw ConfigError(vp, e.what());
            }
        } else {
            throw ConfigError(vp, "expected \"V1\", \"V2\" or {re, im}");
        }
    }
    try {
        p.validate();
    } catch (const Error& e) {
        throw ConfigError(path, e.what());
    }
    return p;
}

inline ObjectiveKind parse_objective_kind(const json& j, const std::string& path)
{
    const std::string s = text(j, path);
    for (auto k : {ObjectiveKind::MaximizeOverlap, ObjectiveKind::MinimizeOverlap, ObjectiveKind::SquaredDeviation,
                   ObjectiveKind::SmoothedDeviation})
        if (s == to_string(k)) return k;
    throw ConfigError(path, "unknown objective kind \"" + s + "\"");
}

inline ControlFunction parse_control_function(const json& j, const std::string& path)
{
    ControlFunction f;
    if (j.is_number()) {
        f.value = number(j, path);
        return f;
    }
    require_object(j, path);
    reject_unknown(j, path, {"type", "value", "amplitude", "frequency", "phase", "offset"});
    const std::string type = j.contains("type") ? text(j.at("type"), child(path, "type")) : "constant";
    if (type == "constant") {
        f.value = required_number(j, "value", path);
        return f;
    }
    if (type == "sin")
        f.shape = ControlFunction::Shape::Sin;
    else if (type == "cos")
        f.shape = ControlFunction::Shape::Cos;
    else
        throw ConfigError(child(path, "type"), "expected constant, sin or cos");
    if (j.contains("value")) throw ConfigError(child(path, "value"), "only valid for constant");
    f.amplitude = number_or(j, "amplitude", path, 1.0);
    f.frequency = number_or(j, "frequency", path, 1.0);
    f.phase = number_or(j, "phase", path, 0.0);
    f.offset = number_or(j, "offset", path, 0.0);
    return f;
}

inline InitialControls parse_controls(const json& j, const std::string& path)
{
    require_object(j, path);
    reject_unknown(j, path, {"u", "n1", "n2"});
    InitialControls c;
    if (j.contains("u")) c.u = parse_control_function(j.at("u"), child(path, "u"));
    if (j.contains("n1")) c.n1 = parse_control_function(j.at("n1"), child(path, "n1"));
    if (j.contains("n2")) c.n2 = parse_control_function(j.at("n2"), child(path, "n2"));
    return c;
}

inline GpmConfig parse_optimizer(const json& j, const std::string& path)
{
    require_object(j, path);
    reject_unknown(j, path, {"method", "alpha", "beta", "eps_stop1", "eps_stop2", "eps_stop3", "max_iters"});
    GpmConfig g;
    if (j.contains("method")) {
        const std::string m = text(j.at("method"), child(path, "method"));
        if (m == "gpm1")
            g.method = GpmMethod::Gpm1;
        else if (m == "gpm2")
            g.method = GpmMethod::Gpm2;
        else
            throw ConfigError(child(path, "method"), "expected gpm1 or gpm2");
    }
    if (!j.contains("alpha")) throw ConfigError(child(path, "alpha"), "missing required field");
    const json& a = j.at("alpha");
    const std::string ap = child(path, "alpha");
    if (a.is_number()) {
        g.alpha_rule = StepRule::fixed(number(a, ap));
    } else {
        require_object(a, ap);
        reject_unknown(a, ap, {"rule", "value", "alpha_hat", "sigma"});
        const std::string rule = a.contains("rule") ? text(a.at("rule"), child(ap, "rule")) : "fixed";
        if (rule == "fixed")
            g.alpha_rule = StepRule::fixed(required_number(a, "value", ap));
        else if (rule == "decaying")
            g.alpha_rule = StepRule::decaying(required_number(a, "alpha_hat", ap), required_number(a, "sigma", ap));
        else
            throw ConfigError(child(ap, "rule"), "expected fixed or decaying");
    }
    g.beta = number_or(j, "beta", path, g.beta);
    g.eps_stop1 = number_or(j, "eps_stop1", path, g.eps_stop1);
    g.eps_stop2 = number_or(j, "eps_stop2", path, g.eps_stop2);
    g.eps_stop3 = number_or(j, "eps_stop3", path, g.eps_stop3);
    if (j.contains("max_iters")) g.max_iters = count(j.at("max_iters"), child(path, "max_iters"));
    try {
        g.validate();
    } catch (const Error& e) {
        throw ConfigError(path, e.what());
    }
    return g;
}

inline IntegratorKind parse_integrator_kind(const std::string& s, const std::string& path)
{
    if (s == "dp54") return IntegratorKind::DormandPrince54;
    if (s == "rk4") return IntegratorKind::ClassicalRk4;
    throw ConfigError(path, "expected dp54 or rk4");
}

inline IntegratorOptions parse_integrator(const json& j, const std::string& path)
{
    require_object(j, path);
    reject_unknown(j, path, {"kind", "rtol", "atol", "rk4_substeps", "max_steps"});
    IntegratorOptions o;
    if (j.contains("kind")) o.kind = parse_integrator_kind(text(j.at("kind"), child(path, "kind")), child(path, "kind"));
    o.rtol = number_or(j, "rtol", path, o.rtol);
    o.atol = number_or(j, "atol", path, o.atol);
    if (j.contains("rk4_substeps")) o.rk4_substeps = count(j.at("rk4_substeps"), child(path, "rk4_substeps"));
    if (j.contains("max_steps")) o.max_steps = count(j.at("max_steps"), child(path, "max_steps"));
    if (!(o.rtol > 0.0) || !(o.atol > 0.0)) throw ConfigError(path, "tolerances must be > 0");
    if (o.rk4_substeps == 0) throw ConfigError(child(path, "rk4_substeps"), "must be positive");
    return o;
}

inline ConstraintSet parse_constraints(const json& j, const std::string& path)
{
    require_object(j, path);
    reject_unknown(j, path, {"u_min", "u_max", "n_max"});
    ConstraintSet q;
    q.u_min = number_or(j, "u_min", path, q.u_min);
    q.u_max = number_or(j, "u_max", path, q.u_max);
    q.n_max = number_or(j, "n_max", path, q.n_max);
    try {
        q.validate();
    } catch (const Error& e) {
        throw ConfigError(path, e.what());
    }
    return q;
}

}  // namespace detail

inline ExperimentConfig parse_config(const json& j)
{
    using namespace detail;
    const std::string root = "$";
    require_object(j, root);
    reject_unknown(j, root,
                   {"name", "system", "rho0", "rho_target", "objective", "grid", "constraints", "initial_controls",
                    "optimizer", "integrator", "probes", "outputs"});

    ExperimentConfig c;
    if (j.contains("name")) c.name = text(j.at("name"), child(root, "name"));
    if (j.contains("system")) c.system = parse_system(j.at("system"), child(root, "system"));

    for (const char* key : {"rho0", "rho_target"})
        if (!j.contains(key)) throw ConfigError(child(root, key), "missing required field");
    c.rho0 = parse_density(j.at("rho0"), child(root, "rho0"));
    c.rho_target = parse_density(j.at("rho_target"), child(root, "rho_target"));

    if (!j.contains("objective")) throw ConfigError(child(root, "objective"), "missing required field");
    {
        const std::string p = child(root, "objective");
        const json& o = require_object(j.at("objective"), p);
        reject_unknown(o, p, {"kind", "J_bar", "M", "theta"});
        if (!o.contains("kind")) throw ConfigError(child(p, "kind"), "missing required field");
        c.objective.kind = parse_objective_kind(o.at("kind"), child(p, "kind"));
        c.objective.x_target = realify(c.rho_target);
        c.objective.J_bar = number_or(o, "J_bar", p, overlap_bounds(c.rho_target).upper);
        c.objective.M = number_or(o, "M", p, c.objective.M);
        c.objective.theta = number_or(o, "theta", p, c.objective.theta);
        try {
            c.objective.validate();
        } catch (const Error& e) {
            throw ConfigError(p, e.what());
        }
    }

    if (!j.contains("grid")) throw ConfigError(child(root, "grid"), "missing required field");
    {
        const std::string p = child(root, "grid");
        const json& g = require_object(j.at("grid"), p);
        reject_unknown(g, p, {"T", "N", "K"});
        c.T = required_number(g, "T", p);
        if (!(c.T > 0.0)) throw ConfigError(child(p, "T"), "must be > 0");
        if (!g.contains("N")) throw ConfigError(child(p, "N"), "missing required field");
        c.N = count(g.at("N"), child(p, "N"));
        if (c.N == 0) throw ConfigError(child(p, "N"), "must be positive");
        c.K = g.contains("K") ? count(g.at("K"), child(p, "K")) : c.N;
        if (c.K == 0 || c.K % c.N != 0) throw ConfigError(child(p, "K"), "must be a positive multiple of N");
    }

    if (j.contains("constraints")) c.constraints = parse_constraints(j.at("constraints"), child(root, "constraints"));
    if (j.contains("initial_controls"))
        c.initial = parse_controls(j.at("initial_controls"), child(root, "initial_controls"));
    if (!c.initial.sample(c.T, c.N).satisfies(c.constraints))
        throw ConfigError(child(root, "initial_controls"), "initial controls violate the constraints");
    if (j.contains("optimizer") && !j.at("optimizer").is_null())
        c.optimizer = parse_optimizer(j.at("optimizer"), child(root, "optimizer"));
    if (j.contains("integrator")) c.integrator = parse_integrator(j.at("integrator"), child(root, "integrator"));

    if (j.contains("probes")) {
        const std::string p = child(root, "probes");
        const json& arr = j.at("probes");
        if (!arr.is_array()) throw ConfigError(p, "expected an array");
        for (std::size_t i = 0; i < arr.size(); ++i) {
            const std::string pi = child(p, i);
            const json& e = require_object(arr[i], pi);
            reject_unknown(e, pi, {"name", "controls", "N"});
            Probe probe;
            probe.name = e.contains("name") ? text(e.at("name"), child(pi, "name")) : "probe" + std::to_string(i);
            if (!e.contains("controls")) throw ConfigError(child(pi, "controls"), "missing required field");
            probe.controls = parse_controls(e.at("controls"), child(pi, "controls"));
            if (e.contains("N")) probe.N = count(e.at("N"), child(pi, "N"));
            c.probes.push_back(std::move(probe));
        }
    }
    if (j.contains("outputs")) c.outputs = text(j.at("outputs"), child(root, "outputs"));
    return c;
}

/// Parses config text; syntax errors are reported with line and column.
inline ExperimentConfig parse_config_text(const std::string& text)
{
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        std::size_t line = 1, col = 1;
        const std::size_t end = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
        for (std::size_t i = 0; i < end; ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw ConfigError("line " + std::to_string(line) + ", column " + std::to_string(col), "malformed JSON");
    }
    return parse_config(j);
}

inline ExperimentConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError(path.string(), "cannot open config");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

// ---------------------------------------------------------------------------
// Presets

namespace detail {

inline json preset_system(const char* interaction)
{
    return {{"epsilon", 0.1}, {"omega1", 1.0},   {"omega2", 0.5},  {"Omega1", 0.5},
            {"Omega2", 0.5},  {"Lambda1", 0.05}, {"Lambda2", 0.05}, {"interaction", interaction}};
}

inline json overlap_preset(const char* name, double T, const std::array<double, 4>& target, double J_bar)
{
    return {{"name", name},
            {"system", preset_system("V1")},
            {"rho0", {0.25, 0.25, 0.25, 0.25}},
            {"rho_target", target},
            {"objective", {{"kind", "maximize_overlap"}, {"J_bar", J_bar}}},
            {"grid", {{"T", T}, {"N", 1000}, {"K", 1000}}},
            {"initial_controls", {{"u", 0.0}, {"n1", 10.0}, {"n2", 10.0}}},
            {"optimizer",
             {{"method", "gpm2"},
              {"alpha", {{"rule", "fixed"}, {"value", 1e5}}},
              {"beta", 0.9},
              {"eps_stop1", 1e-8},
              {"max_iters", 1000}}}};
}

inline json steering_preset(const char* name, const char* interaction, double T, std::size_t N, double alpha_hat)
{
    return {{"name", name},
            {"system", preset_system(interaction)},
            {"rho0", {0.0, 1.0, 0.0, 0.0}},
            {"rho_target", {0.0, 0.0, 1.0, 0.0}},
            {"objective", {{"kind", "smoothed_deviation"}, {"M", 0.5}, {"theta", 1e-4}}},
            {"grid", {{"T", T}, {"N", N}, {"K", N}}},
            {"initial_controls", {{"u", {{"type", "sin"}, {"amplitude", 1.0}}}, {"n1", 0.0}, {"n2", 0.0}}},
            {"optimizer",
             {{"method", "gpm2"},
              {"alpha", {{"rule", "decaying"}, {"alpha_hat", alpha_hat}, {"sigma", 1.5}}},
              {"beta", 0.92},
              {"eps_stop1", 1e-8},
              {"eps_stop2", 1e-4},
              {"eps_stop3", 1e-4},
              {"max_iters", 2000}}}};
}

}  // namespace detail

inline const std::vector<std::string>& preset_names()
{
    static const std::vector<std::string> names{"sec6_1",        "sec6_2",        "sec6_3_v1_t05", "sec6_3_v1_t01",
                                                "sec6_3_v2_t05", "sec6_3_v2_t01", "sec4_6_check"};
    return names;
}

/// The JSON config of a named preset; throws ConfigError for unknown names.
inline json preset_json(const std::string& name)
{
    using namespace detail;
    if (name == "sec6_1") return overlap_preset("sec6_1", 70.0, {0.7, 0.1, 0.1, 0.1}, 0.6995);
    if (name == "sec6_2") return overlap_preset("sec6_2", 100.0, {1.0, 0.0, 0.0, 0.0}, 1.0);
    if (name == "sec6_3_v1_t05") return steering_preset("sec6_3_v1_t05", "V1", 0.5, 500, 1.0);
    if (name == "sec6_3_v1_t01") return steering_preset("sec6_3_v1_t01", "V1", 0.1, 100, 100.0);
    if (name == "sec6_3_v2_t05") return steering_preset("sec6_3_v2_t05", "V2", 0.5, 500, 1.0);
    if (name == "sec6_3_v2_t01") return steering_preset("sec6_3_v2_t01", "V2", 0.1, 100, 5.0);
    if (name == "sec4_6_check")
        return {{"name", "sec4_6_check"},
                {"system", preset_system("V1")},
                {"rho0", {1.0, 0.0, 0.0, 0.0}},
                {"rho_target", {0.2, 0.2, 0.2, 0.4}},
                {"objective", {{"kind", "maximize_overlap"}, {"J_bar", 0.4}}},
                {"grid", {{"T", 2.0}, {"N", 2000}, {"K", 2000}}},
                {"initial_controls", {{"u", 0.0}, {"n1", 0.0}, {"n2", 0.0}}},
                {"optimizer", nullptr},
                {"probes",
                 {{{"name", "u_10_sin_t"},
                   {"controls", {{"u", {{"type", "sin"}, {"amplitude", 10.0}}}, {"n1", 0.0}, {"n2", 0.0}}}}}}};
    throw ConfigError("preset", "unknown preset \"" + name + "\"");
}

inline ExperimentConfig preset(const std::string& name) { return parse_config(preset_json(name)); }

// ---------------------------------------------------------------------------
// Running

/// Every output file of a run, rendered but not yet written.
struct ExperimentOutputs {
    std::map<std::string, std::string> files;  // file name -> contents
    json report;
};

namespace detail {

inline std::optional<std::array<double, 4>> diagonal_of(const ComplexMatrix4& rho)
{
    std::array<double, 4> d{};
    for (std::size_t i = 0; i < 4; ++i) {
        for (std::size_t k = 0; k < 4; ++k)
            if (i != k && std::abs(rho(i, k)) > 0.0) return std::nullopt;
        d[i] = rho(i, i).real();
    }
    return d;
}

// (rho0 kind, s) when the zero-control maximum-principle analysis applies.
inline std::optional<PmpCaseConfig> pmp_case(const ExperimentConfig& cfg)
{
    const auto a = diagonal_of(cfg.rho0);
    const auto b = diagonal_of(cfg.rho_target);
    if (!a || !b) return std::nullopt;
    if (cfg.objective.kind != ObjectiveKind::MaximizeOverlap && cfg.objective.kind != ObjectiveKind::MinimizeOverlap)
        return std::nullopt;
    PmpCaseConfig pc;
    if (*a == initial_populations(InitialStateKind::PureGround))
        pc.rho0_kind = InitialStateKind::PureGround;
    else if (*a == initial_populations(InitialStateKind::CompletelyMixed))
        pc.rho0_kind = InitialStateKind::CompletelyMixed;
    else
        return std::nullopt;
    pc.s = cfg.objective.kind == ObjectiveKind::MaximizeOverlap ? 1 : -1;
    pc.b = *b;
    return pc;
}

template <class Writer>
std::string render(Writer&& w)
{
    std::ostringstream os;
    w(os);
    return os.str();
}

inline json state_summary(const RealState& x, const ObjectiveSpec& spec)
{
    const ComplexMatrix4 rho = derealify(x);
    const ComplexMatrix4 target = derealify(spec.x_target);
    return {{"overlap", overlap(x, spec)},
            {"entropy", entropy(rho)},
            {"purity", purity(rho)},
            {"distance_sq", distance_sq(rho, target)},
            {"populations", {x[0], x[7], x[12], x[15]}},
            {"trace", state_trace(x)}};
}

}  // namespace detail

/// Runs the configured experiment and renders controls.csv, trajectory.csv,
/// diagnostics.csv, iterations.csv and report.json in memory.
inline ExperimentOutputs run_experiment(const ExperimentConfig& cfg)
{
    const SystemMatrices m = build_system_matrices(cfg.system);
    const RealState x0 = realify(cfg.rho0);
    const ControlGrid c0 = cfg.initial.sample(cfg.T, cfg.N);

    ExperimentOutputs out;
    json& r = out.report;
    r["schema_version"] = kSchemaVersion;
    r["name"] = cfg.name;
    r["objective"] = to_string(cfg.objective.kind);
    r["integrator"] = cfg.integrator.kind == IntegratorKind::DormandPrince54 ? "dp54" : "rk4";
    r["columns"] = {{"controls", {"t_start", "u", "n1", "n2"}},
                    {"trajectory", "t,x1..x16,rho11,rho22,rho33,rho44"},
                    {"diagnostics", "t,overlap,entropy,purity,uj_fidelity,rel_entropy,petz_renyi_<alpha>...,"
                                    "distance_sq,smoothed_overlap_dev"},
                    {"iterations", {"k", "I", "J", "cauchy_count", "alpha", "non_monotone"}}};

    const GradientResult first = gradient(m, c0, cfg.objective, x0, cfg.integrator);
    r["initial"] = {{"I", first.I}, {"J", first.overlap}};

    GpmReport gpm;
    ControlGrid final_control = c0;
    if (cfg.optimizer) {
        gpm = run_gpm(m, cfg.objective, x0, c0, cfg.constraints, *cfg.optimizer, cfg.integrator);
        final_control = gpm.final_control;
        r["optimizer"] = {{"method", cfg.optimizer->method == GpmMethod::Gpm1 ? "gpm1" : "gpm2"},
                          {"iterations", gpm.iterates.size() - 1},
                          {"cauchy_count", gpm.cauchy_count},
                          {"stop_reason", to_string(gpm.stop_reason)},
                          {"non_monotone_steps", std::count_if(gpm.iterates.begin(), gpm.iterates.end(),
                                                               [](const GpmIterate& it) { return it.non_monotone; })}};
    } else {
        gpm.iterates.push_back({0, first.I, first.overlap, first.cauchy_solves, 0.0, false});
        gpm.cauchy_count = first.cauchy_solves;
        r["optimizer"] = nullptr;
    }

    const Trajectory traj = propagate_forward(m, final_control, x0, cfg.K, cfg.integrator);
    const RealState& xT = traj.states.back();
    const double F = overlap(xT, cfg.objective);
    r["final"] = detail::state_summary(xT, cfg.objective);
    r["final"]["I"] = evaluate(xT, cfg.objective);
    r["final"]["J"] = F;
    r["final"]["aleph"] = aleph(traj);
    if (cfg.objective.kind == ObjectiveKind::SquaredDeviation || cfg.objective.kind == ObjectiveKind::SmoothedDeviation)
        r["final"]["J_M1"] = std::abs(F - cfg.objective.M);
    r["final"]["n1_l2_norm"] = l2_norm(final_control.n1, final_control.T);
    r["final"]["n2_l2_norm"] = l2_norm(final_control.n2, final_control.T);
    r["cauchy_count"] = gpm.cauchy_count;

    const OverlapBounds bounds = overlap_bounds(cfg.rho_target);
    r["bounds"] = {{"lower", bounds.lower}, {"upper", bounds.upper}};

    if (const auto a = detail::diagonal_of(cfg.rho0)) {
        const ControlGrid zero(cfg.T, cfg.N);
        const Trajectory z = propagate_forward(m, zero, x0, cfg.N, cfg.integrator);
        r["zero_control"] = {{"J_analytic", overlap(zero_control_state(cfg.system, *a, cfg.T), cfg.objective)},
                             {"J_numeric", overlap(z.states.back(), cfg.objective)}};
    } else {
        r["zero_control"] = nullptr;
    }

    if (const auto pc = detail::pmp_case(cfg)) {
        json p = {{"applicable", true},
                  {"rho0", pc->rho0_kind == InitialStateKind::PureGround ? "pure_ground" : "completely_mixed"},
                  {"s", pc->s},
                  {"zero_control_satisfies_pmp", pmp_zero_control_condition(*pc)}};
        if (pc->rho0_kind == InitialStateKind::PureGround)
            p["zero_control_stationary"] = stationary_zero_control_condition(pc->b, pc->eq_tol);
        r["pmp"] = p;
    } else {
        r["pmp"] = {{"applicable", false}};
    }

    json probes = json::array();
    for (const Probe& probe : cfg.probes) {
        const std::size_t n = probe.N ? probe.N : cfg.N;
        const ControlGrid pcg = probe.controls.sample(cfg.T, n);
        const Trajectory pt = propagate_forward(m, pcg, x0, n, cfg.integrator);
        probes.push_back({{"name", probe.name},
                          {"N", n},
                          {"I", evaluate(pt.states.back(), cfg.objective)},
                          {"J", overlap(pt.states.back(), cfg.objective)}});
    }
    r["probes"] = probes;

    out.files["controls.csv"] = detail::render([&](std::ostream& os) { write_controls_csv(os, final_control); });
    out.files["trajectory.csv"] = detail::render([&](std::ostream& os) { write_trajectory_csv(os, traj); });
    out.files["diagnostics.csv"] = detail::render(
        [&](std::ostream& os) { write_diagnostics_csv(os, diagnostics(traj, cfg.objective)); });
    out.files["iterations.csv"] = detail::render([&](std::ostream& os) { write_iterations_csv(os, gpm); });
    out.files["report.json"] = r.dump(2) + "\n";
    return out;
}

/// Creates `dir` and writes every file. Nothing is written before this call.
inline void write_outputs(const std::filesystem::path& dir, const ExperimentOutputs& out)
{
    std::filesystem::create_directories(dir);
    for (const auto& [name, contents] : out.files) {
        std::ofstream f(dir / name, std::ios::binary);
        f << contents;
        if (!f) throw Error("cannot write " + (dir / name).string());
    }
}

// ---------------------------------------------------------------------------
// Verification

struct VerifyOptions {
    double zero_control_tol = 1e-8;
    double pmp_tol = 1e-9;
    double fd_tol = 1e-4;
    double fd_abs_floor = 1e-10;  // |dI/dc_k| below this is compared absolutely
    double fd_abs_tol = 1e-8;
    double fd_step = 1e-3;
    std::size_t fd_components = 4;  // per control, largest |dI/dc_k|
    IntegratorOptions tight{IntegratorKind::DormandPrince54, 1e-12, 1e-14, 16, 10'000'000};
};

/// Analytic-vs-numeric checks for the configured case; "passed" is the conjunction.
inline json verify_experiment(const ExperimentConfig& cfg, const VerifyOptions& vo = {})
{
    const SystemMatrices m = build_system_matrices(cfg.system);
    json r;
    r["schema_version"] = kSchemaVersion;
    r["name"] = cfg.name;
    bool passed = true;

    // Zero-control oracle on the config's diagonal rho0, or on a standard set.
    {
        std::vector<std::array<double, 4>> starts;
        if (const auto a = detail::diagonal_of(cfg.rho0))
            starts.push_back(*a);
        else
            starts = {{1.0, 0.0, 0.0, 0.0}, {0.25, 0.25, 0.25, 0.25}, {0.4, 0.3, 0.2, 0.1}};
        double dev = 0.0;
        const ControlGrid zero(cfg.T, cfg.N);
        for (const auto& a : starts) {
            const Trajectory z = propagate_forward(m, zero, diagonal_state(a), cfg.N, cfg.integrator);
            for (std::size_t i = 0; i < z.times.size(); ++i) {
                const RealState e = zero_control_state(cfg.system, a, z.times[i]);
                for (std::size_t k = 0; k < 16; ++k) dev = std::max(dev, std::abs(e[k] - z.states[i][k]));
            }
        }
        const bool ok = dev < vo.zero_control_tol;
        passed = passed && ok;
        r["zero_control_oracle"] = {{"max_state_deviation", dev}, {"tolerance", vo.zero_control_tol}, {"passed", ok}};
    }

    if (const auto pc = detail::pmp_case(cfg)) {
        const PmpVerification v = verify_pmp_numerically(*pc, cfg.system, cfg.T, cfg.N, vo.pmp_tol, cfg.integrator);
        const bool consistent = !v.condition || v.satisfied;
        const bool stationary_ok = !v.stationary_condition || (v.max_abs_K_u < vo.pmp_tol && v.max_abs_K_n < vo.pmp_tol);
        const bool ok = consistent && stationary_ok && v.max_closed_form_deviation < vo.zero_control_tol;
        passed = passed && ok;
        r["pmp"] = {{"condition", v.condition},
                    {"stationary_condition", v.stationary_condition},
                    {"pmp_satisfied", v.satisfied},
                    {"max_abs_K_u", v.max_abs_K_u},
                    {"max_K_n1", v.max_K_n1},
                    {"max_K_n2", v.max_K_n2},
                    {"max_abs_K_n", v.max_abs_K_n},
                    {"max_closed_form_deviation", v.max_closed_form_deviation},
                    {"passed", ok}};
    } else {
        r["pmp"] = nullptr;
    }

    // Central differences of I on the initial controls against (T/N) grad_k.
    {
        const RealState x0 = realify(cfg.rho0);
        const ControlGrid c0 = cfg.initial.sample(cfg.T, cfg.N);
        const GradientResult g = gradient(m, c0, cfg.objective, x0, vo.tight);
        const double h = c0.step();
        auto I_at = [&](const ControlGrid& c) {
            return evaluate(propagate_forward(m, c, x0, c.size(), vo.tight).states.back(), cfg.objective);
        };
        double max_rel = 0.0, max_abs = 0.0;
        std::size_t checked = 0;
        const std::array<std::pair<std::vector<double> ControlGrid::*, const std::vector<double>*>, 3> parts{
            {{&ControlGrid::u, &g.grad.u}, {&ControlGrid::n1, &g.grad.n1}, {&ControlGrid::n2, &g.grad.n2}}};
        for (const auto& [member, grad] : parts) {
            std::vector<std::size_t> idx(c0.size());
            for (std::size_t k = 0; k < idx.size(); ++k) idx[k] = k;
            const std::size_t take = std::min(vo.fd_components, idx.size());
            std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(take), idx.end(),
                              [&](std::size_t a, std::size_t b) { return std::abs((*grad)[a]) > std::abs((*grad)[b]); });
            for (std::size_t t = 0; t < take; ++t) {
                const std::size_t k = idx[t];
                ControlGrid plus = c0, minus = c0;
                (plus.*member)[k] += vo.fd_step;
                (minus.*member)[k] -= vo.fd_step;
                const double fd = (I_at(plus) - I_at(minus)) / (2.0 * vo.fd_step);
                const double an = h * (*grad)[k];
                const double err = std::abs(fd - an);
                if (std::abs(an) < vo.fd_abs_floor)
                    max_abs = std::max(max_abs, err);
                else
                    max_rel = std::max(max_rel, err / std::abs(an));
                ++checked;
            }
        }
        const bool ok = max_rel < vo.fd_tol && max_abs < vo.fd_abs_tol;
        passed = passed && ok;
        r["gradient_fd"] = {{"components", checked},
                            {"max_relative_error", max_rel},
                            {"max_absolute_error_small_components", max_abs},
                            {"tolerance", vo.fd_tol},
                            {"passed", ok}};
    }
    r["passed"] = passed;
    return r;
}

}  // namespace tqoc
