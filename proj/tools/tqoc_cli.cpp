// tqoc: run, verify and reproduce two-qubit incoherent-control experiments.
//
// Exit codes: 0 success, 1 config error, 2 numeric failure (or a failed
// verification check).

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "tqoc/experiment.hpp"

namespace fs = std::filesystem;
using namespace tqoc;

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kNumericError = 2;

struct Globals {
    std::optional<std::string> integrator;
    bool quiet = false;
};

std::mutex g_log_mutex;

void log(const Globals& g, const std::string& line)
{
    if (g.quiet) return;
    std::lock_guard lock(g_log_mutex);
    std::cerr << line << '\n';
}

void apply_globals(ExperimentConfig& cfg, const Globals& g)
{
    if (g.integrator) cfg.integrator.kind = detail::parse_integrator_kind(*g.integrator, "--integrator");
}

// Runs one configured experiment into `dir`; returns an exit code.
int run_one(ExperimentConfig cfg, const fs::path& dir, const Globals& g)
{
    try {
        apply_globals(cfg, g);
        log(g, "[" + cfg.name + "] running");
        const ExperimentOutputs out = run_experiment(cfg);
        write_outputs(dir, out);
        const json& r = out.report;
        std::string line = "[" + cfg.name + "] I=" + std::to_string(r["final"]["I"].get<double>()) +
                           " J=" + std::to_string(r["final"]["J"].get<double>()) +
                           " cauchy=" + std::to_string(r["cauchy_count"].get<int>());
        if (!r["optimizer"].is_null()) line += " stop=" + r["optimizer"]["stop_reason"].get<std::string>();
        log(g, line + " -> " + dir.string());
        return kOk;
    } catch (const ConfigError& e) {
        std::lock_guard lock(g_log_mutex);
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const std::exception& e) {
        std::lock_guard lock(g_log_mutex);
        std::cerr << "numeric failure [" << cfg.name << "]: " << e.what() << '\n';
        return kNumericError;
    }
}

int cmd_run(const std::string& path, const std::optional<std::string>& out, const Globals& g)
{
    ExperimentConfig cfg;
    try {
        cfg = load_config(path);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    }
    fs::path dir = out ? fs::path(*out) : (cfg.outputs.empty() ? fs::path("out") / cfg.name : fs::path(cfg.outputs));
    return run_one(std::move(cfg), dir, g);
}

int cmd_verify(const std::string& path, const std::optional<std::string>& out, const Globals& g)
{
    ExperimentConfig cfg;
    try {
        cfg = load_config(path);
        apply_globals(cfg, g);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    }
    try {
        const json r = verify_experiment(cfg);
        const std::string text = r.dump(2) + "\n";
        if (out) {
            std::ofstream f(*out);
            f << text;
        } else {
            std::cout << text;
        }
        return r["passed"].get<bool>() ? kOk : kNumericError;
    } catch (const std::exception& e) {
        std::cerr << "numeric failure: " << e.what() << '\n';
        return kNumericError;
    }
}

int cmd_preset(std::vector<std::string> names, const std::string& out, unsigned jobs, bool dump, const Globals& g)
{
    if (names.size() == 1 && names[0] == "all") names = preset_names();
    std::vector<ExperimentConfig> configs;
    for (const auto& n : names) {
        try {
            if (dump) {
                std::cout << preset_json(n).dump(2) << '\n';
                continue;
            }
            configs.push_back(preset(n));
        } catch (const ConfigError& e) {
            std::cerr << "config error: " << e.what() << '\n';
            return kConfigError;
        }
    }
    if (dump) return kOk;

    const bool single = configs.size() == 1;
    std::atomic<std::size_t> next{0};
    std::atomic<int> worst{kOk};
    auto worker = [&] {
        for (std::size_t i = next++; i < configs.size(); i = next++) {
            const fs::path dir = single ? fs::path(out) : fs::path(out) / configs[i].name;
            const int rc = run_one(configs[i], dir, g);
            int cur = worst.load();
            while (rc > cur && !worst.compare_exchange_weak(cur, rc)) {
            }
        }
    };
    jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(configs.size())));
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < jobs; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    return worst.load();
}

int cmd_spectral(double beta, const std::vector<std::string>& filters, double omega_max, std::size_t samples,
                 const std::optional<std::string>& out)
{
    SpectralDensity d{beta, {}};
    for (const auto& f : filters) {
        const auto colon = f.find(':');
        if (colon == std::string::npos) {
            std::cerr << "config error: --filter expects center:variance, got " << f << '\n';
            return kConfigError;
        }
        try {
            d.filter.push_back({std::stod(f.substr(0, colon)), std::stod(f.substr(colon + 1))});
        } catch (const std::exception&) {
            std::cerr << "config error: --filter expects center:variance, got " << f << '\n';
            return kConfigError;
        }
    }
    try {
        const auto rows = emit_curve(d, omega_max, samples);
        if (out) {
            std::ofstream o(*out);
            write_spectral_csv(o, rows);
        } else {
            write_spectral_csv(std::cout, rows);
        }
    } catch (const Error& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    }
    return kOk;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Gradient-projection optimal control of a two-qubit system driven by coherent and incoherent controls"};
    app.require_subcommand(1);
    Globals g;
    std::string integrator;
    app.add_option("--integrator", integrator, "Override the integrator")->check(CLI::IsMember({"dp54", "rk4"}));
    app.add_flag("--quiet,-q", g.quiet, "Suppress progress output");

    std::string run_config;
    std::string run_out;
    auto* run = app.add_subcommand("run", "Run an experiment from a JSON config");
    run->add_option("config", run_config, "Config file")->required();
    run->add_option("--out", run_out, "Output directory (default: config \"outputs\" or out/<name>)");

    std::string verify_config;
    std::string verify_out;
    auto* verify = app.add_subcommand("verify", "Analytic-vs-numeric checks for a config");
    verify->add_option("config", verify_config, "Config file")->required();
    verify->add_option("--out", verify_out, "Write the verification report here instead of stdout");

    std::vector<std::string> preset_list;
    std::string preset_out = "out";
    unsigned jobs = 1;
    bool dump = false;
    auto* pre = app.add_subcommand("preset", "Run named presets (\"all\" for every preset)");
    pre->add_option("names", preset_list, "Preset names")->required();
    pre->add_option("--out", preset_out, "Output directory; one subdirectory per preset when several are given");
    pre->add_option("--jobs,-j", jobs, "Presets to run concurrently")->check(CLI::PositiveNumber);
    pre->add_flag("--dump", dump, "Print the preset configs instead of running them");

    auto* list = app.add_subcommand("list", "List preset names");

    double beta = 1.0;
    std::vector<std::string> filters;
    double omega_max = 10.0;
    std::size_t samples = 201;
    std::string spectral_out;
    auto* spectral = app.add_subcommand("spectral", "Emit the Planck density and its Gaussian filtering as CSV");
    spectral->add_option("--beta", beta, "Inverse temperature");
    spectral->add_option("--filter", filters, "Gaussian component center:variance (repeatable)");
    spectral->add_option("--omega-max", omega_max, "Upper end of the frequency grid");
    spectral->add_option("--samples", samples, "Grid points");
    spectral->add_option("--out", spectral_out, "CSV file (default stdout)");

    CLI11_PARSE(app, argc, argv);
    if (!integrator.empty()) g.integrator = integrator;
    auto opt = [](const std::string& s) { return s.empty() ? std::nullopt : std::optional<std::string>(s); };

    if (*run) return cmd_run(run_config, opt(run_out), g);
    if (*verify) return cmd_verify(verify_config, opt(verify_out), g);
    if (*pre) return cmd_preset(preset_list, preset_out, jobs, dump, g);
    if (*list) {
        for (const auto& n : preset_names()) std::cout << n << '\n';
        return kOk;
    }
    if (*spectral) return cmd_spectral(beta, filters, omega_max, samples, opt(spectral_out));
    return kOk;
}
