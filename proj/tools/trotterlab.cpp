#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "trotterlab/sweep.hpp"

using namespace trotterlab;

namespace {

struct Overrides {
    std::vector<std::function<void(SweepConfig&)>> apply;

    template <typename T, typename Setter>
    void add(CLI::App& app, const std::string& flag, const std::string& help, Setter set) {
        auto value = std::make_shared<T>();
        CLI::Option* opt = app.add_option(flag, *value, help);
        apply.push_back([opt, value, set](SweepConfig& c) {
            if (opt->count() > 0) set(c, *value);
        });
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Trotterized p-spin model sweeps"};
    std::string mode;
    std::string config_path;
    app.add_option("mode", mode, "heatmap | error-curve | phase-portrait | otoc | instabilities");
    app.add_option("--config", config_path, "JSON config file");

    Overrides ov;
    ov.add<int>(app, "--p", "interaction order", [](SweepConfig& c, int v) { c.p = v; });
    ov.add<int>(app, "--n", "number of spins", [](SweepConfig& c, int v) { c.n = v; });
    ov.add<double>(app, "--s-min", "", [](SweepConfig& c, double v) { c.s_min = v; });
    ov.add<double>(app, "--s-max", "", [](SweepConfig& c, double v) { c.s_max = v; });
    ov.add<int>(app, "--s-steps", "", [](SweepConfig& c, int v) { c.s_steps = v; });
    ov.add<double>(app, "--tau-min", "", [](SweepConfig& c, double v) { c.tau_min = v; });
    ov.add<double>(app, "--tau-max", "", [](SweepConfig& c, double v) { c.tau_max = v; });
    ov.add<int>(app, "--tau-steps", "", [](SweepConfig& c, int v) { c.tau_steps = v; });
    ov.add<double>(app, "--s", "s for single-point modes (default: s-min)", [](SweepConfig& c, double v) { c.s = v; });
    ov.add<double>(app, "--tau", "tau for phase-portrait (default: tau-min)",
                   [](SweepConfig& c, double v) { c.tau = v; });
    ov.add<double>(app, "--theta", "initial polar angle", [](SweepConfig& c, double v) { c.theta = v; });
    ov.add<double>(app, "--phi", "initial azimuth", [](SweepConfig& c, double v) { c.phi = v; });
    ov.add<int>(app, "--steps", "time steps (mode-dependent default)", [](SweepConfig& c, int v) { c.steps = v; });
    ov.add<int>(app, "--stride", "phase-portrait output stride", [](SweepConfig& c, int v) { c.stride = v; });
    ov.add<std::uint64_t>(app, "--seed", "", [](SweepConfig& c, std::uint64_t v) { c.seed = v; });
    ov.add<int>(app, "--workers", "worker threads (0: TROTTERLAB_WORKERS or all cores)",
                [](SweepConfig& c, int v) { c.workers = v; });
    ov.add<std::string>(app, "--out", "output path ('-' or empty: stdout)",
                        [](SweepConfig& c, const std::string& v) { c.out = v; });
    ov.add<int>(app, "--q", "otoc: level offset (default p)", [](SweepConfig& c, int v) { c.q = v; });
    ov.add<int>(app, "--r", "otoc: resonance order", [](SweepConfig& c, int v) { c.r = v; });
    ov.add<std::vector<double>>(app, "--delta-tau", "otoc: detunings, comma separated",
                                [](SweepConfig& c, const std::vector<double>& v) { c.delta_tau = v; });
    app.get_option("--delta-tau")->delimiter(',');
    ov.add<double>(app, "--r2-threshold", "otoc: minimum R^2 of the growth fit",
                   [](SweepConfig& c, double v) { c.r2_threshold = v; });
    ov.add<int>(app, "--lyap-points", "heatmap: initial points per Lyapunov average (0: skip)",
                [](SweepConfig& c, int v) { c.lyap_points = v; });
    ov.add<int>(app, "--n-inits", "phase-portrait: seeded random initial points",
                [](SweepConfig& c, int v) { c.n_inits = v; });
    ov.add<std::vector<double>>(app, "--inits", "phase-portrait: theta,phi,theta,phi,...",
                                [](SweepConfig& c, const std::vector<double>& v) {
                                    if (v.size() % 2) throw ConfigError("inits needs (theta, phi) pairs");
                                    c.inits.clear();
                                    for (std::size_t i = 0; i < v.size(); i += 2) c.inits.push_back({v[i], v[i + 1]});
                                });
    app.get_option("--inits")->delimiter(',');

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitConfig;
    }

    try {
        SweepConfig cfg = config_path.empty() ? SweepConfig{} : load_config(config_path);
        if (!mode.empty()) cfg.mode = mode;
        for (auto& f : ov.apply) f(cfg);
        validate(cfg);
        return run_mode(cfg);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
