#include "trotterlab/sweep.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <thread>

namespace trotterlab {

using nlohmann::json;
using nlohmann::ordered_json;

const std::vector<std::string> kModes = {"heatmap", "error-curve", "phase-portrait", "otoc", "instabilities"};

int default_steps(const std::string& mode) {
    if (mode == "heatmap") return 100000;
    if (mode == "otoc") return 400;
    if (mode == "phase-portrait") return 1000;
    return 1;
}

namespace {

template <typename T>
void read_key(const json& j, const char* key, T& dst) {
    if (!j.contains(key)) return;
    try {
        dst = j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config key '") + key + "': " + e.what());
    }
}

template <typename T>
void read_opt(const json& j, const char* key, std::optional<T>& dst) {
    if (!j.contains(key)) return;
    T v{};
    read_key(j, key, v);
    dst = v;
}

const std::vector<std::string> kKeys = {"mode",     "p",          "n",           "s-min",     "s-max",  "s-steps",
                                        "tau-min",  "tau-max",    "tau-steps",   "s",         "tau",    "theta",
                                        "phi",      "steps",      "stride",      "seed",      "workers", "out",
                                        "q",        "r",          "delta-tau",   "r2-threshold", "lyap-points",
                                        "n-inits",  "inits"};

void require(bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
}

void check_axis(const char* name, double lo, double hi, int steps) {
    require(steps >= 1, std::string(name) + "-steps must be >= 1");
    require(std::isfinite(lo) && std::isfinite(hi), std::string(name) + " bounds must be finite");
    if (steps > 1) require(lo < hi, std::string(name) + "-min must be < " + name + "-max");
}

void write_file(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        std::cout.flush();
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open output file " + path);
    f << text;
    if (!f) throw std::runtime_error("cannot write output file " + path);
}

std::optional<SaddleData> analytic_saddle(int p, int q, int r, double s, double dtau) {
    if (r != 1) return std::nullopt;
    if (p == 2 && q == 2) return saddle_exponent_22(s, dtau);
    if (p == 4 && q == 4) return saddle_exponent_44(s, dtau);
    if (p == 4 && q == 2) return saddle_exponent_42(s, dtau);
    return std::nullopt;
}

std::optional<Width> derived_width(int p, int q, double s, int r) {
    if (p % 2 || (q != 2 && q != 4) || q > p) return std::nullopt;
    return instability_width(p, q, s, r);
}

ordered_json number_or_null(double x) {
    if (!std::isfinite(x)) return nullptr;
    return x;
}

}  // namespace

SweepConfig config_from_json(const json& j) {
    require(j.is_object(), "config must be a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it)
        require(std::find(kKeys.begin(), kKeys.end(), it.key()) != kKeys.end(), "unknown config key '" + it.key() + "'");
    SweepConfig c;
    read_key(j, "mode", c.mode);
    read_key(j, "p", c.p);
    read_key(j, "n", c.n);
    read_key(j, "s-min", c.s_min);
    read_key(j, "s-max", c.s_max);
    read_key(j, "s-steps", c.s_steps);
    read_key(j, "tau-min", c.tau_min);
    read_key(j, "tau-max", c.tau_max);
    read_key(j, "tau-steps", c.tau_steps);
    read_opt(j, "s", c.s);
    read_opt(j, "tau", c.tau);
    read_key(j, "theta", c.theta);
    read_key(j, "phi", c.phi);
    read_opt(j, "steps", c.steps);
    read_key(j, "stride", c.stride);
    read_key(j, "seed", c.seed);
    read_key(j, "workers", c.workers);
    read_key(j, "out", c.out);
    read_key(j, "q", c.q);
    read_key(j, "r", c.r);
    read_key(j, "delta-tau", c.delta_tau);
    read_key(j, "r2-threshold", c.r2_threshold);
    read_key(j, "lyap-points", c.lyap_points);
    read_key(j, "n-inits", c.n_inits);
    read_key(j, "inits", c.inits);
    return c;
}

SweepConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file " + path);
    json j;
    try {
        j = json::parse(f);
    } catch (const json::exception& e) {
        throw ConfigError("config file " + path + ": " + e.what());
    }
    return config_from_json(j);
}

void validate(const SweepConfig& c) {
    require(std::find(kModes.begin(), kModes.end(), c.mode) != kModes.end(), "unknown mode '" + c.mode + "'");
    require(c.p >= 2, "p must be >= 2");
    require(c.n >= 1, "n must be >= 1");
    require(c.stride >= 1, "stride must be >= 1");
    require(c.workers >= 0, "workers must be >= 0");
    require(c.theta >= 0.0 && c.theta <= kPi, "theta must lie in [0, pi]");
    require(std::isfinite(c.phi), "phi must be finite");
    require(c.r >= 1, "r must be >= 1");
    require(c.r2_threshold > 0.0 && c.r2_threshold <= 1.0, "r2-threshold must lie in (0, 1]");
    require(c.lyap_points >= 0, "lyap-points must be >= 0");
    const int steps = c.steps.value_or(default_steps(c.mode));
    const double s = c.single_s();
    require(s >= 0.0 && s <= 1.0, "s must lie in [0, 1]");
    if (c.mode == "heatmap") {
        check_axis("s", c.s_min, c.s_max, c.s_steps);
        check_axis("tau", c.tau_min, c.tau_max, c.tau_steps);
        require(c.s_min >= 0.0 && c.s_max <= 1.0, "s grid must lie in [0, 1]");
        require(c.tau_min > 0.0, "tau-min must be > 0");
        if (c.lyap_points > 0) require(steps >= 10, "steps must be >= 10 for Lyapunov exponents");
    } else if (c.mode == "error-curve") {
        check_axis("tau", c.tau_min, c.tau_max, c.tau_steps);
        require(c.tau_min > 0.0, "tau-min must be > 0");
    } else if (c.mode == "phase-portrait") {
        require(steps >= 0, "steps must be >= 0");
        require(c.inits.size() > 0 || c.n_inits >= 1, "phase-portrait needs inits or n-inits >= 1");
        for (const auto& a : c.inits) require(a[0] >= 0.0 && a[0] <= kPi, "init theta must lie in [0, pi]");
        require(std::isfinite(c.single_tau()), "tau must be finite");
    } else if (c.mode == "otoc") {
        require(steps >= 2, "steps must be >= 2 for otoc");
        require(s < 1.0, "s must be < 1 for otoc");
        const auto qs = coupling_offsets(c.p);
        require(std::find(qs.begin(), qs.end(), c.effective_q()) != qs.end(), "q is not a coupling offset of p");
        require(!c.out.empty() && c.out != "-", "otoc mode needs an output path");
        const double ts = tau_star(c.effective_q(), c.r, s);
        for (double dt : c.delta_tau) require(ts + dt > 0.0, "delta-tau places tau at or below zero");
        if (c.delta_tau.empty()) {
            const auto w = derived_width(c.p, c.effective_q(), s, c.r);
            require(w && w->bounded && s > 0.0, "delta-tau must be given when no instability width is available");
        }
    } else if (c.mode == "instabilities") {
        require(c.tau_max > 0.0, "tau-max must be > 0");
        require(s < 1.0, "s must be < 1");
    }
}

int resolve_workers(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("TROTTERLAB_WORKERS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return static_cast<int>(v);
    }
    const unsigned hc = std::thread::hardware_concurrency();
    return hc > 0 ? static_cast<int>(hc) : 1;
}

std::vector<double> linspace(double lo, double hi, int steps) {
    std::vector<double> v(steps);
    if (steps == 1) {
        v[0] = lo;
        return v;
    }
    for (int i = 0; i < steps; ++i) v[i] = lo + (hi - lo) * i / (steps - 1);
    v[steps - 1] = hi;
    return v;
}

void parallel_for(int n, int workers, const std::function<void(int)>& fn) {
    workers = std::max(1, std::min(workers, n));
    if (workers == 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
        const int lo = static_cast<int>(static_cast<long long>(n) * w / workers);
        const int hi = static_cast<int>(static_cast<long long>(n) * (w + 1) / workers);
        pool.emplace_back([&, w, lo, hi] {
            try {
                for (int i = lo; i < hi; ++i) fn(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

std::vector<HeatmapCell> compute_heatmap(const SweepConfig& cfg) {
    validate(cfg);
    const auto ops = build_collective_operators(SpinSector(cfg.n));
    const auto sg = linspace(cfg.s_min, cfg.s_max, cfg.s_steps);
    const auto tg = linspace(cfg.tau_min, cfg.tau_max, cfg.tau_steps);
    const int workers = resolve_workers(cfg.workers);
    const int steps = cfg.steps.value_or(default_steps(cfg.mode));

    std::vector<std::unique_ptr<HermitianExponential>> targets(sg.size());
    std::vector<std::unique_ptr<FloquetFactory>> floquets(sg.size());
    parallel_for(static_cast<int>(sg.size()), workers, [&](int i) {
        targets[i] = std::make_unique<HermitianExponential>(target_hamiltonian(ModelParams{cfg.p, sg[i], 1.0}, ops));
        floquets[i] = std::make_unique<FloquetFactory>(cfg.p, sg[i], ops);
    });

    const int nt = static_cast<int>(tg.size());
    std::vector<HeatmapCell> cells(sg.size() * tg.size());
    std::vector<std::string> diag(cells.size());
    parallel_for(static_cast<int>(cells.size()), workers, [&](int idx) {
        const int si = idx / nt, ti = idx % nt;
        HeatmapCell& c = cells[idx];
        c.s = sg[si];
        c.tau = tg[ti];
        try {
            const auto tar = decomposition_from_hamiltonian(*targets[si], c.tau);
            const auto del = spectral_decompose((*floquets[si])(c.tau));
            c.dissimilarity = dissimilarity(tar, del, cfg.n);
            c.lyapunov = std::nan("");
            if (cfg.lyap_points > 0)
                c.lyapunov = lyapunov_averaged(ModelParams{cfg.p, c.s, c.tau}, cfg.lyap_points, steps,
                                               substream_seed(cfg.seed, static_cast<std::uint64_t>(idx)))
                                 .mean;
        } catch (const std::exception& e) {
            c.failed = true;
            c.dissimilarity = c.lyapunov = std::nan("");
            diag[idx] = e.what();
        }
    });
    for (std::size_t i = 0; i < diag.size(); ++i)
        if (!diag[i].empty())
            std::cerr << "heatmap cell (tau=" << format_double(cells[i].tau) << ", s=" << format_double(cells[i].s)
                      << ") failed: " << diag[i] << "\n";
    return cells;
}

std::vector<ErrorCurveRow> compute_error_curve(const SweepConfig& cfg) {
    validate(cfg);
    const auto ops = build_collective_operators(SpinSector(cfg.n));
    const double s = cfg.single_s();
    const auto state = spin_coherent_state(ops.sector, cfg.theta, cfg.phi);
    const ExactErrorCurve exact(cfg.p, s, ops, state);
    const CoherentPerturbativeModel pert(cfg.p, s, ops, cfg.theta, cfg.phi);
    const auto tg = linspace(cfg.tau_min, cfg.tau_max, cfg.tau_steps);
    std::vector<ErrorCurveRow> rows(tg.size());
    std::vector<std::string> diag(rows.size());
    parallel_for(static_cast<int>(rows.size()), resolve_workers(cfg.workers), [&](int i) {
        ErrorCurveRow& r = rows[i];
        r.tau = tg[i];
        try {
            const auto e = exact(r.tau);
            const auto pe = pert(r.tau);
            r.exact = e.value;
            r.degenerate = e.degenerate;
            r.perturbative = pe.value;
            r.masked = pe.masked;
        } catch (const std::exception& ex) {
            r.failed = true;
            r.exact = r.perturbative = std::nan("");
            diag[i] = ex.what();
        }
    });
    std::size_t degenerate = 0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (!diag[i].empty())
            std::cerr << "error-curve tau=" << format_double(rows[i].tau) << " failed: " << diag[i] << "\n";
        degenerate += rows[i].degenerate;
    }
    if (degenerate)
        std::cerr << "warning: " << degenerate << " of " << rows.size()
                  << " tau points have degenerate eigenphases, averaged blockwise\n";
    return rows;
}

std::vector<TrajectoryRow> compute_phase_portrait(const SweepConfig& cfg) {
    validate(cfg);
    const ModelParams params{cfg.p, cfg.single_s(), cfg.single_tau()};
    std::vector<ClassicalState> inits;
    if (!cfg.inits.empty()) {
        for (const auto& a : cfg.inits) inits.push_back(from_angles(a[0], a[1]));
    } else {
        for (int i = 0; i < cfg.n_inits; ++i) inits.push_back(uniform_sphere_point(cfg.seed, i));
    }
    const int steps = cfg.steps.value_or(default_steps(cfg.mode));
    std::vector<std::vector<TrajectoryRow>> parts(inits.size());
    parallel_for(static_cast<int>(inits.size()), resolve_workers(cfg.workers), [&](int i) {
        parts[i] = phase_portrait(params, {inits[i]}, steps, cfg.stride);
        for (auto& row : parts[i]) row.trajectory_id = i;
    });
    std::vector<TrajectoryRow> rows;
    for (auto& p : parts) rows.insert(rows.end(), p.begin(), p.end());
    return rows;
}

std::vector<double> otoc_delta_taus(const SweepConfig& cfg) {
    if (!cfg.delta_tau.empty()) return cfg.delta_tau;
    const auto w = derived_width(cfg.p, cfg.effective_q(), cfg.single_s(), cfg.r);
    if (!w || !w->bounded) throw ConfigError("delta-tau must be given when no instability width is available");
    std::vector<double> out;
    for (int k = 0; k < 8; ++k) out.push_back(w->value * (k + 0.5) / 8.0);
    return out;
}

std::vector<OTOCRun> compute_otoc(const SweepConfig& cfg) {
    validate(cfg);
    const auto ops = build_collective_operators(SpinSector(cfg.n));
    const double s = cfg.single_s();
    const int q = cfg.effective_q();
    const double ts = tau_star(q, cfg.r, s);
    const auto dts = otoc_delta_taus(cfg);
    const int steps = cfg.steps.value_or(default_steps(cfg.mode));
    const FloquetFactory floquet(cfg.p, s, ops);
    std::vector<OTOCRun> runs(dts.size());
    std::vector<std::string> diag(runs.size());
    parallel_for(static_cast<int>(runs.size()), resolve_workers(cfg.workers), [&](int i) {
        OTOCRun& run = runs[i];
        run.delta_tau = dts[i];
        run.tau = ts + dts[i];
        try {
            run.series = otoc_series(floquet(run.tau), ops, run.tau, steps);
            fit_growth_rate(run.series, cfg.r2_threshold);
            run.analytic = analytic_saddle(cfg.p, q, cfg.r, s, dts[i]);
        } catch (const std::exception& e) {
            run.failed = true;
            diag[i] = e.what();
        }
    });
    for (std::size_t i = 0; i < runs.size(); ++i) {
        if (!diag[i].empty())
            std::cerr << "otoc delta_tau=" << format_double(runs[i].delta_tau) << " failed: " << diag[i] << "\n";
        else if (!runs[i].series.fit.found)
            std::cerr << "otoc delta_tau=" << format_double(runs[i].delta_tau) << ": no growth window\n";
    }
    return runs;
}

ordered_json instability_report(const SweepConfig& cfg) {
    validate(cfg);
    const double s = cfg.single_s();
    ordered_json arr = ordered_json::array();
    for (const auto& pt : instability_points(cfg.p, s, cfg.tau_max)) {
        ordered_json rec;
        rec["p"] = pt.p;
        rec["q"] = pt.q;
        rec["r"] = pt.r;
        rec["s"] = pt.s;
        rec["tau_star"] = pt.tau_star;
        rec["group"] = pt.group;
        const auto w = derived_width(pt.p, pt.q, s, pt.r);
        if (w && w->bounded) {
            rec["width"] = w->value;
            rec["width_extrapolated"] = w->extrapolated;
            rec["sample_delta_tau"] = 0.5 * w->value;
            rec["s_eff"] = s_effective(s, 0.5 * w->value, pt.tau_star);
        } else {
            rec["width"] = nullptr;
            rec["width_extrapolated"] = nullptr;
            rec["sample_delta_tau"] = nullptr;
            rec["s_eff"] = nullptr;
        }
        const auto mask = immediate_vicinity_mask(pt);
        rec["mask"] = {number_or_null(mask.lo), number_or_null(mask.hi)};
        arr.push_back(rec);
    }
    return arr;
}

ordered_json otoc_report(const SweepConfig& cfg, const std::vector<OTOCRun>& runs) {
    const double s = cfg.single_s();
    const int q = cfg.effective_q();
    ordered_json rep;
    rep["p"] = cfg.p;
    rep["q"] = q;
    rep["r"] = cfg.r;
    rep["s"] = s;
    rep["n"] = cfg.n;
    rep["tau_star"] = tau_star(q, cfg.r, s);
    rep["r2_threshold"] = cfg.r2_threshold;
    rep["rate_unit"] = "per Trotter step";
    ordered_json arr = ordered_json::array();
    for (const auto& run : runs) {
        ordered_json rec;
        rec["delta_tau"] = run.delta_tau;
        rec["tau"] = run.tau;
        const auto& fit = run.series.fit;
        rec["fit_found"] = !run.failed && fit.found;
        rec["fitted_rate"] = fit.found ? ordered_json(fit.rate) : ordered_json(nullptr);
        rec["fit_r2"] = fit.found ? ordered_json(fit.r2) : ordered_json(nullptr);
        rec["fit_window"] = fit.found ? ordered_json::array({fit.begin, fit.end}) : ordered_json(nullptr);
        if (run.analytic) {
            rec["saddle_exists"] = run.analytic->exists;
            rec["analytic_rate"] = run.analytic->lambda;
            rec["relative_error"] = (fit.found && run.analytic->lambda > 0.0)
                                        ? ordered_json(std::abs(fit.rate - run.analytic->lambda) / run.analytic->lambda)
                                        : ordered_json(nullptr);
        } else {
            rec["saddle_exists"] = nullptr;
            rec["analytic_rate"] = nullptr;
            rec["relative_error"] = nullptr;
        }
        arr.push_back(rec);
    }
    rep["runs"] = arr;
    return rep;
}

std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string heatmap_csv(const std::vector<HeatmapCell>& rows) {
    std::string out = "tau,s,dissimilarity,lyapunov\n";
    for (const auto& r : rows)
        out += format_double(r.tau) + "," + format_double(r.s) + "," + format_double(r.dissimilarity) + "," +
               format_double(r.lyapunov) + "\n";
    return out;
}

std::string error_curve_csv(const std::vector<ErrorCurveRow>& rows) {
    std::string out = "tau,error_exact,error_perturbative,masked\n";
    for (const auto& r : rows)
        out += format_double(r.tau) + "," + format_double(r.exact) + "," + format_double(r.perturbative) + "," +
               (r.masked ? "1" : "0") + "\n";
    return out;
}

std::string phase_portrait_csv(const std::vector<TrajectoryRow>& rows) {
    std::string out = "trajectory_id,step,X,Y,Z\n";
    for (const auto& r : rows)
        out += std::to_string(r.trajectory_id) + "," + std::to_string(r.step) + "," + format_double(r.x(0)) + "," +
               format_double(r.x(1)) + "," + format_double(r.x(2)) + "\n";
    return out;
}

std::string otoc_csv(const std::vector<OTOCRun>& runs) {
    std::string out = "delta_tau,step,t,c\n";
    for (const auto& run : runs) {
        const auto& ser = run.series;
        for (std::size_t l = 0; l < ser.values.size(); ++l)
            out += format_double(run.delta_tau) + "," + std::to_string(l) + "," + format_double(ser.times[l]) + "," +
                   format_double(ser.values[l]) + "\n";
    }
    return out;
}

std::string companion_path(const std::string& out) {
    const std::string ext = ".csv";
    if (out.size() >= ext.size() && out.compare(out.size() - ext.size(), ext.size(), ext) == 0)
        return out.substr(0, out.size() - ext.size()) + ".json";
    return out + ".json";
}

int budget_code(std::size_t failed, std::size_t total, const char* what) {
    if (failed == 0) return kExitOk;
    std::cerr << what << ": " << failed << " of " << total << " cells failed\n";
    return failed * 100 > total ? kExitBudget : kExitOk;
}

int run_mode(const SweepConfig& cfg) {
    validate(cfg);
    if (cfg.mode == "heatmap") {
        const auto rows = compute_heatmap(cfg);
        write_file(cfg.out, heatmap_csv(rows));
        return budget_code(std::count_if(rows.begin(), rows.end(), [](const auto& r) { return r.failed; }),
                           rows.size(), "heatmap");
    }
    if (cfg.mode == "error-curve") {
        const auto rows = compute_error_curve(cfg);
        write_file(cfg.out, error_curve_csv(rows));
        return budget_code(std::count_if(rows.begin(), rows.end(), [](const auto& r) { return r.failed; }),
                           rows.size(), "error-curve");
    }
    if (cfg.mode == "phase-portrait") {
        write_file(cfg.out, phase_portrait_csv(compute_phase_portrait(cfg)));
        return kExitOk;
    }
    if (cfg.mode == "otoc") {
        const auto runs = compute_otoc(cfg);
        write_file(cfg.out, otoc_csv(runs));
        write_file(companion_path(cfg.out), otoc_report(cfg, runs).dump(2) + "\n");
        return budget_code(std::count_if(runs.begin(), runs.end(), [](const auto& r) { return r.failed; }),
                           runs.size(), "otoc");
    }
    write_file(cfg.out, instability_report(cfg).dump(2) + "\n");
    return kExitOk;
}

}  // namespace trotterlab
