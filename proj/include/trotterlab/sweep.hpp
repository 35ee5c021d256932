#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "trotterlab/classical.hpp"
#include "trotterlab/instability.hpp"
#include "trotterlab/observables.hpp"

namespace trotterlab {

enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitBudget = 3 };

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct SweepConfig {
    std::string mode;
    int p = 2;
    int n = 64;
    double s_min = 0.1, s_max = 0.1;
    int s_steps = 1;
    double tau_min = 0.5, tau_max = 8.0;
    int tau_steps = 1;
    std::optional<double> s;    // single-point modes; falls back to s_min
    std::optional<double> tau;  // phase-portrait; falls back to tau_min
    double theta = kPi / 2;
    double phi = 0.0;
    std::optional<int> steps;   // mode-dependent default, see default_steps
    int stride = 1;
    std::uint64_t seed = 0;
    int workers = 0;            // 0: TROTTERLAB_WORKERS or hardware concurrency
    std::string out;

    // otoc
    int q = 0;  // 0: q = p
    int r = 1;
    std::vector<double> delta_tau;  // empty: 8 midpoints across the instability width
    double r2_threshold = kDefaultR2Threshold;
    // heatmap
    int lyap_points = 50;  // 0 disables the Lyapunov column (written as nan)
    // phase-portrait
    int n_inits = 16;
    std::vector<std::array<double, 2>> inits;  // explicit (theta, phi) pairs

    double single_s() const { return s.value_or(s_min); }
    double single_tau() const { return tau.value_or(tau_min); }
    int effective_q() const { return q > 0 ? q : p; }
};

extern const std::vector<std::string> kModes;

int default_steps(const std::string& mode);

// Reads every known key; unknown keys are a ConfigError.
SweepConfig config_from_json(const nlohmann::json& j);
SweepConfig load_config(const std::string& path);
void validate(const SweepConfig& cfg);

// flag > TROTTERLAB_WORKERS > hardware concurrency
int resolve_workers(int requested);

std::vector<double> linspace(double lo, double hi, int steps);

// Runs fn(i) for i in [0, n) on `workers` threads; thread w gets the contiguous block
// [w n / workers, (w+1) n / workers). Exceptions thrown by fn are rethrown after join.
void parallel_for(int n, int workers, const std::function<void(int)>& fn);

struct HeatmapCell {
    double tau = 0.0, s = 0.0, dissimilarity = 0.0, lyapunov = 0.0;
    bool failed = false;
};

struct ErrorCurveRow {
    double tau = 0.0, exact = 0.0, perturbative = 0.0;
    bool masked = false;
    bool degenerate = false;
    bool failed = false;
};

struct OTOCRun {
    double delta_tau = 0.0;
    double tau = 0.0;
    OTOCSeries series;
    std::optional<SaddleData> analytic;
    bool failed = false;
};

// Row-major in (s, tau).
std::vector<HeatmapCell> compute_heatmap(const SweepConfig& cfg);
std::vector<ErrorCurveRow> compute_error_curve(const SweepConfig& cfg);
std::vector<TrajectoryRow> compute_phase_portrait(const SweepConfig& cfg);
std::vector<double> otoc_delta_taus(const SweepConfig& cfg);
std::vector<OTOCRun> compute_otoc(const SweepConfig& cfg);
nlohmann::ordered_json instability_report(const SweepConfig& cfg);
nlohmann::ordered_json otoc_report(const SweepConfig& cfg, const std::vector<OTOCRun>& runs);

// %.17g, with nan and inf spelled out
std::string format_double(double x);

std::string heatmap_csv(const std::vector<HeatmapCell>& rows);
std::string error_curve_csv(const std::vector<ErrorCurveRow>& rows);
std::string phase_portrait_csv(const std::vector<TrajectoryRow>& rows);
std::string otoc_csv(const std::vector<OTOCRun>& runs);

// Companion path for JSON output next to a CSV: x.csv -> x.json, otherwise x + ".json".
std::string companion_path(const std::string& out);

// kExitBudget when more than 1% of cells failed; failures are reported on stderr.
int budget_code(std::size_t failed, std::size_t total, const char* what);

// Runs the configured mode and writes its outputs. Returns an ExitCode.
int run_mode(const SweepConfig& cfg);

}  // namespace trotterlab
