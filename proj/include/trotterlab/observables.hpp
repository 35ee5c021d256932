#pragma once

#include <vector>

#include "trotterlab/dynamics.hpp"

namespace trotterlab {

inline constexpr double kDegeneracyGap = 1e-8;
inline constexpr double kDefaultR2Threshold = 0.995;
// OTOC values at or below this are treated as roundoff zeros by the growth fit
inline constexpr double kOTOCNoiseFloor = 1e-12;

struct LongTimeAverage {
    double value = 0.0;
    bool degenerate = false;  // some eigenvalue gap below kDegeneracyGap
    double min_gap = 0.0;
};

// Diagonal-ensemble average. Eigenvalues closer than kDegeneracyGap are treated as
// one degenerate block, so the result does not depend on the gauge inside the block.
LongTimeAverage long_time_average(const Vec& state, const SpectralDecomposition& spec, const Mat& a);
LongTimeAverage long_time_average(const Vec& state, const HermitianExponential& h, const Mat& a);

struct ErrorValue {
    double value = 0.0;
    bool degenerate = false;
};

// (1/J) |<Jz>_target - <Jz>_trotter|, both long-time averaged
ErrorValue error_ez_infinity_exact(const ModelParams& params, const CollectiveOperators& ops, const Vec& state);

// Same quantity along a tau sweep at fixed (p, s, state); the target average is computed once.
class ExactErrorCurve {
public:
    ExactErrorCurve(int p, double s, const CollectiveOperators& ops, const Vec& state);
    ErrorValue operator()(double tau) const;
    double target_average() const { return target_avg_; }

private:
    Mat jz_;
    double J_;
    Vec state_;
    FloquetFactory floquet_;
    double target_avg_ = 0.0;
    bool target_degenerate_ = false;
};

struct GrowthFit {
    bool found = false;
    double rate = 0.0;  // slope of ln c per step
    double r2 = 0.0;
    int begin = -1;     // window [begin, end)
    int end = -1;
};

struct OTOCSeries {
    std::vector<double> times;   // l * tau
    std::vector<double> values;  // c(l)
    GrowthFit fit;
};

// c(l) = Tr(M M^dagger)/d with M = [Jz(l), Jz], Jz(l) = (U^dagger)^l Jz U^l, l = 0..n_steps
OTOCSeries otoc_series(const Mat& u, const CollectiveOperators& ops, double tau, int n_steps);
OTOCSeries otoc_series(const ModelParams& params, const CollectiveOperators& ops, int n_steps);

// Least-squares slope of ln c against step index over the longest window of length >= min_len with
// R^2 >= r2_threshold and positive slope. Points with c < 1e-10 max(c) at the start are skipped and the
// search stops at the first local maximum. Ties go to the earliest window.
GrowthFit fit_growth_rate(const std::vector<double>& c, double r2_threshold = kDefaultR2Threshold, int min_len = 5);
GrowthFit fit_growth_rate(OTOCSeries& series, double r2_threshold = kDefaultR2Threshold);

}  // namespace trotterlab
