#include "trotterlab/observables.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace trotterlab {

namespace {

// Groups of indices whose eigenvalues lie within kDegeneracyGap of a neighbour.
// Phases are compared on the circle when `circular` is set.
std::vector<std::vector<int>> degenerate_blocks(const RVec& ev, bool circular, double& min_gap) {
    const int n = static_cast<int>(ev.size());
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return ev(a) < ev(b); });

    min_gap = std::numeric_limits<double>::infinity();
    std::vector<std::vector<int>> blocks;
    for (int k = 0; k < n; ++k) {
        const int i = order[k];
        if (k > 0) {
            const double gap = ev(i) - ev(order[k - 1]);
            min_gap = std::min(min_gap, gap);
            if (gap < kDegeneracyGap) {
                blocks.back().push_back(i);
                continue;
            }
        }
        blocks.push_back({i});
    }
    if (circular && blocks.size() > 1) {
        const double wrap_gap = 2.0 * kPi - (ev(order.back()) - ev(order.front()));
        min_gap = std::min(min_gap, wrap_gap);
        if (wrap_gap < kDegeneracyGap) {
            blocks.front().insert(blocks.front().end(), blocks.back().begin(), blocks.back().end());
            blocks.pop_back();
        }
    }
    if (n < 2) min_gap = std::numeric_limits<double>::infinity();
    return blocks;
}

LongTimeAverage block_average(const Vec& state, const RVec& ev, const Mat& vectors, const Mat& a, bool circular) {
    if (state.size() != vectors.rows() || a.rows() != vectors.rows())
        throw std::invalid_argument("long_time_average: dimension mismatch");
    LongTimeAverage out;
    auto blocks = degenerate_blocks(ev, circular, out.min_gap);
    Vec c = vectors.adjoint() * state;
    Mat av = a * vectors;
    double total = 0.0;
    for (const auto& b : blocks) {
        if (b.size() == 1) {
            const int i = b[0];
            total += std::norm(c(i)) * vectors.col(i).dot(av.col(i)).real();
            continue;
        }
        out.degenerate = true;
        const int m = static_cast<int>(b.size());
        Vec cb(m);
        Mat ab(m, m);
        for (int x = 0; x < m; ++x) {
            cb(x) = c(b[x]);
            for (int y = 0; y < m; ++y) ab(x, y) = vectors.col(b[x]).dot(av.col(b[y]));
        }
        total += cb.dot(ab * cb).real();
    }
    out.value = total;
    return out;
}

}  // namespace

LongTimeAverage long_time_average(const Vec& state, const SpectralDecomposition& spec, const Mat& a) {
    return block_average(state, spec.phases, spec.vectors, a, true);
}

LongTimeAverage long_time_average(const Vec& state, const HermitianExponential& h, const Mat& a) {
    return block_average(state, h.eigenvalues(), h.eigenvectors(), a, false);
}

ExactErrorCurve::ExactErrorCurve(int p, double s, const CollectiveOperators& ops, const Vec& state)
    : jz_(ops.Jz), J_(ops.sector.J), state_(state), floquet_(p, s, ops) {
    HermitianExponential h(target_hamiltonian(ModelParams{p, s, 1.0}, ops));
    auto avg = long_time_average(state_, h, jz_);
    target_avg_ = avg.value;
    target_degenerate_ = avg.degenerate;
}

ErrorValue ExactErrorCurve::operator()(double tau) const {
    auto spec = spectral_decompose(floquet_(tau));
    auto avg = long_time_average(state_, spec, jz_);
    return ErrorValue{std::abs(target_avg_ - avg.value) / J_, avg.degenerate || target_degenerate_};
}

ErrorValue error_ez_infinity_exact(const ModelParams& params, const CollectiveOperators& ops, const Vec& state) {
    params.validate();
    return ExactErrorCurve(params.p, params.s, ops, state)(params.tau);
}

OTOCSeries otoc_series(const Mat& u, const CollectiveOperators& ops, double tau, int n_steps) {
    if (n_steps < 2) throw std::invalid_argument("otoc_series: n_steps must be >= 2");
    const RVec mz = ops.Jz.diagonal().real();
    const Eigen::Index d = mz.size();
    OTOCSeries out;
    out.times.reserve(n_steps + 1);
    out.values.reserve(n_steps + 1);
    Mat a = ops.Jz;
    const Mat ud = u.adjoint();
    for (int l = 0; l <= n_steps; ++l) {
        // [A, Jz]_{ij} = A_ij (m_j - m_i) since Jz is diagonal
        double acc = 0.0;
        for (Eigen::Index j = 0; j < d; ++j)
            for (Eigen::Index i = 0; i < d; ++i) {
                const double w = mz(j) - mz(i);
                acc += std::norm(a(i, j)) * w * w;
            }
        out.times.push_back(l * tau);
        out.values.push_back(acc / static_cast<double>(d));
        if (l < n_steps) a = ud * a * u;
    }
    return out;
}

OTOCSeries otoc_series(const ModelParams& params, const CollectiveOperators& ops, int n_steps) {
    return otoc_series(floquet_operator(params, ops), ops, params.tau, n_steps);
}

GrowthFit fit_growth_rate(const std::vector<double>& c, double r2_threshold, int min_len) {
    GrowthFit none;
    const int n = static_cast<int>(c.size());
    if (n == 0) return none;
    const double cmax = *std::max_element(c.begin(), c.end());
    if (!(cmax > kOTOCNoiseFloor)) return none;
    int positive = 0;
    for (double v : c) positive += v > kOTOCNoiseFloor;
    if (positive <= 10) return none;

    int start = 0;
    while (start < n && !(c[start] > kOTOCNoiseFloor && c[start] >= 1e-10 * cmax)) ++start;
    int stop = n;
    for (int i = start + 1; i + 1 < n; ++i) {
        if (c[i] > c[i - 1] && c[i] >= c[i + 1]) {
            stop = i + 1;
            break;
        }
    }
    std::vector<double> y(n);
    for (int i = 0; i < n; ++i) y[i] = std::log(std::max(c[i], 1e-300));

    for (int len = stop - start; len >= min_len; --len) {
        for (int b = start; b + len <= stop; ++b) {
            double tm = 0.0, ym = 0.0;
            for (int i = b; i < b + len; ++i) {
                tm += i;
                ym += y[i];
            }
            tm /= len;
            ym /= len;
            double stt = 0.0, sty = 0.0, syy = 0.0;
            for (int i = b; i < b + len; ++i) {
                stt += (i - tm) * (i - tm);
                sty += (i - tm) * (y[i] - ym);
                syy += (y[i] - ym) * (y[i] - ym);
            }
            if (syy <= 0.0) continue;
            const double slope = sty / stt;
            const double r2 = sty * sty / (stt * syy);
            if (r2 >= r2_threshold && slope > 0.0) return GrowthFit{true, slope, r2, b, b + len};
        }
    }
    return none;
}

GrowthFit fit_growth_rate(OTOCSeries& series, double r2_threshold) {
    series.fit = fit_growth_rate(series.values, r2_threshold);
    return series.fit;
}

}  // namespace trotterlab
