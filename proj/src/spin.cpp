#include "trotterlab/spin.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace trotterlab {

SpinSector::SpinSector(int n) : N(n), J(0.5 * n), d(n + 1) {
    if (n < 1) throw std::invalid_argument("SpinSector: N must be >= 1, got " + std::to_string(n));
}

void ModelParams::validate() const {
    if (p < 2) throw std::invalid_argument("ModelParams: p must be >= 2");
    if (!(s >= 0.0 && s <= 1.0)) throw std::invalid_argument("ModelParams: s must lie in [0, 1]");
    if (!std::isfinite(tau)) throw std::invalid_argument("ModelParams: tau must be finite");
}

CollectiveOperators build_collective_operators(const SpinSector& sector) {
    const int d = sector.d;
    const double J = sector.J;
    Mat jp = Mat::Zero(d, d);
    for (int i = 0; i + 1 < d; ++i) {
        const double m = sector.mz(i);
        jp(i + 1, i) = std::sqrt(J * (J + 1.0) - m * (m + 1.0));
    }
    Mat jz = Mat::Zero(d, d);
    for (int i = 0; i < d; ++i) jz(i, i) = sector.mz(i);
    Mat jm = jp.adjoint();
    Mat jx = 0.5 * (jp + jm);
    Mat jy = (jp - jm) / cplx(0.0, 2.0);
    return CollectiveOperators{sector, std::move(jx), std::move(jy), std::move(jz)};
}

Vec spin_coherent_state(const SpinSector& sector, double theta, double phi) {
    if (!(theta >= 0.0 && theta <= kPi)) throw std::invalid_argument("spin_coherent_state: theta outside [0, pi]");
    const int N = sector.N;
    const double c = std::cos(0.5 * theta);
    const double s = std::sin(0.5 * theta);
    Vec out(sector.d);
    // amplitude of |m_z = -J + k> is sqrt(C(N,k)) c^k s^(N-k) e^{-i m_z phi}
    for (int k = 0; k <= N; ++k) {
        double mag;
        const bool c_zero = (c == 0.0 && k > 0);
        const bool s_zero = (s == 0.0 && k < N);
        if (c_zero || s_zero) {
            mag = 0.0;
        } else {
            double lg = 0.5 * (std::lgamma(N + 1.0) - std::lgamma(k + 1.0) - std::lgamma(N - k + 1.0));
            if (k > 0) lg += k * std::log(std::abs(c));
            if (k < N) lg += (N - k) * std::log(std::abs(s));
            mag = std::exp(lg);
            if (c < 0.0 && (k % 2)) mag = -mag;
        }
        const double mz = sector.mz(k);
        out(k) = mag * std::polar(1.0, -mz * phi);
    }
    return out / out.norm();
}

Mat matrix_power(const Mat& a, int p) {
    if (p < 0) throw std::invalid_argument("matrix_power: negative exponent");
    Mat r = Mat::Identity(a.rows(), a.cols());
    for (int i = 0; i < p; ++i) r = r * a;
    return r;
}

Mat normalized_interaction(int p, const CollectiveOperators& ops) {
    if (p < 2) throw std::invalid_argument("normalized_interaction: p must be >= 2");
    const double J = ops.sector.J;
    Mat jxp = matrix_power(ops.Jx, p);
    return jxp / (p * std::pow(J, p - 1));
}

Mat target_hamiltonian(const ModelParams& params, const CollectiveOperators& ops) {
    params.validate();
    Mat h = -(1.0 - params.s) * ops.Jz - params.s * normalized_interaction(params.p, ops);
    // symmetrize away rounding in the power
    return 0.5 * (h + h.adjoint());
}

Mat parity_operator(const SpinSector& sector) {
    Mat pi = Mat::Zero(sector.d, sector.d);
    for (int i = 0; i < sector.d; ++i) pi(i, i) = std::polar(1.0, kPi * sector.mz(i));
    return pi;
}

double expectation(const Vec& psi, const Mat& a) { return psi.dot(a * psi).real(); }

}  // namespace trotterlab
