#include "trotterlab/instability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

#include "trotterlab/dynamics.hpp"

namespace trotterlab {

namespace {

double ipow(double x, int n) {
    double r = 1.0;
    for (int i = 0; i < n; ++i) r *= x;
    return r;
}

void check_p(int p) {
    if (p < 2) throw std::invalid_argument("p must be >= 2");
}

void check_q(int p, int q) {
    const auto qs = coupling_offsets(p);
    if (std::find(qs.begin(), qs.end(), q) == qs.end())
        throw std::invalid_argument("q = " + std::to_string(q) + " is not a coupling offset of p = " + std::to_string(p));
}

Eigen::Matrix3d cross_matrix(const Eigen::Vector3d& v) {
    Eigen::Matrix3d m;
    m << 0.0, -v(2), v(1), v(2), 0.0, -v(0), -v(1), v(0), 0.0;
    return m;
}

// magnitude of the coherent-state amplitude on |m_z = -J + k>
std::vector<double> coherent_magnitudes(int N, double theta) {
    const double c = std::abs(std::cos(0.5 * theta));
    const double s = std::abs(std::sin(0.5 * theta));
    std::vector<double> a(N + 1, 0.0);
    for (int k = 0; k <= N; ++k) {
        if ((c == 0.0 && k > 0) || (s == 0.0 && k < N)) continue;
        double lg = 0.5 * (std::lgamma(N + 1.0) - std::lgamma(k + 1.0) - std::lgamma(N - k + 1.0));
        if (k > 0) lg += k * std::log(c);
        if (k < N) lg += (N - k) * std::log(s);
        a[k] = std::exp(lg);
    }
    return a;
}

}  // namespace

std::vector<int> coupling_offsets(int p) {
    check_p(p);
    std::vector<int> qs;
    for (int q = p; q >= 1; q -= 2) qs.push_back(q);
    return qs;
}

double tau_star(int q, int r, double s) {
    if (q < 1 || r < 1) throw std::invalid_argument("tau_star: q and r must be positive");
    if (!(s >= 0.0 && s < 1.0)) throw std::invalid_argument("tau_star: s must lie in [0, 1)");
    return 2.0 * kPi * r / ((1.0 - s) * q);
}

InstabilityPoint make_point(int p, int q, int r, double s) {
    check_q(p, q);
    return InstabilityPoint{p, q, r, tau_star(q, r, s), s, 0};
}

std::vector<InstabilityPoint> instability_points(int p, double s, double tau_max) {
    if (!(tau_max > 0.0)) throw std::invalid_argument("instability_points: tau_max must be > 0");
    std::vector<InstabilityPoint> out;
    for (int q : coupling_offsets(p)) {
        for (int r = 1;; ++r) {
            const double t = tau_star(q, r, s);
            if (t > tau_max) break;
            out.push_back(InstabilityPoint{p, q, r, t, s, 0});
        }
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const InstabilityPoint& a, const InstabilityPoint& b) { return a.tau_star < b.tau_star; });
    int group = 0;
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (i > 0 && out[i].tau_star - out[i - 1].tau_star > 1e-9) ++group;
        out[i].group = group;
    }
    return out;
}

Vec eigenvector_correction(const ModelParams& params, const CollectiveOperators& ops, int m) {
    params.validate();
    const int d = ops.sector.d;
    if (m < 0 || m >= d) throw std::invalid_argument("eigenvector_correction: basis index out of range");
    const Mat v = normalized_interaction(params.p, ops);
    const double vmax = max_abs(v);
    Vec out = Vec::Zero(d);
    for (int mp = 0; mp < d; ++mp) {
        if (mp == m) continue;
        const cplx vm = v(mp, m);
        if (std::abs(vm) <= 1e-14 * vmax) continue;
        const cplx den = std::polar(1.0, (1.0 - params.s) * params.tau * (m - mp)) - 1.0;
        if (std::abs(den) < 1e-9)
            throw DegeneracyError("eigenvector_correction: resonant coupling between levels " + std::to_string(m) +
                                  " and " + std::to_string(mp));
        out(mp) = kI * params.tau * vm / den;
    }
    return out;
}

double resonance_strength(int p, int q) {
    check_q(p, q);
    const int n = 20000;
    double best = 0.0;
    for (int i = 0; i < n; ++i) {
        const double phi = 2.0 * kPi * i / n;
        double f = 0.0;
        for (int m = 0; m < q; ++m) f += ipow(std::cos(phi - 2.0 * kPi * m / q), p);
        best = std::max(best, std::abs(f) / (p * q));
    }
    return p * width_factor_F(p) * best;
}

TauInterval immediate_vicinity_mask(const InstabilityPoint& point) {
    const double s = point.s;
    const double kappa = resonance_strength(point.p, point.q);
    const double den = 1.0 - s - 2.0 * s * kappa;
    if (den <= 0.0) return TauInterval{-std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
    const double delta = 2.0 * s * point.tau_star * kappa / den;
    return TauInterval{point.tau_star - delta, point.tau_star + delta};
}

bool in_any_mask(int p, double s, double tau) {
    if (s <= 0.0) return false;
    // masks grow with tau*, so scan resonances until the lower edge passes tau
    for (int q : coupling_offsets(p)) {
        for (int r = 1;; ++r) {
            const auto iv = immediate_vicinity_mask(InstabilityPoint{p, q, r, tau_star(q, r, s), s, 0});
            if (iv.contains(tau)) return true;
            if (iv.lo > tau || !std::isfinite(iv.lo)) break;
        }
    }
    return false;
}

CoherentPerturbativeModel::CoherentPerturbativeModel(int p, double s, const CollectiveOperators& ops, double theta,
                                                     double phi)
    : p_(p), s_(s), J_(ops.sector.J), phi_(phi), qs_(coupling_offsets(p)) {
    const Mat jxp = matrix_power(ops.Jx, p);
    const auto a = coherent_magnitudes(ops.sector.N, theta);
    const int d = ops.sector.d;
    for (int q : qs_) {
        double acc = 0.0;
        for (int m = 0; m + q < d; ++m) acc += a[m + q] * a[m] * jxp(m, m + q).real();
        band_.push_back(acc);
    }
}

PerturbativeError CoherentPerturbativeModel::operator()(double tau) const {
    PerturbativeError out;
    out.masked = in_any_mask(p_, s_, tau);
    if (s_ == 0.0) return out;
    double total = 0.0;
    for (std::size_t i = 0; i < qs_.size(); ++i) {
        const int q = qs_[i];
        const double x = 0.5 * q * (1.0 - s_) * tau;
        const double bracket = std::cos(q * phi_) * (2.0 / (q * (1.0 - s_)) - tau / std::tan(x)) + tau * std::sin(q * phi_);
        total += s_ * q / (p_ * std::pow(J_, p_ - 1)) * bracket * band_[i];
    }
    out.value = std::abs(total) / J_;
    return out;
}

GeneralPerturbativeModel::GeneralPerturbativeModel(int p, double s, const CollectiveOperators& ops, const Vec& state)
    : p_(p), s_(s), J_(ops.sector.J), qs_(coupling_offsets(p)) {
    const Mat jxp = matrix_power(ops.Jx, p);
    const int d = ops.sector.d;
    if (state.size() != d) throw std::invalid_argument("GeneralPerturbativeModel: state dimension mismatch");
    for (int q : qs_) {
        cplx acc = 0.0;
        for (int m = 0; m + q < d; ++m) acc += state(m + q) * std::conj(state(m)) * jxp(m, m + q);
        band_.push_back(acc);
    }
}

PerturbativeError GeneralPerturbativeModel::operator()(double tau) const {
    PerturbativeError out;
    out.masked = in_any_mask(p_, s_, tau);
    if (s_ == 0.0) return out;
    double total = 0.0;
    for (std::size_t i = 0; i < qs_.size(); ++i) {
        const int q = qs_[i];
        const cplx den = std::polar(1.0, q * (1.0 - s_) * tau) - 1.0;
        const cplx factor = 1.0 / (q * (1.0 - s_)) - kI * tau / den;
        total += (static_cast<double>(q) * band_[i] * factor).real();
    }
    out.value = std::abs(2.0 * s_ / (p_ * std::pow(J_, p_ - 1)) * total) / J_;
    return out;
}

PerturbativeError perturbative_error_coherent(const ModelParams& params, const SpinSector& sector, double theta,
                                              double phi) {
    params.validate();
    const auto ops = build_collective_operators(sector);
    return CoherentPerturbativeModel(params.p, params.s, ops, theta, phi)(params.tau);
}

PerturbativeError perturbative_error_general(const ModelParams& params, const CollectiveOperators& ops,
                                             const Vec& state) {
    params.validate();
    return GeneralPerturbativeModel(params.p, params.s, ops, state)(params.tau);
}

double width_factor_F(int p) {
    check_p(p);
    if (p == 2) return 1.0;
    return std::sqrt(std::pow(p - 2.0, p - 2) / std::pow(p - 1.0, p - 1));
}

double width_factor_G(int p) {
    check_p(p);
    return width_factor_F(p) / std::pow(2.0, 0.5 * p);
}

Width instability_width(int p, int q, double s, int r) {
    if (q != 2 && q != 4) throw std::invalid_argument("instability_width: derived only for q = 2 and q = 4");
    if (p % 2) throw std::invalid_argument("instability_width: derived only for even p");
    if (q > p) throw std::invalid_argument("instability_width: q exceeds p");
    const double w = (q == 2) ? width_factor_F(p) : width_factor_G(p);
    Width out;
    out.extrapolated = r > 1;
    const double den = 1.0 - s - s * w;
    if (den <= 0.0) {
        out.bounded = false;
        out.value = std::numeric_limits<double>::infinity();
        return out;
    }
    out.value = s * tau_star(q, r, s) * w / den;
    return out;
}

namespace {

Mat rotated_power_sum(int p, int q, int r, int count, const CollectiveOperators& ops) {
    Mat sum = Mat::Zero(ops.sector.d, ops.sector.d);
    for (int m = 0; m < count; ++m) {
        const double th = 2.0 * kPi * r * m / q;
        sum += matrix_power(std::cos(th) * ops.Jx + std::sin(th) * ops.Jy, p);
    }
    return sum;
}

Mat assemble_effective(int p, int q, double s, double delta_tau, const CollectiveOperators& ops, int r,
                       const Mat& power_sum) {
    const double ts = tau_star(q, r, s);
    const double tbar = delta_tau / (ts + delta_tau);
    Mat h = -(1.0 - s) * tbar * ops.Jz - s / (p * q * std::pow(ops.sector.J, p - 1)) * power_sum;
    return 0.5 * (h + h.adjoint());
}

}  // namespace

Mat effective_hamiltonian(int p, int q, double s, double delta_tau, const CollectiveOperators& ops, int r) {
    check_q(p, q);
    return assemble_effective(p, q, s, delta_tau, ops, r, rotated_power_sum(p, q, r, q, ops));
}

Mat effective_hamiltonian_half_sum(int p, int q, double s, double delta_tau, const CollectiveOperators& ops, int r) {
    check_q(p, q);
    if (p % 2 || q % 2) throw std::invalid_argument("effective_hamiltonian_half_sum: needs even p and q");
    return assemble_effective(p, q, s, delta_tau, ops, r, 2.0 * rotated_power_sum(p, q, r, q / 2, ops));
}

double s_effective(double s, double delta_tau, double tau_star) {
    if (s <= 0.0) return 0.0;
    return 1.0 / (1.0 + ((1.0 - s) / s) * delta_tau / (tau_star + delta_tau));
}

double effective_unitary_check(int p, int q, double s, double delta_tau, const CollectiveOperators& ops, int r) {
    const double tau = tau_star(q, r, s) + delta_tau;
    const Mat u = floquet_operator(ModelParams{p, s, tau}, ops);
    Mat uq = Mat::Identity(u.rows(), u.cols());
    for (int i = 0; i < q; ++i) uq = u * uq;
    const Mat v = exp_hermitian(effective_hamiltonian(p, q, s, delta_tau, ops, r), -q * tau);
    return std::min(spectral_norm(uq - v), spectral_norm(uq + v));
}

double EffectiveFlow::energy(const Eigen::Vector3d& x) const {
    double sum = 0.0;
    for (int m = 0; m < q; ++m) {
        const double th = 2.0 * kPi * r * m / q;
        sum += ipow(x(0) * std::cos(th) + x(1) * std::sin(th), p);
    }
    return -(1.0 - s) * tbar * x(2) - s / (p * q) * sum;
}

Eigen::Vector3d EffectiveFlow::gradient(const Eigen::Vector3d& x) const {
    Eigen::Vector3d g(0.0, 0.0, -(1.0 - s) * tbar);
    for (int m = 0; m < q; ++m) {
        const double th = 2.0 * kPi * r * m / q;
        const double c = std::cos(th), sn = std::sin(th);
        const double u = ipow(x(0) * c + x(1) * sn, p - 1);
        g(0) -= s / q * u * c;
        g(1) -= s / q * u * sn;
    }
    return g;
}

Eigen::Matrix3d EffectiveFlow::hessian(const Eigen::Vector3d& x) const {
    Eigen::Matrix3d h = Eigen::Matrix3d::Zero();
    for (int m = 0; m < q; ++m) {
        const double th = 2.0 * kPi * r * m / q;
        const Eigen::Vector3d e(std::cos(th), std::sin(th), 0.0);
        const double u = ipow(x(0) * e(0) + x(1) * e(1), p - 2);
        h -= s * (p - 1) / q * u * e * e.transpose();
    }
    return h;
}

Eigen::Vector3d EffectiveFlow::rhs(const Eigen::Vector3d& x) const { return gradient(x).cross(x); }

Eigen::Matrix3d EffectiveFlow::jacobian(const Eigen::Vector3d& x) const {
    return cross_matrix(gradient(x)) - cross_matrix(x) * hessian(x);
}

EffectiveFlow effective_flow(int p, int q, double s, double delta_tau, int r) {
    check_q(p, q);
    const double ts = tau_star(q, r, s);
    return EffectiveFlow{p, q, r, s, delta_tau / (ts + delta_tau)};
}

double max_real_eigenvalue(const Eigen::Matrix3d& m) {
    Eigen::EigenSolver<Eigen::Matrix3d> es(m, false);
    return es.eigenvalues().real().maxCoeff();
}

std::vector<double> cubic_roots(double c) {
    std::vector<double> roots;
    const double disc = 4.0 - 27.0 * c * c;
    if (disc > 0.0) {
        const double rr = 2.0 / std::sqrt(3.0);
        const double arg = std::clamp(-1.5 * c * std::sqrt(3.0), -1.0, 1.0);
        const double base = std::acos(arg) / 3.0;
        for (int k = 0; k < 3; ++k) roots.push_back(rr * std::cos(base - 2.0 * kPi * k / 3.0));
    } else {
        const double h = std::sqrt(std::max(0.0, c * c / 4.0 - 1.0 / 27.0));
        roots.push_back(std::cbrt(-0.5 * c + h) + std::cbrt(-0.5 * c - h));
    }
    for (double& z : roots) {
        for (int it = 0; it < 4; ++it) {
            const double f = z * z * z - z + c;
            const double df = 3.0 * z * z - 1.0;
            if (std::abs(df) < 1e-14) break;
            z -= f / df;
        }
    }
    std::sort(roots.begin(), roots.end());
    return roots;
}

SaddleData saddle_exponent_22(double s, double delta_tau) {
    SaddleData out;
    const double ts = tau_star(2, 1, s);
    const double t = ts + delta_tau;
    const double rad = s * (1.0 - s) * std::abs(delta_tau) / t - std::pow((1.0 - s) * delta_tau / t, 2);
    const Width w = instability_width(2, 2, s);
    out.width = w.value;
    out.Z = delta_tau >= 0.0 ? 1.0 : -1.0;
    if (rad < 0.0) return out;
    out.exists = true;
    out.lambda = t * std::sqrt(rad);
    return out;
}

SaddleData saddle_exponent_44(double s, double delta_tau) {
    SaddleData out;
    const double ts = tau_star(4, 1, s);
    const double t = ts + delta_tau;
    const EffectiveFlow flow = effective_flow(4, 4, s, delta_tau);
    const double a = (1.0 - s) * flow.tbar / s;
    out.width = instability_width(4, 4, s).value;
    double best = 0.0;
    for (double z : cubic_roots(4.0 * a)) {
        if (!(std::abs(z) < 1.0)) continue;
        const double xx = std::sqrt(0.5 * (1.0 - z * z));
        const Eigen::Vector3d pt(xx, xx, z);
        if (flow.rhs(pt).norm() > 1e-10) continue;
        const double mu = max_real_eigenvalue(flow.jacobian(pt));
        if (mu > 1e-12 && mu > best) {
            best = mu;
            out.exists = true;
            out.Z = z;
            out.X = xx;
            out.Y = xx;
        }
    }
    out.lambda = t * best;
    return out;
}

SaddleData saddle_exponent_42(double s, double delta_tau) {
    SaddleData out;
    const double ts = tau_star(2, 1, s);
    const double t = ts + delta_tau;
    const double tbar = delta_tau / t;
    const double a = (1.0 - s) * tbar / s;
    out.width = instability_width(4, 2, s).value;
    for (double z : cubic_roots(a)) {
        if (!(std::abs(z) < 1.0) || z * z <= 1.0 / 3.0) continue;
        const double x = std::sqrt(1.0 - z * z);
        const double rad = 2.0 * a * a - ipow(x, 6);
        if (rad <= 0.0) continue;
        out.exists = true;
        out.Z = z;
        out.X = x;
        out.Y = 0.0;
        out.lambda = s * t * std::sqrt(rad);
    }
    return out;
}

}  // namespace trotterlab
