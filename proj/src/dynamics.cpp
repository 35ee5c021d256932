#include "trotterlab/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace trotterlab {

HermitianExponential::HermitianExponential(const Mat& h) {
    if (h.rows() != h.cols()) throw std::invalid_argument("HermitianExponential: matrix not square");
    const double scale = std::max(1.0, max_abs(h));
    if (max_abs(h - h.adjoint()) > 1e-10 * scale)
        throw std::invalid_argument("HermitianExponential: matrix not Hermitian");
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (h + h.adjoint()));
    if (es.info() != Eigen::Success) throw std::runtime_error("HermitianExponential: eigensolver did not converge");
    values_ = es.eigenvalues();
    vectors_ = es.eigenvectors();
}

Mat HermitianExponential::operator()(double scale) const {
    Vec ph(values_.size());
    for (Eigen::Index i = 0; i < values_.size(); ++i) ph(i) = std::polar(1.0, scale * values_(i));
    return vectors_ * ph.asDiagonal() * vectors_.adjoint();
}

Mat exp_hermitian(const Mat& h, double scale) { return HermitianExponential(h)(scale); }

Mat target_unitary(const ModelParams& params, const CollectiveOperators& ops, double t) {
    if (t < 0.0) throw std::invalid_argument("target_unitary: t must be >= 0");
    return exp_hermitian(target_hamiltonian(params, ops), -t);
}

FloquetFactory::FloquetFactory(int p, double s, const CollectiveOperators& ops)
    : s_(s), mz_(ops.Jz.diagonal().real()), kick_(normalized_interaction(p, ops)) {
    ModelParams{p, s, 1.0}.validate();
}

Mat FloquetFactory::operator()(double tau) const {
    Mat k = kick_(s_ * tau);
    // left-multiply by the diagonal rotation e^{i(1-s) tau Jz}
    for (Eigen::Index i = 0; i < mz_.size(); ++i) k.row(i) *= std::polar(1.0, (1.0 - s_) * tau * mz_(i));
    return k;
}

Mat floquet_operator(const ModelParams& params, const CollectiveOperators& ops) {
    params.validate();
    return FloquetFactory(params.p, params.s, ops)(params.tau);
}

std::vector<Vec> evolve(const Vec& state, const Mat& u, int n) {
    if (n < 0) throw std::invalid_argument("evolve: n must be >= 0");
    std::vector<Vec> out;
    out.reserve(n);
    Vec psi = state;
    for (int i = 0; i < n; ++i) {
        psi = u * psi;
        out.push_back(psi);
    }
    return out;
}

double wrap_phase(double phi) {
    double r = std::remainder(phi, 2.0 * kPi);
    if (r <= -kPi) r += 2.0 * kPi;
    return r;
}

namespace {

// i (c + U)(c - U)^{-1} with c = e^{i theta}: Hermitian, same eigenvectors as U,
// eigenphase phi maps monotonically to cot((phi - theta) / 2).
Mat cayley(const Mat& u, double theta) {
    const cplx c = std::exp(kI * theta);
    const Mat id = Mat::Identity(u.rows(), u.cols());
    const Mat h = kI * (c * id + u) * (c * id - u).partialPivLu().inverse();
    return 0.5 * (h + h.adjoint());
}

// Midpoint of the largest gap between eigenphases, located from a first Cayley transform.
double gap_midpoint(const Mat& u) {
    const double theta0 = 0.5 * kPi / 7.0;
    const Eigen::SelfAdjointEigenSolver<Mat> es(cayley(u, theta0), Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success || !es.eigenvalues().allFinite()) return std::nan("");
    std::vector<double> phi;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
        phi.push_back(wrap_phase(theta0 + 2.0 * std::atan2(1.0, es.eigenvalues()(i))));
    std::sort(phi.begin(), phi.end());
    double best = phi.front() + 2.0 * kPi - phi.back(), mid = phi.back() + 0.5 * best;
    for (std::size_t i = 1; i < phi.size(); ++i)
        if (phi[i] - phi[i - 1] > best) {
            best = phi[i] - phi[i - 1];
            mid = 0.5 * (phi[i] + phi[i - 1]);
        }
    return mid;
}

SpectralDecomposition schur_decompose(const Mat& u) {
    Eigen::ComplexSchur<Mat> schur(u);
    if (schur.info() != Eigen::Success) throw std::runtime_error("spectral_decompose: Schur iteration did not converge");
    const Mat& t = schur.matrixT();
    SpectralDecomposition out;
    out.phases.resize(u.rows());
    for (Eigen::Index i = 0; i < u.rows(); ++i) out.phases(i) = wrap_phase(std::arg(t(i, i)));
    out.vectors = schur.matrixU();
    return out;
}

}  // namespace

SpectralDecomposition spectral_decompose(const Mat& u) {
    if (u.rows() != u.cols()) throw std::invalid_argument("spectral_decompose: matrix must be square");
    const double theta = u.rows() < 2 ? std::nan("") : gap_midpoint(u);
    if (std::isnan(theta)) return schur_decompose(u);
    const Eigen::SelfAdjointEigenSolver<Mat> es(cayley(u, theta));
    SpectralDecomposition out;
    out.vectors = es.eigenvectors();
    const Mat uv = u * out.vectors;
    out.phases.resize(u.rows());
    for (Eigen::Index i = 0; i < u.rows(); ++i)
        out.phases(i) = wrap_phase(std::arg(out.vectors.col(i).dot(uv.col(i))));
    Mat resid = uv;
    for (Eigen::Index i = 0; i < u.rows(); ++i) resid.col(i) -= std::exp(kI * out.phases(i)) * out.vectors.col(i);
    if (es.info() != Eigen::Success || !(max_abs(resid) <= 1e-10)) return schur_decompose(u);
    return out;
}

SpectralDecomposition decomposition_from_hamiltonian(const HermitianExponential& h, double t) {
    SpectralDecomposition out;
    out.phases = h.eigenvalues().unaryExpr([t](double e) { return wrap_phase(-e * t); });
    out.vectors = h.eigenvectors();
    return out;
}

double average_ipr(const Mat& a, const Mat& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols() || a.rows() != a.cols())
        throw std::invalid_argument("average_ipr: dimension mismatch");
    Mat o = a.adjoint() * b;
    return o.cwiseAbs2().cwiseAbs2().sum() / static_cast<double>(a.rows());
}

double average_ipr(const SpectralDecomposition& a, const SpectralDecomposition& b) {
    return average_ipr(a.vectors, b.vectors);
}

double coe_ipr(int N) { return 3.0 / (N + 3.0); }

double dissimilarity(const SpectralDecomposition& tar, const SpectralDecomposition& delta, int N) {
    if (tar.vectors.rows() != N + 1) throw std::invalid_argument("dissimilarity: dimension does not match N");
    const double d = (1.0 - average_ipr(tar, delta)) / (1.0 - coe_ipr(N));
    return std::max(d, 0.0);
}

double dissimilarity(const Mat& u_tar, const Mat& u_delta, int N) {
    if (u_tar.rows() != u_delta.rows()) throw std::invalid_argument("dissimilarity: dimension mismatch");
    return dissimilarity(spectral_decompose(u_tar), spectral_decompose(u_delta), N);
}

double spectral_norm(const Mat& a) {
    if (a.size() == 0) return 0.0;
    Eigen::BDCSVD<Mat> svd(a);
    return svd.singularValues()(0);
}

double trotter_error_bound(const ModelParams& params, const CollectiveOperators& ops, double t, int n) {
    params.validate();
    if (n < 1) throw std::invalid_argument("trotter_error_bound: n must be >= 1");
    Mat h1 = -(1.0 - params.s) * ops.Jz;
    Mat h2 = -params.s * normalized_interaction(params.p, ops);
    Mat c = h1 * h2 - h2 * h1;
    return t * t / (2.0 * n) * spectral_norm(c);
}

Mat trotter_unitary(const ModelParams& params, const CollectiveOperators& ops, double t, int n) {
    if (n < 1) throw std::invalid_argument("trotter_unitary: n must be >= 1");
    ModelParams step = params;
    step.tau = t / n;
    Mat u = floquet_operator(step, ops);
    Mat r = Mat::Identity(u.rows(), u.cols());
    for (int i = 0; i < n; ++i) r = u * r;
    return r;
}

double unitarity_residual(const Mat& u) {
    return max_abs(u.adjoint() * u - Mat::Identity(u.rows(), u.cols()));
}

}  // namespace trotterlab
