#pragma once

#include <vector>

#include "trotterlab/spin.hpp"

namespace trotterlab {

// Eigenphases in (-pi, pi] and orthonormal eigenvector columns.
struct SpectralDecomposition {
    RVec phases;
    Mat vectors;
};

// Eigen-decomposition of a Hermitian matrix, reusable for exp(i*scale*H) at many scales.
class HermitianExponential {
public:
    explicit HermitianExponential(const Mat& h);
    Mat operator()(double scale) const;
    const RVec& eigenvalues() const { return values_; }
    const Mat& eigenvectors() const { return vectors_; }

private:
    RVec values_;
    Mat vectors_;
};

// exp(i * scale * H) through the eigendecomposition of H
Mat exp_hermitian(const Mat& h, double scale);

// exp(-i H(s) t)
Mat target_unitary(const ModelParams& params, const CollectiveOperators& ops, double t);

// e^{i(1-s) tau Jz} e^{i (s tau / (p J^{p-1})) Jx^p}
Mat floquet_operator(const ModelParams& params, const CollectiveOperators& ops);

// Floquet operators for one (p, s) at many tau, sharing the Jx^p eigensystem.
class FloquetFactory {
public:
    FloquetFactory(int p, double s, const CollectiveOperators& ops);
    Mat operator()(double tau) const;

private:
    double s_;
    RVec mz_;
    HermitianExponential kick_;
};

// States after 1..n applications of U.
std::vector<Vec> evolve(const Vec& state, const Mat& u, int n);

SpectralDecomposition spectral_decompose(const Mat& u);

// Target-basis decomposition built from the Hamiltonian eigenbasis, phases -E t wrapped.
SpectralDecomposition decomposition_from_hamiltonian(const HermitianExponential& h, double t);

double wrap_phase(double phi);

// (1/d) sum_ij |<a_i|b_j>|^4
double average_ipr(const SpectralDecomposition& a, const SpectralDecomposition& b);
double average_ipr(const Mat& a_vectors, const Mat& b_vectors);

double coe_ipr(int N);

// (1 - IPR) / (1 - 3/(N+3))
double dissimilarity(const SpectralDecomposition& tar, const SpectralDecomposition& delta, int N);
double dissimilarity(const Mat& u_tar, const Mat& u_delta, int N);

double spectral_norm(const Mat& a);

// (t^2 / (2n)) ||[H1, H2]||_2 with H1 = -(1-s) Jz, H2 = -(s/(p J^{p-1})) Jx^p
double trotter_error_bound(const ModelParams& params, const CollectiveOperators& ops, double t, int n);

// (U_delta(t/n))^n
Mat trotter_unitary(const ModelParams& params, const CollectiveOperators& ops, double t, int n);

double unitarity_residual(const Mat& u);

}  // namespace trotterlab
