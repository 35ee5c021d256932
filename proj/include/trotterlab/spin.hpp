#pragma once

#include "trotterlab/types.hpp"

namespace trotterlab {

// Maximal-J symmetric subspace of N spin-1/2 particles.
// Basis index m = 0..2J labels |m_z = -J + m>.
struct SpinSector {
    int N;
    double J;
    int d;

    explicit SpinSector(int n);
    double mz(int m) const { return -J + m; }
};

struct CollectiveOperators {
    SpinSector sector;
    Mat Jx, Jy, Jz;
};

struct ModelParams {
    int p = 2;
    double s = 0.0;
    double tau = 1.0;

    double alpha() const { return -(1.0 - s) * tau; }
    double kick() const { return -s * tau; }
    void validate() const;  // throws std::invalid_argument
};

CollectiveOperators build_collective_operators(const SpinSector& sector);

// e^{-i phi Jz} e^{-i theta Jy} |J, J>
Vec spin_coherent_state(const SpinSector& sector, double theta, double phi);

// A^p by repeated multiplication
Mat matrix_power(const Mat& a, int p);

// Jx^p / (p J^{p-1}), the normalized interaction term without its s prefactor
Mat normalized_interaction(int p, const CollectiveOperators& ops);

// H(s) = -(1-s) Jz - s/(p J^{p-1}) Jx^p
Mat target_hamiltonian(const ModelParams& params, const CollectiveOperators& ops);

// exp(i pi Jz), diagonal
Mat parity_operator(const SpinSector& sector);

// <psi|A|psi>, real part
double expectation(const Vec& psi, const Mat& a);

}  // namespace trotterlab
