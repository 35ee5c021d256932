#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "trotterlab/spin.hpp"

namespace trotterlab {

struct InstabilityPoint {
    int p = 2;
    int q = 2;  // offset m - m' of the coupled levels
    int r = 1;  // resonance order
    double tau_star = 0.0;
    double s = 0.0;
    int group = 0;  // points sharing tau_star (within 1e-9) share a group index
};

class DegeneracyError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// {p, p-2, ..., 2} for even p, {p, p-2, ..., 1} for odd p
std::vector<int> coupling_offsets(int p);

double tau_star(int q, int r, double s);
InstabilityPoint make_point(int p, int q, int r, double s);

// All (q, r) with tau* <= tau_max, sorted by tau*.
std::vector<InstabilityPoint> instability_points(int p, double s, double tau_max);

// First-order correction to the Floquet eigenvector that starts at basis state m.
// The corrected vector is |m> + s * correction. Throws DegeneracyError on resonance.
Vec eigenvector_correction(const ModelParams& params, const CollectiveOperators& ops, int m);

struct TauInterval {
    double lo = 0.0;
    double hi = 0.0;
    bool contains(double t) const { return t >= lo && t <= hi; }
};

// Largest first-order shift of the q-harmonic precession frequency produced by the resonant part of
// the kick, per unit s and per unit tau, on the unit sphere: p F(p) max_phi |f_q(phi)| with
// f_q(phi) = (1/(p q)) sum_m cos^p(phi - 2 pi m/q).
double resonance_strength(int p, int q);

// [tau* - delta, tau* + delta], delta = 2 s tau* kappa / (1 - s - 2 s kappa): the detuning at which the
// frequency shift s tau kappa q equals half the unperturbed gap q (1-s) |dtau|. Unbounded if the
// denominator is not positive.
TauInterval immediate_vicinity_mask(const InstabilityPoint& point);

// Whether tau lies in the mask of any first-order instability of (p, s).
bool in_any_mask(int p, double s, double tau);

struct PerturbativeError {
    double value = 0.0;
    bool masked = false;
};

// Closed-form first-order error for a spin coherent state, reusable along a tau sweep.
class CoherentPerturbativeModel {
public:
    CoherentPerturbativeModel(int p, double s, const CollectiveOperators& ops, double theta, double phi);
    PerturbativeError operator()(double tau) const;

private:
    int p_;
    double s_, J_, phi_;
    std::vector<int> qs_;
    std::vector<double> band_;  // sum_m |rho_{m+q,m}| (Jx^p)_{m,m+q}
};

// First-order error for an arbitrary pure state from the bands of its density matrix.
class GeneralPerturbativeModel {
public:
    GeneralPerturbativeModel(int p, double s, const CollectiveOperators& ops, const Vec& state);
    PerturbativeError operator()(double tau) const;

private:
    int p_;
    double s_, J_;
    std::vector<int> qs_;
    std::vector<cplx> band_;  // sum_m rho_{m+q,m} (Jx^p)_{m,m+q}
};

// First-order long-time error of <Jz>/J for a spin coherent state, closed form.
PerturbativeError perturbative_error_coherent(const ModelParams& params, const SpinSector& sector, double theta,
                                              double phi);
// The same expression for an arbitrary pure state, evaluated with its density-matrix bands.
PerturbativeError perturbative_error_general(const ModelParams& params, const CollectiveOperators& ops,
                                             const Vec& state);

// sqrt((p-2)^{p-2} / (p-1)^{p-1}), with F(2) = 1
double width_factor_F(int p);
// Existence bound for the diagonal saddles of the q=4 effective flow: F(p) / 2^{p/2}
double width_factor_G(int p);

struct Width {
    double value = 0.0;
    bool bounded = true;
    bool extrapolated = false;  // r > 1
};

// Detuning bound s tau* W / (1 - s - s W), W = F(p) for q = 2 and G(p) for q = 4.
Width instability_width(int p, int q, double s, int r = 1);

// -(1-s)(dtau/(tau*+dtau)) Jz - s/(p q J^{p-1}) sum_{m<q} (Jx cos th_m + Jy sin th_m)^p, th_m = 2 pi r m / q
Mat effective_hamiltonian(int p, int q, double s, double delta_tau, const CollectiveOperators& ops, int r = 1);
// Even p: the sum over the first q/2 angles, doubled.
Mat effective_hamiltonian_half_sum(int p, int q, double s, double delta_tau, const CollectiveOperators& ops,
                                   int r = 1);

double s_effective(double s, double delta_tau, double tau_star);

// min over sign of ||U_delta(tau*+dtau)^q -/+ exp(-i q (tau*+dtau) H_eff)||_2
double effective_unitary_check(int p, int q, double s, double delta_tau, const CollectiveOperators& ops, int r = 1);

// Classical flow of the effective Hamiltonian, dS/dt = grad e x S, with
// e(S) = -(1-s) tbar Z - s/(p q) sum_m (X cos th_m + Y sin th_m)^p.
struct EffectiveFlow {
    int p, q, r;
    double s, tbar;

    double energy(const Eigen::Vector3d& x) const;
    Eigen::Vector3d gradient(const Eigen::Vector3d& x) const;
    Eigen::Matrix3d hessian(const Eigen::Vector3d& x) const;
    Eigen::Vector3d rhs(const Eigen::Vector3d& x) const;
    Eigen::Matrix3d jacobian(const Eigen::Vector3d& x) const;
};

EffectiveFlow effective_flow(int p, int q, double s, double delta_tau, int r = 1);

// Largest real part among the eigenvalues of a 3x3 matrix.
double max_real_eigenvalue(const Eigen::Matrix3d& m);

// Real roots of z^3 - z + c = 0, ascending, Newton-polished.
std::vector<double> cubic_roots(double c);

struct SaddleData {
    bool exists = false;
    double Z = 0.0, X = 0.0, Y = 0.0;
    double lambda = 0.0;  // growth rate per Trotter step
    double width = 0.0;   // detuning bound of the instability
};

// Saddle at the pole Z = sign(dtau); lambda = (tau*+dtau) sqrt(s(1-s)|dtau|/(tau*+dtau) - ((1-s)dtau/(tau*+dtau))^2)
SaddleData saddle_exponent_22(double s, double delta_tau);
// Diagonal saddle X = Y of the q=4 flow, Z from z^3 - z + 4A = 0, A = (1-s) tbar / s;
// lambda = (tau*+dtau) times the largest real Jacobian eigenvalue.
SaddleData saddle_exponent_44(double s, double delta_tau);
// Saddle on Y = 0 with Z from z^3 - z + A = 0, |Z| > 1/sqrt(3);
// lambda = s (tau*+dtau) sqrt(2 A^2 - X^6).
SaddleData saddle_exponent_42(double s, double delta_tau);

}  // namespace trotterlab
