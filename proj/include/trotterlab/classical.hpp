#pragma once

#include <cstdint>
#include <vector>

#include "trotterlab/spin.hpp"

namespace trotterlab {

// Point (X, Y, Z) on the unit sphere.
using ClassicalState = Eigen::Vector3d;
using TangentMap = Eigen::Matrix3d;

// Right-hand side of the mean-field flow for H(s).
ClassicalState flow_rhs(const ClassicalState& x, const ModelParams& params);
ClassicalState flow_step_rk4(const ClassicalState& x, const ModelParams& params, double dt);

// mean-field energy -(1-s) Z - (s/p) X^p
double flow_energy(const ClassicalState& x, const ModelParams& params);

// Rotation about z by alpha = -(1-s) tau, then the kick about x by angle k X^{p-1} with k = -s tau.
ClassicalState kicked_map_step(const ClassicalState& x, const ModelParams& params);
TangentMap tangent_map(const ClassicalState& x, const ModelParams& params);

struct LyapunovStats {
    double mean = 0.0;
    double max = 0.0;
    std::vector<double> values;
};

inline constexpr int kRenormalizeEvery = 1000;

// Largest exponent per map step from QR re-orthonormalized tangent frames.
// The first 10% of the steps are discarded.
double lyapunov_exponent(const ModelParams& params, const ClassicalState& init, int n_steps);

// Deterministic per-index substream of a 64-bit seed.
std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t index);
ClassicalState uniform_sphere_point(std::uint64_t seed, std::uint64_t index);

// Exponents over n_points initial states drawn uniformly on the sphere.
LyapunovStats lyapunov_averaged(const ModelParams& params, int n_points, int n_steps, std::uint64_t seed);

struct TrajectoryRow {
    int trajectory_id;
    int step;
    ClassicalState x;
};

// Records steps 0, stride, 2 stride, ... <= n_steps of every trajectory.
std::vector<TrajectoryRow> phase_portrait(const ModelParams& params, const std::vector<ClassicalState>& inits,
                                          int n_steps, int stride);

ClassicalState from_angles(double theta, double phi);

}  // namespace trotterlab
