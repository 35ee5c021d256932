#include "trotterlab/classical.hpp"

#include <cmath>
#include <stdexcept>

namespace trotterlab {

namespace {

double ipow(double x, int n) {
    double r = 1.0;
    for (int i = 0; i < n; ++i) r *= x;
    return r;
}

}  // namespace

ClassicalState flow_rhs(const ClassicalState& x, const ModelParams& params) {
    const double s = params.s;
    const double xp = ipow(x(0), params.p - 1);
    return ClassicalState((1.0 - s) * x(1), -(1.0 - s) * x(0) + s * xp * x(2), -s * xp * x(1));
}

ClassicalState flow_step_rk4(const ClassicalState& x, const ModelParams& params, double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("flow_step_rk4: dt must be > 0");
    const ClassicalState k1 = flow_rhs(x, params);
    const ClassicalState k2 = flow_rhs(x + 0.5 * dt * k1, params);
    const ClassicalState k3 = flow_rhs(x + 0.5 * dt * k2, params);
    const ClassicalState k4 = flow_rhs(x + dt * k3, params);
    return x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

double flow_energy(const ClassicalState& x, const ModelParams& params) {
    return -(1.0 - params.s) * x(2) - params.s / params.p * ipow(x(0), params.p);
}

ClassicalState kicked_map_step(const ClassicalState& x, const ModelParams& params) {
    const double a = params.alpha();
    const double ca = std::cos(a), sa = std::sin(a);
    const double x1 = x(0) * ca - x(1) * sa;
    const double w = x(0) * sa + x(1) * ca;
    const double th = params.kick() * ipow(x1, params.p - 1);
    const double ct = std::cos(th), st = std::sin(th);
    return ClassicalState(x1, ct * w - st * x(2), st * w + ct * x(2));
}

TangentMap tangent_map(const ClassicalState& x, const ModelParams& params) {
    const double a = params.alpha();
    const double ca = std::cos(a), sa = std::sin(a);
    const double x1 = x(0) * ca - x(1) * sa;
    const double w = x(0) * sa + x(1) * ca;
    const double k = params.kick();
    const double th = k * ipow(x1, params.p - 1);
    const double dth = k * (params.p - 1) * ipow(x1, params.p - 2);
    const double ct = std::cos(th), st = std::sin(th);
    const double y2 = ct * w - st * x(2);
    const double z2 = st * w + ct * x(2);

    TangentMap rot;
    rot << ca, -sa, 0.0, sa, ca, 0.0, 0.0, 0.0, 1.0;
    TangentMap kick;
    kick << 1.0, 0.0, 0.0, -dth * z2, ct, -st, dth * y2, st, ct;
    return kick * rot;
}

double lyapunov_exponent(const ModelParams& params, const ClassicalState& init, int n_steps) {
    if (n_steps < 10) throw std::invalid_argument("lyapunov_exponent: n_steps too small");
    const int transient = n_steps / 10;
    ClassicalState x = init.normalized();
    Eigen::Matrix3d q = Eigen::Matrix3d::Identity();
    double acc = 0.0;
    for (int step = 0; step < n_steps; ++step) {
        q = tangent_map(x, params) * q;
        // modified Gram-Schmidt QR of the propagated frame
        const double r00 = q.col(0).norm();
        q.col(0) /= r00;
        q.col(1) -= q.col(0).dot(q.col(1)) * q.col(0);
        q.col(2) -= q.col(0).dot(q.col(2)) * q.col(0);
        q.col(1).normalize();
        q.col(2) -= q.col(1).dot(q.col(2)) * q.col(1);
        q.col(2).normalize();
        if (step >= transient) acc += std::log(r00);
        x = kicked_map_step(x, params);
        if ((step + 1) % kRenormalizeEvery == 0) x.normalize();
    }
    return acc / (n_steps - transient);
}

std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t index) {
    // splitmix64 finalizer over (seed, index)
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (index + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

ClassicalState uniform_sphere_point(std::uint64_t seed, std::uint64_t index) {
    const std::uint64_t a = substream_seed(seed, 2 * index);
    const std::uint64_t b = substream_seed(seed, 2 * index + 1);
    const double u = static_cast<double>(a >> 11) * 0x1.0p-53;
    const double v = static_cast<double>(b >> 11) * 0x1.0p-53;
    const double z = 2.0 * u - 1.0;
    const double phi = 2.0 * kPi * v;
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    return ClassicalState(r * std::cos(phi), r * std::sin(phi), z);
}

LyapunovStats lyapunov_averaged(const ModelParams& params, int n_points, int n_steps, std::uint64_t seed) {
    if (n_points < 1) throw std::invalid_argument("lyapunov_averaged: n_points must be >= 1");
    LyapunovStats out;
    out.values.reserve(n_points);
    double sum = 0.0;
    for (int i = 0; i < n_points; ++i) {
        const double l = lyapunov_exponent(params, uniform_sphere_point(seed, i), n_steps);
        out.values.push_back(l);
        sum += l;
        out.max = (i == 0) ? l : std::max(out.max, l);
    }
    out.mean = sum / n_points;
    return out;
}

std::vector<TrajectoryRow> phase_portrait(const ModelParams& params, const std::vector<ClassicalState>& inits,
                                          int n_steps, int stride) {
    if (stride < 1) throw std::invalid_argument("phase_portrait: stride must be >= 1");
    if (n_steps < 0) throw std::invalid_argument("phase_portrait: n_steps must be >= 0");
    std::vector<TrajectoryRow> rows;
    rows.reserve(inits.size() * (n_steps / stride + 1));
    for (std::size_t id = 0; id < inits.size(); ++id) {
        ClassicalState x = inits[id];
        rows.push_back({static_cast<int>(id), 0, x});
        for (int step = 1; step <= n_steps; ++step) {
            x = kicked_map_step(x, params);
            if (step % kRenormalizeEvery == 0) x.normalize();
            if (step % stride == 0) rows.push_back({static_cast<int>(id), step, x});
        }
    }
    return rows;
}

ClassicalState from_angles(double theta, double phi) {
    return ClassicalState(std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta));
}

}  // namespace trotterlab
