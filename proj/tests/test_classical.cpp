#include <doctest.h>

#include <cmath>

#include "trotterlab/classical.hpp"
#include "trotterlab/dynamics.hpp"
#include "trotterlab/instability.hpp"

using namespace trotterlab;

namespace {

TangentMap finite_difference(const ClassicalState& x, const ModelParams& mp, double h) {
    TangentMap m;
    for (int j = 0; j < 3; ++j) {
        ClassicalState a = x, b = x;
        a(j) += h;
        b(j) -= h;
        m.col(j) = (kicked_map_step(a, mp) - kicked_map_step(b, mp)) / (2 * h);
    }
    return m;
}

double wrapped_gap(double a, double b) { return std::abs(wrap_phase(a - b)); }

}  // namespace

TEST_CASE("mean-field flow") {
    SUBCASE("precession at s = 0") {
        const double dt = 1e-3;
        const ClassicalState x = flow_step_rk4(ClassicalState(1, 0, 0), {2, 0.0, 1.0}, dt);
        CHECK(x(0) < 1.0);
        CHECK(std::abs(x(1)) == doctest::Approx(dt).epsilon(1e-6));
        CHECK(x(2) == 0.0);
    }
    SUBCASE("pole is a fixed point for p >= 3") {
        for (int p : {3, 4, 5}) {
            const ClassicalState x = flow_step_rk4(ClassicalState(0, 0, 1), {p, 0.6, 1.0}, 0.01);
            CHECK((x - ClassicalState(0, 0, 1)).norm() == 0.0);
        }
    }
    SUBCASE("energy conservation") {
        const ModelParams mp{2, 0.1, 1.0};
        ClassicalState x = from_angles(1.0, 0.3);
        const double e0 = flow_energy(x, mp);
        for (int i = 0; i < 10000; ++i) x = flow_step_rk4(x, mp, 1e-3);
        CHECK(std::abs(flow_energy(x, mp) - e0) < 1e-10);
        CHECK(std::abs(x.norm() - 1.0) < 1e-10);
    }
    CHECK_THROWS(flow_step_rk4(ClassicalState(1, 0, 0), {2, 0.1, 1.0}, 0.0));
}

TEST_CASE("kicked map") {
    const ClassicalState r = kicked_map_step(ClassicalState(1, 0, 0), {2, 0.0, kPi / 2});
    CHECK((r - ClassicalState(0, -1, 0)).norm() < 1e-15);

    const ClassicalState x = from_angles(0.9, 2.1);
    CHECK(kicked_map_step(x, {2, 1.0, 0.8})(0) == x(0));

    SUBCASE("small tau follows the flow") {
        const ModelParams mp{2, 0.1, 0.05};
        ClassicalState a(1 / std::sqrt(2.0), 0, 1 / std::sqrt(2.0)), b = a;
        double worst = 0.0;
        for (int m = 0; m < 200; ++m) {
            a = kicked_map_step(a, mp);
            for (int k = 0; k < 50; ++k) b = flow_step_rk4(b, mp, mp.tau / 50);
            worst = std::max(worst, (a - b).norm());
        }
        CHECK(worst <= 0.01);
    }
    SUBCASE("norm preservation") {
        const ModelParams mp{3, 0.7, 4.3};
        ClassicalState y = from_angles(2.0, 0.4);
        for (int i = 0; i < 1000; ++i) {
            const ClassicalState z = kicked_map_step(y, mp);
            CHECK(std::abs(z.squaredNorm() - y.squaredNorm()) < 1e-12);
            y = z;
        }
        const auto rows = phase_portrait(mp, {from_angles(2.0, 0.4)}, 1000000, 1000000);
        REQUIRE(rows.size() == 2);
        CHECK(std::abs(rows[1].x.squaredNorm() - 1.0) < 1e-9);
    }
    SUBCASE("isometry at s = 0") {
        const ModelParams mp{2, 0.0, 1.234};
        ClassicalState a = from_angles(0.4, 0.1), b = from_angles(2.5, 4.0);
        for (int i = 0; i < 100; ++i) {
            const double d0 = (a - b).norm();
            a = kicked_map_step(a, mp);
            b = kicked_map_step(b, mp);
            CHECK(std::abs((a - b).norm() - d0) < 1e-12);
        }
    }
}

TEST_CASE("tangent map") {
    const ModelParams rot{3, 0.0, 1.1};
    const TangentMap m0 = tangent_map(from_angles(1.0, 1.0), rot);
    CHECK((m0 - tangent_map(from_angles(2.0, 5.0), rot)).norm() == 0.0);
    CHECK(m0(0, 0) == doctest::Approx(std::cos(rot.alpha())));
    CHECK(m0(1, 0) == doctest::Approx(std::sin(rot.alpha())));
    CHECK((m0 * m0.transpose() - TangentMap::Identity()).norm() < 1e-14);

    for (std::uint64_t i = 0; i < 20; ++i) {
        const ClassicalState x = uniform_sphere_point(99, i);
        for (const ModelParams& mp : {ModelParams{2, 0.5, 3.0}, ModelParams{4, 0.8, 6.0}, ModelParams{3, 0.2, 1.7}}) {
            const TangentMap m = tangent_map(x, mp);
            CHECK((m - finite_difference(x, mp, 1e-6)).cwiseAbs().maxCoeff() <= 1e-5);
            CHECK(std::abs(std::abs(m.determinant()) - 1.0) < 1e-6);
        }
    }
}

TEST_CASE("Lyapunov exponents") {
    CHECK(std::abs(lyapunov_exponent({2, 0.0, 2.0}, from_angles(1.0, 0.5), 100000)) < 1e-3);
    CHECK(std::abs(lyapunov_averaged({4, 0.0, 3.0}, 5, 100000, 1).mean) < 1e-3);

    const double tau = kPi / 0.9;
    CHECK(std::abs(lyapunov_exponent({2, 0.1, tau}, from_angles(1.3, 0.7), 100000)) < 1e-2);

    const auto chaotic = lyapunov_averaged({2, 0.8, 6.0}, 10, 100000, 5);
    CHECK(chaotic.mean > 0.1);
    const auto chaotic4 = lyapunov_averaged({4, 0.8, 6.0}, 10, 100000, 5);
    CHECK(chaotic4.mean > 0.0);

    const auto a = lyapunov_averaged({3, 0.5, 4.0}, 4, 2000, 42);
    const auto b = lyapunov_averaged({3, 0.5, 4.0}, 4, 2000, 42);
    CHECK(a.values == b.values);
    CHECK(a.mean == b.mean);
    CHECK(a.max == *std::max_element(a.values.begin(), a.values.end()));
    CHECK_THROWS(lyapunov_exponent({2, 0.1, 1.0}, from_angles(1, 1), 5));
}

TEST_CASE("seeded sphere points") {
    ClassicalState mean = ClassicalState::Zero();
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        const ClassicalState x = uniform_sphere_point(3, i);
        CHECK(std::abs(x.norm() - 1.0) < 1e-14);
        mean += x / n;
    }
    CHECK(mean.norm() < 0.03);
    CHECK(uniform_sphere_point(3, 17) == uniform_sphere_point(3, 17));
    CHECK(uniform_sphere_point(3, 17) != uniform_sphere_point(4, 17));
    CHECK(substream_seed(0, 0) != substream_seed(0, 1));
}

TEST_CASE("phase portraits") {
    const auto rows = phase_portrait({2, 0.0, 0.9}, {from_angles(1.0, 0.0)}, 100, 1);
    REQUIRE(rows.size() == 101);
    for (const auto& r : rows) CHECK(std::abs(r.x(2) - std::cos(1.0)) < 1e-14);

    const auto strided = phase_portrait({2, 0.3, 0.9}, {from_angles(1, 0), from_angles(2, 1)}, 10, 3);
    REQUIRE(strided.size() == 8);
    CHECK(strided[3].step == 9);
    CHECK(strided[4].trajectory_id == 1);
    CHECK(strided[4].step == 0);
    CHECK_THROWS(phase_portrait({2, 0.3, 0.9}, {}, 10, 0));
}

TEST_CASE("(2,2) lobes under the two-step map") {
    const double s = 0.1, dtau = 0.1;
    const ModelParams mp{2, s, tau_star(2, 1, s) + dtau};
    const double z0 = (1 - s) * dtau / (tau_star(2, 1, s) + dtau) / s;
    const ClassicalState init(std::sqrt(1 - z0 * z0), 0.0, z0);
    const auto rows = phase_portrait(mp, {init}, 2000, 2);
    for (const auto& r : rows) CHECK(r.x(0) > 0.0);
    const auto odd = phase_portrait(mp, {kicked_map_step(init, mp)}, 2000, 2);
    for (const auto& r : odd) CHECK(r.x(0) < 0.0);
}

TEST_CASE("(4,4) lobes are visited cyclically") {
    const double s = 0.1, dtau = 0.01;
    const double tau = tau_star(4, 1, s) + dtau;
    const ModelParams mp{4, s, tau};
    const double a = (1 - s) * dtau / tau;
    const double z0 = 2 * a / s;
    const ClassicalState init(std::sqrt(1 - z0 * z0), 0.0, z0);
    const auto rows = phase_portrait(mp, {init}, 400, 1);
    for (const auto& r : rows) {
        const double expected = -r.step * kPi / 2;
        CHECK(wrapped_gap(std::atan2(r.x(1), r.x(0)), expected) < kPi / 4);
    }
}

TEST_CASE("quantum-classical correspondence at N = 512") {
    const auto ops = build_collective_operators(SpinSector(512));
    const ModelParams mp{2, 0.1, 0.5};
    const double th = 1.0, ph = 0.6, J = ops.sector.J;
    const auto states = evolve(spin_coherent_state(ops.sector, th, ph), floquet_operator(mp, ops), 50);
    ClassicalState x = from_angles(th, ph);
    double worst = 0.0;
    for (const auto& psi : states) {
        x = kicked_map_step(x, mp);
        const ClassicalState q(expectation(psi, ops.Jx) / J, expectation(psi, ops.Jy) / J, expectation(psi, ops.Jz) / J);
        worst = std::max(worst, (q - x).cwiseAbs().maxCoeff());
    }
    CHECK(worst < 0.05);
}
