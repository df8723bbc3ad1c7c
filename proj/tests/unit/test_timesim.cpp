/*
 Copyright 2026 The escbranch Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include <Eigen/Eigenvalues>

#include "escbranch/bench.hpp"
#include "escbranch/errors.hpp"
#include "escbranch/frequency.hpp"
#include "escbranch/stationarity.hpp"
#include "escbranch/timesim.hpp"

using namespace escbranch;
using std::numbers::pi;

namespace {

EscConfig reference_tuning(double omega = 0.4) { return EscConfig::with_ratio(omega, 0.1, 0.01, 0.001); }

EscConfig unforced(EscConfig cfg) {
    cfg.k = 0.0;
    cfg.a = 0.0;
    return cfg;
}

std::vector<StationaryPoint> reactor_points(double omega = 0.4) {
    return find_stationary_points(make_plant("reactor"), reference_tuning(omega), Interval{0.02, 1.2});
}

}  // namespace

TEST_SUITE("timesim") {

TEST_CASE("unforced loop at rest stays at rest") {
    const ClosedLoopSystem sys(make_plant("reactor"), unforced(reference_tuning()));
    const Vector z0 = sys.equilibrium_state(0.3);
    Vector dz;
    sys.rhs(1.234, z0, dz);
    CHECK(dz.cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(z0(sys.xi_index()) == 0.0);
    CHECK(z0(sys.eta_index()) == doctest::Approx(steady_state_output(make_plant("reactor"), 0.3)));
    // Explicit steps on the stiff cells leave noise at the local error tolerance.
    const SimulationOptions opts;
    const double tol = opts.atol + opts.rtol * z0.cwiseAbs().maxCoeff();
    const Trajectory traj = integrate(sys, z0, Interval{0.0, 3 * sys.config().period()}, opts);
    for (const Vector& z : traj.z) CHECK((z - z0).cwiseAbs().maxCoeff() <= tol);
}

TEST_CASE("closed-loop Jacobian matches differences of the right-hand side") {
    const ClosedLoopSystem sys(make_plant("reactor"), reference_tuning());
    Vector z = sys.equilibrium_state(0.2);
    z(sys.xi_index()) = 1e-4;
    const Matrix j = sys.jacobian(0.7, z);
    Vector f0, f1;
    for (int c : {0, 45, sys.u_hat_index(), sys.xi_index(), sys.eta_index()}) {
        const double h = 1e-7;
        Vector zp = z, zm = z;
        zp(c) += h;
        zm(c) -= h;
        sys.rhs(0.7, zp, f1);
        sys.rhs(0.7, zm, f0);
        CHECK(((f1 - f0) / (2 * h) - j.col(c)).cwiseAbs().maxCoeff() <= 1e-5 * (1.0 + j.col(c).cwiseAbs().maxCoeff()));
    }
}

TEST_CASE("linear plant with frozen integrator tracks the frequency response") {
    EscConfig cfg = reference_tuning();
    cfg.k = 0.0;
    cfg.a = 0.01;
    const ClosedLoopSystem sys(make_plant("linear"), cfg);
    const double period = cfg.period();
    const Trajectory traj = integrate(sys, sys.equilibrium_state(0.5), Interval{0.0, 12 * period},
                                      SimulationOptions{.rtol = 1e-11, .atol = 1e-12});
    const int per = 128;
    std::vector<double> y;
    for (std::size_t i = traj.t.size() - 2 * per - 1; i < traj.t.size(); ++i) y.push_back(sys.output(traj.z[i]));
    const HarmonicCoefficients h = extract_harmonics(y, traj.t[traj.t.size() - 2 * per - 1], period / per, cfg.omega);
    const std::complex<double> g = 1.0 / std::complex<double>(1.0, cfg.omega);
    CHECK(std::abs(2.0 * std::abs(h.c1) - cfg.a * std::abs(g)) <= 1e-3 * cfg.a * std::abs(g));
    CHECK(std::abs(h.c1 / std::complex<double>(0.0, -0.5 * cfg.a) - g) <= 1e-3 * std::abs(g));
}

TEST_CASE("integration rejects out-of-range settings") {
    const ClosedLoopSystem sys(make_plant("linear"), reference_tuning());
    const Vector z0 = sys.equilibrium_state(0.0);
    CHECK_THROWS_AS(integrate(sys, z0, Interval{0, 1}, SimulationOptions{.rtol = 1e-2}), Error);
    CHECK_THROWS_AS(integrate(sys, z0, Interval{0, 1}, SimulationOptions{.samples_per_period = 64}), Error);
    CHECK_THROWS_AS(integrate(sys, Vector::Zero(2), Interval{0, 1}), Error);
}

TEST_CASE("frozen linear loop has the open-loop multipliers") {
    EscConfig cfg = reference_tuning();
    cfg.k = 0.0;
    const ClosedLoopSystem sys(make_plant("linear"), cfg);
    const double period = cfg.period();
    const PeriodMap pm = period_map(sys, sys.equilibrium_state(0.2));
    Eigen::EigenSolver<Matrix> es(pm.jacobian);
    std::vector<double> got;
    for (int i = 0; i < 4; ++i) got.push_back(es.eigenvalues()(i).real());
    std::sort(got.begin(), got.end());
    std::vector<double> expected{std::exp(-period), std::exp(-cfg.omega_l * period), std::exp(-cfg.omega_h * period),
                                 1.0};
    std::sort(expected.begin(), expected.end());
    // Difference monodromy columns carry absolute errors near 1e-11, which matters for exp(-T).
    for (int i = 0; i < 4; ++i) CHECK(got[i] == doctest::Approx(expected[i]).epsilon(1e-6).scale(1e-3));
}

TEST_CASE("hammerstein loop settles on a stable orbit at the optimum") {
    const PlantModel p = make_plant("hammerstein");
    const ClosedLoopSystem sys(p, reference_tuning());
    const PeriodicOrbit orbit = shoot_orbit(sys, frozen_orbit_guess(sys, 1.05));
    CHECK(std::abs(orbit.mean_input - 1.0) <= sys.config().a);
    CHECK(floquet_stability(orbit).label == Stability::Stable);
    CHECK(orbit.residual <= 1e-9);

    ShootingOptions variational;
    variational.monodromy = MonodromyMethod::Variational;
    const PeriodicOrbit same = shoot_orbit(sys, orbit.anchor_state, variational);
    for (std::size_t i = 0; i < orbit.floquet_multipliers.size(); ++i)
        CHECK(std::abs(same.floquet_multipliers[i] - orbit.floquet_multipliers[i]) <= 1e-5);

    // The default gain moves the input by about 1e-6 per unit time; settle with a livelier loop.
    const ClosedLoopSystem fast(p, EscConfig::with_ratio(0.4, 0.1, 0.5, 0.05));
    const SettleResult settled = settle(fast, fast.equilibrium_state(0.8), 400);
    CHECK(settled.settled);
    CHECK(std::abs(settled.state(fast.u_hat_index()) - 1.0) < 0.01);
}

TEST_CASE("floquet labels") {
    PeriodicOrbit o;
    o.floquet_multipliers = {Complex(0.9, 0.0), Complex(0.1, 0.2)};
    CHECK(floquet_stability(o).label == Stability::Stable);
    o.floquet_multipliers = {Complex(1.0 + 1e-7, 0.0)};
    CHECK(floquet_stability(o).label == Stability::Marginal);
    o.floquet_multipliers = {Complex(-1.3, 0.0), Complex(0.5, 0.0)};
    const FloquetResult r = floquet_stability(o);
    CHECK(r.label == Stability::Unstable);
    CHECK(r.period_doubling);
    CHECK(r.max_modulus == doctest::Approx(1.3));
    o.floquet_multipliers = {Complex(-1.1, 0.3)};
    CHECK_FALSE(floquet_stability(o).period_doubling);
}

TEST_CASE("reduced model") {
    const PlantModel p = make_plant("reactor");
    const EscConfig cfg = reference_tuning();
    const auto points = reactor_points();
    REQUIRE(points.size() == 5);
    const double fh = filter_response(cfg, FilterKind::HighPass, cfg.omega).magnitude;
    const Stability expected[] = {Stability::Stable, Stability::Unstable, Stability::Stable, Stability::Unstable,
                                  Stability::Stable};
    for (std::size_t i = 0; i < points.size(); ++i) {
        const double g = plant_response(linearize(p, solve_equilibrium(p, points[i].u_bar)), cfg.omega).magnitude;
        CHECK(std::abs(reduced_L(p, cfg, points[i].u_bar)) <= 1e-10 * 0.5 * cfg.a * fh * g + 1e-12 * cfg.a * fh * g);
        CHECK(reduced_stability(p, cfg, points[i]).label == expected[i]);
    }
    // Definitional consistency at an ordinary point.
    const LinearizedPlant lin = linearize(p, solve_equilibrium(p, 0.1));
    const ComplexResponse g = plant_response(lin, cfg.omega);
    const ComplexResponse h = filter_response(cfg, FilterKind::HighPass, cfg.omega);
    CHECK(reduced_L(p, cfg, 0.1) ==
          doctest::Approx(0.5 * cfg.a * h.magnitude * g.magnitude * std::cos(g.phase + h.phase)).epsilon(1e-14));
}

TEST_CASE("hammerstein reduced model follows the gradient") {
    const PlantModel p = make_plant("hammerstein");
    const EscConfig cfg = reference_tuning(0.05);
    CHECK(reduced_L(p, cfg, 1.0) == 0.0);
    CHECK(reduced_L(p, cfg, 0.5) > 0.0);
    CHECK(reduced_L(p, cfg, 1.5) < 0.0);
    StationaryPoint top;
    top.u_bar = 1.0;
    CHECK(reduced_stability(p, cfg, top).label == Stability::Stable);
    EscConfig descending = cfg;
    descending.k = -cfg.k;
    CHECK(reduced_stability(p, descending, top).label == Stability::Unstable);
}

TEST_CASE("reactor stable orbits from three basins") {
    const ClosedLoopSystem sys(make_plant("reactor"), reference_tuning());
    const auto points = reactor_points();
    const std::vector<double> stable_roots{points[0].u_bar, points[2].u_bar, points[4].u_bar};
    int matched = 0;
    for (double root : stable_roots) {
        const PeriodicOrbit orbit = shoot_orbit(sys, frozen_orbit_guess(sys, root * 1.01));
        CHECK(floquet_stability(orbit).label == Stability::Stable);
        CHECK(orbit.mean_input == doctest::Approx(root).epsilon(0.02));
        if (std::abs(orbit.mean_input - root) <= 0.02 * root) ++matched;
    }
    CHECK(matched == 3);
}

TEST_CASE("orbit is lost when the frequency passes the fold") {
    const PlantModel p = make_plant("reactor");
    const auto below = find_stationary_points(p, reference_tuning(0.6), Interval{0.02, 1.2});
    REQUIRE_FALSE(below.empty());
    const StationaryPoint near_opt = below.back();
    CHECK(reduced_stability(p, reference_tuning(0.6), near_opt).label == Stability::Stable);
    const ClosedLoopSystem before(p, reference_tuning(0.6));
    const PeriodicOrbit orbit = shoot_orbit(before, frozen_orbit_guess(before, near_opt.u_bar));
    const ClosedLoopSystem after(p, reference_tuning(0.63));
    try {
        const PeriodicOrbit jumped = shoot_orbit(after, orbit.anchor_state);
        CHECK(std::abs(jumped.mean_input - orbit.mean_input) > 0.02);
    } catch (const Error& e) {
        CHECK((e.kind() == ErrorKind::NewtonDivergence || e.kind() == ErrorKind::RankDeficientJacobian));
    }
}

}  // TEST_SUITE
