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

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "escbranch/bench.hpp"
#include "escbranch/errors.hpp"
#include "escbranch/frequency.hpp"
#include "escbranch/ode.hpp"

using namespace escbranch;
using std::numbers::pi;

namespace {

LinearizedPlant first_order() {
    LinearizedPlant l;
    l.A = Matrix::Constant(1, 1, -1.0);
    l.B = Vector::Constant(1, 1.0);
    l.C = RowVector::Constant(1, 1.0);
    return l;
}

std::vector<double> sample(double (*fn)(double, double), double omega, int periods, int per_period) {
    const double dt = 2 * pi / omega / per_period;
    std::vector<double> out;
    for (int j = 0; j <= periods * per_period; ++j) out.push_back(fn(j * dt, omega));
    return out;
}

}  // namespace

TEST_SUITE("frequency") {

TEST_CASE("first-order lag at omega = 1 and omega = 0") {
    const ComplexResponse r = plant_response(first_order(), 1.0);
    CHECK(r.value.real() == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(r.value.imag() == doctest::Approx(-0.5).epsilon(1e-15));
    CHECK(r.magnitude == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-15));
    CHECK(r.phase == doctest::Approx(-pi / 4).epsilon(1e-15));
    const ComplexResponse dc = plant_response(first_order(), 0.0);
    CHECK(dc.value.real() == doctest::Approx(1.0));
    CHECK(dc.value.imag() == 0.0);
}

TEST_CASE("filters") {
    EscConfig cfg;
    cfg.omega = 0.4;
    cfg.omega_h = cfg.omega_l = 0.04;
    const ComplexResponse hp = filter_response(cfg, FilterKind::HighPass, cfg.omega);
    CHECK(hp.phase == doctest::Approx(pi / 2 - std::atan(10.0)).epsilon(1e-14));
    CHECK(filter_response(cfg, FilterKind::LowPass, 0.0).value == Complex(1.0, 0.0));
    CHECK(filter_response(cfg, FilterKind::HighPass, 0.0).value == Complex(0.0, 0.0));
}

TEST_CASE("config validation") {
    EscConfig cfg;
    CHECK(cfg.validate().empty());
    cfg.k = 0.0;
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg.k = -0.5;
    CHECK(cfg.validate().empty());
    cfg.omega_h = 1.0;
    CHECK(cfg.validate().size() == 1);
    cfg.a = 0.0;
    CHECK_THROWS_AS(cfg.validate(), Error);
    const EscConfig r = EscConfig::with_ratio(0.5, 0.1, 0.01, 0.001);
    CHECK(r.omega_h == doctest::Approx(0.05));
    CHECK(r.omega_l == doctest::Approx(0.05));
}

TEST_CASE("harmonic extraction of elementary signals") {
    const double omega = 0.7;
    const double dt = 2 * pi / omega / 128;
    auto s = sample([](double t, double w) { return std::sin(w * t); }, omega, 3, 128);
    HarmonicCoefficients h = extract_harmonics(s, 0.0, dt, omega);
    CHECK(std::abs(h.c1 - Complex(0.0, -0.5)) <= 1e-14);
    CHECK(std::abs(h.c0) <= 1e-14);
    s = sample([](double, double) { return 3.0; }, omega, 2, 128);
    h = extract_harmonics(s, 0.0, dt, omega);
    CHECK(std::abs(h.c0 - 3.0) <= 1e-14);
    CHECK(std::abs(h.c1) <= 1e-14);
    s = sample([](double t, double w) { return std::cos(w * t) + 2.0; }, omega, 1, 128);
    h = extract_harmonics(s, 0.0, dt, omega);
    CHECK(std::abs(h.c0 - 2.0) <= 1e-14);
    CHECK(std::abs(h.c1 - 0.5) <= 1e-14);
}

TEST_CASE("harmonic extraction rejects a fractional window") {
    const double omega = 1.0;
    const double dt = 2 * pi / omega / 128;
    std::vector<double> s(128 + 40, 1.0);
    CHECK_THROWS_AS(extract_harmonics(s, 0.0, dt, omega), Error);
}

TEST_CASE("response is linear in C and conjugate symmetric") {
    const PlantModel p = make_plant("reactor");
    const LinearizedPlant lin = linearize(p, solve_equilibrium(p, 0.3));
    for (double alpha : {-2.5, 0.37, 11.0}) {
        LinearizedPlant scaled = lin;
        scaled.C *= alpha;
        const Complex g = plant_response(lin, 0.4).value;
        CHECK(std::abs(plant_response(scaled, 0.4).value - alpha * g) <= 1e-14 * std::abs(alpha * g) + 1e-300);
    }
    for (double w : {0.01, 0.4, 3.0}) {
        const Complex plus = transfer_at(lin, Complex(0.0, w));
        const Complex minus = transfer_at(lin, Complex(0.0, -w));
        CHECK(std::abs(minus - std::conj(plus)) <= 1e-13 * std::abs(plus));
    }
}

TEST_CASE("dense and triangular solves agree") {
    // A full (non-triangular) realization of the same reactor response, via a similarity transform.
    const PlantModel p = make_plant("reactor");
    const LinearizedPlant lin = linearize(p, solve_equilibrium(p, 0.2));
    Matrix t = Matrix::Identity(lin.A.rows(), lin.A.cols());
    t(0, lin.A.cols() - 1) = 0.3;
    t(5, 60) = -0.2;
    LinearizedPlant full = lin;
    const Matrix ti = t.inverse();
    full.A = t * lin.A * ti;
    full.B = t * lin.B;
    full.C = lin.C * ti;
    const Complex a = plant_response(lin, 0.4).value;
    const Complex b = plant_response(full, 0.4).value;
    CHECK(std::abs(a - b) <= 1e-10 * std::abs(a));
}

TEST_CASE("an eigenvalue on the imaginary axis is a singular solve") {
    LinearizedPlant l;
    l.A = Matrix::Zero(1, 1);
    l.B = Vector::Constant(1, 1.0);
    l.C = RowVector::Constant(1, 1.0);
    CHECK_THROWS_AS(plant_response(l, 0.0), Error);
}

TEST_CASE("reactor response matches a simulated harmonic probe") {
    // Drive the nonlinear plant with v(t) = v0 + eps sin(omega t) and compare
    // the first harmonic of y with G(i omega) * c1(v).
    const PlantModel p = make_plant("reactor");
    const double v0 = 0.3, eps = 1e-5, omega = 0.4;
    const Equilibrium eq = solve_equilibrium(p, v0);
    const Complex g = plant_response(linearize(p, eq), omega).value;

    const double period = 2 * pi / omega;
    const int per = 256, settle = 6, measure = 2;
    std::vector<double> times;
    for (int j = 0; j <= measure * per; ++j) times.push_back(settle * period + j * period / per);
    std::vector<double> y;
    DormandPrince45 ode(OdeOptions{.rtol = 1e-12, .atol = 1e-14});
    ode.integrate([&](double t, const Vector& x, Vector& dx) { dx = p.f(x, v0 + eps * std::sin(omega * t)); }, 0.0,
                  eq.x_bar, times.back(), times, [&](double, const Vector& x) { y.push_back(p.h(x)); });
    const HarmonicCoefficients h = extract_harmonics(y, times.front(), period / per, omega);
    const Complex probe = h.c1 / Complex(0.0, -0.5 * eps);
    CHECK(std::abs(probe - g) / std::abs(g) <= 1e-3);
}

}  // TEST_SUITE
