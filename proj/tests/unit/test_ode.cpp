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
#include <vector>

#include "escbranch/errors.hpp"
#include "escbranch/ode.hpp"

using namespace escbranch;

namespace {

// y' = -y + sin t, y(0) = 1; y(t) = 1.5 e^{-t} + (sin t - cos t) / 2.
void forced_decay(double t, const Vector& y, Vector& dy) {
    dy.resize(1);
    dy(0) = -y(0) + std::sin(t);
}
double forced_decay_exact(double t) { return 1.5 * std::exp(-t) + 0.5 * (std::sin(t) - std::cos(t)); }

double fixed_step_error(double h) {
    // Tolerances loose enough that every step of size h is accepted.
    DormandPrince45 ode(OdeOptions{.rtol = 1e-3, .atol = 1e-3, .max_step = h, .first_step = h});
    const Vector y = ode.integrate(forced_decay, 0.0, Vector::Constant(1, 1.0), 2.0);
    CHECK(ode.stats().rejected == 0);
    return std::abs(y(0) - forced_decay_exact(2.0));
}

}  // namespace

TEST_SUITE("ode") {

TEST_CASE("exponential decay to tolerance") {
    DormandPrince45 ode(OdeOptions{.rtol = 1e-10, .atol = 1e-12});
    const Vector y = ode.integrate([](double, const Vector& y, Vector& dy) { dy = -y; }, 0.0,
                                   Vector::Constant(1, 1.0), 5.0);
    CHECK(y(0) == doctest::Approx(std::exp(-5.0)).epsilon(1e-8));
    CHECK(ode.stats().steps > 0);
}

TEST_CASE("fixed-step convergence is fifth order") {
    const double coarse = fixed_step_error(0.2);
    const double fine = fixed_step_error(0.1);
    const double order = std::log2(coarse / fine);
    CHECK(order > 4.5);
    CHECK(order < 6.0);
}

TEST_CASE("tightening the tolerance tightens the error") {
    double previous = 1.0;
    for (double tol : {1e-4, 1e-6, 1e-8, 1e-10}) {
        DormandPrince45 ode(OdeOptions{.rtol = tol, .atol = tol});
        const Vector y = ode.integrate(forced_decay, 0.0, Vector::Constant(1, 1.0), 10.0);
        const double err = std::abs(y(0) - forced_decay_exact(10.0));
        CHECK(err < previous);
        CHECK(err < 100.0 * tol);
        previous = err;
    }
}

TEST_CASE("dense output is accurate between steps") {
    std::vector<double> times;
    for (int i = 0; i <= 100; ++i) times.push_back(0.1 * i);
    DormandPrince45 ode(OdeOptions{.rtol = 1e-10, .atol = 1e-12});
    double worst = 0.0;
    int calls = 0;
    ode.integrate(forced_decay, 0.0, Vector::Constant(1, 1.0), 10.0, times, [&](double t, const Vector& y) {
        worst = std::max(worst, std::abs(y(0) - forced_decay_exact(t)));
        ++calls;
    });
    CHECK(calls == 101);
    CHECK(worst < 1e-8);
}

TEST_CASE("replay repeats the step sequence as a smooth map") {
    const OdeRhs rhs = [](double t, const Vector& y, Vector& dy) {
        dy.resize(2);
        dy(0) = y(1);
        dy(1) = -y(0) - 0.1 * y(1) * y(1) * y(1) + std::cos(t);
    };
    Vector y0(2);
    y0 << 1.0, 0.0;
    DormandPrince45 ode(OdeOptions{.rtol = 1e-8, .atol = 1e-10});
    const Vector y1 = ode.integrate(rhs, 0.0, y0, 6.0);
    CHECK((ode.replay(rhs, 0.0, y0) - y1).cwiseAbs().maxCoeff() == 0.0);
    // A perturbed replay differs smoothly: halving the perturbation halves the change.
    Vector d(2);
    d << 1e-6, 0.0;
    const double big = (ode.replay(rhs, 0.0, y0 + d) - y1).norm();
    const double small = (ode.replay(rhs, 0.0, y0 + 0.5 * d) - y1).norm();
    CHECK(big / small == doctest::Approx(2.0).epsilon(1e-3));
}

TEST_CASE("finite-time blow-up collapses the step") {
    DormandPrince45 ode(OdeOptions{.rtol = 1e-8, .atol = 1e-10});
    try {
        ode.integrate([](double, const Vector& y, Vector& dy) { dy = y.cwiseProduct(y); }, 0.0,
                      Vector::Constant(1, 1.0), 2.0);
        FAIL("expected step-size underflow");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::StepSizeUnderflow);
    }
}

TEST_CASE("tolerances outside the supported range are rejected") {
    CHECK_THROWS_AS(OdeOptions{.rtol = 1e-2}.validate(), Error);
    CHECK_THROWS_AS(OdeOptions{.atol = 1e-16}.validate(), Error);
    CHECK_NOTHROW(OdeOptions{}.validate());
}

}  // TEST_SUITE
