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

#include "escbranch/bench.hpp"
#include "escbranch/errors.hpp"
#include "escbranch/plant.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace escbranch;

TEST_SUITE("plant") {

TEST_CASE("linear plant equilibrium is the explicit solution") {
    const PlantModel p = fixture::scalar_plant([](double x, double u) { return -x + u; }, Interval{-5, 5});
    const Equilibrium eq = solve_equilibrium(p, 2.0);
    CHECK(eq.x_bar(0) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(eq.residual <= 1e-14);
}

TEST_CASE("reactor equilibrium matches the cell-by-cell profile") {
    const PlantModel p = make_plant("reactor");
    for (double v : {0.02, 0.25, 1.2}) {
        const Equilibrium eq = solve_equilibrium(p, v);
        const oracle::ReactorProfile ref = oracle::reactor_profile(v);
        for (int j = 0; j < 40; ++j) {
            CHECK(eq.x_bar(j) == doctest::Approx(ref.a[j]).epsilon(1e-10));
            CHECK(eq.x_bar(40 + j) == doctest::Approx(ref.b[j]).epsilon(1e-10));
        }
    }
}

TEST_CASE("hammerstein equilibrium at its optimum is zero") {
    const Equilibrium eq = solve_equilibrium(make_plant("hammerstein"), 1.0);
    CHECK(std::abs(eq.x_bar(0)) <= 1e-14);
}

TEST_CASE("re-solving from an equilibrium leaves it in place") {
    const PlantModel p = make_plant("reactor");
    const Equilibrium eq = solve_equilibrium(p, 0.3);
    const Equilibrium again = solve_equilibrium(p, 0.3, eq.x_bar);
    CHECK((again.x_bar - eq.x_bar).cwiseAbs().maxCoeff() <= 1e-10 * (1.0 + eq.x_bar.cwiseAbs().maxCoeff()));
}

TEST_CASE("a vanishing Jacobian is reported as SingularJacobian") {
    // u - x^2 = 0 started from x = 0, where df/dx = 0.
    const PlantModel p = fixture::scalar_plant([](double x, double u) { return u - x * x; }, Interval{0, 2});
    try {
        solve_equilibrium(p, 1.0, Vector::Zero(1));
        FAIL("expected an error");
    } catch (const EquilibriumError& e) {
        CHECK(e.kind() == ErrorKind::SingularJacobian);
    }
}

TEST_CASE("equilibrium maps of the simple plants") {
    const std::vector<double> grid{-1.0, -0.5, 0.0, 1.0, 3.0};
    const PlantModel lin = fixture::scalar_plant([](double x, double u) { return -x + u; }, Interval{-5, 5});
    for (const MapPoint& m : equilibrium_map(lin, grid)) CHECK(m.J == doctest::Approx(m.u).epsilon(1e-12));
    for (const MapPoint& m : equilibrium_map(make_plant("hammerstein"), grid))
        CHECK(m.J == doctest::Approx(-(m.u - 1.0) * (m.u - 1.0)).epsilon(1e-12));
}

TEST_CASE("reactor map peaks where the discretized oracle peaks") {
    std::vector<double> grid;
    for (int i = 0; i <= 1000; ++i) grid.push_back(0.1 + 0.5 * i / 1000.0);
    EquilibriumMapOptions opts;
    opts.threads = 2;
    const auto map = equilibrium_map(make_plant("reactor"), grid, opts);
    std::size_t best = 0;
    for (std::size_t i = 0; i < map.size(); ++i) {
        CHECK(map[i].J == doctest::Approx(oracle::reactor_output(map[i].u)).epsilon(1e-10));
        if (map[i].J > map[best].J) best = i;
    }
    CHECK(std::abs(map[best].u - oracle::reactor_argmax()) <= 0.5 * 0.5 / 1000.0 + 1e-12);
}

TEST_CASE("map results do not depend on the thread count") {
    std::vector<double> grid;
    for (int i = 0; i < 300; ++i) grid.push_back(0.02 + i * 0.0039);
    const PlantModel p = make_plant("reactor");
    EquilibriumMapOptions one, four;
    four.threads = 4;
    const auto a = equilibrium_map(p, grid, one);
    const auto b = equilibrium_map(p, grid, four);
    for (std::size_t i = 0; i < grid.size(); ++i) CHECK(a[i].J == b[i].J);
}

TEST_CASE("linearization of the scalar plants") {
    const PlantModel lin = make_plant("linear");
    const LinearizedPlant l = linearize(lin, solve_equilibrium(lin, 0.7));
    CHECK(l.A(0, 0) == -1.0);
    CHECK(l.B(0) == 1.0);
    CHECK(l.C(0) == 1.0);
    const PlantModel ham = make_plant("hammerstein");
    CHECK(linearize(ham, solve_equilibrium(ham, 1.0)).B(0) == 0.0);
}

TEST_CASE("steady-state gain equals the slope of the equilibrium map") {
    const PlantModel p = make_plant("reactor");
    for (double v : {0.05, 0.12, 0.25, 0.4, 0.9}) {
        const double gain = linearize(p, solve_equilibrium(p, v)).steady_state_gain();
        const double slope = oracle::central_difference(&oracle::reactor_output, v, 40, 1e-5 * v);
        CHECK(gain == doctest::Approx(slope).epsilon(1e-4).scale(1e-6));
    }
    const PlantModel ham = make_plant("hammerstein");
    for (double u : {-0.5, 0.5, 1.5}) {
        const double gain = linearize(ham, solve_equilibrium(ham, u)).steady_state_gain();
        const double h = 1e-5;
        const double slope = (steady_state_output(ham, u + h) - steady_state_output(ham, u - h)) / (2 * h);
        CHECK(gain == doctest::Approx(slope).epsilon(1e-4));
    }
}

TEST_CASE("reactor gain nearly vanishes at the optimum") {
    const PlantModel p = make_plant("reactor");
    const double v_star = oracle::reactor_argmax();
    // Golden section pins the argmax to about sqrt(eps) relative, so the gain there is O(1e-8).
    CHECK(std::abs(linearize(p, solve_equilibrium(p, v_star)).steady_state_gain()) <= 1e-6);
}

TEST_CASE("analytic and finite-difference linearizations agree") {
    for (const char* name : {"reactor", "hammerstein", "linear"}) {
        const PlantModel p = make_plant(name);
        for (double u : {p.input_domain.lo + 0.1, 0.5 * (p.input_domain.lo + p.input_domain.hi)}) {
            const Equilibrium eq = solve_equilibrium(p, u);
            const LinearizedPlant an = linearize(p, eq, JacobianSource::Automatic);
            const LinearizedPlant fd = linearize(p, eq, JacobianSource::FiniteDifference);
            const double sa = 1.0 + an.A.cwiseAbs().maxCoeff();
            CHECK((an.A - fd.A).cwiseAbs().maxCoeff() <= 1e-5 * sa);
            CHECK((an.B - fd.B).cwiseAbs().maxCoeff() <= 1e-5 * (1.0 + an.B.cwiseAbs().maxCoeff()));
            CHECK((an.C - fd.C).cwiseAbs().maxCoeff() <= 1e-5);
        }
    }
}

TEST_CASE("inputs outside the domain are rejected") {
    CHECK_THROWS_AS(solve_equilibrium(make_plant("reactor"), 5.0), Error);
    CHECK_THROWS_AS(solve_equilibrium(make_plant("reactor"), std::nan("")), Error);
}

}  // TEST_SUITE
