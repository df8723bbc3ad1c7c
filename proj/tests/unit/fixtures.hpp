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
// Small plants built directly from callables, for tests that need a shape the
// benchmark registry does not provide.
#ifndef ESCBRANCH_TEST_FIXTURES_HPP
#define ESCBRANCH_TEST_FIXTURES_HPP

#include <functional>

#include "escbranch/plant.hpp"

namespace fixture {

using escbranch::Interval;
using escbranch::PlantModel;
using escbranch::Vector;

/// Scalar plant dx/dt = f(x, u), y = x, without analytic Jacobians.
inline PlantModel scalar_plant(std::function<double(double, double)> f, Interval domain) {
    PlantModel p;
    p.name = "scalar";
    p.n = 1;
    p.input_domain = domain;
    p.f = [f](const Vector& x, double u) {
        Vector dx(1);
        dx(0) = f(x(0), u);
        return dx;
    };
    p.h = [](const Vector& x) { return x(0); };
    return p;
}

/// dx/dt = -x + u - u^3 / 3: G_u(s) = (1 - u^2) / (s + 1).
inline PlantModel quadratic_gain_plant() {
    return scalar_plant([](double x, double u) { return -x + u - u * u * u / 3.0; }, Interval{-0.9, 0.9});
}

}  // namespace fixture

#endif  // ESCBRANCH_TEST_FIXTURES_HPP
