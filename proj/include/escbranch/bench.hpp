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
#ifndef ESCBRANCH_BENCH_HPP
#define ESCBRANCH_BENCH_HPP

#include <map>
#include <string>
#include <vector>

#include "escbranch/plant.hpp"

namespace escbranch {

/**
 * @brief Isothermal plug-flow reactor A -> B -> C
 *
 *   da/dt = -v da/dz - k1 a,         a(t, 0) = a0
 *   db/dt = -v db/dz + k1 a - k2 b,  b(t, 0) = b0
 *
 * discretized by first-order upwind differences on n_cells nodes z_j = j/n
 * (the inlet is a ghost node). State (a_1..a_n, b_1..b_n), input v, output
 * b_n at the reactor exit.
 */
struct ReactorConfig {
    double a0 = 1.0;
    double b0 = 0.0;
    double k1 = 1.0;
    double k2 = 0.02;
    int n_cells = 40;
    Interval v_domain{0.02, 1.2};

    void validate() const;
};

PlantModel build_reactor(const ReactorConfig& cfg = {});

/// dx/dt = (-x + g(u)) / tau,  g(u) = -(u - u_star)^2,  y = x.
PlantModel build_hammerstein(double u_star = 1.0, double tau = 1.0);

/// dx/dt = pole x + u, y = x. No extremum; negative control.
PlantModel build_linear(double pole = -1.0);

/// Registry names accepted by make_plant.
std::vector<std::string> plant_names();

/// Recognized override keys per plant:
///   reactor:     a0 b0 k1 k2 n_cells v_min v_max
///   hammerstein: u_star tau u_min u_max
///   linear:      pole u_min u_max
/// Unknown plant names raise UnknownPlant; unknown keys raise InvalidArgument.
PlantModel make_plant(const std::string& name, const std::map<std::string, double>& overrides = {});

}  // namespace escbranch

#endif  // ESCBRANCH_BENCH_HPP
