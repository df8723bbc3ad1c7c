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
#ifndef ESCBRANCH_PLANT_HPP
#define ESCBRANCH_PLANT_HPP

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "escbranch/linalg.hpp"

namespace escbranch {

/// Analytic derivatives of a plant. All three are evaluated at (x, u).
struct PlantJacobians {
    std::function<Matrix(const Vector& x, double u)> df_dx;
    std::function<Vector(const Vector& x, double u)> df_du;
    std::function<RowVector(const Vector& x)> dh_dx;
};

/**
 * @brief Nonlinear single-input single-output plant
 *
 *   dx/dt = f(x, u),  y = h(x),  x in R^n
 *
 * The plant is assumed open-loop stable with a unique equilibrium x = l(u)
 * for every u in input_domain. Instances are immutable once built and may be
 * shared between threads.
 */
struct PlantModel {
    std::string name;
    int n = 0;
    std::function<Vector(const Vector& x, double u)> f;
    std::function<double(const Vector& x)> h;
    std::optional<PlantJacobians> jacobians;
    Interval input_domain{-1.0, 1.0};
    /// Starting point for the equilibrium Newton iteration; zeros when empty.
    std::function<Vector(double u)> initial_guess;

    Vector guess(double u) const;
    /// Throws InvalidArgument when the callable members are inconsistent.
    void validate() const;
};

struct Equilibrium {
    double u_bar = 0.0;
    Vector x_bar;
    double residual = 0.0;  ///< max-norm of f(x_bar, u_bar)
};

/// Local linearization (A, B, C) at an equilibrium; G(s) = C (sI - A)^{-1} B.
struct LinearizedPlant {
    Equilibrium equilibrium;
    Matrix A;
    Vector B;
    RowVector C;

    /// Steady-state gain G(0) = -C A^{-1} B.
    double steady_state_gain() const;
};

struct EquilibriumOptions {
    /// Residual tolerance relative to (||x||_inf + 1).
    double tolerance = 1e-10;
    int max_iterations = 50;
    int max_halvings = 30;
};

/// Damped Newton solve of f(x, u_bar) = 0.
///
/// Throws EquilibriumError with NonConvergence when the iteration budget is
/// exhausted and SingularJacobian when df/dx is numerically singular (a static
/// bifurcation of the equilibrium map; no branch switching is attempted).
Equilibrium solve_equilibrium(const PlantModel& plant, double u_bar, const Vector& x_guess,
                              const EquilibriumOptions& options = {});

/// Convenience overload starting from plant.guess(u_bar).
Equilibrium solve_equilibrium(const PlantModel& plant, double u_bar,
                              const EquilibriumOptions& options = {});

struct EquilibriumMapOptions {
    EquilibriumOptions solver;
    /// Warm starts restart from plant.guess() at the first point of every chunk
    /// of this many grid points, so results do not depend on `threads`.
    std::size_t chunk = 64;
    unsigned threads = 1;
};

struct MapPoint {
    double u = 0.0;
    double J = 0.0;
};

/// Steady-state input-output map J(u) = h(l(u)) on a sorted grid.
std::vector<MapPoint> equilibrium_map(const PlantModel& plant, const std::vector<double>& u_grid,
                                      const EquilibriumMapOptions& options = {});

enum class JacobianSource { Automatic, FiniteDifference };

/// Jacobian triple at `eq`: analytic when the plant provides it (and
/// `source` is Automatic), otherwise central differences.
LinearizedPlant linearize(const PlantModel& plant, const Equilibrium& eq,
                          JacobianSource source = JacobianSource::Automatic);

/// J(u) evaluated at a single input.
double steady_state_output(const PlantModel& plant, double u);

}  // namespace escbranch

#endif  // ESCBRANCH_PLANT_HPP
