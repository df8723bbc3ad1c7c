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
#ifndef ESCBRANCH_STATIONARITY_HPP
#define ESCBRANCH_STATIONARITY_HPP

#include <vector>

#include "escbranch/frequency.hpp"
#include "escbranch/linalg.hpp"
#include "escbranch/plant.hpp"

namespace escbranch {

enum class Stability { Unknown, Stable, Unstable, Marginal };
enum class StabilitySource { None, ReducedModel, Floquet };

const char* to_string(Stability s) noexcept;
const char* to_string(StabilitySource s) noexcept;

/// Label from the slope of the averaged gradient proxy: stable iff k dL/du < 0.
Stability classify_reduced_slope(double k, double dL_du);

/// Candidate operating point of a period-one orbit.
struct StationaryPoint {
    double u_bar = 0.0;
    double omega = 0.0;
    double condition_value = 0.0;
    double dC_du = 0.0;
    Stability stability = Stability::Unknown;
    StabilitySource stability_source = StabilitySource::None;
    /// |G(i omega)| vanishes here: the condition holds trivially, not transversally.
    bool degenerate = false;
};

/// Below this |G(i omega)| the phase of the plant is undefined.
inline constexpr double kDegenerateMagnitude = 1e-12;

/// F_H(i omega) G(i omega) at the equilibrium for u_bar.
Complex filtered_response(const PlantModel& plant, const EscConfig& cfg, double u_bar);

/// C = Re{F_H(i omega) G(i omega)}.
double condition_value(const PlantModel& plant, const EscConfig& cfg, double u_bar);

/// angle(G) - (pi/2 - angle(F_H)) reduced modulo pi into (-pi/2, pi/2].
/// Throws DegenerateResponse when |G| < kDegenerateMagnitude.
double phase_residual(const PlantModel& plant, const EscConfig& cfg, double u_bar);

/// Finite-difference step in the input. Relative to |u| so that inputs far
/// below 1 (the reactor at low velocity) are resolved; floored at 1e-8.
double input_step(double u);

/// Central difference of `fn` at u, one-sided of second order next to the
/// boundaries of `domain`.
double input_derivative(const std::function<double(double)>& fn, double u, const Interval& domain);

/// dC/du with the equilibrium re-solved at each perturbed input.
double condition_slope(const PlantModel& plant, const EscConfig& cfg, double u_bar);

enum class GridSpacing { Uniform, Logarithmic };

std::vector<double> make_grid(const Interval& range, int count, GridSpacing spacing);

struct StationaryScanOptions {
    GridSpacing spacing = GridSpacing::Uniform;
    /// Refine until |C| <= root_tolerance * max|C| over the grid.
    double root_tolerance = 1e-10;
    unsigned threads = 1;
};

struct StationaryScan {
    std::vector<StationaryPoint> points;
    std::vector<double> grid;
    /// C on the grid; NaN where the equilibrium could not be solved.
    std::vector<double> values;
    double scale = 0.0;  ///< max |C| over the grid
};

/// Brackets sign changes of C on a grid over `u_interval` and refines each
/// root. Points come back sorted by u, with stability Unknown.
StationaryScan scan_stationary_points(const PlantModel& plant, const EscConfig& cfg, const Interval& u_interval,
                                      int grid, const StationaryScanOptions& options = {});

std::vector<StationaryPoint> find_stationary_points(const PlantModel& plant, const EscConfig& cfg,
                                                    const Interval& u_interval, int grid = 2000);

/// Small-frequency estimate of u_bar - u_star for the branch through the optimum,
/// built from the crossing zero and the plant with that zero divided out.
/// Throws TangentSingularity when the tangent argument sits within 1e-6 of
/// pi/2 mod pi, InvalidArgument when there is no crossing zero near u_star.
double estimate_optimum_deviation(const PlantModel& plant, const EscConfig& cfg, double u_star);

}  // namespace escbranch

#endif  // ESCBRANCH_STATIONARITY_HPP
