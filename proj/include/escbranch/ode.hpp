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
#ifndef ESCBRANCH_ODE_HPP
#define ESCBRANCH_ODE_HPP

#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "escbranch/linalg.hpp"

namespace escbranch {

using OdeRhs = std::function<void(double t, const Vector& y, Vector& dydt)>;
using OdeObserver = std::function<void(double t, const Vector& y)>;

struct OdeOptions {
    double rtol = 1e-9;
    double atol = 1e-12;
    double max_step = std::numeric_limits<double>::infinity();
    /// Zero selects the first step automatically.
    double first_step = 0.0;
    long max_steps = 50'000'000;

    /// Throws InvalidArgument unless both tolerances lie in [1e-14, 1e-3].
    void validate() const;
};

struct OdeStats {
    long steps = 0;
    long rejected = 0;
    long rhs_evals = 0;
};

/**
 * @brief Dormand-Prince 5(4) with fourth-order dense output
 *
 * Errors are controlled on the RMS norm scaled by atol + rtol max(|y_old|, |y_new|).
 * Accepted step sizes can be recorded and replayed later without error
 * control, which makes the end state a smooth function of the initial state
 * (used for finite-difference monodromy matrices).
 */
class DormandPrince45 {
public:
    explicit DormandPrince45(OdeOptions options = {});

    /// Integrates from t0 to t1 > t0. `observer` is called at every time in
    /// `outputs` (ascending, inside [t0, t1]) with the interpolated state.
    /// Throws StepSizeUnderflow when the step collapses.
    Vector integrate(const OdeRhs& rhs, double t0, const Vector& y0, double t1,
                     std::span<const double> outputs = {}, const OdeObserver& observer = {});

    /// Repeats the step sequence of the last integrate() call from a new initial state.
    Vector replay(const OdeRhs& rhs, double t0, const Vector& y0) const;

    const std::vector<double>& last_steps() const { return steps_; }
    const OdeStats& stats() const { return stats_; }
    const OdeOptions& options() const { return options_; }

private:
    OdeOptions options_;
    OdeStats stats_;
    std::vector<double> steps_;
};

}  // namespace escbranch

#endif  // ESCBRANCH_ODE_HPP
