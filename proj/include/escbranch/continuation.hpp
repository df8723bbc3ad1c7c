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
#ifndef ESCBRANCH_CONTINUATION_HPP
#define ESCBRANCH_CONTINUATION_HPP

#include <functional>
#include <string>
#include <vector>

#include "escbranch/frequency.hpp"
#include "escbranch/plant.hpp"
#include "escbranch/stationarity.hpp"

namespace escbranch {

struct ConditionGradient {
    double dC_du = 0.0;
    double dC_domega = 0.0;
};

/**
 * @brief Scalar condition C(u, omega) whose zero set is traced
 *
 * The ESC implementation wraps a plant; tests substitute closed-form
 * conditions. Implementations must be safe to call from several threads.
 */
class TwoParameterCondition {
public:
    virtual ~TwoParameterCondition() = default;
    virtual double value(double u, double omega) const = 0;
    /// Default: central differences, step input_step(u) in u and 1e-6 omega in omega.
    virtual ConditionGradient gradient(double u, double omega) const;
    virtual Interval u_domain() const = 0;
};

/// How the filter corners follow omega when it is varied.
enum class FilterScaling {
    Proportional,  ///< omega_h / omega and omega_l / omega held fixed
    Fixed,         ///< omega_h and omega_l held fixed
};

class EscCondition final : public TwoParameterCondition {
public:
    EscCondition(PlantModel plant, EscConfig cfg, FilterScaling scaling = FilterScaling::Proportional);

    double value(double u, double omega) const override;
    /// dC/du re-solves the equilibrium; dC/domega reuses one linearization.
    ConditionGradient gradient(double u, double omega) const override;
    Interval u_domain() const override { return plant_.input_domain; }

    EscConfig config_at(double omega) const;
    const PlantModel& plant() const { return plant_; }
    const EscConfig& config() const { return cfg_; }

private:
    PlantModel plant_;
    EscConfig cfg_;
    FilterScaling scaling_;
};

/// (dC/du, dC/domega) for the ESC condition at (u_bar, omega).
ConditionGradient condition_gradient(const PlantModel& plant, const EscConfig& cfg, double u_bar, double omega);

struct BranchPoint {
    double u_bar = 0.0;
    double omega = 0.0;
    double tangent_u = 0.0;  ///< unit tangent in (u, omega)
    double tangent_omega = 0.0;
    double C_value = 0.0;
    double dC_du = 0.0;
    double dC_domega = 0.0;
};

struct FoldPoint {
    double u_bar = 0.0;
    double omega = 0.0;
    double dC_du = 0.0;
    double d2C_du2 = 0.0;
    double dC_domega = 0.0;
    /// Second derivative too small to certify a quadratic turning point.
    bool degenerate = false;
    /// Index of the branch point preceding the fold.
    std::size_t index = 0;
};

enum class BranchEnd { OmegaBoundary, InputBoundary, EquilibriumFailure, CorrectorDivergence, Closed, PointLimit };

const char* to_string(BranchEnd end) noexcept;

struct SolutionBranch {
    std::vector<BranchPoint> points;
    std::vector<FoldPoint> folds;
    std::string label;
    BranchEnd end_backward = BranchEnd::PointLimit;
    BranchEnd end_forward = BranchEnd::PointLimit;
    /// Index of the seed inside `points`.
    std::size_t seed_index = 0;
};

struct ContinuationOptions {
    Interval omega_range{0.01, 0.8};
    /// Largest arclength step in the working coordinates (log u and log omega
    /// when positive); the step adapts down to step / 16.
    double step = 0.05;
    int max_points = 4000;
    /// Corrector stops when the Newton update is below this (working coordinates).
    double corrector_tolerance = 1e-10;
    int max_corrector_iterations = 10;
    /// Use log(u) as the working coordinate when the input domain is positive.
    bool log_input = true;
    /// Fold degeneracy threshold relative to the branch scale.
    double degeneracy_tolerance = 1e-8;
};

/// Pseudo-arclength continuation of C = 0 through `seed`, in both directions,
/// until the omega range or input domain is left, the equilibrium fails or the
/// corrector cannot converge at the smallest step. The seed is first corrected
/// at fixed omega; a seed that cannot be corrected raises InvalidArgument.
SolutionBranch trace_branch(const TwoParameterCondition& cond, double seed_u, double seed_omega,
                            const ContinuationOptions& options = {});

/// Turning points in omega along the branch, refined by bisection on dC/du.
std::vector<FoldPoint> detect_folds(const TwoParameterCondition& cond, const SolutionBranch& branch,
                                    const ContinuationOptions& options = {});

/// d angle(G) / du at the fold (central differences, equilibrium re-solved).
double phase_extremum_check(const PlantModel& plant, const EscConfig& cfg, const FoldPoint& fold);

struct DiagramOptions {
    ContinuationOptions continuation;
    /// Input range scanned for seeds; defaults to the plant domain when empty.
    Interval seed_range{0.0, 0.0};
    int seed_frequencies = 12;
    int scan_grid = 2000;
    GridSpacing scan_spacing = GridSpacing::Uniform;
    unsigned threads = 1;
};

struct DiagramRow {
    std::size_t branch_id = 0;
    double omega = 0.0;
    double u = 0.0;
    double J = 0.0;
    Stability stability = Stability::Unknown;
    bool is_fold = false;
};

struct BifurcationDiagram {
    std::vector<SolutionBranch> branches;
    std::vector<DiagramRow> rows;
    std::size_t fold_count() const;
};

/// Seeds from stationary-point scans on a log-spaced omega grid, traces every
/// seed not already on a branch, detects folds and labels points by the sign
/// of k dC/du.
BifurcationDiagram build_diagram(const EscCondition& cond, const DiagramOptions& options = {});

}  // namespace escbranch

#endif  // ESCBRANCH_CONTINUATION_HPP
