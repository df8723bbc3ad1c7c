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
#ifndef ESCBRANCH_ZEROS_HPP
#define ESCBRANCH_ZEROS_HPP

#include <limits>
#include <optional>
#include <vector>

#include "escbranch/linalg.hpp"
#include "escbranch/plant.hpp"

namespace escbranch {

struct ZeroOptions {
    /// Only real zeros with |z| below this are candidates for the crossing zero.
    double crossing_window = std::numeric_limits<double>::infinity();
    /// Zeros closer than this to an eigenvalue of A are treated as cancelled.
    double cancellation_tolerance = 1e-8;
    /// Accept z when |C (zI - A)^{-1} B| <= residual_tolerance * ||C|| ||B||.
    double residual_tolerance = 1e-8;
    /// |Im z| below this (relative to 1 + |z|) counts as a real zero.
    double real_tolerance = 1e-8;
};

/// Finite transmission zeros of a SISO linearization.
struct ZeroSet {
    std::vector<Complex> zeros;
    /// Location of the smallest-magnitude real zero inside the crossing window.
    /// Note the sign: a plant written G(s) = (s + z_u) G0(s) has z_u = -crossing_zero.
    std::optional<double> crossing_zero;
    /// Two real zeros within a factor 2 of each other compete for the crossing zero.
    bool crossing_ambiguous = false;
    /// -c0/c1 from the MacLaurin coefficients c_i = C A^{-1-i} B; NaN when c1 = 0.
    double maclaurin_zero = std::numeric_limits<double>::quiet_NaN();
    double steady_state_gain = 0.0;
};

/// Generalized eigenvalues of the Rosenbrock pencil
///   [A  B]       [I 0]
///   [-C 0] - z   [0 0]
/// with infinite eigenvalues, pole-zero cancellations and candidates failing the
/// residual check removed. Throws IllConditionedPencil when every finite
/// candidate fails the residual check.
ZeroSet transmission_zeros(const LinearizedPlant& lin, const ZeroOptions& options = {});

struct ZeroScanPoint {
    double u = 0.0;
    std::optional<double> crossing_zero;
    double steady_state_gain = 0.0;
    bool ambiguous = false;
    /// G vanishes identically here; no zeros are computed.
    bool degenerate = false;
};

struct ZeroScan {
    std::vector<ZeroScanPoint> points;
    /// Grid cells [u_i, u_{i+1}] where the crossing zero changes sign.
    std::vector<Interval> zero_sign_changes;
    /// Grid cells where G(0) changes sign.
    std::vector<Interval> gain_sign_changes;
};

struct ZeroScanOptions {
    ZeroOptions zeros{.crossing_window = 4.0};
    unsigned threads = 1;
};

/// Linearizes along the grid and tracks the crossing zero and G(0).
ZeroScan zero_crossing_scan(const PlantModel& plant, const std::vector<double>& u_grid,
                            const ZeroScanOptions& options = {});

}  // namespace escbranch

#endif  // ESCBRANCH_ZEROS_HPP
