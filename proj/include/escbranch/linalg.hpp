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
#ifndef ESCBRANCH_LINALG_HPP
#define ESCBRANCH_LINALG_HPP

#include <complex>
#include <cstddef>
#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace escbranch {

using Complex = std::complex<double>;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;
using Matrix = Eigen::MatrixXd;
using ComplexVector = Eigen::VectorXcd;
using ComplexMatrix = Eigen::MatrixXcd;

/// Closed interval [lo, hi].
struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    bool contains(double x) const { return x >= lo && x <= hi; }
    double width() const { return hi - lo; }
};

/// Central-difference step for a coordinate of magnitude |value|:
/// sqrt(eps) * (1 + |value|).
double fd_step(double value);

/// Eigenvalues of a real square matrix. Triangular matrices return their
/// diagonal exactly; the QR route scatters repeated eigenvalues badly.
std::vector<Complex> eigenvalues(const Matrix& a);

/// Largest real part over the spectrum.
double spectral_abscissa(const Matrix& a);

/// Runs fn(i) for i in [0, count) on up to `threads` workers. Each index is
/// visited exactly once; callers write results to slot i so ordering does
/// not depend on scheduling.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& fn);

}  // namespace escbranch

#endif  // ESCBRANCH_LINALG_HPP
