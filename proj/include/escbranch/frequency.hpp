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
#ifndef ESCBRANCH_FREQUENCY_HPP
#define ESCBRANCH_FREQUENCY_HPP

#include <span>
#include <string>
#include <vector>

#include "escbranch/linalg.hpp"
#include "escbranch/plant.hpp"

namespace escbranch {

/**
 * @brief Tuning of the perturbation-based extremum seeking loop
 *
 * u = u_hat + a sin(omega t); the output passes the high-pass filter
 * F_H(s) = s / (s + omega_h), is demodulated by sin(omega t), low-pass filtered by
 * F_L(s) = omega_l / (s + omega_l) and integrated with gain k.
 */
struct EscConfig {
    double omega = 0.4;
    double omega_h = 0.04;
    double omega_l = 0.04;
    double k = 0.01;
    double a = 0.001;

    /// Sets omega_h = omega_l = ratio * omega.
    static EscConfig with_ratio(double omega, double ratio, double k, double a);

    /// Throws InvalidArgument on non-positive rates or k == 0. Returns
    /// advisory warnings when the filters are not slower than the forcing.
    std::vector<std::string> validate() const;

    double period() const;
    EscConfig at_frequency(double omega_new) const;
};

struct ComplexResponse {
    Complex value;
    double magnitude = 0.0;
    double phase = 0.0;  ///< principal argument in (-pi, pi]

    static ComplexResponse from(Complex value);
};

enum class FilterKind { HighPass, LowPass };

/// G(i omega) = C (i omega I - A)^{-1} B through one complex LU solve.
/// Throws SingularSolve if i omega is (numerically) an eigenvalue of A.
ComplexResponse plant_response(const LinearizedPlant& lin, double omega);

/// Complex response at an arbitrary point s of the s-plane.
Complex transfer_at(const LinearizedPlant& lin, Complex s);

ComplexResponse filter_response(const EscConfig& cfg, FilterKind which, double omega);

struct HarmonicCoefficients {
    Complex c0;  ///< period mean
    Complex c1;  ///< coefficient of exp(i omega t); c_{-1} = conj(c1)
    double period = 0.0;
};

/// Fourier coefficients c0, c1 of a uniformly sampled real signal.
///
/// `samples` holds signal(t0 + j dt) for j = 0..N; the window [t0, t0 + N dt]
/// must span an integer number of periods (within half a sample, otherwise
/// WindowMismatch) with at least 64 samples per period. Trapezoidal weights
/// are used, which reduce to the plain periodic sum on an exact window.
HarmonicCoefficients extract_harmonics(std::span<const double> samples, double t0, double dt, double omega);

}  // namespace escbranch

#endif  // ESCBRANCH_FREQUENCY_HPP
