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
#include "escbranch/frequency.hpp"

#include <cmath>
#include <numbers>

#include "escbranch/errors.hpp"

namespace escbranch {

EscConfig EscConfig::with_ratio(double omega, double ratio, double k, double a) {
    return EscConfig{omega, ratio * omega, ratio * omega, k, a};
}

std::vector<std::string> EscConfig::validate() const {
    if (!(omega > 0.0) || !(omega_h > 0.0) || !(omega_l > 0.0) || !(a > 0.0))
        throw Error(ErrorKind::InvalidArgument, "omega, omega_h, omega_l and a must be strictly positive");
    if (k == 0.0 || !std::isfinite(k)) throw Error(ErrorKind::InvalidArgument, "k must be a nonzero real");
    std::vector<std::string> warnings;
    if (omega_h >= omega) warnings.emplace_back("omega_h >= omega: the high-pass filter passes little of the forcing");
    if (omega_l >= omega) warnings.emplace_back("omega_l >= omega: demodulation ripple is not attenuated");
    return warnings;
}

double EscConfig::period() const { return 2.0 * std::numbers::pi / omega; }

EscConfig EscConfig::at_frequency(double omega_new) const {
    EscConfig out = *this;
    out.omega = omega_new;
    return out;
}

ComplexResponse ComplexResponse::from(Complex value) {
    ComplexResponse r;
    r.value = value;
    r.magnitude = std::abs(value);
    r.phase = std::arg(value);
    // std::arg returns -pi for (-x, -0.0); fold it into (-pi, pi].
    if (r.phase <= -std::numbers::pi) r.phase += 2.0 * std::numbers::pi;
    return r;
}

namespace {

bool is_lower_triangular(const Matrix& a) {
    for (Eigen::Index j = 1; j < a.cols(); ++j)
        for (Eigen::Index i = 0; i < j; ++i)
            if (a(i, j) != 0.0) return false;
    return true;
}

}  // namespace

Complex transfer_at(const LinearizedPlant& lin, Complex s) {
    const Eigen::Index n = lin.A.rows();
    if (n > 0 && is_lower_triangular(lin.A)) {
        // Forward substitution; exact pivots make the singularity test direct.
        ComplexVector sol(n);
        const double scale = lin.A.cwiseAbs().maxCoeff() + std::abs(s);
        for (Eigen::Index i = 0; i < n; ++i) {
            const Complex pivot = s - lin.A(i, i);
            if (!(std::abs(pivot) > 1e-15 * scale))
                throw Error(ErrorKind::SingularSolve, "sI - A is numerically singular");
            Complex acc = lin.B(i);
            for (Eigen::Index j = 0; j < i; ++j) acc += lin.A(i, j) * sol(j);
            sol(i) = acc / pivot;
        }
        Complex out{0.0, 0.0};
        for (Eigen::Index i = 0; i < n; ++i) out += lin.C(i) * sol(i);
        return out;
    }
    ComplexMatrix m = -lin.A.cast<Complex>();
    m.diagonal().array() += s;
    Eigen::PartialPivLU<ComplexMatrix> lu(m);
    if (!(lu.rcond() > 1e-15))
        throw Error(ErrorKind::SingularSolve, "sI - A is numerically singular");
    const ComplexVector rhs = lin.B.cast<Complex>();
    const ComplexVector sol = lu.solve(rhs);
    Complex acc{0.0, 0.0};
    for (Eigen::Index i = 0; i < n; ++i) acc += lin.C(i) * sol(i);
    return acc;
}

ComplexResponse plant_response(const LinearizedPlant& lin, double omega) {
    return ComplexResponse::from(transfer_at(lin, Complex{0.0, omega}));
}

ComplexResponse filter_response(const EscConfig& cfg, FilterKind which, double omega) {
    if (omega < 0.0 && which == FilterKind::HighPass) {
        // Conjugate symmetry keeps negative frequencies meaningful.
        return ComplexResponse::from(std::conj(filter_response(cfg, which, -omega).value));
    }
    const Complex s{0.0, omega};
    if (which == FilterKind::HighPass) return ComplexResponse::from(s / (s + cfg.omega_h));
    return ComplexResponse::from(cfg.omega_l / (s + cfg.omega_l));
}

HarmonicCoefficients extract_harmonics(std::span<const double> samples, double t0, double dt, double omega) {
    if (!(omega > 0.0) || !(dt > 0.0)) throw Error(ErrorKind::InvalidArgument, "omega and dt must be positive");
    if (samples.size() < 2) throw Error(ErrorKind::InvalidArgument, "need at least two samples");
    const double period = 2.0 * std::numbers::pi / omega;
    const std::size_t intervals = samples.size() - 1;
    const double window = static_cast<double>(intervals) * dt;
    const double periods = std::round(window / period);
    if (periods < 1.0 || std::abs(window - periods * period) > 0.5 * dt)
        throw Error(ErrorKind::WindowMismatch, "sample window is not an integer number of periods");
    if (period / dt < 64.0 - 1e-9)
        throw Error(ErrorKind::InvalidArgument, "need at least 64 samples per period");

    Complex c0{0.0, 0.0};
    Complex c1{0.0, 0.0};
    for (std::size_t j = 0; j <= intervals; ++j) {
        const double w = (j == 0 || j == intervals) ? 0.5 : 1.0;
        const double t = t0 + static_cast<double>(j) * dt;
        c0 += w * samples[j];
        c1 += w * samples[j] * std::exp(Complex{0.0, -omega * t});
    }
    return HarmonicCoefficients{c0 / static_cast<double>(intervals), c1 / static_cast<double>(intervals), period};
}

}  // namespace escbranch
