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
#include "escbranch/zeros.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "escbranch/errors.hpp"
#include "escbranch/frequency.hpp"

namespace escbranch {

namespace {

double normalized_residual(const LinearizedPlant& lin, Complex z, double scale) {
    return std::abs(transfer_at(lin, z)) / scale;
}

}  // namespace

ZeroSet transmission_zeros(const LinearizedPlant& lin, const ZeroOptions& options) {
    const Eigen::Index n = lin.A.rows();
    if (lin.B.size() != n || lin.C.size() != n)
        throw Error(ErrorKind::InvalidArgument, "inconsistent (A, B, C) dimensions");
    if (!lin.A.allFinite() || !lin.B.allFinite() || !lin.C.allFinite())
        throw Error(ErrorKind::InvalidArgument, "(A, B, C) must be finite");

    ZeroSet out;
    out.steady_state_gain = lin.steady_state_gain();
    {
        Eigen::PartialPivLU<Matrix> lu(lin.A);
        const Vector a_inv_b = lu.solve(lin.B);
        const double c0 = (lin.C * a_inv_b)(0);
        const double c1 = (lin.C * lu.solve(a_inv_b))(0);
        if (c1 != 0.0) out.maclaurin_zero = -c0 / c1;
    }

    Matrix pencil = Matrix::Zero(n + 1, n + 1);
    pencil.topLeftCorner(n, n) = lin.A;
    pencil.topRightCorner(n, 1) = lin.B;
    pencil.bottomLeftCorner(1, n) = -lin.C;
    Matrix mass = Matrix::Zero(n + 1, n + 1);
    mass.topLeftCorner(n, n).setIdentity();

    Eigen::GeneralizedEigenSolver<Matrix> qz(pencil, mass, false);
    if (qz.info() != Eigen::Success) throw Error(ErrorKind::IllConditionedPencil, "QZ iteration failed");

    const std::vector<Complex> poles = eigenvalues(lin.A);
    const double scale = std::max(lin.C.norm() * lin.B.norm(), std::numeric_limits<double>::min());
    const double big = pencil.cwiseAbs().maxCoeff() + 1.0;

    int candidates = 0;
    for (Eigen::Index i = 0; i < n + 1; ++i) {
        const Complex alpha = qz.alphas()(i);
        const double beta = qz.betas()(i);
        if (std::abs(beta) <= 1e-13 * std::abs(alpha) || std::abs(beta) == 0.0) continue;
        const Complex z = alpha / beta;
        if (!std::isfinite(z.real()) || !std::isfinite(z.imag()) || std::abs(z) > 1e8 * big) continue;
        ++candidates;
        bool cancelled = false;
        for (const Complex& p : poles)
            if (std::abs(z - p) <= options.cancellation_tolerance * (1.0 + std::abs(p))) cancelled = true;
        if (cancelled) continue;
        double res = 0.0;
        try {
            res = normalized_residual(lin, z, scale);
        } catch (const Error&) {
            continue;
        }
        if (res <= options.residual_tolerance) out.zeros.push_back(z);
    }
    if (candidates > 0 && out.zeros.empty()) {
        // Every finite candidate was rejected; cancellations alone are legitimate.
        bool all_cancelled = true;
        for (Eigen::Index i = 0; i < n + 1; ++i) {
            const double beta = qz.betas()(i);
            if (std::abs(beta) <= 1e-13 * std::abs(qz.alphas()(i)) || beta == 0.0) continue;
            const Complex z = qz.alphas()(i) / beta;
            bool cancelled = false;
            for (const Complex& p : poles)
                if (std::abs(z - p) <= options.cancellation_tolerance * (1.0 + std::abs(p))) cancelled = true;
            if (!cancelled) all_cancelled = false;
        }
        if (!all_cancelled)
            throw Error(ErrorKind::IllConditionedPencil, "no pencil eigenvalue passed the residual check");
    }

    std::sort(out.zeros.begin(), out.zeros.end(), [](Complex a, Complex b) {
        if (std::abs(a) != std::abs(b)) return std::abs(a) < std::abs(b);
        if (a.real() != b.real()) return a.real() < b.real();
        return a.imag() < b.imag();
    });

    std::vector<double> real_zeros;
    for (const Complex& z : out.zeros)
        if (std::abs(z.imag()) <= options.real_tolerance * (1.0 + std::abs(z)) &&
            std::abs(z.real()) < options.crossing_window)
            real_zeros.push_back(z.real());
    std::sort(real_zeros.begin(), real_zeros.end(), [](double a, double b) { return std::abs(a) < std::abs(b); });
    if (!real_zeros.empty()) {
        out.crossing_zero = real_zeros.front();
        if (real_zeros.size() > 1 && std::abs(real_zeros[1]) <= 2.0 * std::abs(real_zeros[0]))
            out.crossing_ambiguous = true;
    }
    return out;
}

ZeroScan zero_crossing_scan(const PlantModel& plant, const std::vector<double>& u_grid,
                            const ZeroScanOptions& options) {
    ZeroScan scan;
    scan.points.resize(u_grid.size());
    parallel_for(u_grid.size(), options.threads, [&](std::size_t i) {
        const Equilibrium eq = solve_equilibrium(plant, u_grid[i]);
        const LinearizedPlant lin = linearize(plant, eq);
        // Two probes on different parts of the s-plane; both vanishing means G == 0.
        if (std::abs(transfer_at(lin, 0.0)) < 1e-12 && std::abs(transfer_at(lin, Complex{0.0, 1.0})) < 1e-12) {
            scan.points[i] = ZeroScanPoint{u_grid[i], std::nullopt, 0.0, false, true};
            return;
        }
        const ZeroSet zs = transmission_zeros(lin, options.zeros);
        scan.points[i] = ZeroScanPoint{u_grid[i], zs.crossing_zero, zs.steady_state_gain, zs.crossing_ambiguous, false};
    });
    for (std::size_t i = 0; i + 1 < scan.points.size(); ++i) {
        const ZeroScanPoint& p = scan.points[i];
        const ZeroScanPoint& q = scan.points[i + 1];
        if (p.crossing_zero && q.crossing_zero && std::signbit(*p.crossing_zero) != std::signbit(*q.crossing_zero))
            scan.zero_sign_changes.push_back(Interval{p.u, q.u});
        if (!p.degenerate && !q.degenerate && std::signbit(p.steady_state_gain) != std::signbit(q.steady_state_gain))
            scan.gain_sign_changes.push_back(Interval{p.u, q.u});
    }
    return scan;
}

}  // namespace escbranch
