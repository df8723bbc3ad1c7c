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
#include "escbranch/ode.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "escbranch/errors.hpp"

namespace escbranch {

namespace {

// Butcher tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
// Difference between the fifth- and fourth-order weights.
constexpr std::array<double, 7> e = {-71.0 / 57600, 0.0, 71.0 / 16695, -71.0 / 1920, 17253.0 / 339200,
                                     -22.0 / 525, 1.0 / 40};
// Dense output: y(t + s h) = y + h sum_i k_i sum_j P[i][j] s^(j+1).
constexpr double P[7][4] = {
    {1.0, -8048581381.0 / 2820520608, 8663915743.0 / 2820520608, -12715105075.0 / 11282082432},
    {0.0, 0.0, 0.0, 0.0},
    {0.0, 131558114200.0 / 32700410799, -68118460800.0 / 10900136933, 87487479700.0 / 32700410799},
    {0.0, -1754552775.0 / 470086768, 14199869525.0 / 1410260304, -10690763975.0 / 1880347072},
    {0.0, 127303824393.0 / 49829197408, -318862633887.0 / 49829197408, 701980252875.0 / 199316789632},
    {0.0, -282668133.0 / 205662961, 2019193451.0 / 616988883, -1453857185.0 / 822651844},
    {0.0, 40617522.0 / 29380423, -110615467.0 / 29380423, 69997945.0 / 29380423},
};

struct Stages {
    std::array<Vector, 7> k;
    Vector tmp;
};

/// One step from (t, y) with k[0] = f(t, y) preset. Leaves y_new in `out` and k[6] = f(t + h, y_new).
void step(const OdeRhs& rhs, double t, const Vector& y, double h, Stages& s, Vector& out) {
    auto& k = s.k;
    s.tmp = y + h * a21 * k[0];
    rhs(t + c2 * h, s.tmp, k[1]);
    s.tmp = y + h * (a31 * k[0] + a32 * k[1]);
    rhs(t + c3 * h, s.tmp, k[2]);
    s.tmp = y + h * (a41 * k[0] + a42 * k[1] + a43 * k[2]);
    rhs(t + c4 * h, s.tmp, k[3]);
    s.tmp = y + h * (a51 * k[0] + a52 * k[1] + a53 * k[2] + a54 * k[3]);
    rhs(t + c5 * h, s.tmp, k[4]);
    s.tmp = y + h * (a61 * k[0] + a62 * k[1] + a63 * k[2] + a64 * k[3] + a65 * k[4]);
    rhs(t + h, s.tmp, k[5]);
    out = y + h * (b1 * k[0] + b3 * k[2] + b4 * k[3] + b5 * k[4] + b6 * k[5]);
    rhs(t + h, out, k[6]);
}

double error_norm(const Stages& s, double h, const Vector& y, const Vector& y_new, const OdeOptions& opt) {
    double acc = 0.0;
    const Eigen::Index n = y.size();
    for (Eigen::Index i = 0; i < n; ++i) {
        double err = 0.0;
        for (int j = 0; j < 7; ++j) err += e[j] * s.k[j](i);
        err *= h;
        const double sc = opt.atol + opt.rtol * std::max(std::abs(y(i)), std::abs(y_new(i)));
        acc += (err / sc) * (err / sc);
    }
    return n == 0 ? 0.0 : std::sqrt(acc / static_cast<double>(n));
}

Vector interpolate(const Stages& s, const Vector& y, double h, double theta) {
    std::array<double, 4> pw{theta, theta * theta, theta * theta * theta, theta * theta * theta * theta};
    Vector out = y;
    for (int i = 0; i < 7; ++i) {
        const double w = P[i][0] * pw[0] + P[i][1] * pw[1] + P[i][2] * pw[2] + P[i][3] * pw[3];
        if (w != 0.0) out += h * w * s.k[i];
    }
    return out;
}

double rms_scaled(const Vector& v, const Vector& y, const OdeOptions& opt) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        const double sc = opt.atol + opt.rtol * std::abs(y(i));
        acc += (v(i) / sc) * (v(i) / sc);
    }
    return v.size() == 0 ? 0.0 : std::sqrt(acc / static_cast<double>(v.size()));
}

}  // namespace

void OdeOptions::validate() const {
    const auto ok = [](double tol) { return tol >= 1e-14 && tol <= 1e-3; };
    if (!ok(rtol) || !ok(atol)) throw Error(ErrorKind::InvalidArgument, "tolerances must lie in [1e-14, 1e-3]");
    if (!(max_step > 0.0)) throw Error(ErrorKind::InvalidArgument, "max_step must be positive");
}

DormandPrince45::DormandPrince45(OdeOptions options) : options_(options) { options_.validate(); }

Vector DormandPrince45::integrate(const OdeRhs& rhs, double t0, const Vector& y0, double t1,
                                  std::span<const double> outputs, const OdeObserver& observer) {
    if (!(t1 > t0)) throw Error(ErrorKind::InvalidArgument, "integration needs t1 > t0");
    stats_ = {};
    steps_.clear();
    const OdeOptions& opt = options_;

    Stages s;
    for (auto& k : s.k) k.resize(y0.size());
    Vector y = y0, y_new(y0.size());
    double t = t0;
    rhs(t, y, s.k[0]);
    ++stats_.rhs_evals;

    double h = opt.first_step;
    if (h <= 0.0) {
        const double d0 = rms_scaled(y, y, opt);
        const double d1 = rms_scaled(s.k[0], y, opt);
        const double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
        Vector f1(y.size());
        rhs(t + h0, y + h0 * s.k[0], f1);
        ++stats_.rhs_evals;
        const double d2 = rms_scaled(f1 - s.k[0], y, opt) / h0;
        const double h1 = (d1 <= 1e-15 && d2 <= 1e-15) ? std::max(1e-6, h0 * 1e-3)
                                                        : std::pow(0.01 / std::max(d1, d2), 0.2);
        h = std::min(100.0 * h0, h1);
    }
    h = std::min({h, opt.max_step, t1 - t0});

    std::size_t next_out = 0;
    while (next_out < outputs.size() && outputs[next_out] < t0) ++next_out;
    if (next_out < outputs.size() && outputs[next_out] == t0 && observer) observer(t0, y0), ++next_out;

    bool rejected_last = false;
    while (t < t1) {
        if (stats_.steps >= opt.max_steps) throw Error(ErrorKind::StepSizeUnderflow, "step budget exhausted");
        const double remaining = t1 - t;
        bool last = false;
        // Absorb a rounding sliver left over after the step into the step itself.
        if (h >= remaining - 100.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t1))) {
            h = remaining;
            last = true;
        }
        if (h < 10.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t)))
            throw Error(ErrorKind::StepSizeUnderflow, "step size underflow at t = " + std::to_string(t));

        step(rhs, t, y, h, s, y_new);
        stats_.rhs_evals += 6;
        const double err = error_norm(s, h, y, y_new, opt);
        if (!std::isfinite(err) || err > 1.0) {
            ++stats_.rejected;
            const double fac = std::isfinite(err) ? std::max(0.2, 0.9 * std::pow(err, -0.2)) : 0.2;
            h *= std::min(1.0, fac);
            rejected_last = true;
            continue;
        }

        const double t_new = last ? t1 : t + h;
        while (next_out < outputs.size() && outputs[next_out] <= t_new) {
            if (observer) {
                const double theta = (outputs[next_out] - t) / h;
                observer(outputs[next_out], theta >= 1.0 ? y_new : interpolate(s, y, h, theta));
            }
            ++next_out;
        }
        steps_.push_back(h);
        ++stats_.steps;
        t = t_new;
        y.swap(y_new);
        s.k[0].swap(s.k[6]);

        double fac = err == 0.0 ? 10.0 : 0.9 * std::pow(err, -0.2);
        fac = std::clamp(fac, 0.2, 10.0);
        if (rejected_last) fac = std::min(1.0, fac);
        rejected_last = false;
        h = std::min(h * fac, opt.max_step);
    }
    return y;
}

Vector DormandPrince45::replay(const OdeRhs& rhs, double t0, const Vector& y0) const {
    Stages s;
    for (auto& k : s.k) k.resize(y0.size());
    Vector y = y0, y_new(y0.size());
    double t = t0;
    rhs(t, y, s.k[0]);
    for (double h : steps_) {
        step(rhs, t, y, h, s, y_new);
        t += h;
        y.swap(y_new);
        s.k[0].swap(s.k[6]);
    }
    return y;
}

}  // namespace escbranch
