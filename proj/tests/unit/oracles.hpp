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
// Independent reference computations shared by the unit tests. Nothing here
// calls into the library.
#ifndef ESCBRANCH_TEST_ORACLES_HPP
#define ESCBRANCH_TEST_ORACLES_HPP

#include <cmath>
#include <complex>
#include <vector>

namespace oracle {

/// Discretized plug-flow reactor at velocity v, solved cell by cell.
struct ReactorProfile {
    std::vector<double> a;
    std::vector<double> b;
};

inline ReactorProfile reactor_profile(double v, int n = 40, double a0 = 1.0, double b0 = 0.0, double k1 = 1.0,
                                      double k2 = 0.02) {
    const double flow = v * n;  // v / dz
    ReactorProfile p;
    double a_prev = a0, b_prev = b0;
    for (int j = 0; j < n; ++j) {
        const double a = flow * a_prev / (flow + k1);
        const double b = (flow * b_prev + k1 * a) / (flow + k2);
        p.a.push_back(a);
        p.b.push_back(b);
        a_prev = a;
        b_prev = b;
    }
    return p;
}

inline double reactor_output(double v, int n = 40) { return reactor_profile(v, n).b.back(); }

/// Argmax of the discretized exit concentration by golden-section search.
inline double reactor_argmax(int n = 40, double lo = 0.1, double hi = 0.6) {
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
    double f1 = reactor_output(x1, n), f2 = reactor_output(x2, n);
    for (int it = 0; it < 200 && hi - lo > 1e-13; ++it) {
        if (f1 < f2) {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = reactor_output(x2, n);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = reactor_output(x1, n);
        }
    }
    return 0.5 * (lo + hi);
}

/// Continuous plug-flow optimum (k1 - k2) / ln(k1 / k2).
inline double continuous_optimum(double k1 = 1.0, double k2 = 0.02) { return (k1 - k2) / std::log(k1 / k2); }

inline double central_difference(double (*fn)(double, int), double v, int n, double h) {
    return (fn(v + h, n) - fn(v - h, n)) / (2.0 * h);
}

/// Least-squares slope of log|y| against log x.
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double m = static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double lx = std::log(x[i]), ly = std::log(std::abs(y[i]));
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

}  // namespace oracle

#endif  // ESCBRANCH_TEST_ORACLES_HPP
