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
#include "escbranch/stationarity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "escbranch/errors.hpp"
#include "escbranch/zeros.hpp"

namespace escbranch {

const char* to_string(Stability s) noexcept {
    switch (s) {
        case Stability::Stable: return "stable";
        case Stability::Unstable: return "unstable";
        case Stability::Marginal: return "marginal";
        case Stability::Unknown: break;
    }
    return "unknown";
}

const char* to_string(StabilitySource s) noexcept {
    switch (s) {
        case StabilitySource::ReducedModel: return "reduced_model";
        case StabilitySource::Floquet: return "floquet";
        case StabilitySource::None: break;
    }
    return "none";
}

Stability classify_reduced_slope(double k, double dL_du) {
    return k * dL_du < 0.0 ? Stability::Stable : Stability::Unstable;
}

namespace {

constexpr double kPi = std::numbers::pi;

Complex plant_at(const PlantModel& plant, const EscConfig& cfg, double u_bar) {
    const Equilibrium eq = solve_equilibrium(plant, u_bar);
    return plant_response(linearize(plant, eq), cfg.omega).value;
}

Complex high_pass(const EscConfig& cfg) { return filter_response(cfg, FilterKind::HighPass, cfg.omega).value; }

/// Reduces an angle into (-pi/2, pi/2].
double reduce_half_turn(double angle) {
    double r = std::remainder(angle, kPi);
    if (r <= -kPi / 2) r += kPi;
    return r;
}

/// Brent's method on a sign-changing bracket; stops at |f| <= tol.
double refine_root(const std::function<double(double)>& f, double a, double b, double fa, double fb, double tol) {
    if (std::abs(fa) <= tol) return a;
    if (std::abs(fb) <= tol) return b;
    double c = a, fc = fa, d = b - a, e = d;
    for (int iter = 0; iter < 200; ++iter) {
        if ((fb > 0) == (fc > 0)) {
            c = a;
            fc = fa;
            d = e = b - a;
        }
        if (std::abs(fc) < std::abs(fb)) {
            a = b; b = c; c = a;
            fa = fb; fb = fc; fc = fa;
        }
        const double xtol = 4.0 * std::numeric_limits<double>::epsilon() * std::abs(b);
        const double m = 0.5 * (c - b);
        if (std::abs(fb) <= tol || std::abs(m) <= xtol) return b;
        if (std::abs(e) >= xtol && std::abs(fa) > std::abs(fb)) {
            double p, q, r;
            const double s = fb / fa;
            if (a == c) {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                q = fa / fc;
                r = fb / fc;
                p = s * (2.0 * m * q * (q - r) - (b - a) * (r - 1.0));
                q = (q - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if (p > 0) q = -q;
            else p = -p;
            if (2.0 * p < std::min(3.0 * m * q - std::abs(xtol * q), std::abs(e * q))) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += std::abs(d) > xtol ? d : (m > 0 ? xtol : -xtol);
        fb = f(b);
    }
    return b;
}

}  // namespace

Complex filtered_response(const PlantModel& plant, const EscConfig& cfg, double u_bar) {
    return high_pass(cfg) * plant_at(plant, cfg, u_bar);
}

double condition_value(const PlantModel& plant, const EscConfig& cfg, double u_bar) {
    return filtered_response(plant, cfg, u_bar).real();
}

double phase_residual(const PlantModel& plant, const EscConfig& cfg, double u_bar) {
    const Complex g = plant_at(plant, cfg, u_bar);
    if (std::abs(g) < kDegenerateMagnitude)
        throw Error(ErrorKind::DegenerateResponse, "plant response vanishes; the condition holds trivially");
    const double target = kPi / 2 - std::arg(high_pass(cfg));
    return reduce_half_turn(std::arg(g) - target);
}

double input_step(double u) { return 1e-5 * std::max(std::abs(u), 1e-3); }

double input_derivative(const std::function<double(double)>& fn, double u, const Interval& domain) {
    const double h = input_step(u);
    if (u + h > domain.hi) return (3.0 * fn(u) - 4.0 * fn(u - h) + fn(u - 2.0 * h)) / (2.0 * h);
    if (u - h < domain.lo) return (-3.0 * fn(u) + 4.0 * fn(u + h) - fn(u + 2.0 * h)) / (2.0 * h);
    return (fn(u + h) - fn(u - h)) / (2.0 * h);
}

double condition_slope(const PlantModel& plant, const EscConfig& cfg, double u_bar) {
    return input_derivative([&](double u) { return condition_value(plant, cfg, u); }, u_bar, plant.input_domain);
}

std::vector<double> make_grid(const Interval& range, int count, GridSpacing spacing) {
    if (count < 2) throw Error(ErrorKind::InvalidArgument, "grid needs at least two points");
    if (!(range.lo < range.hi)) throw Error(ErrorKind::InvalidArgument, "grid range must satisfy lo < hi");
    if (spacing == GridSpacing::Logarithmic && !(range.lo > 0.0))
        throw Error(ErrorKind::InvalidArgument, "logarithmic grid needs a positive range");
    std::vector<double> grid(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        const double s = static_cast<double>(i) / (count - 1);
        grid[i] = spacing == GridSpacing::Uniform ? range.lo + s * range.width()
                                                  : range.lo * std::pow(range.hi / range.lo, s);
    }
    grid.back() = range.hi;
    return grid;
}

StationaryScan scan_stationary_points(const PlantModel& plant, const EscConfig& cfg, const Interval& u_interval,
                                      int grid, const StationaryScanOptions& options) {
    cfg.validate();
    const Interval& dom = plant.input_domain;
    if (u_interval.lo < dom.lo || u_interval.hi > dom.hi)
        throw Error(ErrorKind::InvalidArgument, "scan interval leaves the plant input domain");

    StationaryScan scan;
    scan.grid = make_grid(u_interval, grid, options.spacing);
    scan.values.assign(scan.grid.size(), std::numeric_limits<double>::quiet_NaN());
    std::vector<double> magnitudes(scan.grid.size(), 0.0);
    const Complex fh = high_pass(cfg);
    parallel_for(scan.grid.size(), options.threads, [&](std::size_t i) {
        try {
            const Complex g = plant_at(plant, cfg, scan.grid[i]);
            scan.values[i] = (fh * g).real();
            magnitudes[i] = std::abs(g);
        } catch (const Error&) {
            // Leave NaN: no bracket is formed across an unsolvable point.
        }
    });
    double g_scale = 0.0;
    for (std::size_t i = 0; i < scan.values.size(); ++i) {
        if (std::isfinite(scan.values[i])) scan.scale = std::max(scan.scale, std::abs(scan.values[i]));
        g_scale = std::max(g_scale, magnitudes[i]);
    }
    const double tol = options.root_tolerance * scan.scale;
    const auto fn = [&](double u) { return condition_value(plant, cfg, u); };

    std::vector<double> roots;
    for (std::size_t i = 0; i < scan.values.size(); ++i) {
        const double c = scan.values[i];
        if (c == 0.0) {
            roots.push_back(scan.grid[i]);
            continue;
        }
        if (i + 1 == scan.values.size()) break;
        const double d = scan.values[i + 1];
        if (!std::isfinite(c) || !std::isfinite(d) || d == 0.0) continue;
        if ((c > 0) != (d > 0)) roots.push_back(refine_root(fn, scan.grid[i], scan.grid[i + 1], c, d, tol));
    }

    scan.points.resize(roots.size());
    parallel_for(roots.size(), options.threads, [&](std::size_t i) {
        StationaryPoint p;
        p.u_bar = roots[i];
        p.omega = cfg.omega;
        const Complex g = plant_at(plant, cfg, p.u_bar);
        p.condition_value = (fh * g).real();
        p.dC_du = condition_slope(plant, cfg, p.u_bar);
        p.degenerate = std::abs(g) < kDegenerateMagnitude || std::abs(g) <= 1e-9 * g_scale;
        scan.points[i] = p;
    });
    std::sort(scan.points.begin(), scan.points.end(),
              [](const StationaryPoint& a, const StationaryPoint& b) { return a.u_bar < b.u_bar; });
    return scan;
}

std::vector<StationaryPoint> find_stationary_points(const PlantModel& plant, const EscConfig& cfg,
                                                    const Interval& u_interval, int grid) {
    return scan_stationary_points(plant, cfg, u_interval, grid).points;
}

namespace {

/// Crossing zero at u, or the real zero nearest `reference` when one is given.
double tracked_zero(const PlantModel& plant, double u, double window, const double* reference) {
    const LinearizedPlant lin = linearize(plant, solve_equilibrium(plant, u));
    const ZeroSet zs = transmission_zeros(lin, ZeroOptions{.crossing_window = window});
    if (!reference) {
        if (!zs.crossing_zero) throw Error(ErrorKind::InvalidArgument, "no real transmission zero near the optimum");
        return *zs.crossing_zero;
    }
    double best = std::numeric_limits<double>::quiet_NaN();
    for (const Complex& z : zs.zeros) {
        if (std::abs(z.imag()) > 1e-8 * (1.0 + std::abs(z))) continue;
        if (std::isnan(best) || std::abs(z.real() - *reference) < std::abs(best - *reference)) best = z.real();
    }
    if (std::isnan(best)) throw Error(ErrorKind::InvalidArgument, "crossing zero lost under perturbation");
    return best;
}

}  // namespace

double estimate_optimum_deviation(const PlantModel& plant, const EscConfig& cfg, double u_star) {
    cfg.validate();
    const double window = 10.0 * cfg.omega;
    const double zero = tracked_zero(plant, u_star, window, nullptr);
    // G = (s + z_u) G0 with z_u = -zero.
    const double dzero_du = input_derivative([&](double u) { return tracked_zero(plant, u, window, &zero); }, u_star,
                                             plant.input_domain);
    const double dzu_du = -dzero_du;
    if (dzu_du == 0.0) throw Error(ErrorKind::InvalidArgument, "crossing zero does not move with the input");

    const LinearizedPlant lin = linearize(plant, solve_equilibrium(plant, u_star));
    const Complex s{0.0, cfg.omega};
    const Complex g0 = transfer_at(lin, s) / (s - zero);
    const double arg = kPi / 2 - std::arg(g0) - std::arg(high_pass(cfg));
    if (std::abs(reduce_half_turn(arg - kPi / 2)) < 1e-6)
        throw Error(ErrorKind::TangentSingularity, "tangent argument is at pi/2 mod pi");
    return cfg.omega / (std::tan(arg) * dzu_du);
}

}  // namespace escbranch
