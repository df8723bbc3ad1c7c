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
#include "escbranch/timesim.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include <Eigen/Eigenvalues>

#include "escbranch/errors.hpp"

namespace escbranch {

ClosedLoopSystem::ClosedLoopSystem(PlantModel plant, EscConfig cfg) : plant_(std::move(plant)), cfg_(cfg) {
    plant_.validate();
    if (!(cfg_.omega > 0.0) || !(cfg_.omega_h > 0.0) || !(cfg_.omega_l > 0.0) || cfg_.a < 0.0 ||
        !std::isfinite(cfg_.k))
        throw Error(ErrorKind::InvalidArgument, "closed loop needs positive rates, a >= 0 and finite k");
}

ClosedLoopSystem ClosedLoopSystem::with_gain(double k) const {
    EscConfig cfg = cfg_;
    cfg.k = k;
    return ClosedLoopSystem(plant_, cfg);
}

double ClosedLoopSystem::input(double t, const Vector& z) const {
    return z(u_hat_index()) + cfg_.a * std::sin(cfg_.omega * t);
}

double ClosedLoopSystem::output(const Vector& z) const { return plant_.h(z.head(plant_.n)); }

void ClosedLoopSystem::rhs(double t, const Vector& z, Vector& dz) const {
    const int n = plant_.n;
    const double sn = std::sin(cfg_.omega * t);
    const Vector x = z.head(n);
    const double u = z(n) + cfg_.a * sn;
    const double y = plant_.h(x);
    const double hp = y - z(n + 2);
    dz.resize(n + 3);
    dz.head(n) = plant_.f(x, u);
    dz(n) = cfg_.k * z(n + 1);
    dz(n + 1) = cfg_.omega_l * (hp * sn - z(n + 1));
    dz(n + 2) = cfg_.omega_h * hp;
}

Matrix ClosedLoopSystem::jacobian(double t, const Vector& z) const {
    const int n = plant_.n;
    const double sn = std::sin(cfg_.omega * t);
    Equilibrium at;
    at.u_bar = z(n) + cfg_.a * sn;
    at.x_bar = z.head(n);
    const LinearizedPlant lin = linearize(plant_, at);
    Matrix jac = Matrix::Zero(n + 3, n + 3);
    jac.topLeftCorner(n, n) = lin.A;
    jac.block(0, n, n, 1) = lin.B;
    jac(n, n + 1) = cfg_.k;
    jac.block(n + 1, 0, 1, n) = cfg_.omega_l * sn * lin.C;
    jac(n + 1, n + 1) = -cfg_.omega_l;
    jac(n + 1, n + 2) = -cfg_.omega_l * sn;
    jac.block(n + 2, 0, 1, n) = cfg_.omega_h * lin.C;
    jac(n + 2, n + 2) = -cfg_.omega_h;
    return jac;
}

Vector ClosedLoopSystem::equilibrium_state(double u_hat) const {
    const Equilibrium eq = solve_equilibrium(plant_, u_hat);
    Vector z(dim());
    z.head(plant_.n) = eq.x_bar;
    z(u_hat_index()) = u_hat;
    z(xi_index()) = 0.0;
    z(eta_index()) = plant_.h(eq.x_bar);
    return z;
}

namespace {

OdeRhs bind(const ClosedLoopSystem& sys) {
    return [&sys](double t, const Vector& z, Vector& dz) { sys.rhs(t, z, dz); };
}

OdeOptions ode_options(const ClosedLoopSystem& sys, double rtol, double atol) {
    OdeOptions o;
    o.rtol = rtol;
    o.atol = atol;
    o.max_step = sys.config().period() / 4.0;
    return o;
}

void check_state(const ClosedLoopSystem& sys, const Vector& z) {
    if (z.size() != sys.dim()) throw Error(ErrorKind::InvalidArgument, "extended state has the wrong dimension");
    if (!z.allFinite()) throw Error(ErrorKind::InvalidArgument, "extended state must be finite");
}

}  // namespace

Trajectory integrate(const ClosedLoopSystem& sys, const Vector& z0, const Interval& t_span,
                     const SimulationOptions& options) {
    check_state(sys, z0);
    const auto in_range = [](double tol) { return tol >= 1e-12 && tol <= 1e-3; };
    if (!in_range(options.rtol) || !in_range(options.atol))
        throw Error(ErrorKind::InvalidArgument, "tolerances must lie in [1e-12, 1e-3]");
    if (options.samples_per_period < 128)
        throw Error(ErrorKind::InvalidArgument, "need at least 128 samples per period");
    if (!(t_span.hi > t_span.lo)) throw Error(ErrorKind::InvalidArgument, "time span must satisfy t0 < t1");

    const double dt = sys.config().period() / options.samples_per_period;
    std::vector<double> times;
    for (long j = 0;; ++j) {
        const double t = t_span.lo + static_cast<double>(j) * dt;
        if (t > t_span.hi - 1e-12 * dt) break;
        times.push_back(t);
    }
    times.push_back(t_span.hi);

    Trajectory traj;
    traj.t.reserve(times.size());
    traj.z.reserve(times.size());
    DormandPrince45 ode(ode_options(sys, options.rtol, options.atol));
    ode.integrate(bind(sys), t_span.lo, z0, t_span.hi, times, [&](double t, const Vector& z) {
        traj.t.push_back(t);
        traj.z.push_back(z);
    });
    return traj;
}

Vector advance(const ClosedLoopSystem& sys, const Vector& z0, int periods, const SimulationOptions& options) {
    check_state(sys, z0);
    if (periods < 1) return z0;
    DormandPrince45 ode(ode_options(sys, options.rtol, options.atol));
    return ode.integrate(bind(sys), 0.0, z0, periods * sys.config().period());
}

PeriodMap period_map(const ClosedLoopSystem& sys, const Vector& z, const ShootingOptions& options) {
    check_state(sys, z);
    const double period = sys.config().period();
    const int m = sys.dim();
    PeriodMap out;

    if (options.monodromy == MonodromyMethod::Variational) {
        // Augmented state [z; vec(Phi)], Phi(0) = I.
        Vector y0(m + m * m);
        y0.head(m) = z;
        Eigen::Map<Matrix>(y0.data() + m, m, m).setIdentity();
        const OdeRhs rhs = [&sys, m](double t, const Vector& y, Vector& dy) {
            dy.resize(y.size());
            const Vector zz = y.head(m);
            Vector dz;
            sys.rhs(t, zz, dz);
            dy.head(m) = dz;
            Eigen::Map<Matrix>(dy.data() + m, m, m).noalias() =
                sys.jacobian(t, zz) * Eigen::Map<const Matrix>(y.data() + m, m, m);
        };
        OdeOptions o = ode_options(sys, options.rtol, options.atol);
        DormandPrince45 ode(o);
        const Vector y1 = ode.integrate(rhs, 0.0, y0, period);
        out.end_state = y1.head(m);
        out.jacobian = Eigen::Map<const Matrix>(y1.data() + m, m, m);
        return out;
    }

    // Central differences of the period map along a frozen step sequence:
    // replaying the nominal steps keeps the map smooth in the initial state.
    DormandPrince45 ode(ode_options(sys, options.rtol, options.atol));
    const OdeRhs rhs = bind(sys);
    out.end_state = ode.integrate(rhs, 0.0, z, period);
    out.jacobian.resize(m, m);
    parallel_for(static_cast<std::size_t>(m), options.threads, [&](std::size_t j) {
        const double delta = 1e-6 * std::max(1.0, std::abs(z(j)));
        Vector zp = z, zm = z;
        zp(j) += delta;
        zm(j) -= delta;
        out.jacobian.col(j) = (ode.replay(rhs, 0.0, zp) - ode.replay(rhs, 0.0, zm)) / (2.0 * delta);
    });
    return out;
}

namespace {

double max_norm(const Vector& v) { return v.cwiseAbs().maxCoeff(); }

Vector end_of_period(const ClosedLoopSystem& sys, const Vector& z, const ShootingOptions& options) {
    DormandPrince45 ode(ode_options(sys, options.rtol, options.atol));
    return ode.integrate(bind(sys), 0.0, z, sys.config().period());
}

bool plausible(const ClosedLoopSystem& sys, const Vector& z) {
    return z.allFinite() && sys.plant().input_domain.contains(z(sys.u_hat_index()));
}

}  // namespace

PeriodicOrbit shoot_orbit(const ClosedLoopSystem& sys, const Vector& z_guess, const ShootingOptions& options) {
    check_state(sys, z_guess);
    const int m = sys.dim();
    Vector z = z_guess;
    PeriodicOrbit orbit;
    orbit.period = sys.config().period();

    for (int it = 0;; ++it) {
        if (!plausible(sys, z)) throw Error(ErrorKind::NewtonDivergence, "shooting iterate left the input domain");
        if (it > options.max_iterations) throw Error(ErrorKind::NewtonDivergence, "shooting did not converge");
        PeriodMap pm;
        try {
            pm = period_map(sys, z, options);
        } catch (const Error& e) {
            throw Error(ErrorKind::NewtonDivergence, std::string("period map failed: ") + e.what());
        }
        const Vector r = pm.end_state - z;
        const double res = max_norm(r);
        const Matrix a = pm.jacobian - Matrix::Identity(m, m);
        Eigen::PartialPivLU<Matrix> lu(a);
        if (!(lu.rcond() > options.rank_tolerance))
            throw Error(ErrorKind::RankDeficientJacobian, "I - Phi'_T is singular (cyclic fold nearby)");
        const Vector dz = lu.solve(-r);
        const double scale = 1.0 + max_norm(z);
        // Converged: the Newton correction itself is negligible. Slow modes with
        // multipliers near 1 make a small residual alone insufficient.
        if (max_norm(dz) <= options.tolerance * scale) {
            orbit.anchor_state = z;
            orbit.residual = res;
            orbit.iterations = it;
            orbit.monodromy = pm.jacobian;
            break;
        }

        // Natural monotonicity test: the simplified correction at the trial point,
        // computed with the current factorization, must shrink. The raw residual
        // is a poor merit function here because slow modes amplify it.
        bool accepted = false;
        double lambda = 1.0;
        const double step_norm = max_norm(dz);
        for (int halving = 0; halving < 10 && !accepted; ++halving, lambda *= 0.5) {
            const Vector trial = z + lambda * dz;
            if (!plausible(sys, trial)) continue;
            try {
                const Vector simplified = lu.solve(trial - end_of_period(sys, trial, options));
                if (max_norm(simplified) <= (1.0 - 0.25 * lambda) * step_norm ||
                    max_norm(lambda * dz) <= 1e3 * options.tolerance * scale) {
                    z = trial;
                    accepted = true;
                }
            } catch (const Error&) {
            }
        }
        if (!accepted) throw Error(ErrorKind::NewtonDivergence, "no damped Newton step reduced the residual");
    }

    Eigen::EigenSolver<Matrix> es(orbit.monodromy, false);
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) orbit.floquet_multipliers.push_back(es.eigenvalues()(i));
    std::sort(orbit.floquet_multipliers.begin(), orbit.floquet_multipliers.end(),
              [](Complex a, Complex b) { return std::abs(a) > std::abs(b); });

    // Period mean of u_hat from 256 equally spaced samples (exact for trigonometric polynomials).
    constexpr int kSamples = 256;
    std::vector<double> times(kSamples);
    for (int j = 0; j < kSamples; ++j) times[j] = orbit.period * j / kSamples;
    double acc = 0.0;
    DormandPrince45 ode(ode_options(sys, options.rtol, options.atol));
    ode.integrate(bind(sys), 0.0, orbit.anchor_state, orbit.period, times,
                  [&](double, const Vector& zz) { acc += zz(sys.u_hat_index()); });
    orbit.mean_input = acc / kSamples;
    return orbit;
}

FloquetResult floquet_stability(const PeriodicOrbit& orbit) {
    FloquetResult out;
    bool marginal = false;
    for (const Complex& mu : orbit.floquet_multipliers) {
        const double r = std::abs(mu);
        out.max_modulus = std::max(out.max_modulus, r);
        if (std::abs(r - 1.0) <= 1e-6) marginal = true;
        if (std::abs(mu.imag()) <= 1e-9 * (1.0 + r) && mu.real() <= -1.0) out.period_doubling = true;
    }
    if (marginal) out.label = Stability::Marginal;
    else out.label = out.max_modulus < 1.0 - 1e-6 ? Stability::Stable : Stability::Unstable;
    return out;
}

Vector frozen_orbit_guess(const ClosedLoopSystem& sys, double u_bar, int periods, const SimulationOptions& options) {
    const ClosedLoopSystem frozen = sys.with_gain(0.0);
    return advance(frozen, frozen.equilibrium_state(u_bar), periods, options);
}

SettleResult settle(const ClosedLoopSystem& sys, const Vector& z0, int max_periods, const SimulationOptions& options) {
    SettleResult out;
    out.state = z0;
    int quiet = 0;
    for (int p = 0; p < max_periods; ++p) {
        const Vector next = advance(sys, out.state, 1, options);
        const double moved = max_norm(next - out.state);
        out.state = next;
        out.periods = p + 1;
        quiet = moved < 1e-8 * (1.0 + max_norm(next)) ? quiet + 1 : 0;
        if (quiet >= 3) {
            out.settled = true;
            break;
        }
    }
    return out;
}

std::vector<PeriodicOrbit> find_stable_orbits(const ClosedLoopSystem& sys, const std::vector<double>& seeds,
                                              int settle_periods, const ShootingOptions& options) {
    std::vector<PeriodicOrbit> found;
    SimulationOptions sim;
    sim.rtol = std::max(options.rtol, 1e-12);
    sim.atol = std::max(options.atol, 1e-12);
    for (double seed : seeds) {
        try {
            const SettleResult s = settle(sys, sys.equilibrium_state(seed), settle_periods, sim);
            PeriodicOrbit orbit = shoot_orbit(sys, s.state, options);
            if (floquet_stability(orbit).label != Stability::Stable) continue;
            const bool known = std::any_of(found.begin(), found.end(), [&](const PeriodicOrbit& o) {
                return std::abs(o.mean_input - orbit.mean_input) <= 1e-6 * (1.0 + std::abs(orbit.mean_input));
            });
            if (!known) found.push_back(std::move(orbit));
        } catch (const Error&) {
            // A seed that fails to settle or shoot simply contributes nothing.
        }
    }
    std::sort(found.begin(), found.end(),
              [](const PeriodicOrbit& a, const PeriodicOrbit& b) { return a.mean_input < b.mean_input; });
    return found;
}

double reduced_L(const PlantModel& plant, const EscConfig& cfg, double u_hat) {
    const LinearizedPlant lin = linearize(plant, solve_equilibrium(plant, u_hat));
    const ComplexResponse g = plant_response(lin, cfg.omega);
    const ComplexResponse fh = filter_response(cfg, FilterKind::HighPass, cfg.omega);
    const double fl0 = filter_response(cfg, FilterKind::LowPass, 0.0).magnitude;
    return 0.5 * cfg.a * fh.magnitude * g.magnitude * fl0 * std::cos(g.phase + fh.phase);
}

ReducedStability reduced_stability(const PlantModel& plant, const EscConfig& cfg, const StationaryPoint& point) {
    const double u = point.u_bar;
    const LinearizedPlant lin = linearize(plant, solve_equilibrium(plant, u));
    double g = plant_response(lin, cfg.omega).magnitude / std::max(std::abs(u), 1e-3);
    if (g < kDegenerateMagnitude) {
        // G vanishes at u but L is still smooth; take the slope scale from |G| one step away.
        const double h = input_step(u);
        const auto magnitude_at = [&](double v) {
            if (!plant.input_domain.contains(v)) return 0.0;
            return plant_response(linearize(plant, solve_equilibrium(plant, v)), cfg.omega).magnitude;
        };
        g = 0.5 * (magnitude_at(u - h) + magnitude_at(u + h)) / h;
        if (g < kDegenerateMagnitude)
            throw Error(ErrorKind::DegenerateResponse, "plant response vanishes around the stationary point");
    }
    ReducedStability out;
    out.dL_du = input_derivative([&](double v) { return reduced_L(plant, cfg, v); }, u, plant.input_domain);
    const double fh = filter_response(cfg, FilterKind::HighPass, cfg.omega).magnitude;
    const double scale = std::abs(cfg.k) * 0.5 * cfg.a * fh * g;
    if (std::abs(cfg.k * out.dL_du) < 1e-12 * scale)
        throw Error(ErrorKind::InconclusiveSign, "k dL/du is indistinguishable from zero");
    out.label = classify_reduced_slope(cfg.k, out.dL_du);
    return out;
}

PeriodDoublingSearch find_period_doubling(const PlantModel& plant, const EscConfig& cfg, double u_bar, double k_max,
                                          double growth, int bisections, const ShootingOptions& options) {
    if (!(growth > 1.0) || !(k_max > cfg.k) || !(cfg.k > 0.0))
        throw Error(ErrorKind::InvalidArgument, "need 0 < k < k_max and growth > 1");
    const ClosedLoopSystem base(plant, cfg);
    PeriodDoublingSearch out;
    out.k_stable = cfg.k;
    out.orbit_stable = shoot_orbit(base, frozen_orbit_guess(base, u_bar), options);
    if (floquet_stability(out.orbit_stable).period_doubling)
        throw Error(ErrorKind::InvalidArgument, "orbit is already past period doubling at the starting gain");

    bool bracketed = false;
    while (!bracketed) {
        const double k = out.k_stable * growth;
        if (k > k_max) throw Error(ErrorKind::InvalidArgument, "no period doubling below k_max");
        PeriodicOrbit orbit = shoot_orbit(base.with_gain(k), out.orbit_stable.anchor_state, options);
        if (floquet_stability(orbit).period_doubling) {
            out.k_flagged = k;
            out.orbit_flagged = std::move(orbit);
            bracketed = true;
        } else {
            out.k_stable = k;
            out.orbit_stable = std::move(orbit);
        }
    }
    for (int i = 0; i < bisections; ++i) {
        const double k = 0.5 * (out.k_stable + out.k_flagged);
        PeriodicOrbit orbit = shoot_orbit(base.with_gain(k), out.orbit_stable.anchor_state, options);
        if (floquet_stability(orbit).period_doubling) {
            out.k_flagged = k;
            out.orbit_flagged = std::move(orbit);
        } else {
            out.k_stable = k;
            out.orbit_stable = std::move(orbit);
        }
        ++out.bisections;
    }
    return out;
}

}  // namespace escbranch
