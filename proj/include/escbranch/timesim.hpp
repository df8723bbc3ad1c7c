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
#ifndef ESCBRANCH_TIMESIM_HPP
#define ESCBRANCH_TIMESIM_HPP

#include <vector>

#include "escbranch/frequency.hpp"
#include "escbranch/linalg.hpp"
#include "escbranch/ode.hpp"
#include "escbranch/plant.hpp"
#include "escbranch/stationarity.hpp"

namespace escbranch {

/**
 * @brief Plant in closed loop with the extremum seeking controller
 *
 * Extended state z = [x; u_hat; xi; eta] of dimension n + 3:
 *
 *   dx/dt     = f(x, u_hat + a sin(omega t))
 *   du_hat/dt = k xi
 *   dxi/dt    = omega_l ((h(x) - eta) sin(omega t) - xi)
 *   deta/dt   = omega_h (h(x) - eta)
 *
 * eta is the state of the high-pass filter (its output is y - eta) and xi
 * the low-pass filtered demodulated signal.
 */
class ClosedLoopSystem {
public:
    ClosedLoopSystem(PlantModel plant, EscConfig cfg);

    int dim() const { return plant_.n + 3; }
    int u_hat_index() const { return plant_.n; }
    int xi_index() const { return plant_.n + 1; }
    int eta_index() const { return plant_.n + 2; }

    void rhs(double t, const Vector& z, Vector& dz) const;
    /// dF/dz; analytic plant Jacobians when available, central differences otherwise.
    Matrix jacobian(double t, const Vector& z) const;

    /// Input applied to the plant at time t.
    double input(double t, const Vector& z) const;
    double output(const Vector& z) const;

    /// (l(u_hat), u_hat, 0, J(u_hat)): the rest point when a = 0.
    Vector equilibrium_state(double u_hat) const;

    const PlantModel& plant() const { return plant_; }
    const EscConfig& config() const { return cfg_; }
    /// Copy with a different integrator gain.
    ClosedLoopSystem with_gain(double k) const;

private:
    PlantModel plant_;
    EscConfig cfg_;
};

struct SimulationOptions {
    double rtol = 1e-9;
    double atol = 1e-12;
    /// Dense output density; at least 128.
    int samples_per_period = 128;
};

struct Trajectory {
    std::vector<double> t;
    std::vector<Vector> z;
};

/// Samples on the uniform grid t0 + j T / samples_per_period up to t1 (and t1 itself).
/// Tolerances must lie in [1e-12, 1e-3]; the step never exceeds T / 4.
Trajectory integrate(const ClosedLoopSystem& sys, const Vector& z0, const Interval& t_span,
                     const SimulationOptions& options = {});

/// State after `periods` whole forcing periods starting at t = 0.
Vector advance(const ClosedLoopSystem& sys, const Vector& z0, int periods, const SimulationOptions& options = {});

enum class MonodromyMethod { FiniteDifference, Variational };

struct ShootingOptions {
    double rtol = 1e-10;
    double atol = 1e-12;
    /// Converged when the Newton correction is below tolerance (1 + ||z||_inf).
    double tolerance = 1e-9;
    int max_iterations = 20;
    MonodromyMethod monodromy = MonodromyMethod::FiniteDifference;
    /// I - Phi'_T with reciprocal condition below this counts as rank deficient.
    double rank_tolerance = 1e-13;
    unsigned threads = 1;
};

struct PeriodicOrbit {
    Vector anchor_state;
    double period = 0.0;
    double mean_input = 0.0;
    std::vector<Complex> floquet_multipliers;
    double residual = 0.0;
    int iterations = 0;
    Matrix monodromy;
};

/// Period map Phi_T and its Jacobian at z (orbit phase t = 0).
struct PeriodMap {
    Vector end_state;
    Matrix jacobian;
};
PeriodMap period_map(const ClosedLoopSystem& sys, const Vector& z, const ShootingOptions& options = {});

/// Newton on Phi_T(z) - z = 0. Throws NewtonDivergence or RankDeficientJacobian.
PeriodicOrbit shoot_orbit(const ClosedLoopSystem& sys, const Vector& z_guess, const ShootingOptions& options = {});

struct FloquetResult {
    Stability label = Stability::Unknown;
    bool period_doubling = false;
    double max_modulus = 0.0;
};

/// stable iff all |mu| < 1 - 1e-6, marginal if any |mu| within 1e-6 of 1,
/// period_doubling when a real multiplier lies at or below -1.
FloquetResult floquet_stability(const PeriodicOrbit& orbit);

/// Orbit guess near operating point u_bar: integrator frozen (k = 0) so the
/// filters and plant settle around the fixed input.
Vector frozen_orbit_guess(const ClosedLoopSystem& sys, double u_bar, int periods = 20,
                          const SimulationOptions& options = {});

struct SettleResult {
    Vector state;
    int periods = 0;
    bool settled = false;
};

/// Integrates whole periods until the stroboscopic displacement stays below
/// 1e-8 (1 + ||z||) for three consecutive periods, or max_periods is reached.
SettleResult settle(const ClosedLoopSystem& sys, const Vector& z0, int max_periods = 50,
                    const SimulationOptions& options = {});

/// Basin seeding: start at the equilibrium state for each seed, settle, shoot,
/// and keep the distinct stable orbits (sorted by mean input).
std::vector<PeriodicOrbit> find_stable_orbits(const ClosedLoopSystem& sys, const std::vector<double>& seeds,
                                              int settle_periods = 50, const ShootingOptions& options = {});

/// Averaged gradient proxy L(u_hat) = (a/2) |F_H| |G| |F_L(0)| cos(angle G + angle F_H).
double reduced_L(const PlantModel& plant, const EscConfig& cfg, double u_hat);

struct ReducedStability {
    Stability label = Stability::Unknown;
    double dL_du = 0.0;
};

/// stable iff k dL/du < 0 (central differences of reduced_L).
/// Throws InconclusiveSign when |k dL/du| < 1e-12 scale. Where G vanishes at the
/// point itself the scale comes from |G| one differencing step away, and
/// DegenerateResponse is thrown only if that vanishes too.
ReducedStability reduced_stability(const PlantModel& plant, const EscConfig& cfg, const StationaryPoint& point);

struct PeriodDoublingSearch {
    double k_stable = 0.0;  ///< largest gain known without the flag
    double k_flagged = 0.0; ///< smallest gain known with the flag
    PeriodicOrbit orbit_stable;
    PeriodicOrbit orbit_flagged;
    int bisections = 0;
};

/// Raises k geometrically (factor `growth`) from the orbit near u_bar until a real
/// multiplier passes -1, then bisects the bracket `bisections` times. Each orbit
/// is warm-started from the previous anchor. Throws NewtonDivergence if the
/// orbit is lost before a flag appears, InvalidArgument if k_max is reached.
PeriodDoublingSearch find_period_doubling(const PlantModel& plant, const EscConfig& cfg, double u_bar, double k_max,
                                          double growth = 1.5, int bisections = 10,
                                          const ShootingOptions& options = {});

}  // namespace escbranch

#endif  // ESCBRANCH_TIMESIM_HPP
