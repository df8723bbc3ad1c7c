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
#include "escbranch/escbranch.h"

#include <charconv>
#include <cmath>
#include <exception>
#include <limits>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "escbranch/bench.hpp"
#include "escbranch/continuation.hpp"
#include "escbranch/errors.hpp"
#include "escbranch/stationarity.hpp"
#include "escbranch/timesim.hpp"
#include "escbranch/zeros.hpp"

#ifndef ESCBRANCH_VERSION
#define ESCBRANCH_VERSION "0.0.0"
#endif

using namespace escbranch;

struct escb_plant {
    PlantModel model;
};

struct escb_table {
    struct Column {
        std::string name;
        bool text = false;
        std::vector<double> numbers;
        std::vector<std::string> strings;
    };
    std::vector<Column> columns;
    std::vector<std::string> notes;

    std::size_t add(const std::string& name, bool text = false) {
        columns.push_back(Column{name, text, {}, {}});
        return columns.size() - 1;
    }
    std::size_t rows() const {
        if (columns.empty()) return 0;
        return columns[0].text ? columns[0].strings.size() : columns[0].numbers.size();
    }
};

struct escb_orbit {
    PeriodicOrbit orbit;
};

namespace {

thread_local std::string last_error;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

escb_status fail(escb_status status, const std::string& message) {
    last_error = message;
    return status;
}

/// Runs fn, translating exceptions into status codes.
template <typename Fn>
escb_status guarded(Fn&& fn) {
    try {
        fn();
        return ESCB_OK;
    } catch (const Error& e) {
        return fail(static_cast<escb_status>(e.kind()), e.what());
    } catch (const std::bad_alloc&) {
        return fail(ESCB_INTERNAL, "out of memory");
    } catch (const std::exception& e) {
        return fail(ESCB_INTERNAL, e.what());
    } catch (...) {
        return fail(ESCB_INTERNAL, "unknown failure");
    }
}

void require(bool ok, const char* what) {
    if (!ok) throw Error(ErrorKind::InvalidArgument, what);
}

// Analysis needs a working controller. Plain simulation also accepts k = 0 and
// a = 0 (an open-loop or unforced run); only the rates must stay positive.
EscConfig to_config(const escb_esc_config* cfg, bool simulation = false) {
    require(cfg != nullptr, "config must not be NULL");
    EscConfig c{cfg->omega, cfg->omega_h, cfg->omega_l, cfg->k, cfg->a};
    if (simulation) {
        require(c.omega > 0.0 && c.omega_h > 0.0 && c.omega_l > 0.0, "omega, omega_h and omega_l must be positive");
        require(std::isfinite(c.k) && std::isfinite(c.a) && c.a >= 0.0, "k must be finite and a non-negative");
    } else {
        c.validate();
    }
    return c;
}

const PlantModel& model(const escb_plant* plant) {
    require(plant != nullptr, "plant must not be NULL");
    return plant->model;
}

escb_stability to_c(Stability s) {
    switch (s) {
        case Stability::Stable: return ESCB_STABILITY_STABLE;
        case Stability::Unstable: return ESCB_STABILITY_UNSTABLE;
        case Stability::Marginal: return ESCB_STABILITY_MARGINAL;
        case Stability::Unknown: break;
    }
    return ESCB_STABILITY_UNKNOWN;
}

/// Shortest text that reads back as the same double.
std::string format(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

Interval resolve_range(const PlantModel& plant, double lo, double hi) {
    if (lo >= hi) return plant.input_domain;
    return Interval{lo, hi};
}

}  // namespace

extern "C" {

void escb_esc_config_default(escb_esc_config* cfg) {
    if (!cfg) return;
    const EscConfig d;
    *cfg = escb_esc_config{d.omega, d.omega_h, d.omega_l, d.k, d.a};
}

const char* escb_version(void) { return ESCBRANCH_VERSION; }

const char* escb_last_error(void) { return last_error.c_str(); }

const char* escb_status_name(escb_status status) {
    if (status == ESCB_OK) return "ok";
    if (status == ESCB_INTERNAL) return "internal";
    if (status >= ESCB_INVALID_ARGUMENT && status <= ESCB_UNKNOWN_PLANT)
        return to_string(static_cast<ErrorKind>(status));
    return "unrecognized";
}

const char* escb_stability_name(escb_stability stability) {
    switch (stability) {
        case ESCB_STABILITY_STABLE: return "stable";
        case ESCB_STABILITY_UNSTABLE: return "unstable";
        case ESCB_STABILITY_MARGINAL: return "marginal";
        case ESCB_STABILITY_UNKNOWN: break;
    }
    return "unknown";
}

escb_status escb_plant_create(const char* name, size_t n_params, const char* const* keys, const double* values,
                              escb_plant** out) {
    return guarded([&] {
        require(name != nullptr && out != nullptr, "name and out must not be NULL");
        require(n_params == 0 || (keys != nullptr && values != nullptr), "keys and values must not be NULL");
        std::map<std::string, double> overrides;
        for (size_t i = 0; i < n_params; ++i) {
            require(keys[i] != nullptr, "parameter key must not be NULL");
            overrides[keys[i]] = values[i];
        }
        auto plant = std::make_unique<escb_plant>();
        plant->model = make_plant(name, overrides);
        *out = plant.release();
    });
}

void escb_plant_free(escb_plant* plant) { delete plant; }

escb_status escb_plant_info(const escb_plant* plant, int* n_states, double* u_min, double* u_max) {
    return guarded([&] {
        const PlantModel& m = model(plant);
        if (n_states) *n_states = m.n;
        if (u_min) *u_min = m.input_domain.lo;
        if (u_max) *u_max = m.input_domain.hi;
    });
}

size_t escb_table_rows(const escb_table* table) { return table ? table->rows() : 0; }

size_t escb_table_cols(const escb_table* table) { return table ? table->columns.size() : 0; }

const char* escb_table_column_name(const escb_table* table, size_t col) {
    if (!table || col >= table->columns.size()) return nullptr;
    return table->columns[col].name.c_str();
}

int escb_table_column_is_text(const escb_table* table, size_t col) {
    return table && col < table->columns.size() && table->columns[col].text ? 1 : 0;
}

double escb_table_value(const escb_table* table, size_t row, size_t col) {
    if (!table || col >= table->columns.size() || table->columns[col].text) return kNaN;
    const auto& v = table->columns[col].numbers;
    return row < v.size() ? v[row] : kNaN;
}

const char* escb_table_text(const escb_table* table, size_t row, size_t col) {
    if (!table || col >= table->columns.size() || !table->columns[col].text) return nullptr;
    const auto& v = table->columns[col].strings;
    return row < v.size() ? v[row].c_str() : nullptr;
}

size_t escb_table_note_count(const escb_table* table) { return table ? table->notes.size() : 0; }

const char* escb_table_note(const escb_table* table, size_t i) {
    if (!table || i >= table->notes.size()) return nullptr;
    return table->notes[i].c_str();
}

void escb_table_free(escb_table* table) { delete table; }

escb_status escb_equilibrium_map(const escb_plant* plant, const double* u, size_t count, unsigned threads,
                                 escb_table** out) {
    return guarded([&] {
        require(out != nullptr && (u != nullptr || count == 0), "u and out must not be NULL");
        EquilibriumMapOptions opts;
        opts.threads = threads == 0 ? 1 : threads;
        const auto map = equilibrium_map(model(plant), std::vector<double>(u, u + count), opts);
        auto table = std::make_unique<escb_table>();
        table->add("u");
        table->add("J");
        for (const MapPoint& p : map) {
            table->columns[0].numbers.push_back(p.u);
            table->columns[1].numbers.push_back(p.J);
        }
        *out = table.release();
    });
}

escb_status escb_steady_state_output(const escb_plant* plant, double u, double* J) {
    return guarded([&] {
        require(J != nullptr, "J must not be NULL");
        *J = steady_state_output(model(plant), u);
    });
}

escb_status escb_plant_response(const escb_plant* plant, double u, double omega, double* re, double* im) {
    return guarded([&] {
        require(re != nullptr && im != nullptr, "outputs must not be NULL");
        const PlantModel& m = model(plant);
        const Complex g = plant_response(linearize(m, solve_equilibrium(m, u)), omega).value;
        *re = g.real();
        *im = g.imag();
    });
}

escb_status escb_filter_response(const escb_esc_config* cfg, int which, double omega, double* re, double* im) {
    return guarded([&] {
        require(re != nullptr && im != nullptr, "outputs must not be NULL");
        require(which == 0 || which == 1, "which must be 0 (high-pass) or 1 (low-pass)");
        const Complex f =
            filter_response(to_config(cfg), which == 0 ? FilterKind::HighPass : FilterKind::LowPass, omega).value;
        *re = f.real();
        *im = f.imag();
    });
}

escb_status escb_condition_value(const escb_plant* plant, const escb_esc_config* cfg, double u, double* out) {
    return guarded([&] {
        require(out != nullptr, "out must not be NULL");
        *out = condition_value(model(plant), to_config(cfg), u);
    });
}

escb_status escb_phase_residual(const escb_plant* plant, const escb_esc_config* cfg, double u, double* out) {
    return guarded([&] {
        require(out != nullptr, "out must not be NULL");
        *out = phase_residual(model(plant), to_config(cfg), u);
    });
}

escb_status escb_condition_gradient(const escb_plant* plant, const escb_esc_config* cfg, double u, double omega,
                                    double* dC_du, double* dC_domega) {
    return guarded([&] {
        require(dC_du != nullptr && dC_domega != nullptr, "outputs must not be NULL");
        const ConditionGradient g = condition_gradient(model(plant), to_config(cfg), u, omega);
        *dC_du = g.dC_du;
        *dC_domega = g.dC_domega;
    });
}

void escb_stationary_options_default(escb_stationary_options* opts) {
    if (!opts) return;
    *opts = escb_stationary_options{0.0, 0.0, 2000, 0, 0, 1};
}

escb_status escb_find_stationary_points(const escb_plant* plant, const escb_esc_config* cfg,
                                        const escb_stationary_options* opts, escb_table** out) {
    return guarded([&] {
        require(out != nullptr, "out must not be NULL");
        escb_stationary_options o;
        escb_stationary_options_default(&o);
        if (opts) o = *opts;
        const PlantModel& m = model(plant);
        const EscConfig c = to_config(cfg);
        StationaryScanOptions sopt;
        sopt.spacing = o.log_spacing ? GridSpacing::Logarithmic : GridSpacing::Uniform;
        sopt.threads = o.threads == 0 ? 1 : o.threads;
        const StationaryScan scan =
            scan_stationary_points(m, c, resolve_range(m, o.u_min, o.u_max), o.grid > 0 ? o.grid : 2000, sopt);

        auto table = std::make_unique<escb_table>();
        for (const char* name : {"u", "omega", "C", "dCdu"}) table->add(name);
        table->add("stability", true);
        table->add("source", true);
        const ClosedLoopSystem sys(m, c);
        for (StationaryPoint p : scan.points) {
            if (p.degenerate)
                table->notes.push_back("u=" + format(p.u_bar) + ": " + to_string(ErrorKind::DegenerateResponse) +
                                       ": plant response vanishes; C = 0 holds trivially");
            try {
                p.stability = reduced_stability(m, c, p).label;
                p.stability_source = StabilitySource::ReducedModel;
            } catch (const Error& e) {
                table->notes.push_back("u=" + format(p.u_bar) + ": reduced model: " + e.what());
            }
            if (o.floquet) {
                try {
                    const PeriodicOrbit orbit = shoot_orbit(sys, frozen_orbit_guess(sys, p.u_bar));
                    p.stability = floquet_stability(orbit).label;
                    p.stability_source = StabilitySource::Floquet;
                    table->notes.push_back("u=" + format(p.u_bar) + ": orbit mean input " +
                                           format(orbit.mean_input) + ", largest |multiplier| " +
                                           format(floquet_stability(orbit).max_modulus));
                } catch (const Error& e) {
                    table->notes.push_back("u=" + format(p.u_bar) + ": shooting: " + e.what());
                }
            }
            table->columns[0].numbers.push_back(p.u_bar);
            table->columns[1].numbers.push_back(p.omega);
            table->columns[2].numbers.push_back(p.condition_value);
            table->columns[3].numbers.push_back(p.dC_du);
            table->columns[4].strings.push_back(to_string(p.stability));
            table->columns[5].strings.push_back(to_string(p.stability_source));
        }
        *out = table.release();
    });
}

escb_status escb_estimate_optimum_deviation(const escb_plant* plant, const escb_esc_config* cfg, double u_star,
                                            double* out) {
    return guarded([&] {
        require(out != nullptr, "out must not be NULL");
        *out = estimate_optimum_deviation(model(plant), to_config(cfg), u_star);
    });
}

escb_status escb_transmission_zeros(const escb_plant* plant, double u, double window, escb_zero_info* info,
                                    escb_table** zeros) {
    return guarded([&] {
        require(info != nullptr, "info must not be NULL");
        const PlantModel& m = model(plant);
        ZeroOptions zo;
        if (window > 0.0) zo.crossing_window = window;
        const ZeroSet zs = transmission_zeros(linearize(m, solve_equilibrium(m, u)), zo);
        info->n_zeros = zs.zeros.size();
        info->has_crossing = zs.crossing_zero.has_value();
        info->crossing_zero = zs.crossing_zero.value_or(kNaN);
        info->crossing_ambiguous = zs.crossing_ambiguous;
        info->maclaurin_zero = zs.maclaurin_zero;
        info->steady_state_gain = zs.steady_state_gain;
        if (zeros) {
            auto table = std::make_unique<escb_table>();
            table->add("re");
            table->add("im");
            for (const Complex& z : zs.zeros) {
                table->columns[0].numbers.push_back(z.real());
                table->columns[1].numbers.push_back(z.imag());
            }
            *zeros = table.release();
        }
    });
}

escb_status escb_zero_crossing_scan(const escb_plant* plant, const double* u, size_t count, double window,
                                    unsigned threads, escb_table** out) {
    return guarded([&] {
        require(out != nullptr && (u != nullptr || count == 0), "u and out must not be NULL");
        ZeroScanOptions zo;
        if (window > 0.0) zo.zeros.crossing_window = window;
        zo.threads = threads == 0 ? 1 : threads;
        const ZeroScan scan = zero_crossing_scan(model(plant), std::vector<double>(u, u + count), zo);
        auto table = std::make_unique<escb_table>();
        table->add("u");
        table->add("z_cross");
        table->add("G0");
        for (const ZeroScanPoint& p : scan.points) {
            table->columns[0].numbers.push_back(p.u);
            table->columns[1].numbers.push_back(p.crossing_zero.value_or(kNaN));
            table->columns[2].numbers.push_back(p.steady_state_gain);
            if (p.degenerate)
                table->notes.push_back("u=" + format(p.u) + ": " + to_string(ErrorKind::DegenerateResponse) +
                                       ": G vanishes identically");
            if (p.ambiguous) table->notes.push_back("u=" + format(p.u) + ": ambiguous crossing zero");
        }
        for (const Interval& b : scan.zero_sign_changes)
            table->notes.push_back("crossing zero changes sign in [" + format(b.lo) + ", " + format(b.hi) + "]");
        for (const Interval& b : scan.gain_sign_changes)
            table->notes.push_back("G(0) changes sign in [" + format(b.lo) + ", " + format(b.hi) + "]");
        *out = table.release();
    });
}

void escb_branch_options_default(escb_branch_options* opts) {
    if (!opts) return;
    const DiagramOptions d;
    *opts = escb_branch_options{d.continuation.omega_range.lo,
                                d.continuation.omega_range.hi,
                                0.0,
                                0.0,
                                d.continuation.step,
                                d.seed_frequencies,
                                d.scan_grid,
                                0,
                                0,
                                1};
}

escb_status escb_branch_diagram(const escb_plant* plant, const escb_esc_config* cfg, const escb_branch_options* opts,
                                escb_table** out) {
    return guarded([&] {
        require(out != nullptr, "out must not be NULL");
        escb_branch_options o;
        escb_branch_options_default(&o);
        if (opts) o = *opts;
        require(o.omega_min > 0.0 && o.omega_min < o.omega_max, "omega range must satisfy 0 < min < max");
        const EscCondition cond(model(plant), to_config(cfg),
                                o.fixed_filters ? FilterScaling::Fixed : FilterScaling::Proportional);
        DiagramOptions d;
        d.continuation.omega_range = Interval{o.omega_min, o.omega_max};
        if (o.step > 0.0) d.continuation.step = o.step;
        d.seed_range = o.u_min < o.u_max ? Interval{o.u_min, o.u_max} : Interval{};
        if (o.seed_frequencies > 0) d.seed_frequencies = o.seed_frequencies;
        if (o.scan_grid > 1) d.scan_grid = o.scan_grid;
        d.scan_spacing = o.log_spacing ? GridSpacing::Logarithmic : GridSpacing::Uniform;
        d.threads = o.threads == 0 ? 1 : o.threads;
        const BifurcationDiagram diagram = build_diagram(cond, d);

        auto table = std::make_unique<escb_table>();
        table->add("branch_id");
        table->add("omega");
        table->add("u");
        table->add("J");
        table->add("stability", true);
        table->add("is_fold");
        for (const DiagramRow& r : diagram.rows) {
            table->columns[0].numbers.push_back(static_cast<double>(r.branch_id));
            table->columns[1].numbers.push_back(r.omega);
            table->columns[2].numbers.push_back(r.u);
            table->columns[3].numbers.push_back(r.J);
            table->columns[4].strings.push_back(to_string(r.stability));
            table->columns[5].numbers.push_back(r.is_fold ? 1.0 : 0.0);
        }
        for (std::size_t id = 0; id < diagram.branches.size(); ++id) {
            const SolutionBranch& b = diagram.branches[id];
            table->notes.push_back("branch " + std::to_string(id) + " (" + b.label + "): " +
                                   std::to_string(b.points.size()) + " points, ends " + to_string(b.end_backward) +
                                   " / " + to_string(b.end_forward));
            for (const FoldPoint& f : b.folds)
                table->notes.push_back("branch " + std::to_string(id) + " fold at omega=" + format(f.omega) +
                                       " u=" + format(f.u_bar) + " d2C/du2=" + format(f.d2C_du2) +
                                       " dC/domega=" + format(f.dC_domega) + (f.degenerate ? " (degenerate)" : ""));
        }
        *out = table.release();
    });
}

void escb_simulation_options_default(escb_simulation_options* opts) {
    if (!opts) return;
    *opts = escb_simulation_options{0.0, 100.0, 1e-9, 1e-12, 128, 0, 50};
}

escb_status escb_simulate(const escb_plant* plant, const escb_esc_config* cfg, const escb_simulation_options* opts,
                          escb_table** trajectory, escb_orbit** orbit) {
    return guarded([&] {
        require(trajectory != nullptr && opts != nullptr, "options and trajectory must not be NULL");
        require(opts->periods > 0.0, "simulated duration must be positive");
        const ClosedLoopSystem sys(model(plant), to_config(cfg, true));
        SimulationOptions sim;
        sim.rtol = opts->rtol;
        sim.atol = opts->atol;
        sim.samples_per_period = opts->samples_per_period;
        const double period = sys.config().period();
        const Trajectory traj =
            integrate(sys, sys.equilibrium_state(opts->u_seed), Interval{0.0, opts->periods * period}, sim);

        auto table = std::make_unique<escb_table>();
        for (const char* name : {"t", "u", "y", "xi", "eta", "u_hat"}) table->add(name);
        for (std::size_t i = 0; i < traj.t.size(); ++i) {
            const Vector& z = traj.z[i];
            table->columns[0].numbers.push_back(traj.t[i]);
            table->columns[1].numbers.push_back(sys.input(traj.t[i], z));
            table->columns[2].numbers.push_back(sys.output(z));
            table->columns[3].numbers.push_back(z(sys.xi_index()));
            table->columns[4].numbers.push_back(z(sys.eta_index()));
            table->columns[5].numbers.push_back(z(sys.u_hat_index()));
        }

        std::unique_ptr<escb_orbit> shot;
        if (opts->shoot) {
            // Start from the last sample at a whole period so the phase matches t = 0.
            const long whole = static_cast<long>(std::floor(opts->periods + 1e-9));
            require(whole >= 1, "shooting needs at least one whole simulated period");
            const Vector& start = traj.z[static_cast<std::size_t>(whole) * opts->samples_per_period];
            const SettleResult settled = settle(sys, start, std::max(0, opts->settle_periods), sim);
            shot = std::make_unique<escb_orbit>();
            shot->orbit = shoot_orbit(sys, settled.state);
        }
        *trajectory = table.release();
        if (orbit) *orbit = shot.release();
    });
}

escb_status escb_shoot_orbit(const escb_plant* plant, const escb_esc_config* cfg, double u_bar, escb_orbit** out) {
    return guarded([&] {
        require(out != nullptr, "out must not be NULL");
        const ClosedLoopSystem sys(model(plant), to_config(cfg));
        auto shot = std::make_unique<escb_orbit>();
        shot->orbit = shoot_orbit(sys, frozen_orbit_guess(sys, u_bar));
        *out = shot.release();
    });
}

double escb_orbit_mean_input(const escb_orbit* orbit) { return orbit ? orbit->orbit.mean_input : kNaN; }

double escb_orbit_period(const escb_orbit* orbit) { return orbit ? orbit->orbit.period : kNaN; }

double escb_orbit_residual(const escb_orbit* orbit) { return orbit ? orbit->orbit.residual : kNaN; }

size_t escb_orbit_multiplier_count(const escb_orbit* orbit) {
    return orbit ? orbit->orbit.floquet_multipliers.size() : 0;
}

escb_status escb_orbit_multiplier(const escb_orbit* orbit, size_t i, double* re, double* im) {
    return guarded([&] {
        require(orbit != nullptr && re != nullptr && im != nullptr, "arguments must not be NULL");
        require(i < orbit->orbit.floquet_multipliers.size(), "multiplier index out of range");
        *re = orbit->orbit.floquet_multipliers[i].real();
        *im = orbit->orbit.floquet_multipliers[i].imag();
    });
}

escb_status escb_orbit_stability(const escb_orbit* orbit, escb_stability* label, int* period_doubling) {
    return guarded([&] {
        require(orbit != nullptr, "orbit must not be NULL");
        const FloquetResult r = floquet_stability(orbit->orbit);
        if (label) *label = to_c(r.label);
        if (period_doubling) *period_doubling = r.period_doubling ? 1 : 0;
    });
}

void escb_orbit_free(escb_orbit* orbit) { delete orbit; }

escb_status escb_reduced_L(const escb_plant* plant, const escb_esc_config* cfg, double u, double* out) {
    return guarded([&] {
        require(out != nullptr, "out must not be NULL");
        *out = reduced_L(model(plant), to_config(cfg), u);
    });
}

escb_status escb_reduced_stability(const escb_plant* plant, const escb_esc_config* cfg, double u,
                                   escb_stability* label, double* dL_du) {
    return guarded([&] {
        StationaryPoint p;
        p.u_bar = u;
        const ReducedStability r = reduced_stability(model(plant), to_config(cfg), p);
        if (label) *label = to_c(r.label);
        if (dL_du) *dL_du = r.dL_du;
    });
}

}  // extern "C"
