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
/*
 * C interface to escbranch.
 *
 * Objects are opaque handles created by escb_*_create / returned through out
 * parameters and released with the matching escb_*_free. Every function that
 * can fail returns an escb_status; on failure escb_last_error() holds a
 * message for the calling thread until its next failing call. Handles are
 * immutable after creation and may be shared between threads.
 */
#ifndef ESCBRANCH_H
#define ESCBRANCH_H

#include <stddef.h>

#if defined(_WIN32)
#define ESCB_API __declspec(dllexport)
#else
#define ESCB_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum escb_status {
    ESCB_OK = 0,
    ESCB_INVALID_ARGUMENT = 1,
    ESCB_NON_CONVERGENCE = 2,
    ESCB_SINGULAR_JACOBIAN = 3,
    ESCB_SINGULAR_SOLVE = 4,
    ESCB_WINDOW_MISMATCH = 5,
    ESCB_DEGENERATE_RESPONSE = 6,
    ESCB_TANGENT_SINGULARITY = 7,
    ESCB_ILL_CONDITIONED_PENCIL = 8,
    ESCB_CORRECTOR_DIVERGENCE = 9,
    ESCB_STEP_SIZE_UNDERFLOW = 10,
    ESCB_NEWTON_DIVERGENCE = 11,
    ESCB_RANK_DEFICIENT_JACOBIAN = 12,
    ESCB_INCONCLUSIVE_SIGN = 13,
    ESCB_UNKNOWN_PLANT = 14,
    ESCB_INTERNAL = 99
} escb_status;

typedef enum escb_stability {
    ESCB_STABILITY_UNKNOWN = 0,
    ESCB_STABILITY_STABLE = 1,
    ESCB_STABILITY_UNSTABLE = 2,
    ESCB_STABILITY_MARGINAL = 3
} escb_stability;

typedef struct escb_plant escb_plant;
typedef struct escb_table escb_table;
typedef struct escb_orbit escb_orbit;

typedef struct escb_esc_config {
    double omega;
    double omega_h;
    double omega_l;
    double k;
    double a;
} escb_esc_config;

/* omega 0.4, omega_h = omega_l = 0.04, k 0.01, a 0.001. */
ESCB_API void escb_esc_config_default(escb_esc_config* cfg);

ESCB_API const char* escb_version(void);
ESCB_API const char* escb_last_error(void);
ESCB_API const char* escb_status_name(escb_status status);
ESCB_API const char* escb_stability_name(escb_stability stability);

/* ---- plants ---------------------------------------------------------- */

/* Registry names: "reactor", "hammerstein", "linear". keys/values may be NULL when n_params is 0. */
ESCB_API escb_status escb_plant_create(const char* name, size_t n_params, const char* const* keys,
                                       const double* values, escb_plant** out);
ESCB_API void escb_plant_free(escb_plant* plant);
ESCB_API escb_status escb_plant_info(const escb_plant* plant, int* n_states, double* u_min, double* u_max);

/* ---- tables ---------------------------------------------------------- */

ESCB_API size_t escb_table_rows(const escb_table* table);
ESCB_API size_t escb_table_cols(const escb_table* table);
ESCB_API const char* escb_table_column_name(const escb_table* table, size_t col);
ESCB_API int escb_table_column_is_text(const escb_table* table, size_t col);
/* NaN for text columns or out-of-range indices. */
ESCB_API double escb_table_value(const escb_table* table, size_t row, size_t col);
/* NULL for numeric columns or out-of-range indices. */
ESCB_API const char* escb_table_text(const escb_table* table, size_t row, size_t col);
/* Free-form diagnostics attached to a result (per-point failures, brackets). */
ESCB_API size_t escb_table_note_count(const escb_table* table);
ESCB_API const char* escb_table_note(const escb_table* table, size_t i);
ESCB_API void escb_table_free(escb_table* table);

/* ---- steady state and frequency response ------------------------------ */

/* Columns u, J. */
ESCB_API escb_status escb_equilibrium_map(const escb_plant* plant, const double* u, size_t count, unsigned threads,
                                          escb_table** out);
ESCB_API escb_status escb_steady_state_output(const escb_plant* plant, double u, double* J);
ESCB_API escb_status escb_plant_response(const escb_plant* plant, double u, double omega, double* re, double* im);
/* which: 0 high-pass, 1 low-pass. */
ESCB_API escb_status escb_filter_response(const escb_esc_config* cfg, int which, double omega, double* re,
                                          double* im);

/* ---- stationarity ----------------------------------------------------- */

ESCB_API escb_status escb_condition_value(const escb_plant* plant, const escb_esc_config* cfg, double u,
                                          double* out);
ESCB_API escb_status escb_phase_residual(const escb_plant* plant, const escb_esc_config* cfg, double u,
                                         double* out);
ESCB_API escb_status escb_condition_gradient(const escb_plant* plant, const escb_esc_config* cfg, double u,
                                             double omega, double* dC_du, double* dC_domega);

typedef struct escb_stationary_options {
    double u_min; /* u_min >= u_max selects the plant domain */
    double u_max;
    int grid;        /* default 2000 when <= 0 */
    int log_spacing; /* nonzero: logarithmic grid */
    int floquet;     /* nonzero: upgrade labels by shooting each orbit */
    unsigned threads;
} escb_stationary_options;

ESCB_API void escb_stationary_options_default(escb_stationary_options* opts);

/* Columns u, omega, C, dCdu, stability (text), source (text). Points whose
   labelling fails keep label "unknown" and get a note; the call still succeeds. */
ESCB_API escb_status escb_find_stationary_points(const escb_plant* plant, const escb_esc_config* cfg,
                                                 const escb_stationary_options* opts, escb_table** out);
ESCB_API escb_status escb_estimate_optimum_deviation(const escb_plant* plant, const escb_esc_config* cfg,
                                                     double u_star, double* out);

/* ---- zero dynamics ---------------------------------------------------- */

typedef struct escb_zero_info {
    size_t n_zeros;
    int has_crossing;
    double crossing_zero;
    int crossing_ambiguous;
    double maclaurin_zero;
    double steady_state_gain;
} escb_zero_info;

/* Zeros table (columns re, im) is optional: pass NULL to skip it. window <= 0 means unbounded. */
ESCB_API escb_status escb_transmission_zeros(const escb_plant* plant, double u, double window, escb_zero_info* info,
                                             escb_table** zeros);
/* Columns u, z_cross (NaN when absent), G0. Sign-change brackets and
   degenerate points are reported as notes. */
ESCB_API escb_status escb_zero_crossing_scan(const escb_plant* plant, const double* u, size_t count, double window,
                                             unsigned threads, escb_table** out);

/* ---- continuation ----------------------------------------------------- */

typedef struct escb_branch_options {
    double omega_min;
    double omega_max;
    double u_min; /* seed scan range; u_min >= u_max selects the plant domain */
    double u_max;
    double step;
    int seed_frequencies;
    int scan_grid;
    int log_spacing;
    int fixed_filters; /* nonzero: omega_h, omega_l stay fixed while omega varies */
    unsigned threads;
} escb_branch_options;

ESCB_API void escb_branch_options_default(escb_branch_options* opts);

/* Columns branch_id, omega, u, J, stability (text), is_fold. Notes summarise
   each branch and fold. */
ESCB_API escb_status escb_branch_diagram(const escb_plant* plant, const escb_esc_config* cfg,
                                         const escb_branch_options* opts, escb_table** out);

/* ---- time simulation -------------------------------------------------- */

typedef struct escb_simulation_options {
    double u_seed;
    double periods; /* simulated duration in forcing periods */
    double rtol;
    double atol;
    int samples_per_period;
    int shoot;          /* nonzero: shoot a periodic orbit from the final state */
    int settle_periods; /* extra settling before shooting */
} escb_simulation_options;

ESCB_API void escb_simulation_options_default(escb_simulation_options* opts);

/* Unlike the analysis calls this accepts k = 0 and a = 0.
   Trajectory columns t, u, y, xi, eta, u_hat. orbit may be NULL; it is only
   filled when opts->shoot is set. */
ESCB_API escb_status escb_simulate(const escb_plant* plant, const escb_esc_config* cfg,
                                   const escb_simulation_options* opts, escb_table** trajectory, escb_orbit** orbit);

/* Shoots the orbit near operating point u_bar, starting from a guess with the integrator frozen. */
ESCB_API escb_status escb_shoot_orbit(const escb_plant* plant, const escb_esc_config* cfg, double u_bar,
                                      escb_orbit** out);
ESCB_API double escb_orbit_mean_input(const escb_orbit* orbit);
ESCB_API double escb_orbit_period(const escb_orbit* orbit);
ESCB_API double escb_orbit_residual(const escb_orbit* orbit);
ESCB_API size_t escb_orbit_multiplier_count(const escb_orbit* orbit);
ESCB_API escb_status escb_orbit_multiplier(const escb_orbit* orbit, size_t i, double* re, double* im);
ESCB_API escb_status escb_orbit_stability(const escb_orbit* orbit, escb_stability* label, int* period_doubling);
ESCB_API void escb_orbit_free(escb_orbit* orbit);

ESCB_API escb_status escb_reduced_L(const escb_plant* plant, const escb_esc_config* cfg, double u, double* out);
ESCB_API escb_status escb_reduced_stability(const escb_plant* plant, const escb_esc_config* cfg, double u,
                                            escb_stability* label, double* dL_du);

#ifdef __cplusplus
}
#endif

#endif /* ESCBRANCH_H */
