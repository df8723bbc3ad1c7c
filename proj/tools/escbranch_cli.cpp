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
// Command-line front end. Talks to the library only through escbranch.h.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "escbranch/escbranch.h"

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitNumerical = 2;

/// Library failure carrying its status code.
struct LibraryFailure : std::runtime_error {
    escb_status status;
    LibraryFailure(escb_status s, const std::string& msg) : std::runtime_error(msg), status(s) {}
};

void check(escb_status status) {
    if (status != ESCB_OK) throw LibraryFailure(status, escb_last_error());
}

struct UsageFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

using PlantPtr = std::unique_ptr<escb_plant, decltype(&escb_plant_free)>;
using TablePtr = std::unique_ptr<escb_table, decltype(&escb_table_free)>;
using OrbitPtr = std::unique_ptr<escb_orbit, decltype(&escb_orbit_free)>;

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct Range {
    double lo = 0.0;
    double hi = 0.0;
    int count = 0;  // 0 when not given
};

/// Parses "lo:hi" or "lo:hi:count".
std::optional<Range> parse_range(const std::string& text, bool with_count) {
    if (text.empty()) return std::nullopt;
    std::vector<std::string> parts;
    std::stringstream ss(text);
    for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
    if (parts.size() != 2 && !(with_count && parts.size() == 3))
        throw UsageFailure("range '" + text + "' must be lo:hi" + (with_count ? "[:count]" : ""));
    Range r;
    try {
        std::size_t used = 0;
        r.lo = std::stod(parts[0], &used);
        if (used != parts[0].size()) throw std::invalid_argument(parts[0]);
        r.hi = std::stod(parts[1], &used);
        if (used != parts[1].size()) throw std::invalid_argument(parts[1]);
        if (parts.size() == 3) {
            r.count = std::stoi(parts[2], &used);
            if (used != parts[2].size()) throw std::invalid_argument(parts[2]);
        }
    } catch (const std::logic_error&) {
        throw UsageFailure("range '" + text + "' has a malformed number");
    }
    if (!(r.lo < r.hi)) throw UsageFailure("range '" + text + "' needs lo < hi");
    if (parts.size() == 3 && r.count < 2) throw UsageFailure("range '" + text + "' needs at least 2 points");
    return r;
}

std::vector<double> linspace(double lo, double hi, int count) {
    std::vector<double> out(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) out[i] = i + 1 == count ? hi : lo + (hi - lo) * i / (count - 1);
    return out;
}

struct Common {
    std::string plant;
    std::vector<std::string> params;
    double omega = 0.4;
    double omega_h = 0.04;
    double omega_l = 0.04;
    std::optional<double> omega_ratio;
    double k = 0.01;
    double a = 0.001;
    std::string output;
    unsigned threads = 1;
};

PlantPtr make_plant(const Common& c) {
    std::vector<std::string> keys;
    std::vector<double> values;
    for (const std::string& kv : c.params) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos || eq == 0) throw UsageFailure("--param expects key=value, got '" + kv + "'");
        keys.push_back(kv.substr(0, eq));
        try {
            std::size_t used = 0;
            const std::string v = kv.substr(eq + 1);
            values.push_back(std::stod(v, &used));
            if (used != v.size()) throw std::invalid_argument(v);
        } catch (const std::logic_error&) {
            throw UsageFailure("--param value in '" + kv + "' is not a number");
        }
    }
    std::vector<const char*> key_ptrs;
    for (const auto& k : keys) key_ptrs.push_back(k.c_str());
    escb_plant* raw = nullptr;
    const escb_status st = escb_plant_create(c.plant.c_str(), keys.size(), key_ptrs.data(), values.data(), &raw);
    if (st == ESCB_UNKNOWN_PLANT || st == ESCB_INVALID_ARGUMENT) throw UsageFailure(escb_last_error());
    check(st);
    return PlantPtr(raw, &escb_plant_free);
}

escb_esc_config make_config(const Common& c) {
    escb_esc_config cfg{c.omega, c.omega_h, c.omega_l, c.k, c.a};
    if (c.omega_ratio) cfg.omega_h = cfg.omega_l = *c.omega_ratio * c.omega;
    return cfg;
}

/// Writes the header, notes and rows of a result table.
class Writer {
public:
    Writer(const std::string& path, const std::string& command, const std::string& config_echo) {
        if (!path.empty() && path != "-") {
            file_.open(path);
            if (!file_) throw UsageFailure("cannot open output file '" + path + "'");
        }
        out() << "# escbranch " << escb_version() << "\n# command: " << command << "\n";
        std::stringstream ss(config_echo);
        // Keep shared options and those of this command; other sections are noise.
        for (std::string line; std::getline(ss, line);) {
            const auto key_end = line.find('=');
            const auto dot = line.find('.');
            if (line.empty() || (dot < key_end && line.compare(0, dot + 1, command + ".") != 0)) continue;
            out() << "# " << line << "\n";
        }
    }

    std::ostream& out() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }

    void note(const std::string& text) { out() << "# note: " << text << "\n"; }

    void table(const escb_table* t) {
        for (std::size_t i = 0; i < escb_table_note_count(t); ++i) note(escb_table_note(t, i));
        const std::size_t cols = escb_table_cols(t);
        for (std::size_t c = 0; c < cols; ++c) out() << (c ? "," : "") << escb_table_column_name(t, c);
        out() << "\n";
        for (std::size_t r = 0; r < escb_table_rows(t); ++r) {
            for (std::size_t c = 0; c < cols; ++c) {
                if (c) out() << ",";
                if (escb_table_column_is_text(t, c))
                    out() << escb_table_text(t, r, c);
                else
                    out() << num(escb_table_value(t, r, c));
            }
            out() << "\n";
        }
    }

private:
    std::ofstream file_;
};

TablePtr wrap(escb_table* t) { return TablePtr(t, &escb_table_free); }

/// max |C| on a uniform grid over the plant domain; scale for the orbit summary.
double condition_scale(const escb_plant* plant, const escb_esc_config& cfg) {
    double lo = 0.0, hi = 0.0;
    check(escb_plant_info(plant, nullptr, &lo, &hi));
    double scale = 0.0;
    for (double u : linspace(lo, hi, 2000)) {
        double c = 0.0;
        if (escb_condition_value(plant, &cfg, u, &c) == ESCB_OK && std::isfinite(c))
            scale = std::max(scale, std::abs(c));
    }
    return scale;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Stationary solutions and bifurcations of extremum seeking loops"};
    app.set_version_flag("--version", std::string(escb_version()));
    app.require_subcommand(1);
    app.set_config("--config", "", "INI file with one section per subcommand; flags override it");

    Common c;
    app.add_option("--plant", c.plant, "Plant name: reactor, hammerstein, linear")->required();
    app.add_option("--param", c.params, "Plant parameter override key=value (repeatable)");
    app.add_option("--omega", c.omega, "Forcing frequency")->capture_default_str();
    app.add_option("--omega-h", c.omega_h, "High-pass break frequency")->capture_default_str();
    app.add_option("--omega-l", c.omega_l, "Low-pass break frequency")->capture_default_str();
    app.add_option("--omega-ratio", c.omega_ratio, "Set omega_h = omega_l = ratio * omega");
    app.add_option("--k", c.k, "Integral gain")->capture_default_str();
    app.add_option("--a", c.a, "Perturbation amplitude")->capture_default_str();
    app.add_option("-o,--output", c.output, "Output CSV path (stdout when absent)");
    app.add_option("--threads", c.threads, "Worker threads for sweeps")->capture_default_str();

    // equilibrium
    auto* eq_cmd = app.add_subcommand("equilibrium", "Steady-state map J(u)")->fallthrough();
    std::string eq_range;
    eq_cmd->add_option("--u-range", eq_range, "lo:hi[:count]; plant domain and 400 points by default");

    // stationary
    auto* st_cmd = app.add_subcommand("stationary", "Roots of the stationarity condition with stability")->fallthrough();
    std::string st_range;
    int st_grid = 2000;
    bool st_log = false, st_floquet = false;
    st_cmd->add_option("--u-range", st_range, "lo:hi[:grid]; plant domain by default");
    st_cmd->add_option("--grid", st_grid, "Scan grid size")->capture_default_str();
    st_cmd->add_flag("--log-grid", st_log, "Logarithmic scan grid");
    st_cmd->add_flag("--floquet", st_floquet, "Confirm labels by shooting each orbit");

    // branch
    auto* br_cmd = app.add_subcommand("branch", "Bifurcation diagram over the forcing frequency")->fallthrough();
    std::string br_omega = "0.01:0.8", br_range;
    double br_step = 0.05;
    int br_seeds = 12, br_grid = 2000;
    bool br_log = false, br_fixed = false;
    br_cmd->add_option("--omega-range", br_omega, "lo:hi")->capture_default_str();
    br_cmd->add_option("--u-range", br_range, "Seed scan range lo:hi; plant domain by default");
    br_cmd->add_option("--step", br_step, "Maximum continuation step")->capture_default_str();
    br_cmd->add_option("--seed-frequencies", br_seeds, "Frequencies scanned for seeds")->capture_default_str();
    br_cmd->add_option("--scan-grid", br_grid, "Seed scan grid size")->capture_default_str();
    br_cmd->add_flag("--log-grid", br_log, "Logarithmic seed scan grid");
    br_cmd->add_flag("--fixed-filters", br_fixed, "Keep omega_h, omega_l fixed while omega varies");

    // simulate
    auto* sim_cmd = app.add_subcommand("simulate", "Closed-loop time simulation")->fallthrough();
    escb_simulation_options sim;
    escb_simulation_options_default(&sim);
    bool sim_shoot = false;
    std::string sim_summary;
    sim_cmd->add_option("--u-seed", sim.u_seed, "Initial input; the plant starts at its equilibrium")->required();
    sim_cmd->add_option("--periods", sim.periods, "Simulated duration in forcing periods")->capture_default_str();
    sim_cmd->add_option("--rtol", sim.rtol, "Relative tolerance")->capture_default_str();
    sim_cmd->add_option("--atol", sim.atol, "Absolute tolerance")->capture_default_str();
    sim_cmd->add_option("--samples-per-period", sim.samples_per_period, "Output samples per period")
        ->capture_default_str();
    sim_cmd->add_flag("--shoot", sim_shoot, "Settle and shoot a periodic orbit from the final state");
    sim_cmd->add_option("--settle-periods", sim.settle_periods, "Settling periods before shooting")
        ->capture_default_str();
    sim_cmd->add_option("--summary", sim_summary, "Write the orbit summary as JSON to this path ('-' for stderr)");

    // zeros
    auto* z_cmd = app.add_subcommand("zeros", "Crossing transmission zero and G(0) along the input")->fallthrough();
    std::string z_range;
    std::optional<double> z_window;
    z_cmd->add_option("--u-range", z_range, "lo:hi[:count]; plant domain and 400 points by default");
    z_cmd->add_option("--window", z_window, "Crossing-zero search radius; 10 omega by default");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        const std::string echo = app.config_to_str(true, false);
        const PlantPtr plant = make_plant(c);
        const escb_esc_config cfg = make_config(c);
        double u_lo = 0.0, u_hi = 0.0;
        check(escb_plant_info(plant.get(), nullptr, &u_lo, &u_hi));

        if (*eq_cmd || *z_cmd) {
            const std::optional<Range> r = parse_range(*eq_cmd ? eq_range : z_range, true);
            const std::vector<double> grid =
                r ? linspace(r->lo, r->hi, r->count ? r->count : 400) : linspace(u_lo, u_hi, 400);
            escb_table* raw = nullptr;
            if (*eq_cmd) {
                check(escb_equilibrium_map(plant.get(), grid.data(), grid.size(), c.threads, &raw));
                TablePtr t = wrap(raw);
                Writer w(c.output, "equilibrium", echo);
                w.table(t.get());
            } else {
                const double window = z_window.value_or(10.0 * cfg.omega);
                check(escb_zero_crossing_scan(plant.get(), grid.data(), grid.size(), window, c.threads, &raw));
                TablePtr t = wrap(raw);
                Writer w(c.output, "zeros", echo);
                w.table(t.get());
            }
        } else if (*st_cmd) {
            escb_stationary_options opts;
            escb_stationary_options_default(&opts);
            if (const auto r = parse_range(st_range, true)) {
                opts.u_min = r->lo;
                opts.u_max = r->hi;
                if (r->count) st_grid = r->count;
            }
            opts.grid = st_grid;
            opts.log_spacing = st_log;
            opts.floquet = st_floquet;
            opts.threads = c.threads;
            escb_table* raw = nullptr;
            check(escb_find_stationary_points(plant.get(), &cfg, &opts, &raw));
            TablePtr t = wrap(raw);
            Writer w(c.output, "stationary", echo);
            w.table(t.get());
        } else if (*br_cmd) {
            escb_branch_options opts;
            escb_branch_options_default(&opts);
            const Range om = *parse_range(br_omega, false);
            opts.omega_min = om.lo;
            opts.omega_max = om.hi;
            if (const auto r = parse_range(br_range, false)) {
                opts.u_min = r->lo;
                opts.u_max = r->hi;
            }
            opts.step = br_step;
            opts.seed_frequencies = br_seeds;
            opts.scan_grid = br_grid;
            opts.log_spacing = br_log;
            opts.fixed_filters = br_fixed;
            opts.threads = c.threads;
            escb_table* raw = nullptr;
            check(escb_branch_diagram(plant.get(), &cfg, &opts, &raw));
            TablePtr t = wrap(raw);
            Writer w(c.output, "branch", echo);
            w.table(t.get());
        } else if (*sim_cmd) {
            sim.shoot = sim_shoot;
            escb_table* raw = nullptr;
            escb_orbit* orbit_raw = nullptr;
            check(escb_simulate(plant.get(), &cfg, &sim, &raw, &orbit_raw));
            TablePtr t = wrap(raw);
            OrbitPtr orbit(orbit_raw, &escb_orbit_free);
            Writer w(c.output, "simulate", echo);

            nlohmann::ordered_json summary;
            summary["version"] = escb_version();
            if (orbit) {
                const double mean = escb_orbit_mean_input(orbit.get());
                double cond = 0.0;
                check(escb_condition_value(plant.get(), &cfg, mean, &cond));
                const double scale = condition_scale(plant.get(), cfg);
                escb_stability label = ESCB_STABILITY_UNKNOWN;
                int pd = 0;
                check(escb_orbit_stability(orbit.get(), &label, &pd));
                summary["mean_input"] = mean;
                summary["period"] = escb_orbit_period(orbit.get());
                summary["residual"] = escb_orbit_residual(orbit.get());
                summary["abs_condition"] = std::abs(cond);
                summary["condition_scale"] = scale;
                summary["relative_condition"] = scale > 0.0 ? std::abs(cond) / scale : 0.0;
                summary["stability"] = escb_stability_name(label);
                summary["period_doubling"] = pd != 0;
                // Leading multipliers by modulus; the rest are numerically zero for a plug-flow plant.
                const std::size_t count = escb_orbit_multiplier_count(orbit.get());
                summary["multiplier_count"] = count;
                nlohmann::ordered_json mults = nlohmann::ordered_json::array();
                for (std::size_t i = 0; i < std::min<std::size_t>(count, 10); ++i) {
                    double re = 0.0, im = 0.0;
                    check(escb_orbit_multiplier(orbit.get(), i, &re, &im));
                    mults.push_back(nlohmann::ordered_json{{"re", re}, {"im", im}});
                }
                summary["leading_multipliers"] = mults;
                w.note("orbit mean_input " + num(mean) + ", |C| " + num(std::abs(cond)) + " (scale " + num(scale) +
                       "), " + escb_stability_name(label));
            }
            w.table(t.get());
            if (!sim_summary.empty()) {
                std::string text = summary.dump(2) + "\n";
                if (sim_summary == "-") {
                    std::cerr << text;
                } else {
                    std::ofstream f(sim_summary);
                    if (!f) throw UsageFailure("cannot open summary file '" + sim_summary + "'");
                    f << text;
                }
            }
        }
    } catch (const UsageFailure& e) {
        std::cerr << "escbranch: " << e.what() << "\n";
        return kExitUsage;
    } catch (const LibraryFailure& e) {
        std::cerr << "escbranch: " << e.what() << "\n";
        return e.status == ESCB_INVALID_ARGUMENT || e.status == ESCB_UNKNOWN_PLANT ? kExitUsage : kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "escbranch: " << e.what() << "\n";
        return kExitNumerical;
    }
    return 0;
}
