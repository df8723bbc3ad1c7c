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
#include "escbranch/continuation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <utility>

#include "escbranch/errors.hpp"

namespace escbranch {

ConditionGradient TwoParameterCondition::gradient(double u, double omega) const {
    ConditionGradient g;
    g.dC_du = input_derivative([&](double x) { return value(x, omega); }, u, u_domain());
    const double h = 1e-6 * std::max(std::abs(omega), 1.0);
    g.dC_domega = (value(u, omega + h) - value(u, omega - h)) / (2.0 * h);
    return g;
}

EscCondition::EscCondition(PlantModel plant, EscConfig cfg, FilterScaling scaling)
    : plant_(std::move(plant)), cfg_(cfg), scaling_(scaling) {
    cfg_.validate();
}

EscConfig EscCondition::config_at(double omega) const {
    EscConfig out = cfg_.at_frequency(omega);
    if (scaling_ == FilterScaling::Proportional) {
        out.omega_h = cfg_.omega_h * omega / cfg_.omega;
        out.omega_l = cfg_.omega_l * omega / cfg_.omega;
    }
    return out;
}

double EscCondition::value(double u, double omega) const { return condition_value(plant_, config_at(omega), u); }

ConditionGradient EscCondition::gradient(double u, double omega) const {
    ConditionGradient g;
    g.dC_du = condition_slope(plant_, config_at(omega), u);
    const LinearizedPlant lin = linearize(plant_, solve_equilibrium(plant_, u));
    const double h = 1e-6 * omega;
    const auto c_at = [&](double w) {
        const EscConfig cfg = config_at(w);
        return (filter_response(cfg, FilterKind::HighPass, w).value * plant_response(lin, w).value).real();
    };
    g.dC_domega = (c_at(omega + h) - c_at(omega - h)) / (2.0 * h);
    return g;
}

ConditionGradient condition_gradient(const PlantModel& plant, const EscConfig& cfg, double u_bar, double omega) {
    return EscCondition(plant, cfg.at_frequency(omega), FilterScaling::Fixed).gradient(u_bar, omega);
}

const char* to_string(BranchEnd end) noexcept {
    switch (end) {
        case BranchEnd::OmegaBoundary: return "omega_boundary";
        case BranchEnd::InputBoundary: return "input_boundary";
        case BranchEnd::EquilibriumFailure: return "equilibrium_failure";
        case BranchEnd::CorrectorDivergence: return "corrector_divergence";
        case BranchEnd::Closed: return "closed";
        case BranchEnd::PointLimit: break;
    }
    return "point_limit";
}

namespace {

struct OutOfDomain {};

/// Maps between (u, omega) and the working coordinates (phi, psi).
class Chart {
public:
    Chart(const TwoParameterCondition& cond, const ContinuationOptions& opt)
        : cond_(cond),
          log_u_(opt.log_input && cond.u_domain().lo > 0.0),
          log_w_(opt.omega_range.lo > 0.0),
          omega_range_(opt.omega_range) {}

    double phi(double u) const { return log_u_ ? std::log(u) : u; }
    double psi(double w) const { return log_w_ ? std::log(w) : w; }
    double u(double phi) const { return log_u_ ? std::exp(phi) : phi; }
    double w(double psi) const { return log_w_ ? std::exp(psi) : psi; }
    double du_dphi(double u) const { return log_u_ ? u : 1.0; }
    double dw_dpsi(double w) const { return log_w_ ? w : 1.0; }

    bool inside_u(double u) const { return cond_.u_domain().contains(u); }
    bool inside_w(double w) const { return (!log_w_ || w > 0.0) && omega_range_.contains(w); }
    double u_lo() const { return cond_.u_domain().lo; }
    double u_hi() const { return cond_.u_domain().hi; }
    double w_lo() const { return omega_range_.lo; }
    double w_hi() const { return omega_range_.hi; }

    struct Sample {
        double C;
        ConditionGradient g;
        double c_phi, c_psi;  ///< gradient in working coordinates
    };

    /// Throws OutOfDomain before touching the plant outside its input domain.
    Sample sample(double phi, double psi) const {
        const double uu = u(phi);
        const double ww = w(psi);
        if (!inside_u(uu) || (log_w_ && !(ww > 0.0))) throw OutOfDomain{};
        Sample s;
        s.C = cond_.value(uu, ww);
        s.g = cond_.gradient(uu, ww);
        s.c_phi = s.g.dC_du * du_dphi(uu);
        s.c_psi = s.g.dC_domega * dw_dpsi(ww);
        if (!std::isfinite(s.C) || !std::isfinite(s.c_phi) || !std::isfinite(s.c_psi))
            throw Error(ErrorKind::NonConvergence, "condition is not finite");
        return s;
    }

private:
    const TwoParameterCondition& cond_;
    bool log_u_;
    bool log_w_;
    Interval omega_range_;
};

struct Node {
    double phi, psi;
    Chart::Sample s;
};

/// Newton on {C = 0, t . (p - anchor) = 0}. Returns nullopt when it does not converge.
std::optional<Node> correct(const Chart& chart, double phi0, double psi0, double t_phi, double t_psi,
                            const ContinuationOptions& opt, double max_drift) {
    double phi = phi0, psi = psi0;
    for (int it = 0; it < opt.max_corrector_iterations; ++it) {
        const Chart::Sample s = chart.sample(phi, psi);
        const double r2 = t_phi * (phi - phi0) + t_psi * (psi - psi0);
        const double det = s.c_phi * t_psi - s.c_psi * t_phi;
        if (det == 0.0 || !std::isfinite(det)) return std::nullopt;
        const double d_phi = (-s.C * t_psi + r2 * s.c_psi) / det;
        const double d_psi = (-s.c_phi * r2 + s.C * t_phi) / det;
        phi += d_phi;
        psi += d_psi;
        if (std::hypot(phi - phi0, psi - psi0) > max_drift) return std::nullopt;
        if (std::hypot(d_phi, d_psi) <= opt.corrector_tolerance) return Node{phi, psi, chart.sample(phi, psi)};
    }
    return std::nullopt;
}

std::pair<double, double> unit_tangent(const Chart::Sample& s) {
    const double norm = std::hypot(s.c_phi, s.c_psi);
    if (norm == 0.0) throw Error(ErrorKind::CorrectorDivergence, "condition gradient vanishes on the branch");
    return {-s.c_psi / norm, s.c_phi / norm};
}

BranchPoint to_point(const Chart& chart, const Node& n, double t_phi, double t_psi) {
    BranchPoint p;
    p.u_bar = chart.u(n.phi);
    p.omega = chart.w(n.psi);
    double tu = t_phi * chart.du_dphi(p.u_bar);
    double tw = t_psi * chart.dw_dpsi(p.omega);
    const double norm = std::hypot(tu, tw);
    p.tangent_u = tu / norm;
    p.tangent_omega = tw / norm;
    p.C_value = n.s.C;
    p.dC_du = n.s.g.dC_du;
    p.dC_domega = n.s.g.dC_domega;
    return p;
}

/// Fixed-coordinate Newton used to land exactly on a boundary line.
std::optional<Node> land_on(const Chart& chart, double phi, double psi, bool fix_psi,
                            const ContinuationOptions& opt) {
    try {
        return correct(chart, phi, psi, fix_psi ? 0.0 : 1.0, fix_psi ? 1.0 : 0.0, opt, 10.0 * opt.step);
    } catch (...) {
        return std::nullopt;
    }
}

struct Walk {
    std::vector<BranchPoint> points;
    BranchEnd end = BranchEnd::PointLimit;
};

Walk walk(const Chart& chart, const Node& start, double dir_phi, double dir_psi, const ContinuationOptions& opt,
          int max_points, bool detect_closure) {
    Walk out;
    const double h_max = opt.step;
    const double h_min = opt.step / 16.0;
    double h = h_max;
    int clean = 0;
    Node cur = start;
    double t_phi = dir_phi, t_psi = dir_psi;
    double travelled = 0.0;

    while (static_cast<int>(out.points.size()) < max_points) {
        const double pred_phi = cur.phi + h * t_phi;
        const double pred_psi = cur.psi + h * t_psi;
        std::optional<Node> next;
        bool out_of_domain = false;
        bool equilibrium_failed = false;
        try {
            next = correct(chart, pred_phi, pred_psi, t_phi, t_psi, opt, 0.5 * h);
        } catch (const OutOfDomain&) {
            out_of_domain = true;
        } catch (const Error&) {
            equilibrium_failed = true;
        }

        double nt_phi = 0.0, nt_psi = 0.0;
        if (next) {
            std::tie(nt_phi, nt_psi) = unit_tangent(next->s);
            if (nt_phi * t_phi + nt_psi * t_psi < 0.0) {
                nt_phi = -nt_phi;
                nt_psi = -nt_psi;
            }
            // A sharp turn means the step jumped; retry shorter unless already minimal.
            if (nt_phi * t_phi + nt_psi * t_psi < 0.9 && h > h_min) next.reset();
        }

        if (!next) {
            if (h > h_min) {
                h = std::max(h_min, 0.5 * h);
                clean = 0;
                continue;
            }
            if (out_of_domain) {
                const double bound = chart.u(pred_phi) < chart.u(cur.phi) ? chart.u_lo() : chart.u_hi();
                if (auto end = land_on(chart, chart.phi(bound), cur.psi, false, opt); end && chart.inside_w(chart.w(end->psi)))
                    out.points.push_back(to_point(chart, *end, t_phi, t_psi));
                out.end = BranchEnd::InputBoundary;
            } else if (equilibrium_failed) {
                out.end = BranchEnd::EquilibriumFailure;
            } else {
                out.end = BranchEnd::CorrectorDivergence;
            }
            return out;
        }

        const double w_next = chart.w(next->psi);
        if (!chart.inside_w(w_next)) {
            // Intersect the omega boundary by correcting at fixed omega.
            const double bound = w_next > chart.w(cur.psi) ? chart.w_hi() : chart.w_lo();
            if (auto end = land_on(chart, cur.phi, chart.psi(bound), true, opt); end && chart.inside_u(chart.u(end->phi)))
                out.points.push_back(to_point(chart, *end, t_phi, t_psi));
            out.end = BranchEnd::OmegaBoundary;
            return out;
        }

        travelled += std::hypot(next->phi - cur.phi, next->psi - cur.psi);
        cur = *next;
        t_phi = nt_phi;
        t_psi = nt_psi;
        out.points.push_back(to_point(chart, cur, t_phi, t_psi));

        if (detect_closure && travelled > 4.0 * h_max &&
            std::hypot(cur.phi - start.phi, cur.psi - start.psi) < 0.75 * h) {
            out.end = BranchEnd::Closed;
            return out;
        }
        if (++clean >= 4 && h < h_max) {
            h = std::min(h_max, 2.0 * h);
            clean = 0;
        }
    }
    return out;
}

}  // namespace

SolutionBranch trace_branch(const TwoParameterCondition& cond, double seed_u, double seed_omega,
                            const ContinuationOptions& options) {
    if (!(options.step > 0.0)) throw Error(ErrorKind::InvalidArgument, "continuation step must be positive");
    if (!(options.omega_range.lo < options.omega_range.hi))
        throw Error(ErrorKind::InvalidArgument, "omega range must satisfy lo < hi");
    const Chart chart(cond, options);
    if (!chart.inside_u(seed_u) || !chart.inside_w(seed_omega))
        throw Error(ErrorKind::InvalidArgument, "seed lies outside the continuation region");

    // Correct the seed along whichever coordinate the condition depends on more.
    std::optional<Node> seed;
    try {
        const Chart::Sample s0 = chart.sample(chart.phi(seed_u), chart.psi(seed_omega));
        const bool move_u = std::abs(s0.c_phi) >= std::abs(s0.c_psi);
        if (s0.c_phi != 0.0 || s0.c_psi != 0.0)
            seed = correct(chart, chart.phi(seed_u), chart.psi(seed_omega), move_u ? 0.0 : 1.0, move_u ? 1.0 : 0.0,
                           options, options.step);
    } catch (const OutOfDomain&) {
    } catch (const Error&) {
    }
    if (!seed) throw Error(ErrorKind::InvalidArgument, "the condition has no root through the seed");

    const auto [t_phi, t_psi] = unit_tangent(seed->s);
    const int half = std::max(1, options.max_points / 2);
    Walk fwd = walk(chart, *seed, t_phi, t_psi, options, half, true);
    Walk bwd;
    if (fwd.end != BranchEnd::Closed) bwd = walk(chart, *seed, -t_phi, -t_psi, options, half, false);

    SolutionBranch branch;
    branch.end_forward = fwd.end;
    branch.end_backward = fwd.end == BranchEnd::Closed ? BranchEnd::Closed : bwd.end;
    for (auto it = bwd.points.rbegin(); it != bwd.points.rend(); ++it) {
        BranchPoint p = *it;
        p.tangent_u = -p.tangent_u;
        p.tangent_omega = -p.tangent_omega;
        branch.points.push_back(p);
    }
    branch.seed_index = branch.points.size();
    branch.points.push_back(to_point(chart, *seed, t_phi, t_psi));
    branch.points.insert(branch.points.end(), fwd.points.begin(), fwd.points.end());
    return branch;
}

std::vector<FoldPoint> detect_folds(const TwoParameterCondition& cond, const SolutionBranch& branch,
                                    const ContinuationOptions& options) {
    std::vector<FoldPoint> folds;
    if (branch.points.size() < 3) return folds;
    const Chart chart(cond, options);
    double slope_scale = 0.0;
    for (const BranchPoint& p : branch.points) slope_scale = std::max(slope_scale, std::abs(p.dC_du));

    for (std::size_t i = 0; i + 1 < branch.points.size(); ++i) {
        const BranchPoint& a = branch.points[i];
        const BranchPoint& b = branch.points[i + 1];
        if ((a.dC_du > 0.0) == (b.dC_du > 0.0) && a.dC_du != 0.0) continue;
        if (a.dC_du == 0.0 && i > 0) continue;  // counted with the previous segment

        const double pa_phi = chart.phi(a.u_bar), pa_psi = chart.psi(a.omega);
        const double pb_phi = chart.phi(b.u_bar), pb_psi = chart.psi(b.omega);
        const double len = std::hypot(pb_phi - pa_phi, pb_psi - pa_psi);
        if (len == 0.0) continue;
        const double d_phi = (pb_phi - pa_phi) / len, d_psi = (pb_psi - pa_psi) / len;

        double lo = 0.0, hi = 1.0;
        double f_lo = a.dC_du;
        std::optional<Node> best;
        for (int it = 0; it < 60 && hi - lo > 1e-12; ++it) {
            const double mid = 0.5 * (lo + hi);
            std::optional<Node> n;
            try {
                n = correct(chart, pa_phi + mid * len * d_phi, pa_psi + mid * len * d_psi, d_phi, d_psi, options,
                            2.0 * len);
            } catch (...) {
            }
            if (!n) break;
            best = n;
            const double f = n->s.g.dC_du;
            if (f == 0.0) break;
            if ((f > 0.0) == (f_lo > 0.0)) {
                lo = mid;
                f_lo = f;
            } else {
                hi = mid;
            }
        }
        if (!best) continue;

        FoldPoint fold;
        fold.u_bar = chart.u(best->phi);
        fold.omega = chart.w(best->psi);
        fold.dC_du = best->s.g.dC_du;
        fold.dC_domega = best->s.g.dC_domega;
        fold.index = i;
        const double h = 1e-3 * std::max(std::abs(fold.u_bar), 1e-3);
        const Interval dom = cond.u_domain();
        try {
            const double up = std::min(fold.u_bar + h, dom.hi), dn = std::max(fold.u_bar - h, dom.lo);
            fold.d2C_du2 = (cond.gradient(up, fold.omega).dC_du - cond.gradient(dn, fold.omega).dC_du) / (up - dn);
        } catch (const Error&) {
            fold.d2C_du2 = 0.0;
        }
        const double scale = slope_scale / std::max(std::abs(fold.u_bar), 1e-3);
        fold.degenerate = !(std::abs(fold.d2C_du2) > options.degeneracy_tolerance * scale);
        folds.push_back(fold);
    }
    return folds;
}

double phase_extremum_check(const PlantModel& plant, const EscConfig& cfg, const FoldPoint& fold) {
    const auto response = [&](double u) {
        return plant_response(linearize(plant, solve_equilibrium(plant, u)), fold.omega).value;
    };
    const Complex g = response(fold.u_bar);
    if (std::abs(g) <= 1e-9)
        throw Error(ErrorKind::DegenerateResponse, "plant response vanishes at the fold");
    (void)cfg;
    const double h = input_step(fold.u_bar);
    const Interval& dom = plant.input_domain;
    const double up = std::min(fold.u_bar + h, dom.hi), dn = std::max(fold.u_bar - h, dom.lo);
    // The ratio keeps the phase difference away from the branch cut.
    return std::arg(response(up) / response(dn)) / (up - dn);
}

std::size_t BifurcationDiagram::fold_count() const {
    std::size_t n = 0;
    for (const SolutionBranch& b : branches) n += b.folds.size();
    return n;
}

namespace {

double segment_distance(double px, double py, double ax, double ay, double bx, double by) {
    const double dx = bx - ax, dy = by - ay;
    const double len2 = dx * dx + dy * dy;
    double s = len2 > 0.0 ? ((px - ax) * dx + (py - ay) * dy) / len2 : 0.0;
    s = std::clamp(s, 0.0, 1.0);
    return std::hypot(px - (ax + s * dx), py - (ay + s * dy));
}

}  // namespace

BifurcationDiagram build_diagram(const EscCondition& cond, const DiagramOptions& options) {
    const ContinuationOptions& copt = options.continuation;
    const Chart chart(cond, copt);
    Interval seed_range = options.seed_range;
    if (!(seed_range.lo < seed_range.hi)) seed_range = cond.u_domain();

    // Seed frequencies sit strictly inside the range, log-spaced.
    const int nf = std::max(1, options.seed_frequencies);
    std::vector<double> freqs(nf);
    for (int i = 0; i < nf; ++i) {
        const double s = (i + 0.5) / nf;
        freqs[i] = copt.omega_range.lo * std::pow(copt.omega_range.hi / copt.omega_range.lo, s);
    }
    std::vector<std::vector<StationaryPoint>> seeds(nf);
    StationaryScanOptions sopt;
    sopt.spacing = options.scan_spacing;
    sopt.threads = options.threads;
    for (int i = 0; i < nf; ++i)
        seeds[i] = scan_stationary_points(cond.plant(), cond.config_at(freqs[i]), seed_range, options.scan_grid, sopt)
                       .points;

    BifurcationDiagram diagram;
    for (int i = 0; i < nf; ++i) {
        for (const StationaryPoint& sp : seeds[i]) {
            if (sp.degenerate) continue;
            const double px = chart.phi(sp.u_bar), py = chart.psi(sp.omega);
            bool known = false;
            for (const SolutionBranch& b : diagram.branches) {
                for (std::size_t j = 0; j + 1 < b.points.size() && !known; ++j) {
                    const BranchPoint& p = b.points[j];
                    const BranchPoint& q = b.points[j + 1];
                    known = segment_distance(px, py, chart.phi(p.u_bar), chart.psi(p.omega), chart.phi(q.u_bar),
                                             chart.psi(q.omega)) < 0.5 * copt.step;
                }
                if (known) break;
            }
            if (known) continue;
            SolutionBranch branch;
            try {
                branch = trace_branch(cond, sp.u_bar, sp.omega, copt);
            } catch (const Error&) {
                continue;
            }
            branch.folds = detect_folds(cond, branch, copt);
            branch.label = "seed u=" + std::to_string(sp.u_bar) + " omega=" + std::to_string(sp.omega);
            diagram.branches.push_back(std::move(branch));
        }
    }

    const double k = cond.config().k;
    for (std::size_t id = 0; id < diagram.branches.size(); ++id) {
        const SolutionBranch& b = diagram.branches[id];
        std::size_t next_fold = 0;
        for (std::size_t j = 0; j < b.points.size(); ++j) {
            const BranchPoint& p = b.points[j];
            diagram.rows.push_back(DiagramRow{id, p.omega, p.u_bar, steady_state_output(cond.plant(), p.u_bar),
                                              classify_reduced_slope(k, p.dC_du), false});
            while (next_fold < b.folds.size() && b.folds[next_fold].index == j) {
                const FoldPoint& f = b.folds[next_fold++];
                diagram.rows.push_back(DiagramRow{id, f.omega, f.u_bar, steady_state_output(cond.plant(), f.u_bar),
                                                  Stability::Marginal, true});
            }
        }
    }
    return diagram;
}

}  // namespace escbranch
