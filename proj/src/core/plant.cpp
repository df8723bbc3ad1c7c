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
#include "escbranch/plant.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "escbranch/errors.hpp"

namespace escbranch {

Vector PlantModel::guess(double u) const {
    if (initial_guess) return initial_guess(u);
    return Vector::Zero(n);
}

void PlantModel::validate() const {
    if (n <= 0) throw Error(ErrorKind::InvalidArgument, "plant state dimension must be positive");
    if (!f || !h) throw Error(ErrorKind::InvalidArgument, "plant needs both f and h");
    if (!(input_domain.lo < input_domain.hi))
        throw Error(ErrorKind::InvalidArgument, "plant input domain is empty");
    if (jacobians && (!jacobians->df_dx || !jacobians->df_du || !jacobians->dh_dx))
        throw Error(ErrorKind::InvalidArgument, "analytic jacobians must supply all three maps");
}

double LinearizedPlant::steady_state_gain() const {
    Eigen::PartialPivLU<Matrix> lu(A);
    return -(C * lu.solve(B))(0);
}

namespace {

Matrix fd_state_jacobian(const PlantModel& plant, const Vector& x, double u) {
    Matrix jac(plant.n, plant.n);
    Vector xp = x;
    for (int j = 0; j < plant.n; ++j) {
        const double h = fd_step(x(j));
        xp(j) = x(j) + h;
        const Vector fp = plant.f(xp, u);
        xp(j) = x(j) - h;
        const Vector fm = plant.f(xp, u);
        xp(j) = x(j);
        jac.col(j) = (fp - fm) / (2.0 * h);
    }
    return jac;
}

Matrix state_jacobian(const PlantModel& plant, const Vector& x, double u) {
    if (plant.jacobians) return plant.jacobians->df_dx(x, u);
    return fd_state_jacobian(plant, x, u);
}

double max_norm(const Vector& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

std::string describe(double u) {
    std::ostringstream os;
    os.precision(17);
    os << "u=" << u;
    return os.str();
}

}  // namespace

Equilibrium solve_equilibrium(const PlantModel& plant, double u_bar, const Vector& x_guess,
                              const EquilibriumOptions& options) {
    if (x_guess.size() != plant.n)
        throw Error(ErrorKind::InvalidArgument, "initial guess has wrong dimension");
    if (!x_guess.allFinite()) throw Error(ErrorKind::InvalidArgument, "initial guess is not finite");
    if (!plant.input_domain.contains(u_bar))
        throw EquilibriumError(ErrorKind::InvalidArgument, u_bar,
                               describe(u_bar) + " outside the plant input domain");

    Vector x = x_guess;
    Vector r = plant.f(x, u_bar);
    double res = max_norm(r);
    auto converged = [&](double residual) {
        return residual <= options.tolerance * (max_norm(x) + 1.0);
    };
    bool polished = false;

    for (int it = 0; it < options.max_iterations; ++it) {
        if (res == 0.0) break;
        if (converged(res)) {
            if (polished) break;
            polished = true;
        }
        Eigen::PartialPivLU<Matrix> lu(state_jacobian(plant, x, u_bar));
        if (!(lu.rcond() > 1e-14))
            throw EquilibriumError(ErrorKind::SingularJacobian, u_bar,
                                   "df/dx singular at " + describe(u_bar));
        const Vector step = -lu.solve(r);

        double lambda = 1.0;
        Vector trial = x + step;
        Vector r_trial = plant.f(trial, u_bar);
        double res_trial = max_norm(r_trial);
        int halvings = 0;
        while (!(res_trial <= res) && halvings < options.max_halvings) {
            lambda *= 0.5;
            trial = x + lambda * step;
            r_trial = plant.f(trial, u_bar);
            res_trial = max_norm(r_trial);
            ++halvings;
        }
        if (!(res_trial <= res)) {
            // A polishing step that cannot improve on a converged point is fine.
            if (polished) break;
            throw EquilibriumError(ErrorKind::NonConvergence, u_bar,
                                   "damped Newton stalled at " + describe(u_bar));
        }
        x = trial;
        r = r_trial;
        res = res_trial;
    }
    if (!converged(res))
        throw EquilibriumError(ErrorKind::NonConvergence, u_bar,
                               "equilibrium iteration limit reached at " + describe(u_bar));
    return Equilibrium{u_bar, x, res};
}

Equilibrium solve_equilibrium(const PlantModel& plant, double u_bar, const EquilibriumOptions& options) {
    return solve_equilibrium(plant, u_bar, plant.guess(u_bar), options);
}

std::vector<MapPoint> equilibrium_map(const PlantModel& plant, const std::vector<double>& u_grid,
                                      const EquilibriumMapOptions& options) {
    if (!std::is_sorted(u_grid.begin(), u_grid.end()))
        throw Error(ErrorKind::InvalidArgument, "u grid must be sorted");
    for (double u : u_grid)
        if (!plant.input_domain.contains(u))
            throw EquilibriumError(ErrorKind::InvalidArgument, u, describe(u) + " outside the plant input domain");

    std::vector<MapPoint> out(u_grid.size());
    const std::size_t chunk = std::max<std::size_t>(options.chunk, 1);
    const std::size_t n_chunks = (u_grid.size() + chunk - 1) / chunk;
    parallel_for(n_chunks, options.threads, [&](std::size_t c) {
        const std::size_t begin = c * chunk;
        const std::size_t end = std::min(begin + chunk, u_grid.size());
        Vector warm = plant.guess(u_grid[begin]);
        for (std::size_t i = begin; i < end; ++i) {
            const Equilibrium eq = solve_equilibrium(plant, u_grid[i], warm, options.solver);
            warm = eq.x_bar;
            out[i] = MapPoint{u_grid[i], plant.h(eq.x_bar)};
        }
    });
    return out;
}

LinearizedPlant linearize(const PlantModel& plant, const Equilibrium& eq, JacobianSource source) {
    const Vector& x = eq.x_bar;
    const double u = eq.u_bar;
    LinearizedPlant lin;
    lin.equilibrium = eq;
    if (plant.jacobians && source == JacobianSource::Automatic) {
        lin.A = plant.jacobians->df_dx(x, u);
        lin.B = plant.jacobians->df_du(x, u);
        lin.C = plant.jacobians->dh_dx(x);
        return lin;
    }
    lin.A = fd_state_jacobian(plant, x, u);
    const double hu = fd_step(u);
    lin.B = (plant.f(x, u + hu) - plant.f(x, u - hu)) / (2.0 * hu);
    lin.C.resize(plant.n);
    Vector xp = x;
    for (int j = 0; j < plant.n; ++j) {
        const double h = fd_step(x(j));
        xp(j) = x(j) + h;
        const double yp = plant.h(xp);
        xp(j) = x(j) - h;
        const double ym = plant.h(xp);
        xp(j) = x(j);
        lin.C(j) = (yp - ym) / (2.0 * h);
    }
    return lin;
}

double steady_state_output(const PlantModel& plant, double u) {
    return plant.h(solve_equilibrium(plant, u).x_bar);
}

}  // namespace escbranch
