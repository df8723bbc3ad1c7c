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
#include "escbranch/bench.hpp"

#include <cmath>
#include <set>

#include "escbranch/errors.hpp"

namespace escbranch {

void ReactorConfig::validate() const {
    if (!(k1 > k2 && k2 > 0.0)) throw Error(ErrorKind::InvalidArgument, "reactor needs k1 > k2 > 0");
    if (n_cells < 2) throw Error(ErrorKind::InvalidArgument, "reactor needs at least two cells");
    if (!(v_domain.lo > 0.0 && v_domain.lo < v_domain.hi))
        throw Error(ErrorKind::InvalidArgument, "reactor velocity domain must be a positive interval");
}

PlantModel build_reactor(const ReactorConfig& cfg) {
    cfg.validate();
    const int n = cfg.n_cells;
    const double inv_dz = static_cast<double>(n);

    PlantModel plant;
    plant.name = "reactor";
    plant.n = 2 * n;
    plant.input_domain = cfg.v_domain;

    plant.f = [cfg, n, inv_dz](const Vector& x, double v) {
        Vector dx(2 * n);
        double a_prev = cfg.a0;
        double b_prev = cfg.b0;
        for (int j = 0; j < n; ++j) {
            const double a = x(j);
            const double b = x(n + j);
            dx(j) = -v * (a - a_prev) * inv_dz - cfg.k1 * a;
            dx(n + j) = -v * (b - b_prev) * inv_dz + cfg.k1 * a - cfg.k2 * b;
            a_prev = a;
            b_prev = b;
        }
        return dx;
    };
    plant.h = [n](const Vector& x) { return x(2 * n - 1); };

    PlantJacobians jac;
    jac.df_dx = [cfg, n, inv_dz](const Vector&, double v) {
        Matrix a = Matrix::Zero(2 * n, 2 * n);
        for (int j = 0; j < n; ++j) {
            a(j, j) = -v * inv_dz - cfg.k1;
            a(n + j, n + j) = -v * inv_dz - cfg.k2;
            a(n + j, j) = cfg.k1;
            if (j > 0) {
                a(j, j - 1) = v * inv_dz;
                a(n + j, n + j - 1) = v * inv_dz;
            }
        }
        return a;
    };
    jac.df_du = [cfg, n, inv_dz](const Vector& x, double) {
        Vector b(2 * n);
        double a_prev = cfg.a0;
        double b_prev = cfg.b0;
        for (int j = 0; j < n; ++j) {
            b(j) = -(x(j) - a_prev) * inv_dz;
            b(n + j) = -(x(n + j) - b_prev) * inv_dz;
            a_prev = x(j);
            b_prev = x(n + j);
        }
        return b;
    };
    jac.dh_dx = [n](const Vector&) {
        RowVector c = RowVector::Zero(2 * n);
        c(2 * n - 1) = 1.0;
        return c;
    };
    plant.jacobians = jac;
    return plant;
}

PlantModel build_hammerstein(double u_star, double tau) {
    if (!(tau > 0.0)) throw Error(ErrorKind::InvalidArgument, "hammerstein time constant must be positive");
    PlantModel plant;
    plant.name = "hammerstein";
    plant.n = 1;
    plant.input_domain = Interval{u_star - 2.0, u_star + 2.0};
    plant.f = [u_star, tau](const Vector& x, double u) {
        Vector dx(1);
        dx(0) = (-x(0) - (u - u_star) * (u - u_star)) / tau;
        return dx;
    };
    plant.h = [](const Vector& x) { return x(0); };
    PlantJacobians jac;
    jac.df_dx = [tau](const Vector&, double) { return Matrix::Constant(1, 1, -1.0 / tau); };
    jac.df_du = [u_star, tau](const Vector&, double u) { return Vector::Constant(1, -2.0 * (u - u_star) / tau); };
    jac.dh_dx = [](const Vector&) { return RowVector::Constant(1, 1.0); };
    plant.jacobians = jac;
    return plant;
}

PlantModel build_linear(double pole) {
    if (!(pole < 0.0)) throw Error(ErrorKind::InvalidArgument, "linear plant pole must be negative");
    PlantModel plant;
    plant.name = "linear";
    plant.n = 1;
    plant.input_domain = Interval{-10.0, 10.0};
    plant.f = [pole](const Vector& x, double u) {
        Vector dx(1);
        dx(0) = pole * x(0) + u;
        return dx;
    };
    plant.h = [](const Vector& x) { return x(0); };
    PlantJacobians jac;
    jac.df_dx = [pole](const Vector&, double) { return Matrix::Constant(1, 1, pole); };
    jac.df_du = [](const Vector&, double) { return Vector::Constant(1, 1.0); };
    jac.dh_dx = [](const Vector&) { return RowVector::Constant(1, 1.0); };
    plant.jacobians = jac;
    return plant;
}

std::vector<std::string> plant_names() { return {"reactor", "hammerstein", "linear"}; }

namespace {

void check_keys(const std::map<std::string, double>& overrides, const std::set<std::string>& allowed,
                const std::string& plant) {
    for (const auto& [key, value] : overrides) {
        if (!allowed.count(key))
            throw Error(ErrorKind::InvalidArgument, "unknown parameter '" + key + "' for plant " + plant);
        if (!std::isfinite(value))
            throw Error(ErrorKind::InvalidArgument, "parameter '" + key + "' is not finite");
    }
}

double get(const std::map<std::string, double>& m, const std::string& key, double fallback) {
    const auto it = m.find(key);
    return it == m.end() ? fallback : it->second;
}

}  // namespace

PlantModel make_plant(const std::string& name, const std::map<std::string, double>& overrides) {
    if (name == "reactor") {
        check_keys(overrides, {"a0", "b0", "k1", "k2", "n_cells", "v_min", "v_max"}, name);
        ReactorConfig cfg;
        cfg.a0 = get(overrides, "a0", cfg.a0);
        cfg.b0 = get(overrides, "b0", cfg.b0);
        cfg.k1 = get(overrides, "k1", cfg.k1);
        cfg.k2 = get(overrides, "k2", cfg.k2);
        const double cells = get(overrides, "n_cells", cfg.n_cells);
        if (cells != std::floor(cells)) throw Error(ErrorKind::InvalidArgument, "n_cells must be an integer");
        cfg.n_cells = static_cast<int>(cells);
        cfg.v_domain = Interval{get(overrides, "v_min", cfg.v_domain.lo), get(overrides, "v_max", cfg.v_domain.hi)};
        return build_reactor(cfg);
    }
    if (name == "hammerstein") {
        check_keys(overrides, {"u_star", "tau", "u_min", "u_max"}, name);
        PlantModel plant = build_hammerstein(get(overrides, "u_star", 1.0), get(overrides, "tau", 1.0));
        plant.input_domain = Interval{get(overrides, "u_min", plant.input_domain.lo),
                                      get(overrides, "u_max", plant.input_domain.hi)};
        plant.validate();
        return plant;
    }
    if (name == "linear") {
        check_keys(overrides, {"pole", "u_min", "u_max"}, name);
        PlantModel plant = build_linear(get(overrides, "pole", -1.0));
        plant.input_domain = Interval{get(overrides, "u_min", plant.input_domain.lo),
                                      get(overrides, "u_max", plant.input_domain.hi)};
        plant.validate();
        return plant;
    }
    throw Error(ErrorKind::UnknownPlant, "no plant named '" + name + "'");
}

}  // namespace escbranch
