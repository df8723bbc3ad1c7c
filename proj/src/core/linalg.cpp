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
#include "escbranch/linalg.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <thread>

#include "escbranch/errors.hpp"

namespace escbranch {

const char* to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::InvalidArgument: return "InvalidArgument";
        case ErrorKind::NonConvergence: return "NonConvergence";
        case ErrorKind::SingularJacobian: return "SingularJacobian";
        case ErrorKind::SingularSolve: return "SingularSolve";
        case ErrorKind::WindowMismatch: return "WindowMismatch";
        case ErrorKind::DegenerateResponse: return "DegenerateResponse";
        case ErrorKind::TangentSingularity: return "TangentSingularity";
        case ErrorKind::IllConditionedPencil: return "IllConditionedPencil";
        case ErrorKind::CorrectorDivergence: return "CorrectorDivergence";
        case ErrorKind::StepSizeUnderflow: return "StepSizeUnderflow";
        case ErrorKind::NewtonDivergence: return "NewtonDivergence";
        case ErrorKind::RankDeficientJacobian: return "RankDeficientJacobian";
        case ErrorKind::InconclusiveSign: return "InconclusiveSign";
        case ErrorKind::UnknownPlant: return "UnknownPlant";
    }
    return "Unknown";
}

double fd_step(double value) {
    static const double root_eps = std::sqrt(std::numeric_limits<double>::epsilon());
    return root_eps * (1.0 + std::abs(value));
}

namespace {

bool is_lower_triangular(const Matrix& a) {
    for (Eigen::Index j = 1; j < a.cols(); ++j)
        for (Eigen::Index i = 0; i < j; ++i)
            if (a(i, j) != 0.0) return false;
    return true;
}

bool is_upper_triangular(const Matrix& a) {
    for (Eigen::Index j = 0; j < a.cols(); ++j)
        for (Eigen::Index i = j + 1; i < a.rows(); ++i)
            if (a(i, j) != 0.0) return false;
    return true;
}

}  // namespace

std::vector<Complex> eigenvalues(const Matrix& a) {
    std::vector<Complex> out;
    out.reserve(static_cast<std::size_t>(a.rows()));
    if (is_lower_triangular(a) || is_upper_triangular(a)) {
        for (Eigen::Index i = 0; i < a.rows(); ++i) out.emplace_back(a(i, i), 0.0);
        return out;
    }
    Eigen::EigenSolver<Matrix> solver(a, false);
    if (solver.info() != Eigen::Success)
        throw Error(ErrorKind::NonConvergence, "eigenvalue iteration did not converge");
    for (Eigen::Index i = 0; i < a.rows(); ++i) out.push_back(solver.eigenvalues()(i));
    return out;
}

double spectral_abscissa(const Matrix& a) {
    double best = -std::numeric_limits<double>::infinity();
    for (const Complex& ev : eigenvalues(a)) best = std::max(best, ev.real());
    return best;
}

void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& fn) {
    if (threads <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(threads, count));
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> failures(count);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= count) return;
                try {
                    fn(i);
                } catch (...) {
                    failures[i] = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    // Report the lowest failing index so the error matches a sequential run.
    for (const auto& failure : failures)
        if (failure) std::rethrow_exception(failure);
}

}  // namespace escbranch
