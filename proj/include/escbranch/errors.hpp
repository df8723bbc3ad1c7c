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
#ifndef ESCBRANCH_ERRORS_HPP
#define ESCBRANCH_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace escbranch {

/// Failure categories raised by the numerical routines. The values are
/// stable because the C API forwards them as status codes.
enum class ErrorKind {
    InvalidArgument = 1,
    NonConvergence = 2,
    SingularJacobian = 3,
    SingularSolve = 4,
    WindowMismatch = 5,
    DegenerateResponse = 6,
    TangentSingularity = 7,
    IllConditionedPencil = 8,
    CorrectorDivergence = 9,
    StepSizeUnderflow = 10,
    NewtonDivergence = 11,
    RankDeficientJacobian = 12,
    InconclusiveSign = 13,
    UnknownPlant = 14,
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// Thrown by the equilibrium solver; carries the input value that failed so
/// sweeps can report the offending grid point.
class EquilibriumError : public Error {
public:
    EquilibriumError(ErrorKind kind, double u, const std::string& what)
        : Error(kind, what), u_(u) {}

    double u() const noexcept { return u_; }

private:
    double u_;
};

}  // namespace escbranch

#endif  // ESCBRANCH_ERRORS_HPP
