#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace mcl {

struct OptimizerSettings {
    int max_iterations = 200;
    double gradient_tol = 1e-12;
    double step_tol = 1e-12;
    double initial_damping = 1e-8;     // Marquardt-scaled: lambda * diag(JtJ)
    double damping_increase = 10.0;
    double damping_decrease = 10.0;
    enum class Jacobian { analytic, forward_difference } jacobian = Jacobian::forward_difference;
    double fd_relative_step = 1e-7;
};

struct FitDiagnostics {
    bool converged = false;
    bool rank_deficient = false;
    int iterations = 0;          // accepted steps
    double residual_norm = 0.0;  // ||r|| at the solution
    std::string message;
};

// Fills r with the m residuals at p.
using ResidualFn = std::function<void(std::span<const double>, std::vector<double>&)>;
// Fills J (row-major, m x n) at p.
using JacobianFn = std::function<void(std::span<const double>, std::vector<double>&)>;

struct LeastSquaresResult {
    std::vector<double> params;
    std::vector<double> covariance;  // n x n, (JtJ)^-1 * ||r||^2/(m-n); empty if rank deficient
    FitDiagnostics diagnostics;
};

// Damped Gauss-Newton (Levenberg-Marquardt) minimizer of 0.5*||r(p)||^2.
// Accepted steps never increase the cost; the analytic Jacobian is used when
// settings.jacobian == analytic and `jac` is non-null, otherwise forward
// differences with a relative step. Deterministic for identical inputs.
// Throws std::invalid_argument when the residual is non-finite at the start.
LeastSquaresResult least_squares(const ResidualFn& residual, const JacobianFn* jac,
                                 std::vector<double> initial, const OptimizerSettings& settings);

// Solves the symmetric positive definite system A x = b (n x n, row-major)
// by Cholesky factorization; returns false if A is not positive definite.
bool solve_spd(std::vector<double> a, std::span<const double> b, std::span<double> x);

// Inverse of a symmetric positive definite matrix; returns false on failure.
bool invert_spd(std::vector<double> a, std::vector<double>& inv);

}  // namespace mcl
