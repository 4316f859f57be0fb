#include "mcl/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace mcl {

namespace {

bool all_finite(const std::vector<double>& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

double cost_of(const std::vector<double>& r) {
    double c = 0.0;
    for (double x : r) c += x * x;
    return 0.5 * c;
}

bool cholesky(std::vector<double>& a, std::size_t n) {
    // Reject pivots that are only roundoff away from zero so numerically
    // singular systems are reported instead of amplified. The tolerance is
    // relative to each row's own diagonal, which keeps it meaningful for
    // matrices whose parameters live on very different scales.
    std::vector<double> d0(n);
    for (std::size_t i = 0; i < n; ++i) d0[i] = std::abs(a[i * n + i]);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double sum = a[i * n + j];
            for (std::size_t k = 0; k < j; ++k) sum -= a[i * n + k] * a[j * n + k];
            if (i == j) {
                if (!(sum > 1e-13 * d0[i])) return false;
                a[i * n + i] = std::sqrt(sum);
            } else {
                a[i * n + j] = sum / a[j * n + j];
            }
        }
    }
    return true;
}

void cholesky_solve(const std::vector<double>& l, std::size_t n, std::span<const double> b,
                    std::span<double> x) {
    for (std::size_t i = 0; i < n; ++i) {
        double sum = b[i];
        for (std::size_t k = 0; k < i; ++k) sum -= l[i * n + k] * x[k];
        x[i] = sum / l[i * n + i];
    }
    for (std::size_t ii = n; ii-- > 0;) {
        double sum = x[ii];
        for (std::size_t k = ii + 1; k < n; ++k) sum -= l[k * n + ii] * x[k];
        x[ii] = sum / l[ii * n + ii];
    }
}

void forward_difference_jacobian(const ResidualFn& f, std::span<const double> p,
                                 const std::vector<double>& r0, double rel_step,
                                 std::vector<double>& jac) {
    const std::size_t m = r0.size();
    const std::size_t n = p.size();
    jac.assign(m * n, 0.0);
    std::vector<double> pp(p.begin(), p.end());
    std::vector<double> rp;
    for (std::size_t k = 0; k < n; ++k) {
        const double h = rel_step * (std::abs(p[k]) + rel_step);
        pp[k] = p[k] + h;
        f(pp, rp);
        pp[k] = p[k];
        if (rp.size() != m) throw std::logic_error("residual size changed during fit");
        const double inv_h = 1.0 / h;
        for (std::size_t i = 0; i < m; ++i) jac[i * n + k] = (rp[i] - r0[i]) * inv_h;
    }
}

}  // namespace

bool solve_spd(std::vector<double> a, std::span<const double> b, std::span<double> x) {
    const std::size_t n = b.size();
    if (!cholesky(a, n)) return false;
    cholesky_solve(a, n, b, x);
    return true;
}

bool invert_spd(std::vector<double> a, std::vector<double>& inv) {
    const std::size_t n = static_cast<std::size_t>(std::lround(std::sqrt(double(a.size()))));
    if (!cholesky(a, n)) return false;
    inv.assign(n * n, 0.0);
    std::vector<double> e(n, 0.0), col(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        std::fill(e.begin(), e.end(), 0.0);
        e[j] = 1.0;
        cholesky_solve(a, n, e, col);
        for (std::size_t i = 0; i < n; ++i) inv[i * n + j] = col[i];
    }
    // symmetrize against roundoff
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < i; ++j) {
            const double v = 0.5 * (inv[i * n + j] + inv[j * n + i]);
            inv[i * n + j] = inv[j * n + i] = v;
        }
    return true;
}

LeastSquaresResult least_squares(const ResidualFn& residual, const JacobianFn* jac,
                                 std::vector<double> p, const OptimizerSettings& s) {
    const std::size_t n = p.size();
    if (n == 0) throw std::invalid_argument("least_squares: empty parameter vector");

    std::vector<double> r;
    residual(p, r);
    if (!all_finite(r))
        throw std::invalid_argument("least_squares: residual not finite at initial parameters");
    const std::size_t m = r.size();

    double cost = cost_of(r);
    double lambda = s.initial_damping;
    const bool analytic = s.jacobian == OptimizerSettings::Jacobian::analytic && jac != nullptr;

    std::vector<double> jmat, jtj(n * n), grad(n), damped(n * n), delta(n), ptrial(n), rtrial;
    LeastSquaresResult out;
    FitDiagnostics& diag = out.diagnostics;

    for (int outer = 0; outer < s.max_iterations; ++outer) {
        if (analytic)
            (*jac)(p, jmat);
        else
            forward_difference_jacobian(residual, p, r, s.fd_relative_step, jmat);
        if (jmat.size() != m * n) throw std::logic_error("jacobian has wrong dimensions");
        if (!all_finite(jmat)) {
            diag.message = "non-finite jacobian; stopped at last good iterate";
            break;
        }

        std::fill(jtj.begin(), jtj.end(), 0.0);
        std::fill(grad.begin(), grad.end(), 0.0);
        for (std::size_t i = 0; i < m; ++i) {
            const double* row = &jmat[i * n];
            for (std::size_t a = 0; a < n; ++a) {
                grad[a] += row[a] * r[i];
                for (std::size_t b = 0; b <= a; ++b) jtj[a * n + b] += row[a] * row[b];
            }
        }
        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t b = a + 1; b < n; ++b) jtj[a * n + b] = jtj[b * n + a];

        double gmax = 0.0;
        for (std::size_t a = 0; a < n; ++a)
            gmax = std::max(gmax, std::abs(grad[a]) * std::max(std::abs(p[a]), 1.0));
        if (gmax <= s.gradient_tol * std::max(cost, 1e-300)) {
            diag.converged = true;
            diag.message = "gradient tolerance reached";
            break;
        }

        double diag_scale = 0.0;
        for (std::size_t a = 0; a < n; ++a) diag_scale = std::max(diag_scale, jtj[a * n + a]);
        if (diag_scale == 0.0) {
            diag.rank_deficient = true;
            diag.message = "zero jacobian";
            break;
        }

        bool stepped = false;
        bool ever_solved = false;
        while (lambda <= 1e15) {
            damped = jtj;
            for (std::size_t a = 0; a < n; ++a)
                damped[a * n + a] += lambda * std::max(jtj[a * n + a], 1e-14 * diag_scale);
            if (!solve_spd(damped, grad, delta)) {
                lambda *= s.damping_increase;
                continue;
            }
            ever_solved = true;
            for (std::size_t a = 0; a < n; ++a) ptrial[a] = p[a] - delta[a];
            residual(ptrial, rtrial);
            const double ctrial = all_finite(rtrial) ? cost_of(rtrial)
                                                     : std::numeric_limits<double>::infinity();
            if (ctrial <= cost) {
                double step_rel = 0.0;
                for (std::size_t a = 0; a < n; ++a)
                    step_rel = std::max(step_rel,
                                        std::abs(delta[a]) / (std::abs(p[a]) + s.step_tol));
                const bool no_decrease = !(cost - ctrial > 1e-14 * cost);
                p.swap(ptrial);
                r.swap(rtrial);
                cost = ctrial;
                lambda = std::max(lambda / s.damping_decrease, 1e-14);
                ++diag.iterations;
                stepped = true;
                if (step_rel <= s.step_tol || no_decrease) {
                    diag.converged = true;
                    diag.message = "step tolerance reached";
                }
                break;
            }
            lambda *= s.damping_increase;
        }
        if (!stepped) {
            // Damping exhausted: no descent direction improves the cost.
            diag.converged = ever_solved;
            diag.rank_deficient = !ever_solved;
            diag.message = ever_solved ? "no further decrease possible"
                                       : "normal equations singular at every damping level";
            break;
        }
        if (diag.converged) break;
    }
    if (!diag.converged && diag.message.empty()) {
        if (diag.iterations >= s.max_iterations)
            diag.message = "iteration limit reached";
        else
            diag.message = "stopped before convergence";
    }
    if (diag.iterations >= s.max_iterations && !diag.converged)
        diag.message = "iteration limit reached";

    diag.residual_norm = std::sqrt(2.0 * cost);
    out.params = std::move(p);

    // covariance = (JtJ)^-1 * residual variance at the solution
    if (analytic)
        (*jac)(out.params, jmat);
    else
        forward_difference_jacobian(residual, out.params, r, s.fd_relative_step, jmat);
    std::fill(jtj.begin(), jtj.end(), 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        const double* row = &jmat[i * n];
        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t b = 0; b <= a; ++b) jtj[a * n + b] += row[a] * row[b];
    }
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = a + 1; b < n; ++b) jtj[a * n + b] = jtj[b * n + a];
    std::vector<double> inv;
    if (invert_spd(jtj, inv)) {
        const double dof = m > n ? static_cast<double>(m - n) : 1.0;
        const double var = 2.0 * cost / dof;
        out.covariance.resize(n * n);
        for (std::size_t i = 0; i < n * n; ++i) out.covariance[i] = inv[i] * var;
    } else {
        diag.rank_deficient = true;
        if (diag.message.empty()) diag.message = "singular JtJ at solution";
    }
    return out;
}

}  // namespace mcl
