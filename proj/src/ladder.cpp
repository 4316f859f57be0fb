#include "mcl/ladder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace mcl {

double ladder_element(double N, double s) {
    if (s < 0.0 || s > N)
        throw std::invalid_argument("spin-flip count must lie in [0, N]");
    return std::sqrt((N - s) * (s + 1.0));
}

TridiagonalHamiltonian build_hamiltonian(double N, std::int64_t E, double omega_r,
                                         double omega_fmr, double g) {
    if (!(N >= 1.0)) throw std::invalid_argument("N must be >= 1");
    if (E < 1) throw std::invalid_argument("E must be >= 1");
    if (g < 0.0) throw std::invalid_argument("g must be >= 0");

    const double e_real = static_cast<double>(E);
    const std::size_t dim = static_cast<std::size_t>(std::min(e_real, N)) + 1;
    if (dim > max_ladder_dim)
        throw std::invalid_argument("ladder subspace dimension exceeds cap of 100000");

    TridiagonalHamiltonian h;
    h.subspace = {N, E, dim};
    h.diag.resize(dim);
    h.offdiag.resize(dim - 1);
    for (std::size_t s = 0; s < dim; ++s) {
        const double sf = static_cast<double>(s);
        h.diag[s] = (e_real - sf) * omega_r + sf * omega_fmr;
        if (s + 1 < dim)
            h.offdiag[s] = g * std::sqrt(e_real - sf) * ladder_element(N, sf);
    }
    return h;
}

// Symmetric tridiagonal QL with implicit shifts, eigenvalues only. Derived
// from the Algol tql1 procedure (Bowdler, Martin, Reinsch, Wilkinson) via its
// EISPACK descendants.
std::vector<double> tridiagonal_eigenvalues(std::vector<double> d, std::vector<double> e) {
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(d.size());
    if (n == 0) return {};
    if (e.size() + 1 != d.size() && !(n == 1 && e.empty()))
        throw std::invalid_argument("offdiagonal must have dim - 1 entries");
    e.resize(d.size(), 0.0);

    constexpr int max_sweeps = 64;
    const double eps = std::numeric_limits<double>::epsilon();

    for (std::ptrdiff_t l = 0; l < n; ++l) {
        int iter = 0;
        std::ptrdiff_t m;
        do {
            for (m = l; m < n - 1; ++m) {
                const double dd = std::abs(d[m]) + std::abs(d[m + 1]);
                if (std::abs(e[m]) <= eps * dd) break;
            }
            if (m != l) {
                if (iter++ == max_sweeps)
                    throw std::runtime_error(
                        "tridiagonal_eigenvalues: QL iteration failed to converge");
                double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
                double r = std::hypot(g, 1.0);
                g = d[m] - d[l] + e[l] / (g + std::copysign(r, g));
                double s = 1.0, c = 1.0, p = 0.0;
                bool underflow = false;
                for (std::ptrdiff_t i = m - 1; i >= l; --i) {
                    double f = s * e[i];
                    const double b = c * e[i];
                    r = std::hypot(f, g);
                    e[i + 1] = r;
                    if (r == 0.0) {
                        // rotation annihilated early; deflate and restart sweep
                        d[i + 1] -= p;
                        e[m] = 0.0;
                        underflow = true;
                        break;
                    }
                    s = f / r;
                    c = g / r;
                    g = d[i + 1] - p;
                    r = (d[i] - g) * s + 2.0 * c * b;
                    p = s * r;
                    d[i + 1] = g + p;
                    g = c * r - b;
                }
                if (underflow) continue;
                d[l] -= p;
                e[l] = g;
                e[m] = 0.0;
            }
        } while (m != l);
    }
    std::sort(d.begin(), d.end());
    return d;
}

std::vector<double> eigenvalues(const TridiagonalHamiltonian& h) {
    if (h.diag.empty()) throw std::invalid_argument("empty Hamiltonian block");
    return tridiagonal_eigenvalues(h.diag, h.offdiag);
}

double vacuum_rabi_splitting(double N, double omega_r, double g) {
    // Eigen-gap of the E = 1 block at omega_fmr = omega_r. The common
    // diagonal E*omega_r is subtracted before diagonalizing: the gap is
    // invariant under a global energy shift and removing the large offset
    // preserves full relative precision for g*sqrt(N) << omega_r.
    TridiagonalHamiltonian h = build_hamiltonian(N, 1, omega_r, omega_r, g);
    const double offset = h.diag[0];
    for (double& v : h.diag) v -= offset;
    const std::vector<double> ev = tridiagonal_eigenvalues(h.diag, h.offdiag);
    return ev.back() - ev.front();
}

std::vector<std::pair<std::int64_t, double>> splitting_vs_excitation(double N, double g,
                                                                     std::int64_t E_max) {
    if (E_max < 1) throw std::invalid_argument("E_max must be >= 1");
    if (!(g > 0.0)) throw std::invalid_argument("g must be > 0 for a normalized splitting");

    const double norm = 2.0 * g * std::sqrt(N);
    std::vector<std::pair<std::int64_t, double>> out;
    out.reserve(static_cast<std::size_t>(E_max));
    for (std::int64_t e = 1; e <= E_max; ++e) {
        // On resonance with the energy zero at E*omega_r the diagonal
        // vanishes, so the unperturbed degenerate energy sits at 0.
        TridiagonalHamiltonian h = build_hamiltonian(N, e, 0.0, 0.0, g);
        std::vector<double> ev = tridiagonal_eigenvalues(h.diag, h.offdiag);
        // Gap between the two eigenvalues closest to the degenerate energy.
        std::sort(ev.begin(), ev.end(),
                  [](double a, double b) { return std::abs(a) < std::abs(b); });
        const double gap = std::abs(ev[1] - ev[0]);
        out.emplace_back(e, gap / norm);
    }
    return out;
}

}  // namespace mcl
