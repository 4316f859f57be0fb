#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

namespace mcl {

// Excitation-number-conserving subspace of the macrospin-photon Hamiltonian.
// Basis states (photon number n, spin-flip count s) with n + s = E are
// ordered by ascending flip count s, i.e. descending photon number, so that
// index and flip count coincide. N is real-valued: spin counts of order 1e16
// are exact enough in double precision for the sqrt matrix elements.
struct LadderSubspace {
    double N = 1.0;
    std::int64_t excitations = 0;
    std::size_t dim = 0;

    double photons(std::size_t i) const { return static_cast<double>(excitations) - flips(i); }
    double flips(std::size_t i) const { return static_cast<double>(i); }
};

struct TridiagonalHamiltonian {
    std::vector<double> diag;     // energies relative to the ground state, rad/s
    std::vector<double> offdiag;  // coupling elements, rad/s; size dim - 1; all >= 0
    LadderSubspace subspace;
};

// Largest subspace dimension build_hamiltonian will accept.
inline constexpr std::size_t max_ladder_dim = 100000;

// Matrix element of the collective raising operator between s and s+1 spin
// flips: sqrt((N - s) * (s + 1)). Throws std::invalid_argument for s outside
// [0, N].
double ladder_element(double N, double s);

// Block of the macrospin-photon Hamiltonian with E total excitations.
// diag[s] = (E - s) * omega_r + s * omega_fmr, offdiag[s] couples
// (n, s) <-> (n - 1, s + 1) with strength g * sqrt(n) * ladder_element(N, s).
TridiagonalHamiltonian build_hamiltonian(double N, std::int64_t E, double omega_r,
                                         double omega_fmr, double g);

// Eigenvalues of a real symmetric tridiagonal matrix, ascending.
// QL algorithm with implicit shifts; deterministic; throws std::runtime_error
// if a single eigenvalue fails to converge within the iteration cap.
std::vector<double> tridiagonal_eigenvalues(std::vector<double> diag,
                                            std::vector<double> offdiag);

// Sorted eigenvalues of a ladder block.
std::vector<double> eigenvalues(const TridiagonalHamiltonian& h);

// Eigen-gap of the single-excitation block at zero detuning; equals 2*g*sqrt(N).
double vacuum_rabi_splitting(double N, double omega_r, double g);

// For each E = 1..E_max on resonance, the gap between the two eigenvalues
// closest to the unperturbed energy E*omega_r, normalized by 2*g*sqrt(N).
// The E = 1 entry is 1 by construction; the gap quenches as E approaches N.
std::vector<std::pair<std::int64_t, double>> splitting_vs_excitation(double N, double g,
                                                                     std::int64_t E_max);

}  // namespace mcl
