#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <stdexcept>

#include "mcl/ladder.hpp"
#include "mcl/physics.hpp"
#include "mcl/units.hpp"
#include "oracle_dense_eig.hpp"

using namespace mcl;
using namespace mcl::units;

TEST_CASE("raising-operator matrix element") {
    SUBCASE("first flip carries the full sqrt(N) enhancement") {
        CHECK(ladder_element(16.0, 0.0) == doctest::Approx(4.0).epsilon(1e-15));
        CHECK(ladder_element(4.5e16, 0.0) == doctest::Approx(std::sqrt(4.5e16)).epsilon(1e-15));
    }
    SUBCASE("hand value: N=2, s=1 -> sqrt(2)") {
        CHECK(ladder_element(2.0, 1.0) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
    }
    SUBCASE("fully inverted ensemble cannot be raised") {
        CHECK(ladder_element(7.0, 7.0) == 0.0);
    }
    SUBCASE("flip count outside [0, N] rejected") {
        CHECK_THROWS_AS(ladder_element(5.0, -1.0), std::invalid_argument);
        CHECK_THROWS_AS(ladder_element(5.0, 6.0), std::invalid_argument);
    }
}

TEST_CASE("block construction") {
    const double wr = ghz_to_rad(5.90);
    const double wf = ghz_to_rad(6.10);
    const double g = mhz_to_rad(10.0);

    SUBCASE("single-excitation block is the textbook 2x2") {
        const auto h = build_hamiltonian(1e4, 1, wr, wf, g);
        REQUIRE(h.diag.size() == 2);
        REQUIRE(h.offdiag.size() == 1);
        CHECK(h.diag[0] == wr);
        CHECK(h.diag[1] == wf);
        CHECK(h.offdiag[0] == doctest::Approx(g * 100.0).epsilon(1e-15));
    }
    SUBCASE("basis bookkeeping: index equals flip count, n + s = E") {
        const auto h = build_hamiltonian(5.0, 3, wr, wf, g);
        REQUIRE(h.subspace.dim == 4);  // min(E, N) + 1
        for (std::size_t i = 0; i < h.subspace.dim; ++i) {
            CHECK(h.subspace.flips(i) == static_cast<double>(i));
            CHECK(h.subspace.photons(i) + h.subspace.flips(i) == 3.0);
        }
    }
    SUBCASE("dimension truncates at the spin count") {
        CHECK(build_hamiltonian(2.0, 10, wr, wf, g).subspace.dim == 3);
        CHECK(build_hamiltonian(100.0, 10, wr, wf, g).subspace.dim == 11);
    }
    SUBCASE("off-diagonal phase convention: all elements nonnegative") {
        const auto h = build_hamiltonian(12.0, 8, wr, wf, g);
        for (double e : h.offdiag) CHECK(e >= 0.0);
    }
    SUBCASE("N=2, E=2 on degenerate resonance: eigenvalues {-sqrt(6) g, 0, sqrt(6) g}") {
        const auto h = build_hamiltonian(2.0, 2, 0.0, 0.0, g);
        REQUIRE(h.offdiag.size() == 2);
        CHECK(h.offdiag[0] == doctest::Approx(g * 2.0).epsilon(1e-15));
        CHECK(h.offdiag[1] == doctest::Approx(g * std::sqrt(2.0)).epsilon(1e-15));
        const auto ev = eigenvalues(h);
        CHECK(ev[0] == doctest::Approx(-std::sqrt(6.0) * g).epsilon(1e-12));
        CHECK(std::abs(ev[1]) < 1e-12 * g);
        CHECK(ev[2] == doctest::Approx(std::sqrt(6.0) * g).epsilon(1e-12));
    }
    SUBCASE("decoupled blocks are diagonal") {
        const auto h = build_hamiltonian(6.0, 4, wr, wf, 0.0);
        const auto ev = eigenvalues(h);
        std::vector<double> expected = h.diag;
        std::sort(expected.begin(), expected.end());
        for (std::size_t i = 0; i < ev.size(); ++i)
            CHECK(ev[i] == doctest::Approx(expected[i]).epsilon(1e-15));
    }
}

TEST_CASE("tridiagonal eigensolver vs dense oracle") {
    std::mt19937_64 rng(20260824);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);

    SUBCASE("random small matrices match the Jacobi oracle") {
        for (int trial = 0; trial < 200; ++trial) {
            const std::size_t n = 1 + static_cast<std::size_t>(rng() % 8);
            std::vector<double> d(n), e(n > 0 ? n - 1 : 0);
            for (auto& x : d) x = 10.0 * unif(rng);
            for (auto& x : e) x = 10.0 * unif(rng);
            const auto got = tridiagonal_eigenvalues(d, e);
            const auto want = oracle::dense_symmetric_eigenvalues(
                oracle::tridiagonal_to_dense(d, e), n);
            REQUIRE(got.size() == n);
            for (std::size_t i = 0; i < n; ++i)
                CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-11).scale(1.0));
        }
    }
    SUBCASE("dim = 1 returns the diagonal entry") {
        const auto ev = tridiagonal_eigenvalues({3.25}, {});
        REQUIRE(ev.size() == 1);
        CHECK(ev[0] == 3.25);
    }
    SUBCASE("mid-size ladder block against the oracle") {
        const auto h = build_hamiltonian(40.0, 25, 1.0, 1.3, 0.02);
        const auto got = eigenvalues(h);
        const auto want = oracle::dense_symmetric_eigenvalues(
            oracle::tridiagonal_to_dense(h.diag, h.offdiag), h.diag.size());
        for (std::size_t i = 0; i < got.size(); ++i)
            CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-11).scale(1.0));
    }
}

TEST_CASE("block invariants") {
    SUBCASE("trace conservation") {
        for (std::int64_t e : {1, 2, 5, 17}) {
            const auto h = build_hamiltonian(20.0, e, ghz_to_rad(5.9), ghz_to_rad(6.0),
                                             mhz_to_rad(50.0));
            const auto ev = eigenvalues(h);
            const double tr_diag = std::accumulate(h.diag.begin(), h.diag.end(), 0.0);
            const double tr_eig = std::accumulate(ev.begin(), ev.end(), 0.0);
            CHECK(tr_eig == doctest::Approx(tr_diag).epsilon(1e-10));
        }
    }
    SUBCASE("global energy offset shifts every eigenvalue by E*delta") {
        const double wr = ghz_to_rad(5.9), wf = ghz_to_rad(6.05), g = mhz_to_rad(30.0);
        const double delta = mhz_to_rad(7.0);
        const std::int64_t e = 6;
        const auto base = eigenvalues(build_hamiltonian(9.0, e, wr, wf, g));
        const auto shifted = eigenvalues(build_hamiltonian(9.0, e, wr + delta, wf + delta, g));
        for (std::size_t i = 0; i < base.size(); ++i)
            CHECK(shifted[i] - base[i] ==
                  doctest::Approx(static_cast<double>(e) * delta).epsilon(1e-10));
    }
    SUBCASE("determinism: identical blocks give bit-identical spectra") {
        const auto a = eigenvalues(build_hamiltonian(33.0, 12, 2.0, 2.5, 0.01));
        const auto b = eigenvalues(build_hamiltonian(33.0, 12, 2.0, 2.5, 0.01));
        CHECK(a == b);
    }
}

TEST_CASE("vacuum Rabi splitting") {
    const double wr = ghz_to_rad(5.90);
    SUBCASE("2 g sqrt(N) to 1e-12 relative up to N = 4.5e16") {
        for (double n : {1.0, 4.0, 9.0, 100.0, 1e4, 4.5e16}) {
            const double g = hz_to_rad(5.0);
            const double got = vacuum_rabi_splitting(n, wr, g);
            CHECK(got == doctest::Approx(2.0 * g * std::sqrt(n)).epsilon(1e-12));
        }
    }
    SUBCASE("collective enhancement ratio is sqrt(N)") {
        const double g = hz_to_rad(5.0);
        const double base = vacuum_rabi_splitting(1.0, wr, g);
        for (double n : {4.0, 9.0, 100.0, 1e4, 4.5e16})
            CHECK(vacuum_rabi_splitting(n, wr, g) / base ==
                  doctest::Approx(std::sqrt(n)).epsilon(1e-12));
    }
    SUBCASE("5 Hz single-spin coupling and N = 4.5e16 give a 2.12 GHz splitting") {
        const double split = vacuum_rabi_splitting(4.5e16, wr, hz_to_rad(5.0));
        CHECK(rad_to_ghz(split) == doctest::Approx(2.1213).epsilon(1e-3));
    }
}

TEST_CASE("excitation ladder correspondence with the two-oscillator dispersion") {
    // E = 1 eigenvalues vs the closed-form branches on a 101-point detuning grid
    const double wr = ghz_to_rad(5.90);
    for (double n : {1e4, 4.5e16}) {
        const double g = mhz_to_rad(450.0) / std::sqrt(n);
        const double g_eff = g * std::sqrt(n);
        for (int k = 0; k <= 100; ++k) {
            const double delta = ghz_to_rad(4.0) * (k / 100.0 - 0.5);
            const auto ev = eigenvalues(build_hamiltonian(n, 1, wr, wr + delta, g));
            const double half = 0.5 * std::sqrt(delta * delta + 4.0 * g_eff * g_eff);
            const double mid = wr + 0.5 * delta;
            REQUIRE(ev.size() == 2);
            CHECK(ev[1] == doctest::Approx(mid + half).epsilon(1e-12));
            CHECK(ev[0] == doctest::Approx(mid - half).epsilon(1e-12));
        }
    }
}

TEST_CASE("splitting quench with excitation number") {
    const double g = mhz_to_rad(1.0);

    SUBCASE("normalized gap starts at 1 and strictly decreases for N = 10") {
        const auto rows = splitting_vs_excitation(10.0, g, 10);
        REQUIRE(rows.size() == 10);
        CHECK(rows[0].first == 1);
        CHECK(rows[0].second == doctest::Approx(1.0).epsilon(1e-12));
        for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i].second < rows[i - 1].second);
        CHECK(rows[9].second < 1.0);
    }
    SUBCASE("few excitations stay within 10% of the full enhancement") {
        const auto rows = splitting_vs_excitation(10.0, g, 2);
        CHECK(rows[1].second > 0.9);
    }
    SUBCASE("gaps agree with the dense oracle") {
        for (std::int64_t e = 1; e <= 10; ++e) {
            const auto h = build_hamiltonian(10.0, e, 0.0, 0.0, g);
            const auto want = oracle::dense_symmetric_eigenvalues(
                oracle::tridiagonal_to_dense(h.diag, h.offdiag), h.diag.size());
            // the two oracle eigenvalues nearest the unperturbed (zero) energy
            std::vector<double> by_mag = want;
            std::sort(by_mag.begin(), by_mag.end(),
                      [](double a, double b) { return std::abs(a) < std::abs(b); });
            const double gap = std::abs(by_mag[1] - by_mag[0]);
            const auto rows = splitting_vs_excitation(10.0, g, e);
            CHECK(rows.back().second ==
                  doctest::Approx(gap / (2.0 * g * std::sqrt(10.0))).epsilon(1e-9));
        }
    }
    SUBCASE("intractable dimensions rejected") {
        CHECK_THROWS_AS(build_hamiltonian(1e9, 200001, 1.0, 1.0, 0.1), std::invalid_argument);
    }
}
