#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>
#include <vector>

#include "mcl/fits.hpp"
#include "mcl/physics.hpp"
#include "mcl/scene.hpp"
#include "mcl/spectrum.hpp"
#include "mcl/units.hpp"

using namespace mcl;
using namespace mcl::units;

namespace {

SceneConfig reference_scene() {
    ResonatorParams res;
    res.omega_r = ghz_to_rad(5.90);
    res.kappa_c = mhz_to_rad(0.3);
    res.kappa_i = mhz_to_rad(2.7);
    SpinEnsembleParams ens;
    ens.g_s = 2.17;
    ens.B_a = mt_to_tesla(24.0);
    ens.gamma = mhz_to_rad(50.0);
    ens.N = 4.5e16;

    SceneConfig scene;
    scene.hybrid = HybridModel::from_params(res, ens, mhz_to_rad(450.0));
    scene.field_grid = {mt_to_tesla(120.0), mt_to_tesla(220.0), mt_to_tesla(1.0)};
    scene.freq_grid = {5.2e9, 6.6e9, 3.5e6};
    return scene;
}

}  // namespace

TEST_CASE("Lorentzian slice fits") {
    SUBCASE("exact Lorentzian samples recovered to 1e-9 relative") {
        Spectrum2D s;
        s.field_axis = {0.3};
        const double f0 = 5.9e9, fwhm = 6e6, amp = 0.01, base = 1e-6;
        for (int j = 0; j < 400; ++j) {
            const double f = 5.8e9 + j * 0.5e6;
            s.freq_axis.push_back(f);
            const double h = fwhm / 2.0;
            const double p = amp * h * h / ((f - f0) * (f - f0) + h * h) + base;
            s.power_db.push_back(10.0 * std::log10(p));
        }
        const LorentzianFit fit = fit_slice(s, 0);
        REQUIRE(fit.converged);
        CHECK(fit.flag == SliceFlag::ok);
        CHECK(fit.center_hz == doctest::Approx(f0).epsilon(1e-9));
        CHECK(fit.fwhm_hz == doctest::Approx(fwhm).epsilon(1e-9));
    }
    SUBCASE("far-detuned slice has the bare 6 MHz resonator width") {
        // the coupled line keeps an extra g_eff^2 gamma / Delta^2 width, so a
        // genuinely decoupled slice needs detuning far beyond the anticrossing
        // window: ~0.65 T above the crossing the tail is below 1% of kappa
        SceneConfig scene = reference_scene();
        scene.field_grid = {0.80, 0.85, mt_to_tesla(1.0)};
        const Spectrum2D s = synthesize(scene);
        const LorentzianFit fit = fit_slice(s, 0);
        REQUIRE(fit.converged);
        CHECK(fit.fwhm_hz == doctest::Approx(6e6).epsilon(0.01));
        // the center is still pulled by g_eff^2/Delta, about 11 MHz here
        CHECK(std::abs(fit.center_hz - 5.90e9) < 15e6);
    }
    SUBCASE("slice at the crossing reports two peaks, not one bogus narrow line") {
        SceneConfig scene = reference_scene();
        const Spectrum2D s = synthesize(scene);
        std::size_t i_fmr = 0;
        double best = 1e300;
        for (std::size_t i = 0; i < s.fields(); ++i) {
            const double d = std::abs(s.field_axis[i] - scene.hybrid.B_FMR);
            if (d < best) { best = d; i_fmr = i; }
        }
        const LorentzianFit fit = fit_slice(s, i_fmr);
        CHECK(fit.flag == SliceFlag::two_peak);
        REQUIRE(std::isfinite(fit.second_center_hz));
        // the two centers straddle the resonator frequency by about g_eff
        const double lo = std::min(fit.center_hz, fit.second_center_hz);
        const double hi = std::max(fit.center_hz, fit.second_center_hz);
        CHECK(hi - lo == doctest::Approx(900e6).epsilon(0.05));
    }
    SUBCASE("flat slice reports no peak") {
        Spectrum2D s;
        s.field_axis = {0.1};
        for (int j = 0; j < 64; ++j) {
            s.freq_axis.push_back(5.0e9 + j * 1e6);
            s.power_db.push_back(-60.0);
        }
        CHECK(fit_slice(s, 0).flag == SliceFlag::no_peak);
    }
    SUBCASE("too few samples rejected") {
        Spectrum2D s;
        s.field_axis = {0.1};
        s.freq_axis = {1e9, 2e9, 3e9};
        s.power_db = {-10, -5, -10};
        CHECK_THROWS_AS(fit_slice(s, 0), std::invalid_argument);
    }
}

TEST_CASE("linewidth trace") {
    SceneConfig scene = reference_scene();
    const Spectrum2D s = synthesize(scene);
    const auto trace = linewidth_trace(s);
    REQUIRE(trace.size() == s.fields());

    SUBCASE("far-detuned median linewidth is 2*kappa") {
        // measured on a map detuned well past the anticrossing, where the
        // residual spin tail g_eff^2 gamma / Delta^2 is below 1% of kappa
        SceneConfig far_scene = reference_scene();
        far_scene.field_grid = {0.80, 0.85, mt_to_tesla(1.0)};
        const auto far_trace = linewidth_trace(synthesize(far_scene));
        std::vector<double> far;
        for (const auto& t : far_trace)
            if (t.flag == SliceFlag::ok || t.flag == SliceFlag::broadened)
                far.push_back(t.fwhm_hz);
        REQUIRE(far.size() > 10);
        std::sort(far.begin(), far.end());
        CHECK(far[far.size() / 2] == doctest::Approx(6e6).epsilon(0.05));
    }
    SUBCASE("trace rises toward the crossing") {
        // compare the linewidth 3 mT out against the far-detuned value
        double near_fwhm = 0.0, far_fwhm = 0.0;
        for (const auto& t : trace) {
            const double d = std::abs(t.field_t - scene.hybrid.B_FMR);
            // slices this close to the crossing legitimately resolve both
            // polariton peaks, so accept the two-peak flag too
            if (t.flag != SliceFlag::ok && t.flag != SliceFlag::broadened &&
                t.flag != SliceFlag::two_peak)
                continue;
            if (std::abs(d - mt_to_tesla(3.0)) < mt_to_tesla(0.6)) near_fwhm = t.fwhm_hz;
            if (std::abs(d - mt_to_tesla(45.0)) < mt_to_tesla(0.6)) far_fwhm = t.fwhm_hz;
        }
        REQUIRE(near_fwhm > 0.0);
        REQUIRE(far_fwhm > 0.0);
        CHECK(near_fwhm > 2.0 * far_fwhm);
    }
    SUBCASE("decoupled map has a flat trace") {
        SceneConfig flat = reference_scene();
        flat.hybrid.g_eff = 0.0;
        const auto t2 = linewidth_trace(synthesize(flat));
        for (const auto& t : t2) {
            REQUIRE(t.flag == SliceFlag::ok);
            CHECK(t.fwhm_hz == doctest::Approx(6e6).epsilon(0.01));
        }
    }
}

TEST_CASE("anticrossing dispersion fit") {
    const SceneConfig scene = reference_scene();
    const HybridModel& m = scene.hybrid;

    // exact branch points straight from the dispersion
    std::vector<BranchPoint> points;
    for (int k = 0; k <= 40; ++k) {
        const double b = mt_to_tesla(130.0 + 2.0 * k);
        const auto br = polariton_branches(m, b);
        points.push_back({b, rad_to_hz(br.upper)});
        points.push_back({b, rad_to_hz(br.lower)});
    }

    AnticrossingFit guess;
    guess.g_eff_hz = 300e6;
    guess.b_fmr_t = mt_to_tesla(165.0);
    guess.g_s = 2.0;
    guess.f_r_hz = 5.95e9;

    SUBCASE("exact points recovered to 1e-6 relative") {
        const AnticrossingFit fit = fit_anticrossing(points, guess);
        REQUIRE(fit.diagnostics.converged);
        CHECK(fit.g_eff_hz == doctest::Approx(450e6).epsilon(1e-6));
        CHECK(fit.b_fmr_t == doctest::Approx(m.B_FMR).epsilon(1e-6));
        CHECK(fit.g_s == doctest::Approx(2.17).epsilon(1e-6));
        CHECK(fit.f_r_hz == doctest::Approx(5.90e9).epsilon(1e-6));
        CHECK(fit.residual_rms_hz < 1.0);
    }
    SUBCASE("fit idempotence: refitting from the solution barely moves") {
        const AnticrossingFit first = fit_anticrossing(points, guess);
        const AnticrossingFit second = fit_anticrossing(points, first);
        CHECK(second.g_eff_hz == doctest::Approx(first.g_eff_hz).epsilon(1e-10));
        CHECK(second.b_fmr_t == doctest::Approx(first.b_fmr_t).epsilon(1e-10));
        CHECK(second.g_s == doctest::Approx(first.g_s).epsilon(1e-10));
        CHECK(second.f_r_hz == doctest::Approx(first.f_r_hz).epsilon(1e-10));
    }
    SUBCASE("5 MHz frequency jitter: 100 trials stay inside the quoted error bars") {
        std::mt19937_64 rng(2024);
        std::normal_distribution<double> jitter(0.0, 5e6);
        int good = 0;
        for (int trial = 0; trial < 100; ++trial) {
            std::vector<BranchPoint> noisy = points;
            for (auto& p : noisy) p.freq_hz += jitter(rng);
            const AnticrossingFit fit = fit_anticrossing(noisy, guess);
            if (fit.diagnostics.converged && std::abs(fit.g_eff_hz - 450e6) < 20e6 &&
                std::abs(fit.b_fmr_t - m.B_FMR) < mt_to_tesla(5.0))
                ++good;
        }
        CHECK(good >= 95);
    }
    SUBCASE("uncoupled crossing data fits g_eff consistent with zero") {
        HybridModel bare = m;
        bare.g_eff = 0.0;
        std::vector<BranchPoint> crossing;
        for (int k = 0; k <= 40; ++k) {
            const double b = mt_to_tesla(130.0 + 2.0 * k);
            const auto br = polariton_branches(bare, b);
            crossing.push_back({b, rad_to_hz(br.upper)});
            crossing.push_back({b, rad_to_hz(br.lower)});
        }
        AnticrossingFit g0 = guess;
        g0.g_eff_hz = 50e6;
        const AnticrossingFit fit = fit_anticrossing(crossing, g0);
        CHECK(std::abs(fit.g_eff_hz) <= std::max(fit.err_g_eff_hz, 1e5));
    }
    SUBCASE("all points on one branch reports rank deficiency") {
        std::vector<BranchPoint> upper_only(points.begin(), points.end());
        std::vector<BranchPoint> one_side;
        for (std::size_t i = 0; i < upper_only.size(); i += 2) one_side.push_back(upper_only[i]);
        const AnticrossingFit fit = fit_anticrossing(one_side, guess);
        CHECK((fit.diagnostics.rank_deficient || !fit.diagnostics.converged));
    }
    SUBCASE("fewer than six points rejected") {
        std::vector<BranchPoint> few(points.begin(), points.begin() + 5);
        CHECK_THROWS_AS(fit_anticrossing(few, guess), std::invalid_argument);
    }
}

TEST_CASE("model Jacobians agree with central differences") {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    SUBCASE("Lorentzian model") {
        for (int trial = 0; trial < 100; ++trial) {
            const double p[4] = {5.8e9 + 0.2e9 * unif(rng), 2e6 + 8e6 * unif(rng),
                                 0.001 + 0.02 * unif(rng), 1e-6 + 1e-4 * unif(rng)};
            const double f = 5.75e9 + 0.3e9 * unif(rng);
            double analytic[4];
            LorentzianModel::jacobian_row(p, f, analytic);
            double rowmax = 0.0;
            for (int a = 0; a < 4; ++a) rowmax = std::max(rowmax, std::abs(analytic[a]));
            for (int a = 0; a < 4; ++a) {
                const double h = 1e-6 * std::max(std::abs(p[a]), 1e-8);
                double pp[4], pm[4];
                for (int k = 0; k < 4; ++k) pp[k] = pm[k] = p[k];
                pp[a] += h;
                pm[a] -= h;
                const double fd = (LorentzianModel::eval(pp, f) - LorentzianModel::eval(pm, f)) /
                                  (2.0 * h);
                // components many orders below the dominant one carry no
                // information; judge them on an absolute floor tied to the row
                const double scale = std::max(std::abs(fd), std::abs(analytic[a]));
                CHECK(std::abs(analytic[a] - fd) <=
                      1e-6 * std::max(scale, 1e-12) + 1e-12 * rowmax);
            }
        }
    }
    SUBCASE("dB transmission model") {
        for (int trial = 0; trial < 100; ++trial) {
            const double p[7] = {ghz_to_rad(5.8 + 0.2 * unif(rng)),
                                 mhz_to_rad(1.0 + 5.0 * unif(rng)),
                                 mhz_to_rad(300.0 + 300.0 * unif(rng)),
                                 mhz_to_rad(20.0 + 60.0 * unif(rng)),
                                 1.9 + 0.5 * unif(rng),
                                 mt_to_tesla(150.0 + 40.0 * unif(rng)),
                                 -10.0 + 20.0 * unif(rng)};
            const double field = mt_to_tesla(120.0 + 100.0 * unif(rng));
            const double omega = ghz_to_rad(5.3 + 1.2 * unif(rng));
            double analytic[7];
            S21DbModel::jacobian_row(p, field, omega, analytic);
            for (int a = 0; a < 7; ++a) {
                const double h = 1e-7 * std::max(std::abs(p[a]), 1e-8);
                double pp[7], pm[7];
                for (int k = 0; k < 7; ++k) pp[k] = pm[k] = p[k];
                pp[a] += h;
                pm[a] -= h;
                const double fd = (S21DbModel::eval(pp, field, omega) -
                                   S21DbModel::eval(pm, field, omega)) /
                                  (2.0 * h);
                const double scale = std::max({std::abs(fd), std::abs(analytic[a]), 1e-9});
                CHECK(std::abs(analytic[a] - fd) <= 2e-6 * scale);
            }
        }
    }
}

TEST_CASE("full 2D transmission fit") {
    const SceneConfig scene = reference_scene();
    const Spectrum2D s = synthesize(scene);

    FullModelFit initial;
    initial.f_r_hz = 5.93e9;
    initial.kappa_hz = 4e6;
    initial.g_eff_hz = 400e6;
    initial.gamma_hz = 70e6;
    initial.g_s = 2.0;
    initial.b_fmr_t = mt_to_tesla(168.0);
    initial.scale_db = -20.0;

    const FullModelFit fit = fit_full(s, initial);
    REQUIRE(fit.diagnostics.converged);

    SUBCASE("noiseless recovery to 0.1%") {
        CHECK(fit.g_eff_hz == doctest::Approx(450e6).epsilon(1e-3));
        CHECK(fit.gamma_hz == doctest::Approx(50e6).epsilon(1e-3));
        CHECK(fit.kappa_hz == doctest::Approx(3e6).epsilon(1e-3));
        CHECK(fit.g_s == doctest::Approx(2.17).epsilon(1e-3));
        CHECK(fit.b_fmr_t == doctest::Approx(scene.hybrid.B_FMR).epsilon(1e-3));
    }
    SUBCASE("cooperativity from the fit") {
        CHECK(fit.cooperativity() == doctest::Approx(1350.0).epsilon(1e-3));
    }
    SUBCASE("unit discipline: fitted rates are unchanged under an axis rescale") {
        // shifting the dB scale of the data moves only the scale parameter
        Spectrum2D shifted = s;
        for (auto& v : shifted.power_db) v += 12.5;
        const FullModelFit fit2 = fit_full(shifted, initial);
        REQUIRE(fit2.diagnostics.converged);
        CHECK(fit2.g_eff_hz == doctest::Approx(fit.g_eff_hz).epsilon(1e-8));
        CHECK(fit2.kappa_hz == doctest::Approx(fit.kappa_hz).epsilon(1e-8));
        CHECK(fit2.scale_db == doctest::Approx(fit.scale_db + 12.5).epsilon(1e-8));
    }
    SUBCASE("noisy map stays within Monte-Carlo tolerances") {
        SceneConfig noisy = scene;
        noisy.noise.amplitude_sigma = 0.05;
        int good = 0;
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
            noisy.noise.seed = seed;
            const FullModelFit f = fit_full(synthesize(noisy), initial, default_full_settings(),
                                            10.0 * 0.05 / std::log(10.0));
            if (f.diagnostics.converged && std::abs(f.g_eff_hz - 450e6) < 0.02 * 450e6 &&
                std::abs(f.gamma_hz - 50e6) < 0.1 * 50e6 &&
                std::abs(f.kappa_hz - 3e6) < 0.1 * 3e6)
                ++good;
        }
        CHECK(good >= 4);
    }
    SUBCASE("idempotence") {
        const FullModelFit again = fit_full(s, fit);
        CHECK(again.g_eff_hz == doctest::Approx(fit.g_eff_hz).epsilon(1e-10));
        CHECK(again.kappa_hz == doctest::Approx(fit.kappa_hz).epsilon(1e-10));
        CHECK(again.gamma_hz == doctest::Approx(fit.gamma_hz).epsilon(1e-10));
    }
}
