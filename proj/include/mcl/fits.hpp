#pragma once

#include <array>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "mcl/optimizer.hpp"
#include "mcl/spectrum.hpp"

namespace mcl {

// Lorentzian in linear power: A * (G/2)^2 / ((f - f0)^2 + (G/2)^2) + c,
// params p = {f0, fwhm, amplitude, baseline} with the width through |.|.
struct LorentzianModel {
    static double eval(const double* p, double f);
    static void jacobian_row(const double* p, double f, double* out);
};

// dB transmission of the coupled system,
//   A = kappa / (i(w - w_r) - kappa + g_eff^2 / (i(w - w_fmr) - gamma/2)),
//   w_fmr = w_r + g_s*mu_B*(B - B_FMR)/hbar,
//   model = 10*log10(|A|^2) + offset_db.
// params p = {omega_r, kappa, g_eff, gamma, g_s, B_FMR, offset_db}; the three
// rates enter through |.| so zero stays reachable.
struct S21DbModel {
    static constexpr std::size_t n_params = 7;
    static double eval(const double* p, double field, double omega);
    static void jacobian_row(const double* p, double field, double omega, double* out);
};

enum class SliceFlag { ok, no_peak, two_peak, broadened, failed };
const char* to_string(SliceFlag f);

struct LorentzianFit {
    double center_hz = 0.0;
    double fwhm_hz = 0.0;
    double amplitude_db = 0.0;  // peak height above baseline, dB scale
    double baseline_db = 0.0;
    std::array<double, 16> covariance{};  // (f0, fwhm, A_lin, c_lin) order
    bool converged = false;
    int iterations = 0;
    SliceFlag flag = SliceFlag::failed;
    double second_center_hz = std::numeric_limits<double>::quiet_NaN();
};

OptimizerSettings default_slice_settings();

// Lorentzian fit of the dominant peak of one constant-field slice, on linear
// power, windowed around the peak. Initial guesses come from the argmax and
// the half-max crossings. Two resolved maxima give flag two_peak (with the
// secondary center reported); unresolved shoulders give flag broadened; a
// slice with nothing above baseline + 3 sigma gives flag no_peak.
LorentzianFit fit_slice(const Spectrum2D& s, std::size_t field_index,
                        const OptimizerSettings& settings = default_slice_settings());

struct TracePoint {
    double field_t = 0.0;
    double center_hz = 0.0;
    double fwhm_hz = 0.0;
    SliceFlag flag = SliceFlag::failed;
};

// Per-field slice fits; single-slice failures are flagged, never fatal.
std::vector<TracePoint> linewidth_trace(const Spectrum2D& s,
                                        const OptimizerSettings& settings = default_slice_settings());

struct BranchPoint {
    double field_t = 0.0;
    double freq_hz = 0.0;
};

// Up to two refined peak centers per field slice, for the anticrossing fit.
std::vector<BranchPoint> extract_branch_points(const Spectrum2D& s,
                                               const OptimizerSettings& settings = default_slice_settings());

struct AnticrossingFit {
    double g_eff_hz = 0.0;
    double b_fmr_t = 0.0;
    double g_s = 2.0;
    double f_r_hz = 0.0;
    double err_g_eff_hz = 0.0;
    double err_b_fmr_t = 0.0;
    double err_g_s = 0.0;
    double err_f_r_hz = 0.0;
    double residual_rms_hz = 0.0;
    FitDiagnostics diagnostics;
};

// Least-squares fit of the two-branch dispersion to (B, f) peak positions.
// Points are assigned to the upper or lower branch by the initial guess.
AnticrossingFit fit_anticrossing(std::span<const BranchPoint> points,
                                 const AnticrossingFit& initial,
                                 const OptimizerSettings& settings = {});

struct FullModelFit {
    double f_r_hz = 0.0;
    double kappa_hz = 0.0;   // total kappa / 2pi
    double g_eff_hz = 0.0;
    double gamma_hz = 0.0;
    double g_s = 2.0;
    double b_fmr_t = 0.0;
    double scale_db = 0.0;   // amplitude scale; the dB baseline folds in here
    double err_f_r_hz = 0.0;
    double err_kappa_hz = 0.0;
    double err_g_eff_hz = 0.0;
    double err_gamma_hz = 0.0;
    double err_g_s = 0.0;
    double err_b_fmr_t = 0.0;
    double err_scale_db = 0.0;
    std::vector<double> covariance;  // 7 x 7, S21DbModel parameter order
    double residual_rms_db = 0.0;
    double reduced_chi_square = std::numeric_limits<double>::quiet_NaN();
    FitDiagnostics diagnostics;

    double cooperativity() const;  // g_eff^2 / (kappa * gamma), 2pi-free
};

OptimizerSettings default_full_settings();

// Full 2D fit of the dB transmission model to every grid sample. The reduced
// chi-square is reported against noise_sigma_db when it is positive.
FullModelFit fit_full(const Spectrum2D& s, const FullModelFit& initial,
                      const OptimizerSettings& settings = default_full_settings(),
                      double noise_sigma_db = 0.0);

}  // namespace mcl
