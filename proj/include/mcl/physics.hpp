#pragma once

#include <complex>

#include "mcl/constants.hpp"

namespace mcl {

// One microwave resonator mode. All rates are angular (rad/s) half-widths:
// the transmission denominator carries (kappa_c + kappa_i) directly.
struct ResonatorParams {
    double omega_r = 0.0;      // resonance frequency, rad/s
    double kappa_c = 0.0;      // external coupling rate, rad/s
    double kappa_i = 0.0;      // intrinsic loss rate, rad/s
    double mode_volume = 0.0;  // m^3; 0 means unset

    double kappa() const { return kappa_c + kappa_i; }
    bool has_mode_volume() const { return mode_volume > 0.0; }
};

// The exchange-locked spin ensemble (YIG:Ga).
struct SpinEnsembleParams {
    double g_s = 2.0;     // electron g-factor
    double B_a = 0.0;     // anisotropy field, T
    double rho = 0.0;     // spin density, m^-3; 0 means unset
    double N = 1.0;       // spin count (real-valued; N ~ 1e16 is typical)
    double gamma = 0.0;   // spin relaxation rate, rad/s; enters S21 as gamma/2
};

void validate(const ResonatorParams& r);
void validate(const SpinEnsembleParams& e);

// Hybridized resonator + ensemble with its collective coupling and the
// field where the detuning vanishes.
struct HybridModel {
    ResonatorParams resonator;
    SpinEnsembleParams ensemble;
    double g_eff = 0.0;   // collective coupling rate, rad/s
    double B_FMR = 0.0;   // resonance field, T

    // B_FMR computed from the FMR dispersion at omega_r.
    static HybridModel from_params(const ResonatorParams& res, const SpinEnsembleParams& ens,
                                   double g_eff, const PhysicalConstants& c = codata2018);
};

void validate(const HybridModel& m, const PhysicalConstants& c = codata2018);

// FMR dispersion: omega = g_s * mu_B * (B_ext + B_a) / hbar.
// Throws std::domain_error for a negative effective field.
double fmr_frequency(const SpinEnsembleParams& ens, double B_ext,
                     const PhysicalConstants& c = codata2018);

// Field at which fmr_frequency equals omega_target.
double resonance_field(const SpinEnsembleParams& ens, double omega_target,
                       const PhysicalConstants& c = codata2018);

// Detuning Delta = omega_FMR(B_ext) - omega_r = g_s*mu_B*(B_ext - B_FMR)/hbar.
double detuning(const HybridModel& m, double B_ext, const PhysicalConstants& c = codata2018);

struct PolaritonBranches {
    double upper = 0.0;  // rad/s
    double lower = 0.0;  // rad/s
};

// Two-coupled-oscillator dispersion: omega_r + Delta/2 +- sqrt(Delta^2 + 4 g_eff^2)/2.
PolaritonBranches polariton_branches(const HybridModel& m, double B_ext,
                                     const PhysicalConstants& c = codata2018);

// Input-output transmission amplitude
//   S21 = kappa_c / ( i(w - w_r) - (kappa_c + kappa_i) + g_eff^2 / (i(w - w_FMR) - gamma/2) ).
// Throws std::domain_error on the lossless double-resonance singularity.
std::complex<double> s21(const HybridModel& m, double B_ext, double omega_probe,
                         const PhysicalConstants& c = codata2018);

// Bare-resonator transmission (g_eff = 0 limit), shared with the scene generator.
std::complex<double> s21_bare(double omega_probe, double omega_r, double kappa_c, double kappa);

// Vacuum magnetic field amplitude B_10 = sqrt(mu_0 * hbar * omega_r / (2 V_m)).
// Throws std::invalid_argument if the mode volume is unset.
double vacuum_field(const ResonatorParams& res, const PhysicalConstants& c = codata2018);

// Single-spin coupling g = (g_s mu_B / 2 hbar) * B_10, rad/s.
double single_spin_coupling(const ResonatorParams& res, const SpinEnsembleParams& ens,
                            const PhysicalConstants& c = codata2018);

// Collective coupling for spin density rho filling a fraction V/V_m of the mode:
// g_eff = (g_s mu_B / 2 hbar) * sqrt(mu_0 rho hbar omega_r V / (2 V_m)), rad/s.
double collective_coupling(const ResonatorParams& res, const SpinEnsembleParams& ens,
                           double filling, const PhysicalConstants& c = codata2018);

// N = rho * overlap_length * track_width * field_depth.
double spin_count_from_geometry(double overlap_length, double track_width, double field_depth,
                                double rho);

// rho = spins_per_cell / cell_volume.
double yig_spin_density(double spins_per_cell, double cell_volume);

// C = g_eff^2 / (kappa * gamma); the 2*pi factors cancel.
double cooperativity(const HybridModel& m);

// Bose-Einstein occupancy 1 / (exp(hbar*omega / k_B T) - 1).
double thermal_occupancy(double temperature, double omega,
                         const PhysicalConstants& c = codata2018);

}  // namespace mcl
