#include "mcl/physics.hpp"

#include <cmath>
#include <stdexcept>

namespace mcl {

void validate(const PhysicalConstants& c) {
    if (!(c.h > 0.0 && c.hbar > 0.0 && c.mu_B > 0.0 && c.mu_0 > 0.0 && c.k_B > 0.0))
        throw std::invalid_argument("physical constants must be strictly positive");
    if (c.h != 2.0 * std::numbers::pi * c.hbar)
        throw std::invalid_argument("h must equal 2*pi*hbar at stored precision");
}

void validate(const ResonatorParams& r) {
    if (!(r.omega_r > 0.0)) throw std::invalid_argument("omega_r must be > 0");
    if (r.kappa_c < 0.0 || r.kappa_i < 0.0)
        throw std::invalid_argument("loss rates must be >= 0");
    if (!(r.kappa() > 0.0)) throw std::invalid_argument("kappa_c + kappa_i must be > 0");
    if (r.mode_volume < 0.0) throw std::invalid_argument("mode_volume must be >= 0");
}

void validate(const SpinEnsembleParams& e) {
    if (!(e.g_s > 0.0)) throw std::invalid_argument("g_s must be > 0");
    if (e.gamma < 0.0) throw std::invalid_argument("gamma must be >= 0");
    if (!(e.N >= 1.0)) throw std::invalid_argument("N must be >= 1");
    if (e.rho < 0.0) throw std::invalid_argument("rho must be >= 0");
}

HybridModel HybridModel::from_params(const ResonatorParams& res, const SpinEnsembleParams& ens,
                                     double g_eff, const PhysicalConstants& c) {
    validate(res);
    validate(ens);
    if (g_eff < 0.0) throw std::invalid_argument("g_eff must be >= 0");
    HybridModel m;
    m.resonator = res;
    m.ensemble = ens;
    m.g_eff = g_eff;
    m.B_FMR = resonance_field(ens, res.omega_r, c);
    return m;
}

void validate(const HybridModel& m, const PhysicalConstants& c) {
    validate(m.resonator);
    validate(m.ensemble);
    if (m.g_eff < 0.0) throw std::invalid_argument("g_eff must be >= 0");
    const double lhs = c.hbar * m.resonator.omega_r;
    const double rhs = m.ensemble.g_s * c.mu_B * (m.B_FMR + m.ensemble.B_a);
    if (std::abs(lhs - rhs) > 1e-9 * std::abs(lhs))
        throw std::invalid_argument("B_FMR inconsistent with resonator/ensemble parameters");
}

double fmr_frequency(const SpinEnsembleParams& ens, double B_ext, const PhysicalConstants& c) {
    const double b_eff = B_ext + ens.B_a;
    if (b_eff < 0.0)
        throw std::domain_error("negative effective field: model not valid below saturation");
    return ens.g_s * c.mu_B * b_eff / c.hbar;
}

double resonance_field(const SpinEnsembleParams& ens, double omega_target,
                       const PhysicalConstants& c) {
    if (!(omega_target > 0.0)) throw std::invalid_argument("omega_target must be > 0");
    return c.hbar * omega_target / (ens.g_s * c.mu_B) - ens.B_a;
}

double detuning(const HybridModel& m, double B_ext, const PhysicalConstants& c) {
    return m.ensemble.g_s * c.mu_B * (B_ext - m.B_FMR) / c.hbar;
}

PolaritonBranches polariton_branches(const HybridModel& m, double B_ext,
                                     const PhysicalConstants& c) {
    const double d = detuning(m, B_ext, c);
    const double half_gap = 0.5 * std::sqrt(d * d + 4.0 * m.g_eff * m.g_eff);
    const double mid = m.resonator.omega_r + 0.5 * d;
    return {mid + half_gap, mid - half_gap};
}

std::complex<double> s21(const HybridModel& m, double B_ext, double omega_probe,
                         const PhysicalConstants& c) {
    using namespace std::complex_literals;
    const double omega_fmr = fmr_frequency(m.ensemble, B_ext, c);
    const std::complex<double> spin_den =
        1i * (omega_probe - omega_fmr) - 0.5 * m.ensemble.gamma;
    std::complex<double> den = 1i * (omega_probe - m.resonator.omega_r) - m.resonator.kappa();
    if (m.g_eff != 0.0) {
        if (spin_den == 0.0)
            throw std::domain_error("s21 singular: lossless spin system on resonance");
        den += m.g_eff * m.g_eff / spin_den;
    }
    if (den == 0.0)
        throw std::domain_error("s21 singular: all loss rates zero on double resonance");
    return m.resonator.kappa_c / den;
}

std::complex<double> s21_bare(double omega_probe, double omega_r, double kappa_c, double kappa) {
    using namespace std::complex_literals;
    const std::complex<double> den = 1i * (omega_probe - omega_r) - kappa;
    if (den == 0.0) throw std::domain_error("s21 singular: lossless resonator on resonance");
    return kappa_c / den;
}

double vacuum_field(const ResonatorParams& res, const PhysicalConstants& c) {
    if (!res.has_mode_volume())
        throw std::invalid_argument("vacuum_field requires a mode volume");
    return std::sqrt(c.mu_0 * c.hbar * res.omega_r / (2.0 * res.mode_volume));
}

double single_spin_coupling(const ResonatorParams& res, const SpinEnsembleParams& ens,
                            const PhysicalConstants& c) {
    return ens.g_s * c.mu_B / (2.0 * c.hbar) * vacuum_field(res, c);
}

double collective_coupling(const ResonatorParams& res, const SpinEnsembleParams& ens,
                           double filling, const PhysicalConstants& c) {
    if (!(filling > 0.0)) throw std::invalid_argument("filling factor must be > 0");
    if (!(ens.rho > 0.0)) throw std::invalid_argument("spin density must be > 0");
    const double v = filling * res.mode_volume;
    return ens.g_s * c.mu_B / (2.0 * c.hbar) *
           std::sqrt(c.mu_0 * ens.rho * c.hbar * res.omega_r * v / (2.0 * res.mode_volume));
}

double spin_count_from_geometry(double overlap_length, double track_width, double field_depth,
                                double rho) {
    if (!(overlap_length > 0.0 && track_width > 0.0 && field_depth > 0.0))
        throw std::invalid_argument("all geometry dimensions must be > 0");
    if (!(rho > 0.0)) throw std::invalid_argument("spin density must be > 0");
    return rho * overlap_length * track_width * field_depth;
}

double yig_spin_density(double spins_per_cell, double cell_volume) {
    if (!(spins_per_cell > 0.0 && cell_volume > 0.0))
        throw std::invalid_argument("spins_per_cell and cell_volume must be > 0");
    return spins_per_cell / cell_volume;
}

double cooperativity(const HybridModel& m) {
    const double kappa = m.resonator.kappa();
    if (!(kappa > 0.0 && m.ensemble.gamma > 0.0))
        throw std::invalid_argument("cooperativity requires kappa > 0 and gamma > 0");
    return m.g_eff * m.g_eff / (kappa * m.ensemble.gamma);
}

double thermal_occupancy(double temperature, double omega, const PhysicalConstants& c) {
    if (!(temperature > 0.0)) throw std::invalid_argument("temperature must be > 0");
    if (!(omega > 0.0)) throw std::invalid_argument("omega must be > 0");
    return 1.0 / std::expm1(c.hbar * omega / (c.k_B * temperature));
}

}  // namespace mcl
