#pragma once

#include <filesystem>
#include <optional>
#include <string>

namespace mcl {

// Coupling-estimate inputs: sample geometry, spin density (direct or from
// unit-cell data), and the resonator mode. JSON boundary units: mm / um for
// geometry, cm^-3 for density, nm^3 for the unit cell, GHz / Hz / MHz for
// frequencies and rates.
struct EstimateConfig {
    double overlap_length = 0.0;   // m
    double track_width = 0.0;      // m
    double field_depth = 0.0;      // m
    double rho = 0.0;              // m^-3
    double f_r_hz = 0.0;
    double g_s = 2.0;
    std::optional<double> mode_volume_m3;
    std::optional<double> single_spin_g_hz;    // overrides the mode-volume route
    std::optional<double> measured_g_eff_hz;
    std::optional<double> temperature_k;
};

struct EstimateReport {
    double rho = 0.0;              // m^-3
    double spin_count = 0.0;
    double vacuum_field_t = 0.0;   // 0 when g was given directly
    double single_spin_g_hz = 0.0;
    double g_eff_hz = 0.0;
    double thermal_photons = 0.0;  // NaN when no temperature given
    double measured_ratio = 0.0;   // predicted/measured; 0 when not provided
    bool deviates_factor_two = false;
    std::string note;
};

EstimateConfig load_estimate_config(const std::filesystem::path& path);
EstimateConfig parse_estimate_config(const std::string& json_text);

EstimateReport run_estimate(const EstimateConfig& config);
std::string estimate_report_json(const EstimateReport& report);

}  // namespace mcl
