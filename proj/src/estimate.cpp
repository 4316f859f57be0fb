#include "mcl/estimate.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "mcl/physics.hpp"
#include "mcl/units.hpp"

namespace mcl {

using nlohmann::json;

namespace {

double require_num(const json& j, const char* key, const std::string& ctx) {
    auto it = j.find(key);
    if (it == j.end() || !it->is_number())
        throw std::invalid_argument("estimate config: missing numeric key '" + ctx + key + "'");
    return it->get<double>();
}

}  // namespace

EstimateConfig parse_estimate_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("estimate config: invalid JSON: ") + e.what());
    }

    EstimateConfig cfg;
    auto itg = j.find("geometry");
    if (itg == j.end())
        throw std::invalid_argument("estimate config: missing key 'geometry'");
    cfg.overlap_length = require_num(*itg, "overlap_length_mm", "geometry.") * 1e-3;
    cfg.track_width = require_num(*itg, "track_width_um", "geometry.") * 1e-6;
    cfg.field_depth = require_num(*itg, "field_depth_um", "geometry.") * 1e-6;

    auto itd = j.find("spin_density");
    if (itd == j.end())
        throw std::invalid_argument("estimate config: missing key 'spin_density'");
    if (itd->contains("per_cm3")) {
        cfg.rho = require_num(*itd, "per_cm3", "spin_density.") * 1e6;
    } else {
        const double per_cell = require_num(*itd, "spins_per_cell", "spin_density.");
        const double cell_nm3 = require_num(*itd, "cell_volume_nm3", "spin_density.");
        cfg.rho = yig_spin_density(per_cell, cell_nm3 * 1e-27);
    }

    auto itr = j.find("resonator");
    if (itr == j.end())
        throw std::invalid_argument("estimate config: missing key 'resonator'");
    cfg.f_r_hz = require_num(*itr, "f_r_GHz", "resonator.") * 1e9;
    if (itr->contains("mode_volume_m3"))
        cfg.mode_volume_m3 = (*itr)["mode_volume_m3"].get<double>();

    if (j.contains("g_s")) cfg.g_s = j["g_s"].get<double>();
    if (j.contains("single_spin_g_Hz")) cfg.single_spin_g_hz = j["single_spin_g_Hz"].get<double>();
    if (j.contains("measured_g_eff_MHz"))
        cfg.measured_g_eff_hz = j["measured_g_eff_MHz"].get<double>() * 1e6;
    if (j.contains("temperature_K")) cfg.temperature_k = j["temperature_K"].get<double>();

    if (!cfg.single_spin_g_hz && !cfg.mode_volume_m3)
        throw std::invalid_argument(
            "estimate config: need either resonator.mode_volume_m3 or single_spin_g_Hz");
    return cfg;
}

EstimateConfig load_estimate_config(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open estimate config: " + path.string());
    std::stringstream buf;
    buf << f.rdbuf();
    return parse_estimate_config(buf.str());
}

EstimateReport run_estimate(const EstimateConfig& cfg) {
    EstimateReport rep;
    rep.rho = cfg.rho;
    rep.spin_count =
        spin_count_from_geometry(cfg.overlap_length, cfg.track_width, cfg.field_depth, cfg.rho);

    SpinEnsembleParams ens;
    ens.g_s = cfg.g_s;
    ens.rho = cfg.rho;
    ens.N = rep.spin_count;

    if (cfg.single_spin_g_hz) {
        rep.single_spin_g_hz = *cfg.single_spin_g_hz;
    } else {
        ResonatorParams res;
        res.omega_r = units::hz_to_rad(cfg.f_r_hz);
        res.kappa_i = 1.0;  // irrelevant to the estimators, must be nonzero
        res.mode_volume = *cfg.mode_volume_m3;
        rep.vacuum_field_t = vacuum_field(res);
        rep.single_spin_g_hz = units::rad_to_hz(single_spin_coupling(res, ens));
    }
    rep.g_eff_hz = rep.single_spin_g_hz * std::sqrt(rep.spin_count);

    rep.thermal_photons = std::numeric_limits<double>::quiet_NaN();
    if (cfg.temperature_k)
        rep.thermal_photons = thermal_occupancy(*cfg.temperature_k, units::hz_to_rad(cfg.f_r_hz));

    if (cfg.measured_g_eff_hz && *cfg.measured_g_eff_hz > 0.0) {
        const double r = rep.g_eff_hz / *cfg.measured_g_eff_hz;
        rep.measured_ratio = r;
        const double factor = r >= 1.0 ? r : 1.0 / r;
        rep.deviates_factor_two = factor > 2.0;
        char buf[160];
        std::snprintf(buf, sizeof buf,
                      "predicted g_eff is within a factor of %.2f of the measured value%s",
                      factor, rep.deviates_factor_two ? " (exceeds 2x)" : "");
        rep.note = buf;
    }
    return rep;
}

std::string estimate_report_json(const EstimateReport& rep) {
    json j;
    j["schema"] = "estimate-report v1";
    j["rho_per_cm3"] = rep.rho * 1e-6;
    j["spin_count"] = rep.spin_count;
    j["vacuum_field_T"] = rep.vacuum_field_t;
    j["single_spin_g_Hz"] = rep.single_spin_g_hz;
    j["g_eff_MHz"] = rep.g_eff_hz / 1e6;
    if (std::isfinite(rep.thermal_photons)) j["thermal_photons"] = rep.thermal_photons;
    if (rep.measured_ratio > 0.0) {
        j["predicted_over_measured"] = rep.measured_ratio;
        j["deviates_factor_two"] = rep.deviates_factor_two;
        j["note"] = rep.note;
    }
    return j.dump(2);
}

}  // namespace mcl
