#include "mcl/scene.hpp"

#include <cmath>
#include <complex>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "mcl/units.hpp"

#ifndef MCL_VERSION_STRING
#define MCL_VERSION_STRING "0.0.0"
#endif

namespace mcl {

using nlohmann::json;

std::size_t GridSpec::points() const {
    if (!(step > 0.0) || !(stop > start)) return 0;
    return static_cast<std::size_t>(std::llround((stop - start) / step)) + 1;
}

double BystanderConfig::omega_at(double field_tesla) const {
    const double b_mt = units::tesla_to_mt(field_tesla);
    return res.omega_r * (1.0 + shift_per_mt * b_mt + shift_per_mt2 * b_mt * b_mt);
}

void validate(const SceneConfig& scene, std::vector<std::string>* warnings) {
    validate(scene.hybrid);
    for (const auto& b : scene.bystanders) validate(b.res);
    if (scene.box_mode) {
        validate(scene.box_mode->res);
        if (scene.box_mode->g_eff < 0.0)
            throw std::invalid_argument("box_mode.g_eff_MHz must be >= 0");
    }
    if (scene.field_grid.points() < 2)
        throw std::invalid_argument("field_grid_mT must define >= 2 increasing points");
    if (scene.freq_grid.points() < 2)
        throw std::invalid_argument("freq_grid_GHz must define >= 2 increasing points");
    if (scene.field_grid.points() * scene.freq_grid.points() > max_grid_points)
        throw std::invalid_argument("grid exceeds the 8e6-point memory bound");
    if (scene.noise.amplitude_sigma < 0.0)
        throw std::invalid_argument("noise.amplitude_sigma must be >= 0");

    if (warnings) {
        for (std::size_t k = 0; k < scene.bystanders.size(); ++k) {
            const auto& b = scene.bystanders[k];
            const double sep = std::abs(b.res.omega_r - scene.hybrid.resonator.omega_r);
            const double lw = std::max(b.res.kappa(), scene.hybrid.resonator.kappa());
            if (sep <= 10.0 * lw)
                warnings->push_back("bystander " + std::to_string(k) +
                                    " lies within 10 linewidths of the hybrid resonator");
        }
    }
}

namespace {

const json& require(const json& j, const char* key, const std::string& ctx) {
    auto it = j.find(key);
    if (it == j.end())
        throw std::invalid_argument("scene config: missing key '" + ctx + key + "'");
    return *it;
}

double require_num(const json& j, const char* key, const std::string& ctx) {
    const json& v = require(j, key, ctx);
    if (!v.is_number())
        throw std::invalid_argument("scene config: key '" + ctx + key + "' must be a number");
    return v.get<double>();
}

double optional_num(const json& j, const char* key, double fallback) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return fallback;
    return it->get<double>();
}

ResonatorParams parse_resonator(const json& j, const std::string& ctx) {
    ResonatorParams r;
    r.omega_r = units::ghz_to_rad(require_num(j, "f_r_GHz", ctx));
    r.kappa_c = units::mhz_to_rad(require_num(j, "kappa_c_MHz", ctx));
    r.kappa_i = units::mhz_to_rad(require_num(j, "kappa_i_MHz", ctx));
    r.mode_volume = optional_num(j, "mode_volume_m3", 0.0);
    return r;
}

GridSpec parse_grid(const json& j, const std::string& ctx, double scale) {
    GridSpec g;
    g.start = require_num(j, "start", ctx) * scale;
    g.stop = require_num(j, "stop", ctx) * scale;
    g.step = require_num(j, "step", ctx) * scale;
    return g;
}

}  // namespace

SceneConfig parse_scene(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("scene config: invalid JSON: ") + e.what());
    }

    SceneConfig scene;
    const ResonatorParams res = parse_resonator(require(j, "resonator", ""), "resonator.");

    const json& je = require(j, "ensemble", "");
    SpinEnsembleParams ens;
    ens.g_s = require_num(je, "g_s", "ensemble.");
    ens.B_a = units::mt_to_tesla(optional_num(je, "B_a_mT", 0.0));
    ens.gamma = units::mhz_to_rad(require_num(je, "gamma_MHz", "ensemble."));
    ens.rho = optional_num(je, "rho_per_cm3", 0.0) * 1e6;  // cm^-3 -> m^-3
    ens.N = optional_num(je, "N", 1.0);

    const double g_eff = units::mhz_to_rad(require_num(j, "g_eff_MHz", ""));
    scene.hybrid = HybridModel::from_params(res, ens, g_eff);
    if (j.contains("B_FMR_mT") && !j["B_FMR_mT"].is_null())
        scene.hybrid.B_FMR = units::mt_to_tesla(j["B_FMR_mT"].get<double>());

    if (j.contains("bystanders")) {
        const json& jb = j["bystanders"];
        if (!jb.is_array())
            throw std::invalid_argument("scene config: key 'bystanders' must be an array");
        for (std::size_t k = 0; k < jb.size(); ++k) {
            const std::string ctx = "bystanders[" + std::to_string(k) + "].";
            BystanderConfig b;
            b.res = parse_resonator(jb[k], ctx);
            b.shift_per_mt = optional_num(jb[k], "shift_per_mT", 0.0);
            b.shift_per_mt2 = optional_num(jb[k], "shift_per_mT2", 0.0);
            scene.bystanders.push_back(b);
        }
    }
    if (j.contains("box_mode") && !j["box_mode"].is_null()) {
        BoxModeConfig bm;
        bm.res = parse_resonator(j["box_mode"], "box_mode.");
        bm.g_eff = units::mhz_to_rad(require_num(j["box_mode"], "g_eff_MHz", "box_mode."));
        scene.box_mode = bm;
    }

    scene.field_grid = parse_grid(require(j, "field_grid_mT", ""), "field_grid_mT.", 1e-3);
    scene.freq_grid = parse_grid(require(j, "freq_grid_GHz", ""), "freq_grid_GHz.", 1e9);

    if (j.contains("noise") && !j["noise"].is_null()) {
        const json& jn = j["noise"];
        scene.noise.seed = jn.value("seed", std::uint64_t{0});
        scene.noise.amplitude_sigma = optional_num(jn, "amplitude_sigma", 0.0);
        if (jn.contains("floor_db") && !jn["floor_db"].is_null())
            scene.noise.floor_db = jn["floor_db"].get<double>();
    }

    validate(scene);
    return scene;
}

SceneConfig load_scene(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open scene config: " + path.string());
    std::stringstream buf;
    buf << f.rdbuf();
    return parse_scene(buf.str());
}

std::string scene_to_json(const SceneConfig& scene) {
    json j;
    const auto& res = scene.hybrid.resonator;
    j["resonator"] = {{"f_r_GHz", units::rad_to_ghz(res.omega_r)},
                      {"kappa_c_MHz", units::rad_to_mhz(res.kappa_c)},
                      {"kappa_i_MHz", units::rad_to_mhz(res.kappa_i)}};
    if (res.has_mode_volume()) j["resonator"]["mode_volume_m3"] = res.mode_volume;
    const auto& ens = scene.hybrid.ensemble;
    j["ensemble"] = {{"g_s", ens.g_s},
                     {"B_a_mT", units::tesla_to_mt(ens.B_a)},
                     {"gamma_MHz", units::rad_to_mhz(ens.gamma)},
                     {"N", ens.N}};
    if (ens.rho > 0.0) j["ensemble"]["rho_per_cm3"] = ens.rho * 1e-6;
    j["g_eff_MHz"] = units::rad_to_mhz(scene.hybrid.g_eff);
    j["B_FMR_mT"] = units::tesla_to_mt(scene.hybrid.B_FMR);
    if (!scene.bystanders.empty()) {
        j["bystanders"] = json::array();
        for (const auto& b : scene.bystanders)
            j["bystanders"].push_back({{"f_r_GHz", units::rad_to_ghz(b.res.omega_r)},
                                       {"kappa_c_MHz", units::rad_to_mhz(b.res.kappa_c)},
                                       {"kappa_i_MHz", units::rad_to_mhz(b.res.kappa_i)},
                                       {"shift_per_mT", b.shift_per_mt},
                                       {"shift_per_mT2", b.shift_per_mt2}});
    }
    if (scene.box_mode)
        j["box_mode"] = {{"f_r_GHz", units::rad_to_ghz(scene.box_mode->res.omega_r)},
                         {"kappa_c_MHz", units::rad_to_mhz(scene.box_mode->res.kappa_c)},
                         {"kappa_i_MHz", units::rad_to_mhz(scene.box_mode->res.kappa_i)},
                         {"g_eff_MHz", units::rad_to_mhz(scene.box_mode->g_eff)}};
    j["field_grid_mT"] = {{"start", scene.field_grid.start * 1e3},
                          {"stop", scene.field_grid.stop * 1e3},
                          {"step", scene.field_grid.step * 1e3}};
    j["freq_grid_GHz"] = {{"start", scene.freq_grid.start * 1e-9},
                          {"stop", scene.freq_grid.stop * 1e-9},
                          {"step", scene.freq_grid.step * 1e-9}};
    j["noise"] = {{"seed", scene.noise.seed},
                  {"amplitude_sigma", scene.noise.amplitude_sigma}};
    if (scene.noise.floor_db) j["noise"]["floor_db"] = *scene.noise.floor_db;
    return j.dump();
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// uniform in (0, 1)
double unit_open(std::uint64_t h) { return static_cast<double>(h >> 11) * 0x1p-53 + 0x1p-54; }

}  // namespace

double gaussian_noise(std::uint64_t seed, std::uint64_t i, std::uint64_t j) {
    const std::uint64_t key =
        splitmix64(splitmix64(seed ^ (i * 0xa24baed4963ee407ULL)) ^ (j * 0x9fb21c651e98df25ULL));
    const double u1 = unit_open(key);
    const double u2 = unit_open(splitmix64(key));
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(units::two_pi * u2);
}

Spectrum2D synthesize(const SceneConfig& scene) {
    validate(scene);

    Spectrum2D s;
    const std::size_t nb = scene.field_grid.points();
    const std::size_t nf = scene.freq_grid.points();
    s.field_axis.resize(nb);
    s.freq_axis.resize(nf);
    for (std::size_t i = 0; i < nb; ++i) s.field_axis[i] = scene.field_grid.value(i);
    for (std::size_t j = 0; j < nf; ++j) s.freq_axis[j] = scene.freq_grid.value(j);
    s.power_db.resize(nb * nf);

    HybridModel box;
    if (scene.box_mode) {
        box = scene.hybrid;
        box.resonator = scene.box_mode->res;
        box.g_eff = scene.box_mode->g_eff;
        box.B_FMR = resonance_field(box.ensemble, box.resonator.omega_r);
    }

    const double floor_lin =
        scene.noise.floor_db ? std::pow(10.0, *scene.noise.floor_db / 10.0) : 0.0;
    const double sigma = scene.noise.amplitude_sigma;

    for (std::size_t i = 0; i < nb; ++i) {
        const double field = s.field_axis[i];
        for (std::size_t j = 0; j < nf; ++j) {
            const double omega = units::hz_to_rad(s.freq_axis[j]);
            std::complex<double> amp = s21(scene.hybrid, field, omega);
            for (const auto& b : scene.bystanders)
                amp += s21_bare(omega, b.omega_at(field), b.res.kappa_c, b.res.kappa());
            if (scene.box_mode) amp += s21(box, field, omega);

            double a = std::abs(amp);
            if (sigma > 0.0) a *= 1.0 + sigma * gaussian_noise(scene.noise.seed, i, j);
            const double power = a * a + floor_lin;
            s.at(i, j) = 10.0 * std::log10(std::max(power, 1e-300));
        }
    }

    s.meta["source"] = "synthetic";
    s.meta["generator"] = "magnon-cavity-lab";
    s.meta["generator_version"] = MCL_VERSION_STRING;
    s.meta["seed"] = std::to_string(scene.noise.seed);
    s.meta["config"] = scene_to_json(scene);
    return s;
}

}  // namespace mcl
