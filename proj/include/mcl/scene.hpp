#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mcl/physics.hpp"
#include "mcl/spectrum.hpp"

namespace mcl {

struct GridSpec {
    double start = 0.0;
    double stop = 0.0;
    double step = 0.0;

    std::size_t points() const;
    double value(std::size_t i) const { return start + static_cast<double>(i) * step; }
};

// Uncoupled on-chip resonator sharing the feedline, with an empirical
// in-plane field dependence omega(B) = omega_r * (1 + c1*B_mT + c2*B_mT^2).
struct BystanderConfig {
    ResonatorParams res;
    double shift_per_mt = 0.0;
    double shift_per_mt2 = 0.0;

    double omega_at(double field_tesla) const;
};

// Broad parasitic box mode, weakly coupled to the same FMR line.
struct BoxModeConfig {
    ResonatorParams res;
    double g_eff = 0.0;  // rad/s
};

struct NoiseConfig {
    std::uint64_t seed = 0;
    double amplitude_sigma = 0.0;             // relative, on linear |S21|
    std::optional<double> floor_db;           // additive power floor
};

struct SceneConfig {
    HybridModel hybrid;
    std::vector<BystanderConfig> bystanders;
    std::optional<BoxModeConfig> box_mode;
    GridSpec field_grid;  // T
    GridSpec freq_grid;   // Hz
    NoiseConfig noise;
};

inline constexpr std::size_t max_grid_points = 8000000;

// Throws std::invalid_argument on a malformed scene; appends non-fatal
// warnings (e.g. a bystander too close to the hybrid resonator).
void validate(const SceneConfig& scene, std::vector<std::string>* warnings = nullptr);

// JSON scene file; frequencies in GHz, fields in mT, rates in MHz.
// Throws std::invalid_argument naming the offending key.
SceneConfig load_scene(const std::filesystem::path& path);
SceneConfig parse_scene(const std::string& json_text);
std::string scene_to_json(const SceneConfig& scene);

// Standard normal draw keyed by (seed, i, j); counter-based so that rows can
// be generated in parallel without changing the stream.
double gaussian_noise(std::uint64_t seed, std::uint64_t i, std::uint64_t j);

// Complex-amplitude superposition of the hybrid, bystander and box-mode
// transmissions on the configured grid, with seeded multiplicative amplitude
// noise and optional additive power floor, in dB.
Spectrum2D synthesize(const SceneConfig& scene);

}  // namespace mcl
