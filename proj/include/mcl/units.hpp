#pragma once

#include <numbers>

// Boundary unit conversions. Internally every rate and frequency is an
// angular rate in rad/s and every field is in tesla; files, configs and
// reports use GHz / MHz / Hz / mT.
namespace mcl::units {

inline constexpr double two_pi = 2.0 * std::numbers::pi;

constexpr double hz_to_rad(double f) { return two_pi * f; }
constexpr double rad_to_hz(double w) { return w / two_pi; }

constexpr double mhz_to_rad(double f) { return two_pi * f * 1e6; }
constexpr double rad_to_mhz(double w) { return w / (two_pi * 1e6); }

constexpr double ghz_to_rad(double f) { return two_pi * f * 1e9; }
constexpr double rad_to_ghz(double w) { return w / (two_pi * 1e9); }

constexpr double mt_to_tesla(double b) { return b / 1e3; }
constexpr double tesla_to_mt(double b) { return b * 1e3; }

}  // namespace mcl::units
