#pragma once

#include <numbers>

namespace mcl {

// CODATA-2018 SI constants. h and k_B are exact by definition of the SI;
// hbar is derived from h so that h == 2*pi*hbar at stored precision.
struct PhysicalConstants {
    double h = 6.62607015e-34;                         // Planck constant, J*s
    double hbar = 6.62607015e-34 / (2.0 * std::numbers::pi);  // J*s
    double mu_B = 9.2740100783e-24;                    // Bohr magneton, J/T
    double mu_0 = 1.25663706212e-6;                    // vacuum permeability, T*m/A
    double k_B = 1.380649e-23;                         // Boltzmann constant, J/K
};

inline constexpr PhysicalConstants codata2018{};

// Throws std::invalid_argument if any value is non-positive or h != 2*pi*hbar.
void validate(const PhysicalConstants& c);

}  // namespace mcl
