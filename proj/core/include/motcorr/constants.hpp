#pragma once

namespace motcorr::constants {

inline constexpr double pi = 3.14159265358979323846;
inline constexpr double hbar = 1.054571817e-34;     // J s
inline constexpr double k_boltzmann = 1.380649e-23; // J/K
inline constexpr double bohr_magneton = 9.2740100783e-24; // J/T

} // namespace motcorr::constants
