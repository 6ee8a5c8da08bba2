// SPDX-License-Identifier: Apache-2.0

#ifndef PATCHFDTD_CONSTANTS_HPP
#define PATCHFDTD_CONSTANTS_HPP

#include <numbers>

namespace patchfdtd::constants
{

inline constexpr double pi = std::numbers::pi;
inline constexpr double c0 = 299792458.0;          // m/s
inline constexpr double mu0 = 4.0e-7 * pi;          // H/m
inline constexpr double eps0 = 1.0 / (mu0 * c0 * c0);  // F/m
inline constexpr double eta0 = mu0 * c0;            // ohm

}  // namespace patchfdtd::constants

#endif  // PATCHFDTD_CONSTANTS_HPP
