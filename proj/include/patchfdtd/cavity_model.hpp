// SPDX-License-Identifier: Apache-2.0

#ifndef PATCHFDTD_CAVITY_MODEL_HPP
#define PATCHFDTD_CAVITY_MODEL_HPP

namespace patchfdtd::cavity
{

// Transmission-line / cavity model of a rectangular patch on a grounded
// substrate. W is the non-resonant width, L the resonant length.
struct PatchModel
{
  double width = 0.0;   // W (m)
  double length = 0.0;  // L (m)
  double height = 0.0;  // h (m)
  double eps_r = 1.0;

  // The closed-form expressions below assume W/h >= 1.
  bool in_validity_range() const { return width >= height; }
};

// Hammerstad quasi-static effective permittivity:
//   eps_eff = (eps_r + 1)/2 + (eps_r - 1)/2 * (1 + 12 h/W)^(-1/2)
double effective_permittivity(const PatchModel &m);

// Open-end fringing extension of each radiating edge:
//   dL = 0.412 h (eps_eff + 0.3)(W/h + 0.264) / ((eps_eff - 0.258)(W/h + 0.8))
double length_extension(const PatchModel &m, double eps_eff);

// Dominant TM10 resonance: f10 = c / (2 (L + 2 dL) sqrt(eps_eff)).
double resonant_frequency(const PatchModel &m);

struct PatchDimensions
{
  double width = 0.0;
  double length = 0.0;
};

// Synthesis: W = c/(2f) sqrt(2/(eps_r + 1)),  L = c/(2 f sqrt(eps_eff(W))) - 2 dL.
PatchDimensions design_patch(double f_target, double eps_r, double height);

// Characteristic impedance of a microstrip line of width w (Hammerstad's
// closed form, as used for feed-line sizing).
double microstrip_impedance(double width, double height, double eps_r);

// Line width for a target impedance (Wheeler/Hammerstad synthesis).
double microstrip_width(double z0, double height, double eps_r);

// eps_eff of a microstrip line; same expression as the patch, valid for any W/h
// (with the narrow-strip correction below W/h = 1).
double microstrip_effective_permittivity(double width, double height, double eps_r);

}  // namespace patchfdtd::cavity

#endif  // PATCHFDTD_CAVITY_MODEL_HPP
