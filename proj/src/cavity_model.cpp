// SPDX-License-Identifier: Apache-2.0

#include "patchfdtd/cavity_model.hpp"

#include "patchfdtd/constants.hpp"

#include <cmath>

namespace patchfdtd::cavity
{

using constants::c0;
using constants::pi;

double effective_permittivity(const PatchModel &m)
{
  return 0.5 * (m.eps_r + 1.0) + 0.5 * (m.eps_r - 1.0) / std::sqrt(1.0 + 12.0 * m.height / m.width);
}

double length_extension(const PatchModel &m, double eps_eff)
{
  const double wh = m.width / m.height;
  return 0.412 * m.height * (eps_eff + 0.3) * (wh + 0.264) / ((eps_eff - 0.258) * (wh + 0.8));
}

double resonant_frequency(const PatchModel &m)
{
  const double eps_eff = effective_permittivity(m);
  const double dl = length_extension(m, eps_eff);
  return c0 / (2.0 * (m.length + 2.0 * dl) * std::sqrt(eps_eff));
}

PatchDimensions design_patch(double f_target, double eps_r, double height)
{
  const double w = c0 / (2.0 * f_target) * std::sqrt(2.0 / (eps_r + 1.0));
  PatchModel m{w, 0.0, height, eps_r};
  const double eps_eff = effective_permittivity(m);
  const double l = c0 / (2.0 * f_target * std::sqrt(eps_eff)) - 2.0 * length_extension(m, eps_eff);
  return {w, l};
}

double microstrip_effective_permittivity(double width, double height, double eps_r)
{
  const double wh = width / height;
  double f = 1.0 / std::sqrt(1.0 + 12.0 / wh);
  if (wh < 1.0)
    f += 0.04 * (1.0 - wh) * (1.0 - wh);
  return 0.5 * (eps_r + 1.0) + 0.5 * (eps_r - 1.0) * f;
}

double microstrip_impedance(double width, double height, double eps_r)
{
  const double wh = width / height;
  const double ee = microstrip_effective_permittivity(width, height, eps_r);
  if (wh <= 1.0)
    return 60.0 / std::sqrt(ee) * std::log(8.0 / wh + 0.25 * wh);
  return 120.0 * pi / (std::sqrt(ee) * (wh + 1.393 + 0.667 * std::log(wh + 1.444)));
}

double microstrip_width(double z0, double height, double eps_r)
{
  const double a =
    z0 / 60.0 * std::sqrt(0.5 * (eps_r + 1.0)) + (eps_r - 1.0) / (eps_r + 1.0) * (0.23 + 0.11 / eps_r);
  double wh = 8.0 * std::exp(a) / (std::exp(2.0 * a) - 2.0);
  if (wh > 2.0)
  {
    const double b = 377.0 * pi / (2.0 * z0 * std::sqrt(eps_r));
    wh = 2.0 / pi *
         (b - 1.0 - std::log(2.0 * b - 1.0) +
          (eps_r - 1.0) / (2.0 * eps_r) * (std::log(b - 1.0) + 0.39 - 0.61 / eps_r));
  }
  return wh * height;
}

}  // namespace patchfdtd::cavity
