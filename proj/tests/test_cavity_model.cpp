// SPDX-License-Identifier: Apache-2.0

#include "patchfdtd/cavity_model.hpp"

#include <doctest.h>

#include <cmath>
#include <initializer_list>

using namespace patchfdtd::cavity;

// Textbook design example: 10 GHz on eps_r 2.2, h = 1.588 mm gives
// W = 1.186 cm, eps_eff = 1.972, dL = 0.081 cm, L = 0.906 cm.
TEST_CASE("design_patch reproduces the textbook example")
{
  const PatchDimensions d = design_patch(10e9, 2.2, 1.588e-3);
  CHECK(d.width == doctest::Approx(1.186e-2).epsilon(2e-3));
  CHECK(d.length == doctest::Approx(0.906e-2).epsilon(3e-3));

  const PatchModel m{d.width, d.length, 1.588e-3, 2.2};
  const double ee = effective_permittivity(m);
  CHECK(ee == doctest::Approx(1.972).epsilon(1e-3));
  CHECK(length_extension(m, ee) == doctest::Approx(0.081e-2).epsilon(5e-3));
}

TEST_CASE("synthesis and analysis are inverse")
{
  for (double f : {1e9, 2.5e9, 4.25e9, 10e9})
    for (double er : {1.0, 2.2, 4.4, 10.2})
    {
      const PatchDimensions d = design_patch(f, er, 1.5e-3);
      const PatchModel m{d.width, d.length, 1.5e-3, er};
      CHECK(resonant_frequency(m) == doctest::Approx(f).epsilon(1e-12));
    }
}

TEST_CASE("validation patch sits at 2.5 GHz with W about 47.4 mm")
{
  const PatchDimensions d = design_patch(2.5e9, 2.2, 2.4e-3);
  CHECK(d.width == doctest::Approx(47.40e-3).epsilon(1e-3));
  CHECK(d.length == doctest::Approx(39.12e-3).epsilon(1e-3));
  CHECK(PatchModel{d.width, d.length, 2.4e-3, 2.2}.in_validity_range());
}

TEST_CASE("effective permittivity lies between 1 and eps_r and grows with W/h")
{
  double previous = 0.0;
  for (double w : {0.5e-3, 1e-3, 5e-3, 20e-3, 100e-3})
  {
    const double ee = effective_permittivity({w, 10e-3, 1e-3, 4.0});
    CHECK(ee > 1.0);
    CHECK(ee < 4.0);
    CHECK(ee > previous);
    previous = ee;
  }
  CHECK(effective_permittivity({10e-3, 10e-3, 1e-3, 1.0}) == doctest::Approx(1.0));
}

TEST_CASE("longer patches resonate lower")
{
  const PatchModel a{47e-3, 38e-3, 2.4e-3, 2.2};
  const PatchModel b{47e-3, 40e-3, 2.4e-3, 2.2};
  CHECK(resonant_frequency(a) > resonant_frequency(b));
}

// Textbook microstrip example: 50 ohm on eps_r 2.2, d = 1.27 mm needs
// W = 3.081 d = 3.91 mm with eps_eff = 1.87.
TEST_CASE("microstrip synthesis matches the textbook example")
{
  const double w = microstrip_width(50.0, 1.27e-3, 2.2);
  CHECK(w == doctest::Approx(3.91e-3).epsilon(5e-3));
  CHECK(microstrip_effective_permittivity(w, 1.27e-3, 2.2) == doctest::Approx(1.87).epsilon(5e-3));
}

TEST_CASE("microstrip impedance of the synthesized width returns the target")
{
  for (double z0 : {25.0, 50.0, 75.0, 100.0, 150.0})
    for (double er : {2.2, 4.4, 10.2})
    {
      const double w = microstrip_width(z0, 1.0e-3, er);
      CHECK(microstrip_impedance(w, 1.0e-3, er) == doctest::Approx(z0).epsilon(0.02));
    }
}

TEST_CASE("microstrip impedance decreases with width")
{
  double previous = 1e9;
  for (double w : {0.2e-3, 0.5e-3, 1e-3, 2e-3, 5e-3, 10e-3})
  {
    const double z = microstrip_impedance(w, 1e-3, 2.2);
    CHECK(z < previous);
    previous = z;
  }
}
