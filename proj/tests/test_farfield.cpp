// SPDX-License-Identifier: Apache-2.0

#include "patchfdtd/constants.hpp"
#include "patchfdtd/error.hpp"
#include "patchfdtd/farfield.hpp"
#include "patchfdtd/fdtd_engine.hpp"

#include <doctest.h>

#include <cmath>
#include <initializer_list>
#include <vector>

using namespace patchfdtd;
using constants::pi;

namespace
{

std::vector<double> sampled(const DirectionGrid &g, double (*u)(double, double))
{
  std::vector<double> out(static_cast<std::size_t>(g.n_theta * g.n_phi));
  for (int ip = 0; ip < g.n_phi; ++ip)
    for (int it = 0; it < g.n_theta; ++it)
      out[static_cast<std::size_t>(it + g.n_theta * ip)] = u(g.theta(it), g.phi(ip));
  return out;
}

double dipole_u(double th, double) { return std::sin(th) * std::sin(th); }
double iso_u(double, double) { return 1.0; }
double cos_u(double th, double) { return th < 0.5 * pi ? std::cos(th) : 0.0; }

GridSpec cube(int n, double d)
{
  GridSpec s;
  s.nx = s.ny = s.nz = n;
  s.dx = s.dy = s.dz = d;
  s.dt = cfl_timestep(s, 0.99);
  return s;
}

}  // namespace

TEST_CASE("direction grid spacing")
{
  const DirectionGrid g = DirectionGrid::with_step_deg(2.0);
  CHECK(g.n_theta == 91);
  CHECK(g.n_phi == 180);
  CHECK(g.dtheta() == doctest::Approx(pi / 90.0));
  CHECK(g.theta(90) == doctest::Approx(pi));
  CHECK(g.phi(45) == doctest::Approx(0.5 * pi));
}

TEST_CASE("directivity of closed-form patterns")
{
  const DirectionGrid g = DirectionGrid::with_step_deg(1.0);
  const FarFieldPattern iso = pattern_from_intensity(1e9, g, sampled(g, iso_u));
  CHECK(iso.radiated_power == doctest::Approx(4.0 * pi).epsilon(1e-4));
  CHECK(std::abs(iso.max_gain_dbi) < 1e-3);

  const FarFieldPattern dip = pattern_from_intensity(1e9, g, sampled(g, dipole_u));
  CHECK(dip.radiated_power == doctest::Approx(8.0 * pi / 3.0).epsilon(1e-4));
  CHECK(dip.max_gain_dbi == doctest::Approx(10.0 * std::log10(1.5)).epsilon(1e-4));
  CHECK(dip.max_theta == doctest::Approx(0.5 * pi));

  // cos(theta) on the upper hemisphere: D = 4
  const FarFieldPattern hemi = pattern_from_intensity(1e9, g, sampled(g, cos_u));
  CHECK(hemi.max_gain_dbi == doctest::Approx(10.0 * std::log10(4.0)).epsilon(1e-3));
  CHECK(hemi.max_theta == 0.0);
}

TEST_CASE("gain normalizes by the accepted power")
{
  const DirectionGrid g = DirectionGrid::with_step_deg(2.0);
  const FarFieldPattern dip = pattern_from_intensity(1e9, g, sampled(g, dipole_u));
  const FarFieldPattern lossless = gain(dip, dip.radiated_power);
  CHECK(lossless.max_gain_dbi == doctest::Approx(dip.max_gain_dbi));
  const FarFieldPattern half = gain(dip, 2.0 * dip.radiated_power);
  CHECK(half.max_gain_dbi == doctest::Approx(dip.max_gain_dbi - 10.0 * std::log10(2.0)));
  CHECK(half.accepted_power == doctest::Approx(2.0 * dip.radiated_power));
  try
  {
    gain(dip, 0.0);
    FAIL("expected an error");
  }
  catch (const Error &e)
  {
    CHECK(e.kind() == ErrorKind::PowerAccounting);
  }
}

TEST_CASE("pattern cuts run from -180 to 180 degrees")
{
  const DirectionGrid g = DirectionGrid::with_step_deg(2.0);
  const FarFieldPattern dip = pattern_from_intensity(1e9, g, sampled(g, dipole_u));
  const PatternCut e = pattern_cut(dip, CutPlane::E);
  const PatternCut h = pattern_cut(dip, CutPlane::H);
  REQUIRE(e.theta_deg.size() == 181u);
  CHECK(e.theta_deg.front() == doctest::Approx(-180.0));
  CHECK(e.theta_deg.back() == doctest::Approx(180.0));
  for (std::size_t k = 0; k < e.gain_dbi.size(); ++k)
  {
    CHECK(e.gain_dbi[k] == doctest::Approx(h.gain_dbi[k]));
    CHECK(e.gain_dbi[k] == doctest::Approx(e.gain_dbi[e.gain_dbi.size() - 1 - k]));
  }
  CHECK_THROWS_AS(pattern_cut_at_phi(dip, 0.3), Error);
}

TEST_CASE("frequency lookup on a surface")
{
  const GridSpec s = cube(10, 1e-3);
  const HuygensSurface surf = make_surface(s, {{2, 2, 2}, {8, 8, 8}}, {1e9, 2e9});
  CHECK(frequency_index(surf, 2e9) == 1u);
  CHECK(frequency_index(surf, 2e9 * (1 + 1e-12)) == 1u);
  try
  {
    frequency_index(surf, 3e9);
    FAIL("expected an error");
  }
  catch (const Error &e)
  {
    CHECK(e.kind() == ErrorKind::MissingFrequency);
  }
}

TEST_CASE("surface geometry: six faces tile the box")
{
  const GridSpec s = cube(10, 1e-3);
  const HuygensSurface surf = make_surface(s, {{2, 3, 1}, {8, 7, 9}}, {1e9});
  double area = 0.0;
  for (const auto &f : surf.faces)
  {
    area += f.nu * f.nv * surf.patch_area(f);
    CHECK(f.data.size() == static_cast<std::size_t>(f.nu * f.nv) * 4u);
  }
  const double a = 6e-3, b = 4e-3, c = 8e-3;
  CHECK(area == doctest::Approx(2.0 * (a * b + b * c + a * c)));
  // the +x face sits on x = 8 mm
  const auto &px = surf.faces[1];
  CHECK(px.side == 1);
  CHECK(surf.patch_center(px, 0, 0)[0] == doctest::Approx(8e-3));
}

TEST_CASE("a uniform field has zero net flux through the box")
{
  const GridSpec s = cube(10, 1e-3);
  HuygensSurface surf = make_surface(s, {{2, 2, 2}, {8, 8, 8}}, {1e9});
  // E = x_hat, H = y_hat everywhere: Poynting vector along z, entering at -z, leaving at +z.
  for (auto &f : surf.faces)
    for (int q = 0; q < f.nv; ++q)
      for (int p = 0; p < f.nu; ++p)
      {
        const std::array<double, 3> e{1.0, 0.0, 0.0}, h{0.0, 1.0, 0.0};
        f.at(p, q, 0, 0, 1) = e[f.u];
        f.at(p, q, 0, 1, 1) = e[f.v];
        f.at(p, q, 0, 2, 1) = h[f.u];
        f.at(p, q, 0, 3, 1) = h[f.v];
      }
  CHECK(std::abs(surface_power(surf, 1e9)) < 1e-18);
  // only the +z face: flux = 1/2 * area
  for (int k = 0; k < 4; ++k)
  {
    auto &f = surf.faces[static_cast<std::size_t>(k)];
    std::fill(f.data.begin(), f.data.end(), cplx(0.0, 0.0));
  }
  std::fill(surf.faces[4].data.begin(), surf.faces[4].data.end(), cplx(0.0, 0.0));
  CHECK(surface_power(surf, 1e9) == doctest::Approx(0.5 * 36e-6));
}

// End to end: an FDTD soft dipole in vacuum, recorded on a Huygens box and
// transformed, must look like a short dipole.
TEST_CASE("FDTD point dipole through the far-field transformation")
{
  const GridSpec s = cube(40, 1e-3);
  SimulationF sim(vacuum_materials(s), Boundaries{}, CpmlParams{}, 1);
  SourceWaveform w;
  w.f0 = 5e9;
  w.bandwidth = 8e9;
  sim.add_soft_source(2, 20, 20, 19, w);
  const double f = 5e9;
  sim.set_surface({{14, 14, 14}, {26, 26, 26}}, {f}, 1);
  for (int n = 0; n < 1400; ++n)
    sim.step();
  HuygensSurface surf = sim.take_surface();
  NtffOptions o;
  o.grid = DirectionGrid::with_step_deg(5.0);
  const FarFieldPattern p = ntff(surf, f, o);
  CHECK(p.max_gain_dbi == doctest::Approx(1.7609).epsilon(0.1));
  CHECK(p.radiated_power > 0.0);
  CHECK(p.radiated_power == doctest::Approx(surface_power(surf, f)).epsilon(0.05));
  double umax = 0.0;
  for (double u : p.intensity)
    umax = std::max(umax, u);
  double acc = 0.0;
  for (int ip = 0; ip < o.grid.n_phi; ++ip)
    for (int it = 0; it < o.grid.n_theta; ++it)
    {
      const double st = std::sin(o.grid.theta(it));
      const double e = p.intensity_at(it, ip) / umax - st * st;
      acc += e * e;
    }
  CHECK(std::sqrt(acc / (o.grid.n_phi * o.grid.n_theta)) < 0.02);
}
