// SPDX-License-Identifier: Apache-2.0

#include "patchfdtd/constants.hpp"
#include "patchfdtd/error.hpp"
#include "patchfdtd/yee_grid.hpp"

#include <doctest.h>

#include <cmath>
#include <initializer_list>
#include <limits>

using namespace patchfdtd;
using constants::c0;
using constants::eps0;

namespace
{

AutoGridOptions standard_options()
{
  AutoGridOptions o;
  o.cells_per_wavelength = 30.0;
  o.min_feature_cells = 2.0;
  return o;
}

bool on_node(double x, double origin, double d)
{
  const double n = (x - origin) / d;
  return std::abs(n - std::round(n)) < 1e-6;
}

}  // namespace

TEST_CASE("CFL time step")
{
  GridSpec s;
  s.dx = s.dy = s.dz = 1e-3;
  CHECK(cfl_timestep(s, 1.0) == doctest::Approx(1e-3 / (c0 * std::sqrt(3.0))).epsilon(1e-14));
  CHECK(cfl_timestep(s, 0.5) == doctest::Approx(0.5 * cfl_timestep(s, 1.0)).epsilon(1e-14));

  s.dy = s.dz = std::numeric_limits<double>::infinity();
  CHECK(cfl_timestep(s, 1.0) == doctest::Approx(1e-3 / c0).epsilon(1e-14));

  s.dx = 1e-3;
  s.dy = 2e-3;
  s.dz = 3e-3;
  const double expect = 0.9 / (c0 * std::sqrt(1e6 + 0.25e6 + 1e6 / 9.0));
  CHECK(cfl_timestep(s, 0.9) == doctest::Approx(expect).epsilon(1e-14));

  try
  {
    cfl_timestep(s, 1.2);
    FAIL("expected an error");
  }
  catch (const ValidationError &e)
  {
    CHECK(e.field() == "courant");
  }
}

TEST_CASE("node indexing is x fastest")
{
  GridSpec s;
  s.nx = 4;
  s.ny = 3;
  s.nz = 2;
  CHECK(s.node_count() == 5u * 4u * 3u);
  CHECK(s.cell_count() == 24u);
  CHECK(s.index(1, 0, 0) == 1u);
  CHECK(s.index(0, 1, 0) == 5u);
  CHECK(s.index(0, 0, 1) == 20u);
  CHECK(s.index(4, 3, 2) == s.node_count() - 1);
}

TEST_CASE("auto grid spacing follows the finer of wavelength and feature limits")
{
  const AntennaDesign su = build_simple_u_patch();
  const AntennaDesign mu = build_modified_u_patch();
  const AutoGridOptions o = standard_options();

  const double lambda_min = c0 / (7e9 * std::sqrt(2.2));
  const GridPlan a = auto_grid(su, o);
  CHECK(a.spec.dx == doctest::Approx(std::min(lambda_min / 30.0, 0.7e-3 / 2.0)));
  CHECK(a.spec.dx == doctest::Approx(0.35e-3));
  CHECK(a.spec.dy == a.spec.dx);

  const GridPlan b = auto_grid(mu, o);
  CHECK(b.spec.dx == doctest::Approx(0.25e-3));

  // the vertical step depends only on the wave step
  CHECK(a.spec.dz == doctest::Approx(b.spec.dz));
  const int n_sub = a.k_patch - a.k_ground;
  CHECK(n_sub * a.spec.dz == doctest::Approx(su.stack.substrate_height));
  CHECK(n_sub >= o.min_substrate_cells);
  CHECK(a.spec.dz <= lambda_min / 30.0 + 1e-15);

  AutoGridOptions fixed = o;
  fixed.cell_size = 0.5e-3;
  CHECK(auto_grid(su, fixed).spec.dx == 0.5e-3);
}

TEST_CASE("auto grid layout: CPML, Huygens box and alignment")
{
  const AntennaDesign d = build_simple_u_patch();
  AutoGridOptions o = standard_options();
  o.cells_per_wavelength = 20.0;
  o.min_feature_cells = 1.0;
  const GridPlan p = auto_grid(d, o);
  const GridSpec &s = p.spec;

  const Box2D box = d.layout.bounding_box();
  CHECK(on_node(box.x0, s.origin[0], s.dx));
  CHECK(on_node(box.y0, s.origin[1], s.dy));
  CHECK(on_node(0.0, s.origin[2] + p.k_ground * s.dz, s.dz));
  CHECK(s.origin[2] + p.k_ground * s.dz == doctest::Approx(0.0).epsilon(1e-12));

  // Huygens box strictly inside the CPML interface and around the whole board
  const auto &b = d.stack.board;
  CHECK(p.huygens.lo[0] > p.cpml_cells);
  CHECK(p.huygens.hi[2] < s.nz - p.cpml_cells);
  CHECK(s.origin[0] + p.huygens.lo[0] * s.dx < b.x0);
  CHECK(s.origin[0] + p.huygens.hi[0] * s.dx > b.x0 + b.width);
  CHECK(s.origin[1] + p.huygens.lo[1] * s.dy < b.y0);
  CHECK(s.origin[1] + p.huygens.hi[1] * s.dy > b.y0 + b.depth);
  CHECK(p.huygens.lo[2] < p.k_ground);
  CHECK(p.huygens.hi[2] > p.k_patch);
  CHECK(s.dt == doctest::Approx(cfl_timestep(s, o.courant)));
}

TEST_CASE("auto grid rejects bad options and oversized grids")
{
  const AntennaDesign d = build_simple_u_patch();
  AutoGridOptions o = standard_options();
  o.cells_per_wavelength = 5.0;
  try
  {
    auto_grid(d, o);
    FAIL("expected an error");
  }
  catch (const ValidationError &e)
  {
    CHECK(e.field() == "simulation.cells_per_wavelength");
  }

  o = standard_options();
  o.cell_size = -1.0;
  try
  {
    auto_grid(d, o);
    FAIL("expected an error");
  }
  catch (const ValidationError &e)
  {
    CHECK(e.field() == "simulation.cell_size");
  }

  o = standard_options();
  o.cell_budget = 1e5;
  try
  {
    auto_grid(d, o);
    FAIL("expected an error");
  }
  catch (const Error &e)
  {
    CHECK(e.kind() == ErrorKind::Budget);
    CHECK(std::string(e.what()).find("largest dimension") != std::string::npos);
  }
}

TEST_CASE("vacuum coefficients")
{
  GridSpec s;
  s.nx = s.ny = s.nz = 4;
  s.dx = s.dy = s.dz = 1e-3;
  s.dt = cfl_timestep(s, 0.99);
  const MaterialGrid m = vacuum_materials(s);
  CHECK(m.table.size() == 2u);
  CHECK(m.table[0].ca == 1.0);
  CHECK(m.table[0].cb == doctest::Approx(s.dt / eps0).epsilon(1e-15));
  CHECK(m.table[1].pec);
  CHECK(m.table[1].ca == 0.0);
  CHECK(m.table[1].cb == 0.0);
  for (int c = 0; c < 3; ++c)
    CHECK(m.id[c].size() == s.node_count());
}

TEST_CASE("intern deduplicates coefficient entries")
{
  GridSpec s;
  s.nx = s.ny = s.nz = 1;
  s.dt = 1e-12;
  MaterialGrid m = vacuum_materials(s);
  const EdgeCoefficients c{0.9, 1e3, 2 * eps0, 0.1, false};
  const auto a = m.intern(c);
  const auto b = m.intern(c);
  CHECK(a == b);
  CHECK(a == 2);
  CHECK(m.intern(m.table[0]) == 0);
}

TEST_CASE("substrate, interface averaging and PEC sheets")
{
  const AntennaDesign d = build_simple_u_patch();
  AutoGridOptions o = standard_options();
  o.cells_per_wavelength = 20.0;
  o.min_feature_cells = 1.0;
  const GridPlan p = auto_grid(d, o);
  const MaterialGrid m = assign_materials(d, p);
  const GridSpec &s = m.spec;
  const double er = d.stack.substrate.rel_permittivity;
  const double sigma = equivalent_conductivity(er, d.stack.substrate.loss_tangent, d.analysis_band.center());
  CHECK(m.substrate_sigma == doctest::Approx(2.0 * constants::pi * 4.25e9 * eps0 * er * 0.0009));
  CHECK(sigma == m.substrate_sigma);

  // a board point away from the patch, inside the substrate
  const auto &b = d.stack.board;
  const int i = static_cast<int>(std::floor((b.x0 + 5e-3 - s.origin[0]) / s.dx));
  const int j = static_cast<int>(std::floor((b.y0 + 5e-3 - s.origin[1]) / s.dy));
  const int kmid = (p.k_ground + p.k_patch) / 2;
  const auto &bulk = m.coeff(0, s.index(i, j, kmid));
  CHECK(bulk.eps == doctest::Approx(eps0 * er));
  CHECK(bulk.sigma == doctest::Approx(sigma));
  CHECK(bulk.ca < 1.0);
  const double loss = bulk.sigma * s.dt / (2.0 * bulk.eps);
  CHECK(bulk.ca == doctest::Approx((1.0 - loss) / (1.0 + loss)));

  // tangential edge on the top face of the slab: half substrate, half air
  const auto &top = m.coeff(0, s.index(i, j, p.k_patch));
  CHECK(top.eps == doctest::Approx(eps0 * 0.5 * (1.0 + er)));
  CHECK(top.sigma == doctest::Approx(0.5 * sigma));
  // vertical edge in the slab
  CHECK(m.coeff(2, s.index(i, j, kmid)).eps == doctest::Approx(eps0 * er));
  // well above the board
  CHECK(m.coeff(0, s.index(i, j, p.k_patch + 3)) == m.table[0]);

  // ground plane under the board, patch on the patch plane
  CHECK(m.is_pec(0, s.index(i, j, p.k_ground)));
  CHECK(m.is_pec(1, s.index(i, j, p.k_ground)));
  CHECK_FALSE(m.is_pec(0, s.index(i, j, p.k_patch)));
  const int ip = static_cast<int>(std::floor((1e-3 - s.origin[0]) / s.dx));
  const int jp = static_cast<int>(std::floor((1e-3 - s.origin[1]) / s.dy));
  CHECK(m.is_pec(0, s.index(ip, jp, p.k_patch)));
  CHECK_FALSE(m.is_pec(2, s.index(ip, jp, p.k_patch)));
  CHECK(m.top_mask.count() > 0u);
  CHECK(m.ground_mask.count() > m.top_mask.count());
}

TEST_CASE("assign_materials coverage errors")
{
  const AntennaDesign d = build_simple_u_patch();
  GridSpec s;
  s.nx = s.ny = 10;
  s.nz = 10;
  s.dx = s.dy = s.dz = 1e-3;
  s.dt = cfl_timestep(s, 0.99);
  try
  {
    assign_materials(d, s, 2, 5);
    FAIL("expected an error");
  }
  catch (const Error &e)
  {
    CHECK(e.kind() == ErrorKind::Coverage);
  }
  try
  {
    assign_materials(d, s, 5, 5, true);
    FAIL("expected an error");
  }
  catch (const Error &e)
  {
    CHECK(e.kind() == ErrorKind::Coverage);
  }
  CHECK_NOTHROW(assign_materials(d, s, 2, 5, true));
}

TEST_CASE("field state starts at zero and detects non-finite values")
{
  GridSpec s;
  s.nx = s.ny = s.nz = 3;
  BasicFieldState<float> f(s);
  CHECK(f.all_finite());
  CHECK(f.e[2].size() == s.node_count());
  f.h[1][5] = std::numeric_limits<float>::quiet_NaN();
  CHECK_FALSE(f.all_finite());
  f.clear();
  CHECK(f.all_finite());
  CHECK(f.step == 0);
}
