// SPDX-License-Identifier: Apache-2.0

#ifndef PATCHFDTD_YEE_GRID_HPP
#define PATCHFDTD_YEE_GRID_HPP

#include "patchfdtd/geometry.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace patchfdtd
{

// Uniform Yee grid. Node (i, j, k) sits at origin + (i dx, j dy, k dz) for
// 0 <= i <= nx etc. Components live at
//   Ex(i+1/2, j, k)  Ey(i, j+1/2, k)  Ez(i, j, k+1/2)
//   Hx(i, j+1/2, k+1/2)  Hy(i+1/2, j, k+1/2)  Hz(i+1/2, j+1/2, k)
// and every component array is stored with the node shape
// (nx+1) x (ny+1) x (nz+1), x fastest, indexed by the integer parts.
struct GridSpec
{
  double dx = 0.0, dy = 0.0, dz = 0.0;
  int nx = 0, ny = 0, nz = 0;
  double dt = 0.0;
  std::array<double, 3> origin{0.0, 0.0, 0.0};

  std::size_t node_count() const
  {
    return static_cast<std::size_t>(nx + 1) * static_cast<std::size_t>(ny + 1) * static_cast<std::size_t>(nz + 1);
  }
  std::size_t cell_count() const
  {
    return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny) * static_cast<std::size_t>(nz);
  }
  std::size_t stride_y() const { return static_cast<std::size_t>(nx + 1); }
  std::size_t stride_z() const { return static_cast<std::size_t>(nx + 1) * static_cast<std::size_t>(ny + 1); }
  std::size_t index(int i, int j, int k) const
  {
    return static_cast<std::size_t>(i) + stride_y() * static_cast<std::size_t>(j) +
           stride_z() * static_cast<std::size_t>(k);
  }
};

// dt = courant / (c sqrt(1/dx^2 + 1/dy^2 + 1/dz^2)); infinite spacings drop out.
double cfl_timestep(const GridSpec &spec, double courant);

struct IndexBox
{
  std::array<int, 3> lo{0, 0, 0};
  std::array<int, 3> hi{0, 0, 0};  // inclusive node indices

  bool operator==(const IndexBox &) const = default;
};

struct AutoGridOptions
{
  double cells_per_wavelength = 20.0;
  double f_max = 7.0e9;
  double min_feature_cells = 2.0;
  double courant = 0.99;
  int cpml_cells = 10;
  int huygens_gap = 8;        // Huygens box distance inside the CPML interface
  int inplane_air_cells = 2;  // air between the board edge and the Huygens box
  int min_substrate_cells = 4;
  double cell_budget = 25.0e6;
  double cell_size = 0.0;  // > 0 fixes the in-plane spacing

  bool operator==(const AutoGridOptions &) const = default;
};

// Grid laid out around a design: CPML on all six faces, the ground plane on
// node plane k_ground and the patch on k_patch.
struct GridPlan
{
  GridSpec spec;
  int cpml_cells = 0;
  int k_ground = 0;
  int k_patch = 0;
  IndexBox huygens;  // closed surface for the far-field transformation
};

// In-plane spacing min(lambda_min/cells_per_wavelength, min_feature/min_feature_cells)
// with lambda_min the substrate wavelength at f_max, or cell_size when set;
// the grid is aligned so that the layout bounding box starts on a node.
GridPlan auto_grid(const AntennaDesign &design, const AutoGridOptions &opts);

// Update coefficients for the lossy-dielectric Yee scheme,
//   E <- ca E + cb (curl H)            (cb = dt/eps / (1 + sigma dt / 2 eps))
// The curl carries the 1/spacing factors, so a vacuum cell has ca = 1 and
// cb = dt/eps0. PEC edges use ca = cb = 0, which pins them to zero.
struct EdgeCoefficients
{
  double ca = 1.0;
  double cb = 0.0;
  double eps = 0.0;    // absolute permittivity of the edge (F/m)
  double sigma = 0.0;  // S/m
  bool pec = false;

  bool operator==(const EdgeCoefficients &) const = default;
};

struct MaterialGrid
{
  GridSpec spec;
  std::vector<EdgeCoefficients> table;          // id 0 is vacuum, id 1 is PEC
  std::array<std::vector<std::uint8_t>, 3> id;  // per E component, node-shaped
  int k_ground = 0;
  int k_patch = 0;
  double substrate_sigma = 0.0;  // equivalent conductivity at the band centre
  BitGrid2D top_mask;            // conductor cells on k_patch, grid-aligned
  BitGrid2D ground_mask;         // conductor cells on k_ground

  const EdgeCoefficients &coeff(int comp, std::size_t idx) const { return table[id[comp][idx]]; }
  bool is_pec(int comp, std::size_t idx) const { return table[id[comp][idx]].pec; }

  // Adds (or finds) a coefficient entry, returning its id.
  std::uint8_t intern(const EdgeCoefficients &c);

  bool operator==(const MaterialGrid &) const = default;
};

// Vacuum everywhere.
MaterialGrid vacuum_materials(const GridSpec &spec);

// Substrate of the stack between the two sheet planes with sigma_eq =
// 2 pi f0 eps0 eps_r tan(delta) at the band centre, zero-thickness PEC sheets
// for the ground (board footprint) and the patch layout. Edge permittivity is
// the average over the cells sharing the edge. With clip_to_grid the board
// and layout may extend past the grid (e.g. a line running into the CPML).
MaterialGrid assign_materials(const AntennaDesign &design, const GridSpec &spec, int k_ground, int k_patch,
                              bool clip_to_grid = false);
MaterialGrid assign_materials(const AntennaDesign &design, const GridPlan &plan);

double equivalent_conductivity(double eps_r, double loss_tangent, double f0);

// The six field components, stored in double or single precision.
template <class Real>
struct BasicFieldState
{
  GridSpec spec;
  std::array<std::vector<Real>, 3> e;  // Ex, Ey, Ez (V/m)
  std::array<std::vector<Real>, 3> h;  // Hx, Hy, Hz (A/m)
  long step = 0;
  double time = 0.0;

  explicit BasicFieldState(const GridSpec &s) : spec(s)
  {
    for (auto &c : e)
      c.assign(s.node_count(), Real(0));
    for (auto &c : h)
      c.assign(s.node_count(), Real(0));
  }
  BasicFieldState() = default;

  void clear()
  {
    for (auto *group : {&e, &h})
      for (auto &c : *group)
        std::fill(c.begin(), c.end(), Real(0));
    step = 0;
    time = 0.0;
  }

  bool all_finite() const
  {
    for (const auto *group : {&e, &h})
      for (const auto &c : *group)
        for (Real v : c)
          if (!std::isfinite(v))
            return false;
    return true;
  }
};

using FieldState = BasicFieldState<double>;

}  // namespace patchfdtd

#endif  // PATCHFDTD_YEE_GRID_HPP
