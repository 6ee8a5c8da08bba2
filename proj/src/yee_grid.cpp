// SPDX-License-Identifier: Apache-2.0

#include "patchfdtd/yee_grid.hpp"

#include "patchfdtd/constants.hpp"
#include "patchfdtd/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace patchfdtd
{

using constants::c0;
using constants::eps0;
using constants::pi;

double cfl_timestep(const GridSpec &spec, double courant)
{
  if (!(courant > 0.0 && courant <= 1.0))
    throw ValidationError("courant", "must lie in (0, 1]");
  auto inv2 = [](double d) { return std::isinf(d) ? 0.0 : 1.0 / (d * d); };
  return courant / (c0 * std::sqrt(inv2(spec.dx) + inv2(spec.dy) + inv2(spec.dz)));
}

GridPlan auto_grid(const AntennaDesign &design, const AutoGridOptions &o)
{
  if (!(o.cells_per_wavelength >= 10.0))
    throw ValidationError("simulation.cells_per_wavelength", "must be >= 10");
  if (!(o.min_feature_cells >= 1.0))
    throw ValidationError("simulation.min_feature_cells", "must be >= 1");
  if (!(o.f_max > 0.0))
    throw ValidationError("simulation.f_max", "must be positive");
  if (o.cpml_cells < 1)
    throw ValidationError("simulation.cpml_cells", "must be >= 1");

  const double eps_r = design.stack.substrate.rel_permittivity;
  const double lambda_min = c0 / (o.f_max * std::sqrt(eps_r));
  const double wave_step = lambda_min / o.cells_per_wavelength;
  double d = wave_step;
  const double feature = min_feature(design.layout);
  if (feature > 0.0)
    d = std::min(d, feature / o.min_feature_cells);
  if (o.cell_size > 0.0)
    d = o.cell_size;
  else if (o.cell_size < 0.0)
    throw ValidationError("simulation.cell_size", "must be non-negative");

  const double h = design.stack.substrate_height;
  const int n_sub = std::max(o.min_substrate_cells, static_cast<int>(std::ceil(h / wave_step - 1e-9)));
  const double dz = h / n_sub;
  const int n_air = std::max(o.huygens_gap + 2, static_cast<int>(std::ceil(0.25 * lambda_min / dz - 1e-9)));

  const Box2D box = design.layout.bounding_box();
  const BoardExtent &b = design.stack.board;
  auto cells = [d](double len) { return std::max(0, static_cast<int>(std::ceil(len / d - 1e-9))); };
  const int pad = o.cpml_cells + o.huygens_gap + o.inplane_air_cells;
  const int left = pad + cells(box.x0 - b.x0);
  const int right = pad + cells(b.x0 + b.width - box.x1);
  const int front = pad + cells(box.y0 - b.y0);
  const int back = pad + cells(b.y0 + b.depth - box.y1);

  GridPlan plan;
  GridSpec &s = plan.spec;
  s.dx = s.dy = d;
  s.dz = dz;
  s.nx = left + cells(box.x1 - box.x0) + right;
  s.ny = front + cells(box.y1 - box.y0) + back;
  s.nz = 2 * o.cpml_cells + 2 * n_air + n_sub;
  s.origin = {box.x0 - left * d, box.y0 - front * d, -(o.cpml_cells + n_air) * dz};
  s.dt = cfl_timestep(s, o.courant);

  plan.cpml_cells = o.cpml_cells;
  plan.k_ground = o.cpml_cells + n_air;
  plan.k_patch = plan.k_ground + n_sub;
  const int g = o.cpml_cells + o.huygens_gap;
  plan.huygens.lo = {g, g, g};
  plan.huygens.hi = {s.nx - g, s.ny - g, s.nz - g};

  const double total = static_cast<double>(s.cell_count());
  if (total > o.cell_budget)
  {
    const char *axis = "x";
    int largest = s.nx;
    if (s.ny > largest)
    {
      axis = "y";
      largest = s.ny;
    }
    if (s.nz > largest)
    {
      axis = "z";
      largest = s.nz;
    }
    throw Error(ErrorKind::Budget, "grid of " + std::to_string(s.nx) + " x " + std::to_string(s.ny) + " x " +
                                     std::to_string(s.nz) + " cells exceeds the budget of " +
                                     std::to_string(static_cast<long long>(o.cell_budget)) +
                                     "; largest dimension is " + axis + " (" + std::to_string(largest) + " cells)");
  }
  return plan;
}

std::uint8_t MaterialGrid::intern(const EdgeCoefficients &c)
{
  for (std::size_t k = 0; k < table.size(); ++k)
    if (table[k] == c)
      return static_cast<std::uint8_t>(k);
  if (table.size() >= 255)
    throw Error(ErrorKind::Config, "too many distinct edge materials");
  table.push_back(c);
  return static_cast<std::uint8_t>(table.size() - 1);
}

namespace
{

EdgeCoefficients dielectric_edge(double eps, double sigma, double dt)
{
  const double loss = sigma * dt / (2.0 * eps);
  return {(1.0 - loss) / (1.0 + loss), (dt / eps) / (1.0 + loss), eps, sigma, false};
}

EdgeCoefficients pec_edge() { return {0.0, 0.0, 0.0, 0.0, true}; }

}  // namespace

MaterialGrid vacuum_materials(const GridSpec &spec)
{
  MaterialGrid m;
  m.spec = spec;
  m.table = {dielectric_edge(eps0, 0.0, spec.dt), pec_edge()};
  for (auto &ids : m.id)
    ids.assign(spec.node_count(), 0);
  return m;
}

double equivalent_conductivity(double eps_r, double loss_tangent, double f0)
{
  return 2.0 * pi * f0 * eps0 * eps_r * loss_tangent;
}

MaterialGrid assign_materials(const AntennaDesign &design, const GridSpec &spec, int k_ground, int k_patch,
                              bool clip_to_grid)
{
  if (k_ground < 0 || k_patch > spec.nz || k_patch <= k_ground)
    throw Error(ErrorKind::Coverage, "substrate planes fall outside the grid");

  const double gx1 = spec.origin[0] + spec.nx * spec.dx;
  const double gy1 = spec.origin[1] + spec.ny * spec.dy;
  const Box2D box = design.layout.bounding_box();
  if (!clip_to_grid && !box.empty() &&
      (box.x0 < spec.origin[0] || box.y0 < spec.origin[1] || box.x1 > gx1 || box.y1 > gy1))
    throw Error(ErrorKind::Coverage, "conductor layout extends beyond the grid");

  MaterialGrid m = vacuum_materials(spec);
  m.k_ground = k_ground;
  m.k_patch = k_patch;

  const auto &sub = design.stack.substrate;
  m.substrate_sigma = equivalent_conductivity(sub.rel_permittivity, sub.loss_tangent, design.analysis_band.center());

  // Board footprint and patch layout on the grid's cell raster.
  PatchLayout board;
  const auto &b = design.stack.board;
  board.rects.push_back({b.x0, b.y0, b.width, b.depth, RectOp::Add, "board"});
  m.ground_mask = rasterize(board, spec.origin[0], spec.origin[1], spec.dx, spec.dy, spec.nx, spec.ny);
  m.top_mask = rasterize(design.layout, spec.origin[0], spec.origin[1], spec.dx, spec.dy, spec.nx, spec.ny);

  const int nx = spec.nx, ny = spec.ny, nz = spec.nz;
  // Cell-wise substrate occupancy; cells outside the grid count as their
  // nearest in-grid neighbour.
  auto substrate_cell = [&](int i, int j, int k) {
    i = std::clamp(i, 0, nx - 1);
    j = std::clamp(j, 0, ny - 1);
    k = std::clamp(k, 0, nz - 1);
    return k >= k_ground && k < k_patch && m.ground_mask.at(i, j);
  };

  const double eps_sub = eps0 * sub.rel_permittivity;
  const double sig_sub = m.substrate_sigma;
  auto edge_id = [&](int filled) -> std::uint8_t {
    if (filled == 0)
      return 0;
    const double f = filled / 4.0;
    const double eps = eps0 * (1.0 - f) + eps_sub * f;
    return m.intern(dielectric_edge(eps, sig_sub * f, spec.dt));
  };

  // Only edges next to the substrate slab need a look; everything else stays vacuum.
  const int k_lo = std::max(0, k_ground - 1);
  const int k_hi = std::min(nz, k_patch + 1);
  for (int k = k_lo; k <= k_hi; ++k)
    for (int j = 0; j <= ny; ++j)
      for (int i = 0; i <= nx; ++i)
      {
        const std::size_t n = spec.index(i, j, k);
        // Ex(i+1/2, j, k): cells (i, j-1..j, k-1..k)
        if (i < nx)
          m.id[0][n] = edge_id(substrate_cell(i, j - 1, k - 1) + substrate_cell(i, j, k - 1) +
                               substrate_cell(i, j - 1, k) + substrate_cell(i, j, k));
        // Ey(i, j+1/2, k): cells (i-1..i, j, k-1..k)
        if (j < ny)
          m.id[1][n] = edge_id(substrate_cell(i - 1, j, k - 1) + substrate_cell(i, j, k - 1) +
                               substrate_cell(i - 1, j, k) + substrate_cell(i, j, k));
        // Ez(i, j, k+1/2): cells (i-1..i, j-1..j, k)
        if (k < nz)
          m.id[2][n] = edge_id(substrate_cell(i - 1, j - 1, k) + substrate_cell(i, j - 1, k) +
                               substrate_cell(i - 1, j, k) + substrate_cell(i, j, k));
      }

  // A conductor cell pins the four tangential edges around it on its plane.
  auto pin_sheet = [&](const BitGrid2D &mask, int k) {
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i)
      {
        if (!mask.at(i, j))
          continue;
        m.id[0][spec.index(i, j, k)] = 1;
        m.id[0][spec.index(i, j + 1, k)] = 1;
        m.id[1][spec.index(i, j, k)] = 1;
        m.id[1][spec.index(i + 1, j, k)] = 1;
      }
  };
  pin_sheet(m.ground_mask, k_ground);
  pin_sheet(m.top_mask, k_patch);
  return m;
}

MaterialGrid assign_materials(const AntennaDesign &design, const GridPlan &plan)
{
  return assign_materials(design, plan.spec, plan.k_ground, plan.k_patch, false);
}

}  // namespace patchfdtd
