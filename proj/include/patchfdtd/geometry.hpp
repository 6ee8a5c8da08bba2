// SPDX-License-Identifier: Apache-2.0

#ifndef PATCHFDTD_GEOMETRY_HPP
#define PATCHFDTD_GEOMETRY_HPP

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace patchfdtd
{

// All lengths are in metres and all frequencies in hertz.

struct Material
{
  std::string name;
  double rel_permittivity = 1.0;
  double loss_tangent = 0.0;
  bool is_conductor = false;  // conductors are modelled as PEC

  bool operator==(const Material &) const = default;
};

Material vacuum();
Material rt_duroid_5880();  // eps_r 2.2, tan(delta) 0.0009
Material copper();

// Footprint of the board (substrate and ground plane) in board coordinates.
struct BoardExtent
{
  double x0 = 0.0;
  double y0 = 0.0;
  double width = 0.0;  // along x
  double depth = 0.0;  // along y

  bool operator==(const BoardExtent &) const = default;
};

struct SubstrateStack
{
  Material substrate;
  double substrate_height = 0.0;
  double ground_thickness = 0.0;  // recorded only; the ground is a zero-thickness sheet
  BoardExtent board;

  bool operator==(const SubstrateStack &) const = default;
};

enum class RectOp
{
  Add,
  Cut
};

struct Rect2D
{
  double x0 = 0.0;
  double y0 = 0.0;
  double width = 0.0;   // along x, > 0
  double height = 0.0;  // along y, > 0
  RectOp op = RectOp::Add;
  std::string label;

  double x1() const { return x0 + width; }
  double y1() const { return y0 + height; }
  bool contains(double x, double y) const { return x >= x0 && x < x1() && y >= y0 && y < y1(); }

  bool operator==(const Rect2D &) const = default;
};

struct Box2D
{
  double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;
  bool empty() const { return !(x1 > x0 && y1 > y0); }
};

// Conductor region built from rectangles applied in order; a later cut removes
// metal from every earlier add, a later add restores it.
struct PatchLayout
{
  std::vector<Rect2D> rects;

  bool contains(double x, double y) const;
  Box2D bounding_box() const;  // of the add rectangles

  bool operator==(const PatchLayout &) const = default;
};

enum class Axis2D
{
  X,
  Y
};

struct PortSpec
{
  double x = 0.0;
  double y = 0.0;
  Axis2D axis = Axis2D::Y;  // direction of the feed line
  double reference_impedance = 50.0;
  double width = 0.0;  // span of parallel feed columns across the line; 0 is a single column

  bool operator==(const PortSpec &) const = default;
};

struct Band
{
  double f_lo = 4.0e9;
  double f_hi = 4.5e9;

  double center() const { return 0.5 * (f_lo + f_hi); }
  bool operator==(const Band &) const = default;
};

struct AntennaDesign
{
  std::string name;
  SubstrateStack stack;
  PatchLayout layout;
  PortSpec port;
  Band analysis_band;

  bool operator==(const AntennaDesign &) const = default;
};

// Throws ValidationError naming the first offending field.
void validate(const AntennaDesign &design);

// ---------------------------------------------------------------------------
// Fixtures

// Simple U-slot patch. Patch occupies [0, patch_width] x [0, patch_length];
// the feed edge is y = 0 and the feed line extends towards -y.
// The U-slot is two arms (parallel to the feed) joined by a base cut at the
// arms' inner ends; the arms straddle the feed axis.
struct SimpleUParams
{
  double patch_width = 47.43e-3;
  double patch_length = 39.098e-3;
  double substrate_height = 2.4e-3;
  double eps_r = 2.2;
  double loss_tangent = 0.0009;
  double ground_thickness = 0.1e-3;
  double feed_length = 28.1e-3;
  double feed_width = 3.0e-3;
  double feed_inset = 0.0;   // portion of the feed line that lies over the patch
  double arm_length = 20.0e-3;
  double arm_width = 3.0e-3;
  double base_length = 29.0e-3;  // table entry -29 mm, magnitude used
  double base_width = 0.7e-3;    // table entry -0.7 mm, magnitude used
  double slot_offset = 0.0;      // distance from the feed edge to the start of the arms
  double slot_center_x = -1.0;   // < 0: centred on the feed axis
  double board_margin = 20.0e-3;
  double port_impedance = 50.0;
  Band band{4.0e9, 4.5e9};

  bool operator==(const SimpleUParams &) const = default;
};

struct StubParams
{
  double depth = 4.0e-3;
  double width = 0.0;

  bool operator==(const StubParams &) const = default;
};

struct ModifiedUParams
{
  SimpleUParams base;
  std::array<StubParams, 7> stubs{{{4.0e-3, 0.5e-3},
                                    {4.0e-3, 1.4e-3},
                                    {4.0e-3, 0.5e-3},
                                    {4.0e-3, 2.0e-3},
                                    {4.0e-3, 0.5e-3},
                                    {4.0e-3, 1.4e-3},
                                    {4.0e-3, 2.0e-3}}};
  // Left edges of the stubs along the top radiating edge. Empty means evenly
  // spaced with equal gaps (including the two end gaps).
  std::vector<double> stub_x0;

  bool operator==(const ModifiedUParams &) const = default;
};

AntennaDesign build_simple_u_patch(const SimpleUParams &params = {});
AntennaDesign build_modified_u_patch(const ModifiedUParams &params = {});

// Plain probe-fed rectangular patch used for solver validation. The port is a
// vertical column under the patch on its centre line, probe_inset from the
// y = 0 edge.
struct RectPatchParams
{
  double patch_width = 0.0;
  double patch_length = 0.0;
  double substrate_height = 2.4e-3;
  double eps_r = 2.2;
  double loss_tangent = 0.0009;
  double probe_inset = 0.0;
  double board_margin = 20.0e-3;
  double port_impedance = 50.0;
  Band band;
};

AntennaDesign build_rect_patch(const RectPatchParams &params);

// ---------------------------------------------------------------------------
// Rasterization

struct BitGrid2D
{
  int nx = 0;
  int ny = 0;
  double x0 = 0.0;  // lower-left corner of cell (0, 0)
  double y0 = 0.0;
  double dx = 0.0;
  double dy = 0.0;
  std::vector<std::uint8_t> bits;  // row-major, index i + nx * j
  bool under_resolved = false;     // cell size > half the smallest feature

  bool at(int i, int j) const { return bits[static_cast<std::size_t>(i) + static_cast<std::size_t>(nx) * j] != 0; }
  std::size_t count() const;
};

// Marks cells whose centres lie inside the conductor; cell (i, j) covers
// [x0 + i*dx, x0 + (i+1)*dx) x [y0 + j*dy, y0 + (j+1)*dy).
BitGrid2D rasterize(const PatchLayout &layout, double x0, double y0, double dx, double dy, int nx, int ny);

// Rasterization over the layout bounding box at a square cell size.
BitGrid2D conductor_mask(const PatchLayout &layout, double resolution);

double layout_area(const PatchLayout &layout);

// Smallest rectangle side in the layout; 0 for an empty layout.
double min_feature(const PatchLayout &layout);

// Binary PGM (P5), one byte per cell, 255 = conductor, top row = highest y.
void write_pgm(const BitGrid2D &mask, std::ostream &out);

}  // namespace patchfdtd

#endif  // PATCHFDTD_GEOMETRY_HPP
