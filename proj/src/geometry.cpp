// SPDX-License-Identifier: Apache-2.0

#include "patchfdtd/geometry.hpp"

#include "patchfdtd/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>

namespace patchfdtd
{

Material vacuum() { return {"vacuum", 1.0, 0.0, false}; }

Material rt_duroid_5880() { return {"RT/duroid 5880", 2.2, 0.0009, false}; }

Material copper() { return {"copper", 1.0, 0.0, true}; }

bool PatchLayout::contains(double x, double y) const
{
  bool inside = false;
  for (const auto &r : rects)
  {
    if (r.contains(x, y))
      inside = (r.op == RectOp::Add);
  }
  return inside;
}

Box2D PatchLayout::bounding_box() const
{
  Box2D box{std::numeric_limits<double>::max(), std::numeric_limits<double>::max(),
            std::numeric_limits<double>::lowest(), std::numeric_limits<double>::lowest()};
  bool any = false;
  for (const auto &r : rects)
  {
    if (r.op != RectOp::Add)
      continue;
    any = true;
    box.x0 = std::min(box.x0, r.x0);
    box.y0 = std::min(box.y0, r.y0);
    box.x1 = std::max(box.x1, r.x1());
    box.y1 = std::max(box.y1, r.y1());
  }
  if (!any)
    return {};
  return box;
}

namespace
{

std::string rect_path(std::size_t k) { return "rect[" + std::to_string(k + 1) + "]"; }

// Point-on-conductor test that tolerates a port placed exactly on a boundary.
bool touches_conductor(const PatchLayout &layout, double x, double y)
{
  const double eps = 1e-9;
  for (double sx : {-eps, eps})
    for (double sy : {-eps, eps})
      if (layout.contains(x + sx, y + sy))
        return true;
  return false;
}

bool overlaps(const Rect2D &a, const Rect2D &b)
{
  return a.x0 < b.x1() && b.x0 < a.x1() && a.y0 < b.y1() && b.y0 < a.y1();
}

bool inside(const Rect2D &inner, const Rect2D &outer)
{
  const double tol = 1e-12;
  return inner.x0 >= outer.x0 - tol && inner.x1() <= outer.x1() + tol && inner.y0 >= outer.y0 - tol &&
         inner.y1() <= outer.y1() + tol;
}

void require_positive(double value, const char *field)
{
  if (!(value > 0.0) || !std::isfinite(value))
    throw ValidationError(field, "must be positive");
}

BoardExtent board_around(const PatchLayout &layout, double margin)
{
  const Box2D box = layout.bounding_box();
  return {box.x0 - margin, box.y0 - margin, (box.x1 - box.x0) + 2.0 * margin, (box.y1 - box.y0) + 2.0 * margin};
}

void check_simple_params(const SimpleUParams &p)
{
  require_positive(p.patch_width, "patch.width");
  require_positive(p.patch_length, "patch.length");
  require_positive(p.substrate_height, "stack.substrate_height");
  require_positive(p.feed_length, "feed.length");
  require_positive(p.feed_width, "feed.width");
  require_positive(p.arm_length, "slot.arm_length");
  require_positive(p.arm_width, "slot.arm_width");
  require_positive(p.base_length, "slot.base_length");
  require_positive(p.base_width, "slot.base_width");
  require_positive(p.board_margin, "board.margin");
  require_positive(p.port_impedance, "port.impedance");
  if (p.eps_r < 1.0)
    throw ValidationError("stack.eps_r", "must be >= 1");
  if (p.loss_tangent < 0.0)
    throw ValidationError("stack.loss_tangent", "must be >= 0");
  if (p.feed_inset < 0.0 || p.feed_inset >= p.feed_length)
    throw ValidationError("feed.inset", "must lie in [0, feed.length)");
  if (p.slot_offset < 0.0)
    throw ValidationError("slot.offset", "must be >= 0");
}

}  // namespace

void validate(const AntennaDesign &d)
{
  const auto &s = d.stack;
  if (!(s.substrate.rel_permittivity >= 1.0))
    throw ValidationError("stack.eps_r", "must be >= 1");
  if (!(s.substrate.loss_tangent >= 0.0))
    throw ValidationError("stack.loss_tangent", "must be >= 0");
  require_positive(s.substrate_height, "stack.substrate_height");
  if (!(s.ground_thickness >= 0.0))
    throw ValidationError("stack.ground_thickness", "must be >= 0");
  require_positive(s.board.width, "stack.board_width");
  require_positive(s.board.depth, "stack.board_depth");

  for (std::size_t k = 0; k < d.layout.rects.size(); ++k)
  {
    const auto &r = d.layout.rects[k];
    if (!(r.width > 0.0))
      throw ValidationError(rect_path(k) + ".width", "must be positive");
    if (!(r.height > 0.0))
      throw ValidationError(rect_path(k) + ".height", "must be positive");
  }

  const Box2D box = d.layout.bounding_box();
  if (!box.empty())
  {
    const auto &b = s.board;
    if (!(box.x0 > b.x0 && box.y0 > b.y0 && box.x1 < b.x0 + b.width && box.y1 < b.y0 + b.depth))
      throw ValidationError("stack.board", "must strictly contain the conductor layout");
  }

  require_positive(d.port.reference_impedance, "port.impedance");
  if (d.port.width < 0.0)
    throw ValidationError("port.width", "must be >= 0");
  if (!touches_conductor(d.layout, d.port.x, d.port.y))
    throw ValidationError("port", "position is not on a conductor");

  if (!(d.analysis_band.f_lo > 0.0))
    throw ValidationError("band.f_lo", "must be positive");
  if (!(d.analysis_band.f_lo < d.analysis_band.f_hi))
    throw ValidationError("band.f_hi", "must exceed band.f_lo");
}

AntennaDesign build_simple_u_patch(const SimpleUParams &p)
{
  check_simple_params(p);

  const double w = p.patch_width;
  const double l = p.patch_length;
  const double feed_axis = 0.5 * w;
  const double slot_axis = p.slot_center_x < 0.0 ? feed_axis : p.slot_center_x;

  const Rect2D patch{0.0, 0.0, w, l, RectOp::Add, "patch"};
  const Rect2D arm_left{slot_axis - 0.5 * p.base_length, p.slot_offset, p.arm_width, p.arm_length, RectOp::Cut, "L1"};
  const Rect2D arm_right{slot_axis + 0.5 * p.base_length - p.arm_width, p.slot_offset, p.arm_width, p.arm_length,
                         RectOp::Cut, "L2"};
  const Rect2D base{slot_axis - 0.5 * p.base_length, p.slot_offset + p.arm_length, p.base_length, p.base_width,
                    RectOp::Cut, "W2"};
  const Rect2D feed{feed_axis - 0.5 * p.feed_width, -(p.feed_length - p.feed_inset), p.feed_width, p.feed_length,
                    RectOp::Add, "feed"};

  for (const Rect2D *cut : {&arm_left, &arm_right, &base})
  {
    if (!inside(*cut, patch))
      throw Error(ErrorKind::Geometry, "U-slot cut " + cut->label + " falls outside the patch");
    if (overlaps(*cut, feed))
      throw Error(ErrorKind::Geometry, "feed line crosses U-slot cut " + cut->label);
  }
  if (p.base_length < 2.0 * p.arm_width)
    throw Error(ErrorKind::Geometry, "U-slot arms overlap (base shorter than two arm widths)");

  AntennaDesign d;
  d.name = "simple_u";
  d.stack.substrate = {"RT/duroid 5880", p.eps_r, p.loss_tangent, false};
  d.stack.substrate_height = p.substrate_height;
  d.stack.ground_thickness = p.ground_thickness;
  // The feed is added last so an inset feed is never removed by the slot cuts.
  d.layout.rects = {patch, arm_left, arm_right, base, feed};
  d.stack.board = board_around(d.layout, p.board_margin);
  d.port = {feed_axis, feed.y0, Axis2D::Y, p.port_impedance, p.feed_width};
  d.analysis_band = p.band;
  validate(d);
  return d;
}

AntennaDesign build_modified_u_patch(const ModifiedUParams &p)
{
  AntennaDesign d = build_simple_u_patch(p.base);
  d.name = "modified_u";

  const double w = p.base.patch_width;
  const double l = p.base.patch_length;
  for (std::size_t k = 0; k < p.stubs.size(); ++k)
  {
    require_positive(p.stubs[k].width, ("stub[" + std::to_string(k + 1) + "].width").c_str());
    require_positive(p.stubs[k].depth, ("stub[" + std::to_string(k + 1) + "].depth").c_str());
  }

  std::vector<double> x0 = p.stub_x0;
  if (x0.empty())
  {
    double total = 0.0;
    for (const auto &s : p.stubs)
      total += s.width;
    const double gap = (w - total) / static_cast<double>(p.stubs.size() + 1);
    if (!(gap > 0.0))
      throw Error(ErrorKind::Geometry, "stubs are wider than the patch edge");
    double x = gap;
    for (const auto &s : p.stubs)
    {
      x0.push_back(x);
      x += s.width + gap;
    }
  }
  if (x0.size() != p.stubs.size())
    throw ValidationError("stub_x0", "needs one entry per stub");

  const Rect2D patch{0.0, 0.0, w, l, RectOp::Add, "patch"};
  std::vector<Rect2D> stubs;
  for (std::size_t k = 0; k < p.stubs.size(); ++k)
  {
    const auto &s = p.stubs[k];
    stubs.push_back({x0[k], l - s.depth, s.width, s.depth, RectOp::Cut, "S" + std::to_string(k + 1)});
  }

  for (std::size_t k = 0; k < stubs.size(); ++k)
  {
    const auto &s = stubs[k];
    if (!inside(s, patch))
      throw Error(ErrorKind::Geometry, "stub " + s.label + " falls outside the patch");
    for (std::size_t m = 0; m < k; ++m)
      if (overlaps(s, stubs[m]))
        throw Error(ErrorKind::Geometry, "stubs " + stubs[m].label + " and " + s.label + " overlap");
    for (const auto &r : d.layout.rects)
      if (r.op == RectOp::Cut && overlaps(s, r))
        throw Error(ErrorKind::Geometry, "stub " + s.label + " overlaps U-slot cut " + r.label);
  }

  // Stubs go before the feed so the feed-last rule still holds.
  d.layout.rects.insert(d.layout.rects.end() - 1, stubs.begin(), stubs.end());
  validate(d);
  return d;
}

AntennaDesign build_rect_patch(const RectPatchParams &p)
{
  require_positive(p.patch_width, "patch.width");
  require_positive(p.patch_length, "patch.length");
  require_positive(p.substrate_height, "stack.substrate_height");
  require_positive(p.probe_inset, "probe.inset");
  if (p.probe_inset >= p.patch_length)
    throw Error(ErrorKind::Geometry, "probe lies outside the patch");

  AntennaDesign d;
  d.name = "rect_patch";
  d.stack.substrate = {"substrate", p.eps_r, p.loss_tangent, false};
  d.stack.substrate_height = p.substrate_height;
  d.stack.ground_thickness = 0.0;
  d.layout.rects = {{0.0, 0.0, p.patch_width, p.patch_length, RectOp::Add, "patch"}};
  d.stack.board = board_around(d.layout, p.board_margin);
  d.port = {0.5 * p.patch_width, p.probe_inset, Axis2D::Y, p.port_impedance, 0.0};
  d.analysis_band = p.band;
  validate(d);
  return d;
}

std::size_t BitGrid2D::count() const
{
  return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
}

BitGrid2D rasterize(const PatchLayout &layout, double x0, double y0, double dx, double dy, int nx, int ny)
{
  if (!(dx > 0.0) || !(dy > 0.0))
    throw Error(ErrorKind::Config, "rasterize: cell size must be positive");

  BitGrid2D g;
  g.nx = std::max(nx, 0);
  g.ny = std::max(ny, 0);
  g.x0 = x0;
  g.y0 = y0;
  g.dx = dx;
  g.dy = dy;
  g.bits.assign(static_cast<std::size_t>(g.nx) * static_cast<std::size_t>(g.ny), 0);

  // Cell i's centre is x0 + (i + 0.5) dx; it lies in [a, b) when
  // ceil((a - x0)/dx - 0.5) <= i < ceil((b - x0)/dx - 0.5).
  auto first_index = [](double edge, double origin, double step) {
    return static_cast<long>(std::ceil((edge - origin) / step - 0.5));
  };

  for (const auto &r : layout.rects)
  {
    const long i0 = std::max(0L, first_index(r.x0, x0, dx));
    const long i1 = std::min<long>(g.nx, first_index(r.x1(), x0, dx));
    const long j0 = std::max(0L, first_index(r.y0, y0, dy));
    const long j1 = std::min<long>(g.ny, first_index(r.y1(), y0, dy));
    const std::uint8_t v = r.op == RectOp::Add ? 1 : 0;
    for (long j = j0; j < j1; ++j)
      for (long i = i0; i < i1; ++i)
        g.bits[static_cast<std::size_t>(i + g.nx * j)] = v;
  }

  const double feature = min_feature(layout);
  g.under_resolved = feature > 0.0 && std::max(dx, dy) > 0.5 * feature;
  return g;
}

BitGrid2D conductor_mask(const PatchLayout &layout, double resolution)
{
  if (!(resolution > 0.0))
    throw Error(ErrorKind::Config, "conductor_mask: resolution must be positive");
  const Box2D box = layout.bounding_box();
  if (box.empty())
  {
    BitGrid2D g;
    g.dx = g.dy = resolution;
    return g;
  }
  // A small relative slack keeps exact multiples (1 mm / 0.25 mm) from gaining a column.
  const int nx = static_cast<int>(std::ceil((box.x1 - box.x0) / resolution - 1e-9));
  const int ny = static_cast<int>(std::ceil((box.y1 - box.y0) / resolution - 1e-9));
  return rasterize(layout, box.x0, box.y0, resolution, resolution, nx, ny);
}

double layout_area(const PatchLayout &layout)
{
  // Coordinate compression: membership is constant on each elementary cell
  // of the grid formed by all rectangle edges.
  std::vector<double> xs, ys;
  for (const auto &r : layout.rects)
  {
    xs.push_back(r.x0);
    xs.push_back(r.x1());
    ys.push_back(r.y0);
    ys.push_back(r.y1());
  }
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  std::sort(ys.begin(), ys.end());
  ys.erase(std::unique(ys.begin(), ys.end()), ys.end());

  double area = 0.0;
  for (std::size_t i = 0; i + 1 < xs.size(); ++i)
  {
    const double xc = 0.5 * (xs[i] + xs[i + 1]);
    for (std::size_t j = 0; j + 1 < ys.size(); ++j)
    {
      const double yc = 0.5 * (ys[j] + ys[j + 1]);
      if (layout.contains(xc, yc))
        area += (xs[i + 1] - xs[i]) * (ys[j + 1] - ys[j]);
    }
  }
  return area;
}

double min_feature(const PatchLayout &layout)
{
  double m = 0.0;
  for (const auto &r : layout.rects)
  {
    const double f = std::min(r.width, r.height);
    if (m == 0.0 || f < m)
      m = f;
  }
  return m;
}

void write_pgm(const BitGrid2D &mask, std::ostream &out)
{
  out << "P5\n" << mask.nx << " " << mask.ny << "\n255\n";
  std::vector<char> row(static_cast<std::size_t>(mask.nx));
  for (int j = mask.ny - 1; j >= 0; --j)
  {
    for (int i = 0; i < mask.nx; ++i)
      row[static_cast<std::size_t>(i)] = mask.at(i, j) ? static_cast<char>(255) : 0;
    out.write(row.data(), static_cast<std::streamsize>(row.size()));
  }
}

}  // namespace patchfdtd
