// SPDX-License-Identifier: Apache-2.0

#include "patchfdtd/farfield.hpp"

#include "patchfdtd/constants.hpp"
#include "patchfdtd/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace patchfdtd
{

using constants::c0;
using constants::eta0;
using constants::pi;

namespace
{

double spacing(const GridSpec &s, int axis) { return axis == 0 ? s.dx : (axis == 1 ? s.dy : s.dz); }

}  // namespace

std::array<double, 3> HuygensSurface::patch_center(const SurfaceFace &f, int p, int q) const
{
  std::array<double, 3> r{};
  r[f.normal] = spec.origin[f.normal] + f.plane * spacing(spec, f.normal);
  r[f.u] = spec.origin[f.u] + (f.u0 + p + 0.5) * spacing(spec, f.u);
  r[f.v] = spec.origin[f.v] + (f.v0 + q + 0.5) * spacing(spec, f.v);
  return r;
}

double HuygensSurface::patch_area(const SurfaceFace &f) const { return spacing(spec, f.u) * spacing(spec, f.v); }

HuygensSurface make_surface(const GridSpec &spec, const IndexBox &box, std::vector<double> freqs)
{
  for (int a = 0; a < 3; ++a)
  {
    const int n = a == 0 ? spec.nx : (a == 1 ? spec.ny : spec.nz);
    if (box.lo[a] < 1 || box.hi[a] > n - 1 || box.hi[a] <= box.lo[a])
      throw Error(ErrorKind::Coverage, "Huygens box must lie strictly inside the grid");
  }
  HuygensSurface s;
  s.spec = spec;
  s.box = box;
  s.freqs = std::move(freqs);
  for (int n = 0; n < 3; ++n)
    for (int side : {-1, 1})
    {
      SurfaceFace &f = s.faces[static_cast<std::size_t>(2 * n + (side > 0 ? 1 : 0))];
      f.normal = n;
      f.side = side;
      f.plane = side < 0 ? box.lo[n] : box.hi[n];
      f.u = (n + 1) % 3;
      f.v = (n + 2) % 3;
      f.u0 = box.lo[f.u];
      f.v0 = box.lo[f.v];
      f.nu = box.hi[f.u] - box.lo[f.u];
      f.nv = box.hi[f.v] - box.lo[f.v];
      f.data.assign(static_cast<std::size_t>(f.nu) * f.nv * s.freqs.size() * 4, cplx{});
    }
  return s;
}

template <class Real>
void record_surface(const BasicFieldState<Real> &fields, HuygensSurface &surface, double t_e, double t_h,
                    double weight)
{
  const std::size_t nf = surface.freqs.size();
  std::vector<cplx> tw_e(nf), tw_h(nf);
  for (std::size_t k = 0; k < nf; ++k)
  {
    const double w = 2.0 * pi * surface.freqs[k];
    tw_e[k] = std::polar(weight, -w * t_e);
    tw_h[k] = std::polar(weight, -w * t_h);
  }

  const GridSpec &g = fields.spec;
  const std::size_t stride[3] = {1, g.stride_y(), g.stride_z()};
  for (auto &f : surface.faces)
  {
    const auto &eu = fields.e[f.u];
    const auto &ev = fields.e[f.v];
    const auto &hu = fields.h[f.u];
    const auto &hv = fields.h[f.v];
    const std::size_t su = stride[f.u], sv = stride[f.v], sn = stride[f.normal];
    for (int q = 0; q < f.nv; ++q)
      for (int p = 0; p < f.nu; ++p)
      {
        int c[3];
        c[f.normal] = f.plane;
        c[f.u] = f.u0 + p;
        c[f.v] = f.v0 + q;
        const std::size_t n0 = g.index(c[0], c[1], c[2]);
        const double e_u = 0.5 * (eu[n0] + eu[n0 + sv]);
        const double e_v = 0.5 * (ev[n0] + ev[n0 + su]);
        const std::size_t m0 = n0 - sn;  // half node below the plane
        const double h_u = 0.25 * (hu[m0] + hu[n0] + hu[m0 + su] + hu[n0 + su]);
        const double h_v = 0.25 * (hv[m0] + hv[n0] + hv[m0 + sv] + hv[n0 + sv]);
        cplx *out = &f.at(p, q, 0, 0, nf);
        for (std::size_t k = 0; k < nf; ++k)
        {
          out[4 * k + 0] += e_u * tw_e[k];
          out[4 * k + 1] += e_v * tw_e[k];
          out[4 * k + 2] += h_u * tw_h[k];
          out[4 * k + 3] += h_v * tw_h[k];
        }
      }
  }
}

template void record_surface(const BasicFieldState<double> &, HuygensSurface &, double, double, double);
template void record_surface(const BasicFieldState<float> &, HuygensSurface &, double, double, double);

std::size_t frequency_index(const HuygensSurface &surface, double f)
{
  for (std::size_t k = 0; k < surface.freqs.size(); ++k)
    if (std::abs(surface.freqs[k] - f) <= 1e-9 * std::abs(f))
      return k;
  throw Error(ErrorKind::MissingFrequency, "far-field frequency " + std::to_string(f) + " Hz was not recorded");
}

double DirectionGrid::dtheta() const { return pi / (n_theta - 1); }

double DirectionGrid::dphi() const { return 2.0 * pi / n_phi; }

DirectionGrid DirectionGrid::with_step_deg(double step)
{
  DirectionGrid g;
  g.n_theta = static_cast<int>(std::lround(180.0 / step)) + 1;
  g.n_phi = static_cast<int>(std::lround(360.0 / step));
  return g;
}

FarFieldPattern pattern_from_intensity(double frequency, const DirectionGrid &grid, std::vector<double> intensity)
{
  FarFieldPattern pat;
  pat.frequency = frequency;
  pat.grid = grid;
  pat.intensity = std::move(intensity);

  double power = 0.0;
  for (int ip = 0; ip < grid.n_phi; ++ip)
    for (int it = 0; it < grid.n_theta; ++it)
    {
      const double w = (it == 0 || it == grid.n_theta - 1) ? 0.5 : 1.0;
      power += w * pat.intensity_at(it, ip) * std::sin(grid.theta(it));
    }
  pat.radiated_power = power * grid.dtheta() * grid.dphi();
  pat.gain_dbi.assign(pat.intensity.size(), -100.0);
  if (pat.radiated_power > 0.0)
  {
    for (std::size_t n = 0; n < pat.intensity.size(); ++n)
    {
      const double d = 4.0 * pi * pat.intensity[n] / pat.radiated_power;
      pat.gain_dbi[n] = 10.0 * std::log10(std::max(d, 1e-10));
    }
  }
  pat.max_gain_dbi = std::numeric_limits<double>::lowest();
  for (int ip = 0; ip < grid.n_phi; ++ip)
    for (int it = 0; it < grid.n_theta; ++it)
      if (pat.gain_at(it, ip) > pat.max_gain_dbi)
      {
        pat.max_gain_dbi = pat.gain_at(it, ip);
        pat.max_theta = grid.theta(it);
        pat.max_phi = grid.phi(ip);
      }
  return pat;
}

namespace
{

// Block-summed equivalent currents of one face.
struct FaceSources
{
  int normal = 0, u = 1, v = 2;
  double w = 0.0;                // plane coordinate
  std::vector<double> uc, vc;    // block centres
  std::vector<cplx> ju, jv, mu, mv;  // index p + nbu * q
};

FaceSources face_sources(const HuygensSurface &s, const SurfaceFace &f, std::size_t kf, int block)
{
  const std::size_t nf = s.freqs.size();
  FaceSources out;
  out.normal = f.normal;
  out.u = f.u;
  out.v = f.v;
  out.w = s.spec.origin[f.normal] + f.plane * spacing(s.spec, f.normal);
  const int nbu = (f.nu + block - 1) / block;
  const int nbv = (f.nv + block - 1) / block;
  const double du = spacing(s.spec, f.u), dv = spacing(s.spec, f.v);
  for (int bp = 0; bp < nbu; ++bp)
  {
    const int p0 = bp * block, p1 = std::min(f.nu, p0 + block);
    out.uc.push_back(s.spec.origin[f.u] + (f.u0 + 0.5 * (p0 + p1)) * du);
  }
  for (int bq = 0; bq < nbv; ++bq)
  {
    const int q0 = bq * block, q1 = std::min(f.nv, q0 + block);
    out.vc.push_back(s.spec.origin[f.v] + (f.v0 + 0.5 * (q0 + q1)) * dv);
  }
  const std::size_t nb = static_cast<std::size_t>(nbu) * nbv;
  out.ju.assign(nb, {});
  out.jv.assign(nb, {});
  out.mu.assign(nb, {});
  out.mv.assign(nb, {});
  const double area = du * dv;
  const double side = f.side;
  for (int q = 0; q < f.nv; ++q)
    for (int p = 0; p < f.nu; ++p)
    {
      const std::size_t b = static_cast<std::size_t>(p / block) + static_cast<std::size_t>(nbu) * (q / block);
      const cplx eu = f.at(p, q, kf, 0, nf), ev = f.at(p, q, kf, 1, nf);
      const cplx hu = f.at(p, q, kf, 2, nf), hv = f.at(p, q, kf, 3, nf);
      // n x (Hu u + Hv v) = side (Hu v - Hv u), -n x E = side (Ev u - Eu v)
      out.ju[b] += -side * hv * area;
      out.jv[b] += side * hu * area;
      out.mu[b] += side * ev * area;
      out.mv[b] += -side * eu * area;
    }
  return out;
}

}  // namespace

FarFieldPattern ntff(const HuygensSurface &surface, double f, const NtffOptions &opts)
{
  const std::size_t kf = frequency_index(surface, f);
  const double k = 2.0 * pi * f / c0;
  const double lambda = c0 / f;

  const double cell = std::max({surface.spec.dx, surface.spec.dy, surface.spec.dz});
  int block = 1;
  if (opts.block_fraction > 0.0)
    block = std::max(1, static_cast<int>(std::floor(lambda / opts.block_fraction / cell)));

  std::vector<FaceSources> faces;
  for (const auto &face : surface.faces)
    faces.push_back(face_sources(surface, face, kf, block));

  const DirectionGrid &grid = opts.grid;
  std::vector<double> intensity(static_cast<std::size_t>(grid.n_theta) * grid.n_phi, 0.0);
  std::vector<cplx> au, av;
  for (int ip = 0; ip < grid.n_phi; ++ip)
  {
    const double ph = grid.phi(ip);
    for (int it = 0; it < grid.n_theta; ++it)
    {
      const double th = grid.theta(it);
      const double r[3] = {std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph), std::cos(th)};
      cplx n_vec[3] = {}, l_vec[3] = {};
      for (const auto &fs : faces)
      {
        const std::size_t nbu = fs.uc.size(), nbv = fs.vc.size();
        au.resize(nbu);
        av.resize(nbv);
        for (std::size_t p = 0; p < nbu; ++p)
          au[p] = std::polar(1.0, k * r[fs.u] * fs.uc[p]);
        for (std::size_t q = 0; q < nbv; ++q)
          av[q] = std::polar(1.0, k * r[fs.v] * fs.vc[q]);
        cplx s_ju{}, s_jv{}, s_mu{}, s_mv{};
        for (std::size_t q = 0; q < nbv; ++q)
        {
          cplx r_ju{}, r_jv{}, r_mu{}, r_mv{};
          const std::size_t row = q * nbu;
          for (std::size_t p = 0; p < nbu; ++p)
          {
            r_ju += fs.ju[row + p] * au[p];
            r_jv += fs.jv[row + p] * au[p];
            r_mu += fs.mu[row + p] * au[p];
            r_mv += fs.mv[row + p] * au[p];
          }
          s_ju += r_ju * av[q];
          s_jv += r_jv * av[q];
          s_mu += r_mu * av[q];
          s_mv += r_mv * av[q];
        }
        const cplx pw = std::polar(1.0, k * r[fs.normal] * fs.w);
        n_vec[fs.u] += s_ju * pw;
        n_vec[fs.v] += s_jv * pw;
        l_vec[fs.u] += s_mu * pw;
        l_vec[fs.v] += s_mv * pw;
      }
      const double ct = std::cos(th), st = std::sin(th), cp = std::cos(ph), sp = std::sin(ph);
      const cplx n_th = n_vec[0] * ct * cp + n_vec[1] * ct * sp - n_vec[2] * st;
      const cplx n_ph = -n_vec[0] * sp + n_vec[1] * cp;
      const cplx l_th = l_vec[0] * ct * cp + l_vec[1] * ct * sp - l_vec[2] * st;
      const cplx l_ph = -l_vec[0] * sp + l_vec[1] * cp;
      const double u = k * k / (32.0 * pi * pi * eta0) * (std::norm(l_ph + eta0 * n_th) + std::norm(l_th - eta0 * n_ph));
      intensity[static_cast<std::size_t>(it + grid.n_theta * ip)] = u;
    }
  }
  return pattern_from_intensity(f, grid, std::move(intensity));
}

double surface_power(const HuygensSurface &surface, double f)
{
  const std::size_t kf = frequency_index(surface, f);
  const std::size_t nf = surface.freqs.size();
  double power = 0.0;
  for (const auto &face : surface.faces)
  {
    double sum = 0.0;
    for (int q = 0; q < face.nv; ++q)
      for (int p = 0; p < face.nu; ++p)
      {
        const cplx eu = face.at(p, q, kf, 0, nf), ev = face.at(p, q, kf, 1, nf);
        const cplx hu = face.at(p, q, kf, 2, nf), hv = face.at(p, q, kf, 3, nf);
        sum += (eu * std::conj(hv) - ev * std::conj(hu)).real();
      }
    power += 0.5 * face.side * sum * surface.patch_area(face);
  }
  return power;
}

FarFieldPattern gain(FarFieldPattern pattern, double accepted_power)
{
  if (!(accepted_power > 0.0))
    throw Error(ErrorKind::PowerAccounting, "accepted power must be positive for gain normalization");
  pattern.accepted_power = accepted_power;
  pattern.max_gain_dbi = std::numeric_limits<double>::lowest();
  for (int ip = 0; ip < pattern.grid.n_phi; ++ip)
    for (int it = 0; it < pattern.grid.n_theta; ++it)
    {
      const std::size_t n = static_cast<std::size_t>(it + pattern.grid.n_theta * ip);
      const double g = 4.0 * pi * pattern.intensity[n] / accepted_power;
      pattern.gain_dbi[n] = 10.0 * std::log10(std::max(g, 1e-10));
      if (pattern.gain_dbi[n] > pattern.max_gain_dbi)
      {
        pattern.max_gain_dbi = pattern.gain_dbi[n];
        pattern.max_theta = pattern.grid.theta(it);
        pattern.max_phi = pattern.grid.phi(ip);
      }
    }
  return pattern;
}

PatternCut pattern_cut_at_phi(const FarFieldPattern &pattern, double phi)
{
  const DirectionGrid &g = pattern.grid;
  auto phi_index = [&](double ang) {
    ang = std::fmod(ang, 2.0 * pi);
    if (ang < 0.0)
      ang += 2.0 * pi;
    const long j = std::lround(ang / g.dphi());
    if (std::abs(j * g.dphi() - ang) > 1e-9)
      throw Error(ErrorKind::Config, "cut plane does not intersect the direction grid");
    return static_cast<int>(j % g.n_phi);
  };
  const int front = phi_index(phi);
  const int back = phi_index(phi + pi);

  PatternCut cut;
  for (int it = g.n_theta - 1; it >= 1; --it)
  {
    cut.theta_deg.push_back(-g.theta(it) * 180.0 / pi);
    cut.gain_dbi.push_back(pattern.gain_at(it, back));
  }
  for (int it = 0; it < g.n_theta; ++it)
  {
    cut.theta_deg.push_back(g.theta(it) * 180.0 / pi);
    cut.gain_dbi.push_back(pattern.gain_at(it, front));
  }
  return cut;
}

PatternCut pattern_cut(const FarFieldPattern &pattern, CutPlane plane)
{
  return pattern_cut_at_phi(pattern, plane == CutPlane::E ? 0.5 * pi : 0.0);
}

}  // namespace patchfdtd
