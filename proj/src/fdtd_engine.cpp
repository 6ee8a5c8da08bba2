// SPDX-License-Identifier: Apache-2.0

#include "patchfdtd/fdtd_engine.hpp"

#include "patchfdtd/constants.hpp"
#include "patchfdtd/error.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <string>

#if defined(__SSE2__)
#include <xmmintrin.h>
#endif

namespace patchfdtd
{

using constants::c0;
using constants::eps0;
using constants::eta0;
using constants::mu0;
using constants::pi;

void validate(const CpmlParams &p)
{
  if (p.thickness < 5)
    throw ValidationError("simulation.cpml_thickness", "must be >= 5 cells");
  if (!(p.order > 0.0))
    throw ValidationError("simulation.cpml_order", "must be positive");
  if (!(p.sigma_max_ratio > 0.0))
    throw ValidationError("simulation.cpml_sigma_ratio", "must be positive");
  if (!(p.kappa_max >= 1.0))
    throw ValidationError("simulation.cpml_kappa_max", "must be >= 1");
  if (!(p.alpha_max >= 0.0))
    throw ValidationError("simulation.cpml_alpha_max", "must be non-negative");
}

double SourceWaveform::sigma_t() const
{
  // |V(f)| ~ exp(-(f - f0)^2 / (2 sf^2)); -20 dB at f0 +- bandwidth / 2.
  const double sf = 0.5 * bandwidth / std::sqrt(2.0 * std::log(10.0));
  return 1.0 / (2.0 * pi * sf);
}

double SourceWaveform::t0() const { return delay > 0.0 ? delay : 6.0 * sigma_t(); }

double SourceWaveform::value(double t) const
{
  const double s = sigma_t();
  const double u = t - t0();
  if (std::abs(u) > 6.0 * s)
    return 0.0;
  return amplitude * std::exp(-u * u / (2.0 * s * s)) * std::sin(2.0 * pi * f0 * u);
}

std::complex<double> SourceWaveform::spectrum(double f) const
{
  const double s = sigma_t();
  const double g = amplitude * s * std::sqrt(2.0 * pi) / 2.0;
  const double a = 2.0 * pi * s;
  const double lo = std::exp(-0.5 * a * a * (f - f0) * (f - f0));
  const double hi = std::exp(-0.5 * a * a * (f + f0) * (f + f0));
  // sin = (e^{j w0 u} - e^{-j w0 u}) / 2j, delayed by t0.
  const std::complex<double> shift = std::polar(1.0, -2.0 * pi * f * t0());
  return shift * std::complex<double>(0.0, -1.0) * g * (lo - hi);
}

double SourceWaveform::level_db(double f) const
{
  const double peak = std::abs(spectrum(f0));
  const double v = std::abs(spectrum(f));
  if (v <= 0.0)
    return -std::numeric_limits<double>::infinity();
  return 20.0 * std::log10(v / peak);
}

void validate(const SourceWaveform &w)
{
  if (!(w.f0 > 0.0))
    throw ValidationError("source.f0", "must be positive");
  if (!(w.bandwidth > 0.0))
    throw ValidationError("source.bandwidth", "must be positive");
  if (!(w.delay >= 0.0))
    throw ValidationError("source.delay", "must be non-negative");
  if (w.delay > 0.0 && w.delay < 3.0 * w.sigma_t())
    throw ValidationError("source.delay", "truncates the pulse (must be >= 3 sigma_t)");
  if (!(w.amplitude >= 0.0))
    throw ValidationError("source.amplitude", "must be non-negative");
  if (w.level_db(0.0) > -60.0)
    throw ValidationError("source.bandwidth", "DC content above -60 dB");
}

const char *to_string(Termination t)
{
  switch (t)
  {
  case Termination::StepsExhausted:
    return "steps_exhausted";
  case Termination::EnergyConverged:
    return "energy_converged";
  case Termination::Diverged:
    return "diverged";
  }
  return "unknown";
}

ResolvedPort resolve_port(const PortSpec &port, const MaterialGrid &mats)
{
  const GridSpec &s = mats.spec;
  const bool along_y = port.axis == Axis2D::Y;
  // Along the feed the column sits on the nearest node; across it the
  // columns fill the line width.
  const double ua = along_y ? (port.y - s.origin[1]) / s.dy : (port.x - s.origin[0]) / s.dx;
  const double uc = along_y ? (port.x - s.origin[0]) / s.dx : (port.y - s.origin[1]) / s.dy;
  const double dc = along_y ? s.dx : s.dy;
  const int na = along_y ? s.ny : s.nx;
  const int nc = along_y ? s.nx : s.ny;

  const int a = static_cast<int>(std::lround(ua));
  if (a < 1 || a > na - 1)
    throw Error(ErrorKind::PortPlacement, "port lies outside the grid");
  int c_lo = 0, c_hi = 0;
  if (port.width <= 0.0)
  {
    c_lo = c_hi = static_cast<int>(std::lround(uc));
  }
  else
  {
    const double half = 0.5 * port.width / dc + 0.5 + 1e-9;
    c_lo = static_cast<int>(std::ceil(uc - half));
    c_hi = static_cast<int>(std::floor(uc + half));
  }
  if (c_lo < 1 || c_hi > nc - 1)
    throw Error(ErrorKind::PortPlacement, "port lies outside the grid");

  auto touches = [&](const BitGrid2D &m, int i, int j) {
    for (int dj = -1; dj <= 0; ++dj)
      for (int di = -1; di <= 0; ++di)
      {
        const int ci = i + di, cj = j + dj;
        if (ci >= 0 && cj >= 0 && ci < m.nx && cj < m.ny && m.at(ci, cj))
          return true;
      }
    return false;
  };

  ResolvedPort r;
  r.reference_impedance = port.reference_impedance;
  r.k_lo = mats.k_ground;
  r.k_hi = mats.k_patch;
  bool on_conductor = false;
  for (int c = c_lo; c <= c_hi; ++c)
  {
    const int i = along_y ? c : a;
    const int j = along_y ? a : c;
    if (!touches(mats.ground_mask, i, j))
      throw Error(ErrorKind::PortPlacement, "port not over ground plane");
    on_conductor = on_conductor || touches(mats.top_mask, i, j);
    r.columns.push_back({i, j});
  }
  if (!on_conductor)
    throw Error(ErrorKind::PortPlacement, "port not on a conductor");
  if (!(port.reference_impedance > 0.0))
    throw ValidationError("port.reference_impedance", "must be positive");
  return r;
}

namespace
{

// Per-axis stretching data. Integer positions p = 0..n carry the E-side
// values, half positions p + 1/2 (stored at p = 0..n-1) the H-side values.
template <class Real>
struct AxisProfile
{
  int n = 0;
  bool periodic = false;
  bool cpml = false;
  double d = 0.0;
  std::vector<Real> inv_e, inv_h;  // 1 / (kappa d)
  std::vector<int> local_e, local_h; // slab index or -1
  std::vector<Real> be, ce, bh, ch;
  int count_e = 0, count_h = 0;
};

template <class Real>
AxisProfile<Real> make_profile(int n, double d, double dt, BoundaryKind kind, const CpmlParams &p)
{
  AxisProfile<Real> a;
  a.n = n;
  a.d = d;
  a.periodic = kind == BoundaryKind::Periodic;
  a.cpml = kind == BoundaryKind::Cpml;
  a.inv_e.assign(static_cast<std::size_t>(n + 1), 1.0 / d);
  a.inv_h.assign(static_cast<std::size_t>(n), 1.0 / d);
  a.local_e.assign(static_cast<std::size_t>(n + 1), -1);
  a.local_h.assign(static_cast<std::size_t>(n), -1);
  if (!a.cpml)
    return a;

  const int T = p.thickness;
  if (2 * T >= n)
    throw Error(ErrorKind::Coverage, "grid too small for the CPML thickness");
  const double sigma_max = p.sigma_max_ratio * 0.8 * (p.order + 1.0) / (eta0 * d);
  auto depth = [&](double x) {
    if (x < T)
      return (T - x) / T;
    if (x > n - T)
      return (x - (n - T)) / T;
    return -1.0;
  };
  auto coeffs = [&](double rho, double &b, double &c, double &kappa) {
    const double g = std::pow(rho, p.order);
    const double sigma = sigma_max * g;
    kappa = 1.0 + (p.kappa_max - 1.0) * g;
    const double alpha = p.alpha_max * (1.0 - rho);
    b = std::exp(-(sigma / kappa + alpha) * dt / eps0);
    c = sigma > 0.0 ? sigma / (sigma * kappa + kappa * kappa * alpha) * (b - 1.0) : 0.0;
  };
  for (int q = 0; q <= n; ++q)
  {
    const double rho = depth(q);
    if (rho < 0.0)
      continue;
    double b, c, kappa;
    coeffs(rho, b, c, kappa);
    a.inv_e[static_cast<std::size_t>(q)] = 1.0 / (kappa * d);
    a.local_e[static_cast<std::size_t>(q)] = a.count_e++;
    a.be.push_back(b);
    a.ce.push_back(c);
  }
  for (int q = 0; q < n; ++q)
  {
    const double rho = depth(q + 0.5);
    if (rho < 0.0)
      continue;
    double b, c, kappa;
    coeffs(rho, b, c, kappa);
    a.inv_h[static_cast<std::size_t>(q)] = 1.0 / (kappa * d);
    a.local_h[static_cast<std::size_t>(q)] = a.count_h++;
    a.bh.push_back(b);
    a.ch.push_back(c);
  }
  return a;
}

struct Range
{
  int lo = 0, hi = -1;  // inclusive
};

// Auxiliary CPML variable for one field component and one derivative axis.
template <class Real>
struct PsiSlab
{
  int comp = 0;   // field component being corrected
  int axis = 0;   // derivative axis
  int other = 0;  // component being differentiated
  Real sign = 1;
  std::array<int, 3> dims{};
  std::vector<Real> psi;
};

}  // namespace

template <class Real>
struct BasicSimulation<Real>::Impl
{
  std::array<AxisProfile<Real>, 3> ax;
  std::array<std::array<Range, 3>, 3> e_range;  // [comp][axis]
  std::array<std::array<Range, 3>, 3> h_range;
  std::vector<PsiSlab<Real>> psi_e, psi_h;
  std::vector<Real> ca, cb;
  std::vector<double> eps;
  std::array<std::vector<Real>, 3> h_prev;
  std::vector<double> chunk_check;
};

template <class Real>
struct BasicSimulation<Real>::PortState
{
  ResolvedPort resolved;
  SourceWaveform waveform;
  std::vector<std::size_t> cells;
  std::vector<double> ca, cb, cs;
  std::vector<double> old;
  int cells_per_column = 0;
};

template <class Real>
BasicSimulation<Real>::BasicSimulation(MaterialGrid mats, Boundaries boundaries, int threads)
  : BasicSimulation(std::move(mats), boundaries, CpmlParams{}, threads)
{
}

template <class Real>
BasicSimulation<Real>::BasicSimulation(MaterialGrid mats, Boundaries boundaries, CpmlParams cpml, int threads)
  : mats_(std::move(mats)), boundaries_(boundaries), cpml_(cpml), fields_(mats_.spec),
    pool_(std::make_unique<WorkerPool>(std::max(1, threads))), impl_(std::make_unique<Impl>()),
    interleaved_energy_(std::numeric_limits<double>::quiet_NaN())
{
  const GridSpec &s = mats_.spec;
  if (s.nx < 1 || s.ny < 1 || s.nz < 1)
    throw Error(ErrorKind::Config, "grid must have at least one cell per axis");
  if (!(s.dt > 0.0) || s.dt > cfl_timestep(s, 1.0) * (1.0 + 1e-12))
    throw ValidationError("simulation.dt", "violates the CFL limit");

  Impl &m = *impl_;
  const std::array<int, 3> n{s.nx, s.ny, s.nz};
  const std::array<double, 3> d{s.dx, s.dy, s.dz};
  for (int a = 0; a < 3; ++a)
    m.ax[a] = make_profile<Real>(n[a], d[a], s.dt, boundaries_.axis[a], cpml_);

  for (int c = 0; c < 3; ++c)
    for (int a = 0; a < 3; ++a)
    {
      if (a == c)
      {
        m.e_range[c][a] = {0, n[a] - 1};
        m.h_range[c][a] = {0, n[a]};
      }
      else
      {
        m.e_range[c][a] = {m.ax[a].periodic ? 0 : 1, n[a] - 1};
        m.h_range[c][a] = {0, n[a] - 1};
      }
    }

  for (const auto &t : mats_.table)
  {
    m.ca.push_back(t.ca);
    m.cb.push_back(t.cb);
    m.eps.push_back(t.eps);
  }

  for (int d_axis = 0; d_axis < 3; ++d_axis)
  {
    if (!m.ax[d_axis].cpml)
      continue;
    for (int c = 0; c < 3; ++c)
    {
      if (c == d_axis)
        continue;
      const int other = 3 - c - d_axis;
      const Real sign = (c + 1) % 3 == d_axis ? 1 : -1;
      for (int is_h = 0; is_h < 2; ++is_h)
      {
        PsiSlab<Real> p;
        p.comp = c;
        p.axis = d_axis;
        p.other = other;
        p.sign = sign;
        for (int a = 0; a < 3; ++a)
          p.dims[a] = n[a] + 1;
        p.dims[d_axis] = is_h ? m.ax[d_axis].count_h : m.ax[d_axis].count_e;
        p.psi.assign(static_cast<std::size_t>(p.dims[0]) * p.dims[1] * p.dims[2], 0.0);
        (is_h ? m.psi_h : m.psi_e).push_back(std::move(p));
      }
    }
  }
  m.chunk_check.assign(static_cast<std::size_t>(s.nz + 1), 0.0);
}

template <class Real>
BasicSimulation<Real>::~BasicSimulation() = default;

template <class Real>
const ResolvedPort *BasicSimulation<Real>::port() const { return port_ ? &port_->resolved : nullptr; }

template <class Real>
void BasicSimulation<Real>::set_port(const PortSpec &spec, const SourceWaveform &waveform)
{
  auto p = std::make_unique<PortState>();
  p->resolved = resolve_port(spec, mats_);
  p->waveform = waveform;
  const GridSpec &s = mats_.spec;
  const int N = p->resolved.k_hi - p->resolved.k_lo;
  const int M = static_cast<int>(p->resolved.columns.size());
  p->cells_per_column = N;
  const double r_cell = M * p->resolved.reference_impedance / N;
  for (const auto &col : p->resolved.columns)
    for (int k = p->resolved.k_lo; k < p->resolved.k_hi; ++k)
    {
      const std::size_t idx = s.index(col[0], col[1], k);
      const EdgeCoefficients &e = mats_.coeff(2, idx);
      if (e.pec)
        throw Error(ErrorKind::PortPlacement, "port column crosses a conductor");
      const double loss = e.sigma * s.dt / (2.0 * e.eps);
      const double beta = s.dt * s.dz / (2.0 * e.eps * r_cell * s.dx * s.dy);
      const double den = 1.0 + beta + loss;
      p->cells.push_back(idx);
      p->ca.push_back((1.0 - beta - loss) / den);
      p->cb.push_back((s.dt / e.eps) / den);
      p->cs.push_back(-(s.dt / (e.eps * r_cell * s.dx * s.dy)) / den);
    }
  p->old.assign(p->cells.size(), 0.0);
  port_ = std::move(p);

  record_ = PortRecord{};
  record_.dt = s.dt;
  record_.t_start = (static_cast<double>(fields_.step) + 0.5) * s.dt;
  record_.reference_impedance = spec.reference_impedance;
}

template <class Real>
void BasicSimulation<Real>::add_soft_source(int comp, int i, int j, int k, const SourceWaveform &waveform)
{
  const GridSpec &s = mats_.spec;
  if (comp < 0 || comp > 2 || i < 0 || j < 0 || k < 0 || i > s.nx || j > s.ny || k > s.nz)
    throw Error(ErrorKind::Config, "soft source outside the grid");
  soft_sources_.push_back({comp, s.index(i, j, k), waveform});
}

template <class Real>
void BasicSimulation<Real>::set_surface(const IndexBox &box, std::vector<double> freqs, int stride)
{
  surface_ = make_surface(mats_.spec, box, std::move(freqs));
  surface_stride_ = std::max(1, stride);
}

template <class Real>
HuygensSurface BasicSimulation<Real>::take_surface()
{
  if (!surface_)
    throw Error(ErrorKind::MissingFrequency, "no surface was recorded");
  HuygensSurface out = std::move(*surface_);
  surface_.reset();
  return out;
}

template <class Real>
void BasicSimulation<Real>::track_interleaved_energy(bool on) { track_energy_ = on; }

namespace
{

// Subnormal values in decaying fields are flushed to zero (x86 MXCSR FTZ and
// DAZ); every worker sets the same mode, so results stay thread-count independent.
inline void flush_subnormals()
{
#if defined(__SSE2__)
  _mm_setcsr(_mm_getcsr() | 0x8040u);
#endif
}

template <class Fn>
void for_each_k(WorkerPool &pool, int k_count, const Fn &fn)
{
  pool.for_each(static_cast<std::size_t>(k_count), [&](std::size_t b, std::size_t e) {
    flush_subnormals();
    fn(static_cast<int>(b), static_cast<int>(e));
  });
}

// CPML correction of one component on the k planes [k0, k1):
//   psi <- b psi + c (src[n + fwd] - src[n + bwd]) / d,   dst[n] += scale(n) psi
// with scale = cb sign for E and -dt/mu0 sign for H.
template <class Real, bool IsH>
Real apply_psi(PsiSlab<Real> &p, const AxisProfile<Real> &a, const std::array<Range, 3> &r, const GridSpec &s,
                 const Real *src, Real *dst, const Real *cb, const std::uint8_t *id, Real ch, int k0, int k1)
{
  const std::vector<int> &local = IsH ? a.local_h : a.local_e;
  const Real *bb = IsH ? a.bh.data() : a.be.data();
  const Real *cc = IsH ? a.ch.data() : a.ce.data();
  const std::array<std::ptrdiff_t, 3> stride{1, static_cast<std::ptrdiff_t>(s.stride_y()),
                                            static_cast<std::ptrdiff_t>(s.stride_z())};
  const std::ptrdiff_t off = stride[p.axis];
  const std::ptrdiff_t fwd = IsH ? off : 0;
  const std::ptrdiff_t bwd = IsH ? 0 : -off;
  const Real inv_d = static_cast<Real>(1.0 / a.d);
  const Real hs = -ch * p.sign;
  const Real es = p.sign;
  const std::size_t d0 = static_cast<std::size_t>(p.dims[0]);
  const std::size_t d1 = static_cast<std::size_t>(p.dims[1]);
  Real check = 0;

  // Runs of consecutive slab positions along x within the component range.
  struct Run
  {
    int i0, i1, l0;
  };
  std::vector<Run> runs;
  if (p.axis == 0)
  {
    for (int i = r[0].lo; i <= r[0].hi; ++i)
    {
      const int l = local[static_cast<std::size_t>(i)];
      if (l < 0)
        continue;
      if (!runs.empty() && runs.back().i1 == i - 1)
        runs.back().i1 = i;
      else
        runs.push_back({i, i, l});
    }
  }
  else
    runs.push_back({r[0].lo, r[0].hi, 0});

  const int klo = std::max(r[2].lo, k0);
  const int khi = std::min(r[2].hi, k1 - 1);
  for (int k = klo; k <= khi; ++k)
  {
    int kk = k;
    if (p.axis == 2)
    {
      kk = local[static_cast<std::size_t>(k)];
      if (kk < 0)
        continue;
    }
    for (int j = r[1].lo; j <= r[1].hi; ++j)
    {
      int jj = j;
      if (p.axis == 1)
      {
        jj = local[static_cast<std::size_t>(j)];
        if (jj < 0)
          continue;
      }
      const std::size_t n0 = s.index(0, j, k);
      Real *__restrict psi = p.psi.data() + d0 * (static_cast<std::size_t>(jj) + d1 * static_cast<std::size_t>(kk));
      const Real *__restrict sp = src + n0;
      Real *__restrict dp = dst + n0;
      const std::uint8_t *__restrict ip = id + n0;
      for (const Run &run : runs)
      {
        if (p.axis == 0)
        {
          Real *__restrict q = psi + (run.l0 - run.i0);
          const Real *__restrict bq = bb + (run.l0 - run.i0);
          const Real *__restrict cq = cc + (run.l0 - run.i0);
          for (int i = run.i0; i <= run.i1; ++i)
          {
            q[i] = bq[i] * q[i] + cq[i] * (sp[i + fwd] - sp[i + bwd]) * inv_d;
            if constexpr (IsH)
              dp[i] += hs * q[i];
            else
            {
              dp[i] += cb[ip[i]] * es * q[i];
              check += dp[i] * Real(0);
            }
          }
        }
        else
        {
          const int l = p.axis == 1 ? jj : kk;
          const Real b = bb[l];
          const Real c = cc[l] * inv_d;
#pragma omp simd reduction(+ : check)
          for (int i = run.i0; i <= run.i1; ++i)
          {
            psi[i] = b * psi[i] + c * (sp[i + fwd] - sp[i + bwd]);
            if constexpr (IsH)
              dp[i] += hs * psi[i];
            else
            {
              dp[i] += cb[ip[i]] * es * psi[i];
              check += dp[i] * Real(0);
            }
          }
        }
      }
    }
  }
  return check;
}

}  // namespace

template <class Real>
void BasicSimulation<Real>::update_h()
{
  const GridSpec &s = mats_.spec;
  Impl &m = *impl_;
  const std::ptrdiff_t sy = static_cast<std::ptrdiff_t>(s.stride_y());
  const std::ptrdiff_t sz = static_cast<std::ptrdiff_t>(s.stride_z());
  const Real ch = static_cast<Real>(s.dt / mu0);
  const Real *ex = fields_.e[0].data();
  const Real *ey = fields_.e[1].data();
  const Real *ez = fields_.e[2].data();
  Real *hx = fields_.h[0].data();
  Real *hy = fields_.h[1].data();
  Real *hz = fields_.h[2].data();
  const Real *__restrict ihx = m.ax[0].inv_h.data();

  for_each_k(*pool_, s.nz + 1, [&](int k0, int k1) {
    // Hx: curl_x = dEz/dy - dEy/dz
    {
      const auto &r = m.h_range[0];
      for (int k = std::max(k0, r[2].lo); k <= std::min(k1 - 1, r[2].hi); ++k)
        for (int j = r[1].lo; j <= r[1].hi; ++j)
        {
          const Real iy = m.ax[1].inv_h[static_cast<std::size_t>(j)] * ch;
          const Real iz = m.ax[2].inv_h[static_cast<std::size_t>(k)] * ch;
          const std::size_t n0 = s.index(0, j, k);
          Real *__restrict h = hx + n0;
          const Real *__restrict ez0 = ez + n0;
          const Real *__restrict ey0 = ey + n0;
          for (int i = r[0].lo; i <= r[0].hi; ++i)
            h[i] -= (ez0[i + sy] - ez0[i]) * iy - (ey0[i + sz] - ey0[i]) * iz;
        }
    }
    // Hy: curl_y = dEx/dz - dEz/dx
    {
      const auto &r = m.h_range[1];
      for (int k = std::max(k0, r[2].lo); k <= std::min(k1 - 1, r[2].hi); ++k)
        for (int j = r[1].lo; j <= r[1].hi; ++j)
        {
          const Real iz = m.ax[2].inv_h[static_cast<std::size_t>(k)] * ch;
          const std::size_t n0 = s.index(0, j, k);
          Real *__restrict h = hy + n0;
          const Real *__restrict ex0 = ex + n0;
          const Real *__restrict ez0 = ez + n0;
          for (int i = r[0].lo; i <= r[0].hi; ++i)
            h[i] -= (ex0[i + sz] - ex0[i]) * iz - (ez0[i + 1] - ez0[i]) * ihx[i] * ch;
        }
    }
    // Hz: curl_z = dEy/dx - dEx/dy
    {
      const auto &r = m.h_range[2];
      for (int k = std::max(k0, r[2].lo); k <= std::min(k1 - 1, r[2].hi); ++k)
        for (int j = r[1].lo; j <= r[1].hi; ++j)
        {
          const Real iy = m.ax[1].inv_h[static_cast<std::size_t>(j)] * ch;
          const std::size_t n0 = s.index(0, j, k);
          Real *__restrict h = hz + n0;
          const Real *__restrict ex0 = ex + n0;
          const Real *__restrict ey0 = ey + n0;
          for (int i = r[0].lo; i <= r[0].hi; ++i)
            h[i] -= (ey0[i + 1] - ey0[i]) * ihx[i] * ch - (ex0[i + sy] - ex0[i]) * iy;
        }
    }
    for (PsiSlab<Real> &p : m.psi_h)
      apply_psi<Real, true>(p, m.ax[p.axis], m.h_range[p.comp], s, fields_.e[p.other].data(), fields_.h[p.comp].data(),
                      nullptr, mats_.id[p.comp].data(), ch, k0, k1);
  });
}

template <class Real>
void BasicSimulation<Real>::update_e()
{
  const GridSpec &s = mats_.spec;
  Impl &m = *impl_;
  const std::ptrdiff_t sy = static_cast<std::ptrdiff_t>(s.stride_y());
  const std::ptrdiff_t sz = static_cast<std::ptrdiff_t>(s.stride_z());
  Real *ex = fields_.e[0].data();
  Real *ey = fields_.e[1].data();
  Real *ez = fields_.e[2].data();
  const Real *hx = fields_.h[0].data();
  const Real *hy = fields_.h[1].data();
  const Real *hz = fields_.h[2].data();
  const Real *__restrict iex = m.ax[0].inv_e.data();
  const Real *ca = m.ca.data();
  const Real *cb = m.cb.data();
  const std::uint8_t *idx_ = mats_.id[0].data();
  const std::uint8_t *idy_ = mats_.id[1].data();
  const std::uint8_t *idz_ = mats_.id[2].data();

  // Offsets to the neighbour at p - 1, wrapping on periodic axes.
  const std::ptrdiff_t wrap_x = m.ax[0].periodic ? -(s.nx - 1) : 1;
  auto back_y = [&](int j) -> std::ptrdiff_t { return (j == 0 && m.ax[1].periodic) ? -(s.ny - 1) * sy : sy; };
  auto back_z = [&](int k) -> std::ptrdiff_t { return (k == 0 && m.ax[2].periodic) ? -(s.nz - 1) * sz : sz; };

  for_each_k(*pool_, s.nz + 1, [&](int k0, int k1) {
    Real check = 0;
    // Ex: curl_x = dHz/dy - dHy/dz
    {
      const auto &r = m.e_range[0];
      for (int k = std::max(k0, r[2].lo); k <= std::min(k1 - 1, r[2].hi); ++k)
      {
        const std::ptrdiff_t oz = back_z(k);
        for (int j = r[1].lo; j <= r[1].hi; ++j)
        {
          const std::ptrdiff_t oy = back_y(j);
          const Real iy = m.ax[1].inv_e[static_cast<std::size_t>(j)];
          const Real iz = m.ax[2].inv_e[static_cast<std::size_t>(k)];
          const std::size_t n0 = s.index(0, j, k);
          Real *__restrict e = ex + n0;
          const std::uint8_t *__restrict id = idx_ + n0;
          const Real *__restrict hz0 = hz + n0;
          const Real *__restrict hy0 = hy + n0;
#pragma omp simd reduction(+ : check)
          for (int i = r[0].lo; i <= r[0].hi; ++i)
          {
            const Real curl = (hz0[i] - hz0[i - oy]) * iy - (hy0[i] - hy0[i - oz]) * iz;
            e[i] = ca[id[i]] * e[i] + cb[id[i]] * curl;
            check += e[i] * Real(0);
          }
        }
      }
    }
    // Ey: curl_y = dHx/dz - dHz/dx
    {
      const auto &r = m.e_range[1];
      for (int k = std::max(k0, r[2].lo); k <= std::min(k1 - 1, r[2].hi); ++k)
      {
        const std::ptrdiff_t oz = back_z(k);
        const Real iz = m.ax[2].inv_e[static_cast<std::size_t>(k)];
        for (int j = r[1].lo; j <= r[1].hi; ++j)
        {
          const std::size_t n0 = s.index(0, j, k);
          Real *__restrict e = ey + n0;
          const std::uint8_t *__restrict id = idy_ + n0;
          const Real *__restrict hx0 = hx + n0;
          const Real *__restrict hz0 = hz + n0;
          int i_start = r[0].lo;
          if (i_start == 0)
          {
            const Real curl = (hx0[0] - hx0[-oz]) * iz - (hz0[0] - hz0[-wrap_x]) * iex[0];
            e[0] = ca[id[0]] * e[0] + cb[id[0]] * curl;
            check += e[0] * Real(0);
            i_start = 1;
          }
#pragma omp simd reduction(+ : check)
          for (int i = i_start; i <= r[0].hi; ++i)
          {
            const Real curl = (hx0[i] - hx0[i - oz]) * iz - (hz0[i] - hz0[i - 1]) * iex[i];
            e[i] = ca[id[i]] * e[i] + cb[id[i]] * curl;
            check += e[i] * Real(0);
          }
        }
      }
    }
    // Ez: curl_z = dHy/dx - dHx/dy
    {
      const auto &r = m.e_range[2];
      for (int k = std::max(k0, r[2].lo); k <= std::min(k1 - 1, r[2].hi); ++k)
        for (int j = r[1].lo; j <= r[1].hi; ++j)
        {
          const std::ptrdiff_t oy = back_y(j);
          const Real iy = m.ax[1].inv_e[static_cast<std::size_t>(j)];
          const std::size_t n0 = s.index(0, j, k);
          Real *__restrict e = ez + n0;
          const std::uint8_t *__restrict id = idz_ + n0;
          const Real *__restrict hx0 = hx + n0;
          const Real *__restrict hy0 = hy + n0;
          int i_start = r[0].lo;
          if (i_start == 0)
          {
            const Real curl = (hy0[0] - hy0[-wrap_x]) * iex[0] - (hx0[0] - hx0[-oy]) * iy;
            e[0] = ca[id[0]] * e[0] + cb[id[0]] * curl;
            check += e[0] * Real(0);
            i_start = 1;
          }
#pragma omp simd reduction(+ : check)
          for (int i = i_start; i <= r[0].hi; ++i)
          {
            const Real curl = (hy0[i] - hy0[i - 1]) * iex[i] - (hx0[i] - hx0[i - oy]) * iy;
            e[i] = ca[id[i]] * e[i] + cb[id[i]] * curl;
            check += e[i] * Real(0);
          }
        }
    }
    for (PsiSlab<Real> &p : m.psi_e)
      check += apply_psi<Real, false>(p, m.ax[p.axis], m.e_range[p.comp], s, fields_.h[p.other].data(),
                                fields_.e[p.comp].data(), cb, mats_.id[p.comp].data(), 0.0, k0, k1);
    m.chunk_check[static_cast<std::size_t>(k0)] = check;
  });
}

template <class Real>
void BasicSimulation<Real>::apply_periodic_copies_e()
{
  const GridSpec &s = mats_.spec;
  const std::array<int, 3> n{s.nx, s.ny, s.nz};
  for (int a = 0; a < 3; ++a)
  {
    if (!impl_->ax[a].periodic)
      continue;
    for (int c = 0; c < 3; ++c)
    {
      if (c == a)
        continue;
      auto &e = fields_.e[c];
      std::array<int, 3> q{};
      // Iterate over the face a = n[a] and copy from a = 0.
      const int b1 = (a + 1) % 3, b2 = (a + 2) % 3;
      for (q[b2] = 0; q[b2] <= n[b2]; ++q[b2])
        for (q[b1] = 0; q[b1] <= n[b1]; ++q[b1])
        {
          q[a] = 0;
          const std::size_t src = s.index(q[0], q[1], q[2]);
          q[a] = n[a];
          e[s.index(q[0], q[1], q[2])] = e[src];
        }
    }
  }
}

template <class Real>
double BasicSimulation<Real>::compute_interleaved_energy(const std::array<std::vector<Real>, 3> &h_prev) const
{
  const GridSpec &s = mats_.spec;
  const Impl &m = *impl_;
  const double dv = s.dx * s.dy * s.dz;
  const std::array<int, 3> n{s.nx, s.ny, s.nz};
  std::vector<double> plane(static_cast<std::size_t>(s.nz + 1), 0.0);
  pool_->for_each(static_cast<std::size_t>(s.nz + 1), [&](std::size_t b, std::size_t e) {
    for (std::size_t kk = b; kk < e; ++kk)
    {
      const int k = static_cast<int>(kk);
      double acc = 0.0;
      for (int c = 0; c < 3; ++c)
      {
        const int khi = m.ax[2].periodic ? n[2] - 1 : n[2];
        if (k > khi)
          continue;
        const int jhi = m.ax[1].periodic ? n[1] - 1 : n[1];
        const int ihi = m.ax[0].periodic ? n[0] - 1 : n[0];
        for (int j = 0; j <= jhi; ++j)
          for (int i = 0; i <= ihi; ++i)
          {
            const std::size_t q = s.index(i, j, k);
            const double ev = fields_.e[c][q];
            acc += m.eps[mats_.id[c][q]] * ev * ev;
            acc += mu0 * h_prev[c][q] * fields_.h[c][q];
          }
      }
      plane[kk] = acc;
    }
  });
  double total = 0.0;
  for (double p : plane)
    total += p;
  return 0.5 * total * dv;
}

template <class Real>
double BasicSimulation<Real>::total_energy() const
{
  const GridSpec &s = mats_.spec;
  const Impl &m = *impl_;
  const double dv = s.dx * s.dy * s.dz;
  const std::array<int, 3> n{s.nx, s.ny, s.nz};
  std::vector<double> plane(static_cast<std::size_t>(s.nz + 1), 0.0);
  const int khi = m.ax[2].periodic ? n[2] - 1 : n[2];
  const int jhi = m.ax[1].periodic ? n[1] - 1 : n[1];
  const int ihi = m.ax[0].periodic ? n[0] - 1 : n[0];
  pool_->for_each(static_cast<std::size_t>(khi + 1), [&](std::size_t b, std::size_t e) {
    for (std::size_t kk = b; kk < e; ++kk)
    {
      const int k = static_cast<int>(kk);
      double we = 0.0, wh = 0.0;
      for (int c = 0; c < 3; ++c)
      {
        const Real *ef = fields_.e[c].data();
        const Real *hf = fields_.h[c].data();
        const std::uint8_t *id = mats_.id[c].data();
        for (int j = 0; j <= jhi; ++j)
        {
          const std::size_t n0 = s.index(0, j, k);
          for (int i = 0; i <= ihi; ++i)
          {
            const double ev = ef[n0 + i];
            const double hv = hf[n0 + i];
            we += m.eps[id[n0 + i]] * ev * ev;
            wh += hv * hv;
          }
        }
      }
      plane[kk] = we + mu0 * wh;
    }
  });
  double total = 0.0;
  for (double p : plane)
    total += p;
  return 0.5 * total * dv;
}

template <class Real>
void BasicSimulation<Real>::step()
{
  const GridSpec &s = mats_.spec;
  Impl &m = *impl_;
  const long n = fields_.step;
  const double t_half = (static_cast<double>(n) + 0.5) * s.dt;

  if (track_energy_)
    m.h_prev = fields_.h;

  update_h();

  if (track_energy_)
    interleaved_energy_ = compute_interleaved_energy(m.h_prev);

  PortState *port = port_.get();
  if (port)
    for (std::size_t q = 0; q < port->cells.size(); ++q)
      port->old[q] = fields_.e[2][port->cells[q]];

  update_e();

  for (const SoftSource &src : soft_sources_)
    fields_.e[src.comp][src.index] += static_cast<Real>(src.waveform.value(t_half));

  if (port)
  {
    // Port columns are away from the CPML, so the plain curl applies.
    const std::size_t sy = s.stride_y();
    const double vs = port->waveform.value(t_half);
    const double per_cell = vs / port->cells_per_column;
    const Real *hx = fields_.h[0].data();
    const Real *hy = fields_.h[1].data();
    double sum = 0.0;
    for (std::size_t q = 0; q < port->cells.size(); ++q)
    {
      const std::size_t c = port->cells[q];
      const Real curl = (hy[c] - hy[c - 1]) / s.dx - (hx[c] - hx[c - sy]) / s.dy;
      const double e_new = port->ca[q] * port->old[q] + port->cb[q] * curl + port->cs[q] * per_cell;
      fields_.e[2][c] = static_cast<Real>(e_new);
      sum += 0.5 * (port->old[q] + e_new);
    }
    const double v = -sum * s.dz / static_cast<double>(port->resolved.columns.size());
    record_.v.push_back(v);
    record_.i.push_back((vs - v) / port->resolved.reference_impedance);
    record_.v_inc.push_back(0.5 * vs);
  }

  apply_periodic_copies_e();

  double check = 0.0;
  for (double c : m.chunk_check)
    check += c;
  std::fill(m.chunk_check.begin(), m.chunk_check.end(), 0.0);
  if (!std::isfinite(check))
    throw DivergenceError(n + 1, "non-finite field value at step " + std::to_string(n + 1));

  fields_.step = n + 1;
  fields_.time = static_cast<double>(n + 1) * s.dt;

  if (surface_ && (n + 1) % surface_stride_ == 0)
    record_surface(fields_, *surface_, fields_.time, t_half, s.dt * surface_stride_);
}

template class BasicSimulation<double>;
template class BasicSimulation<float>;

namespace
{

template <class Real>
RunResult run_impl(const AntennaDesign &design, const RunOptions &opts)
{
  validate(design);
  validate(opts.cpml);
  validate(opts.source);

  AutoGridOptions grid = opts.grid;
  grid.cpml_cells = opts.cpml.thickness;
  RunResult result;
  result.plan = auto_grid(design, grid);
  const GridSpec &s = result.plan.spec;

  MaterialGrid mats = assign_materials(design, result.plan);
  BasicSimulation<Real> sim(std::move(mats), Boundaries{}, opts.cpml, opts.threads);
  sim.set_port(design.port, opts.source);
  if (!opts.farfield_freqs.empty())
  {
    const double f_top = *std::max_element(opts.farfield_freqs.begin(), opts.farfield_freqs.end());
    const int stride =
      std::max(1, static_cast<int>(std::floor(1.0 / (opts.surface_sample_factor * f_top * s.dt))));
    sim.set_surface(result.plan.huygens, opts.farfield_freqs, stride);
  }

  const double t_off = opts.source.end_time();
  const int interval = std::max(1, opts.energy_interval);
  const auto start = std::chrono::steady_clock::now();
  double peak = 0.0;
  double energy = 0.0;
  long last_progress = 0;
  for (long n = 0; n < opts.max_steps; ++n)
  {
    try
    {
      sim.step();
    }
    catch (const DivergenceError &err)
    {
      result.reason = Termination::Diverged;
      result.diverged_step = err.step();
      result.steps = err.step();
      break;
    }
    result.steps = n + 1;
    const double t = sim.fields().time;
    if ((n + 1) % interval != 0 && n + 1 != opts.max_steps)
      continue;
    energy = sim.total_energy();
    peak = std::max(peak, energy);
    if (opts.run_log)
    {
      char line[160];
      std::snprintf(line, sizeof line, "{\"step\": %ld, \"time\": %.9e, \"energy\": %.9e}\n", n + 1, t, energy);
      *opts.run_log << line;
    }
    if (opts.progress && (n + 1 - last_progress >= 20 * interval))
    {
      last_progress = n + 1;
      const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      const double eta = elapsed / static_cast<double>(n + 1) * static_cast<double>(opts.max_steps - n - 1);
      char line[200];
      std::snprintf(line, sizeof line, "step %ld  t=%.3e s  energy=%.3e J (%.2e of peak)  elapsed %.0f s  eta <= %.0f s\n",
                    n + 1, t, energy, peak > 0.0 ? energy / peak : 0.0, elapsed, eta);
      *opts.progress << line << std::flush;
    }
    if (t > t_off && energy <= opts.energy_threshold * peak)
    {
      result.reason = Termination::EnergyConverged;
      break;
    }
  }
  result.peak_energy = peak;
  result.final_energy = energy;
  result.port = sim.port_record();
  if (sim.surface())
    result.surface = sim.take_surface();
  return result;
}

}  // namespace

RunResult run(const AntennaDesign &design, const RunOptions &opts)
{
  return opts.precision == Precision::Double ? run_impl<double>(design, opts) : run_impl<float>(design, opts);
}

template <class Real>
void write_field_slice(std::ostream &out, const BasicFieldState<Real> &fields, int comp_index, int axis, int plane)
{
  const GridSpec &s = fields.spec;
  if (comp_index < 0 || comp_index > 5 || axis < 0 || axis > 2)
    throw Error(ErrorKind::Config, "invalid field slice selection");
  const std::array<int, 3> n{s.nx, s.ny, s.nz};
  if (plane < 0 || plane > n[axis])
    throw Error(ErrorKind::Config, "slice plane outside the grid");
  static const char *names[] = {"Ex", "Ey", "Ez", "Hx", "Hy", "Hz"};
  const auto &data = comp_index < 3 ? fields.e[comp_index] : fields.h[comp_index - 3];
  const int a1 = axis == 0 ? 1 : 0;
  const int a2 = axis == 2 ? 1 : 2;
  char header[256];
  std::snprintf(header, sizeof header, "patchfdtd-slice 1\ncomponent %s\naxis %c\nplane %d\nshape %d %d\nstep %ld\nend\n",
                names[comp_index], "xyz"[axis], plane, n[a1] + 1, n[a2] + 1, fields.step);
  out << header;
  std::vector<double> row(static_cast<std::size_t>(n[a1] + 1));
  std::array<int, 3> q{};
  q[axis] = plane;
  for (q[a2] = 0; q[a2] <= n[a2]; ++q[a2])
  {
    for (q[a1] = 0; q[a1] <= n[a1]; ++q[a1])
      row[static_cast<std::size_t>(q[a1])] = data[s.index(q[0], q[1], q[2])];
    out.write(reinterpret_cast<const char *>(row.data()), static_cast<std::streamsize>(row.size() * sizeof(double)));
  }
  if (!out)
    throw Error(ErrorKind::Io, "failed to write field slice");
}

template void write_field_slice(std::ostream &, const BasicFieldState<double> &, int, int, int);
template void write_field_slice(std::ostream &, const BasicFieldState<float> &, int, int, int);

}  // namespace patchfdtd
