// SPDX-License-Identifier: Apache-2.0

#ifndef PATCHFDTD_FARFIELD_HPP
#define PATCHFDTD_FARFIELD_HPP

#include "patchfdtd/yee_grid.hpp"

#include <array>
#include <complex>
#include <vector>

namespace patchfdtd
{

using cplx = std::complex<double>;

// One face of the Huygens box. The face lies on node plane `plane` of the
// normal axis; (u, v) are the two tangential axes in cyclic order with the
// normal, so u x v = n. The face is tiled by nu x nv patches of one cell each
// and tangential E and H are collocated at the patch centres.
struct SurfaceFace
{
  int normal = 0;  // 0, 1, 2 for x, y, z
  int side = 1;    // outward normal is side * e_normal
  int plane = 0;
  int u = 1, v = 2;
  int u0 = 0, v0 = 0;  // first node index along u and v
  int nu = 0, nv = 0;
  // Phasors, index ((p + nu * q) * nfreq + f) * 4 + c with c = Eu, Ev, Hu, Hv.
  std::vector<cplx> data;

  cplx &at(int p, int q, std::size_t f, int c, std::size_t nfreq)
  {
    return data[((static_cast<std::size_t>(p) + static_cast<std::size_t>(nu) * q) * nfreq + f) * 4 + c];
  }
  const cplx &at(int p, int q, std::size_t f, int c, std::size_t nfreq) const
  {
    return data[((static_cast<std::size_t>(p) + static_cast<std::size_t>(nu) * q) * nfreq + f) * 4 + c];
  }
};

// Closed box of running-DFT phasors, X(f) = sum_n x(t_n) exp(-j 2 pi f t_n) w,
// with w the sample weight (dt times the decimation stride).
struct HuygensSurface
{
  GridSpec spec;
  IndexBox box;
  std::vector<double> freqs;
  std::array<SurfaceFace, 6> faces;  // -x, +x, -y, +y, -z, +z

  // Centre of patch (p, q) on face f, in metres.
  std::array<double, 3> patch_center(const SurfaceFace &f, int p, int q) const;
  double patch_area(const SurfaceFace &f) const;
};

HuygensSurface make_surface(const GridSpec &spec, const IndexBox &box, std::vector<double> freqs);

// Accumulates one sample: E taken at t_e, H at t_h, each weighted by `weight`.
template <class Real>
void record_surface(const BasicFieldState<Real> &fields, HuygensSurface &surface, double t_e, double t_h,
                    double weight);

// Lookup of a recorded frequency; throws MissingFrequency when absent
// (relative tolerance 1e-9).
std::size_t frequency_index(const HuygensSurface &surface, double f);

struct DirectionGrid
{
  int n_theta = 91;  // theta = 0 .. 180 deg inclusive
  int n_phi = 180;   // phi = 0 .. 360 deg exclusive

  double dtheta() const;
  double dphi() const;
  double theta(int i) const { return i * dtheta(); }
  double phi(int j) const { return j * dphi(); }

  static DirectionGrid with_step_deg(double step);
};

struct FarFieldPattern
{
  double frequency = 0.0;
  DirectionGrid grid;
  std::vector<double> intensity;  // U(theta, phi), index i_theta + n_theta * i_phi
  std::vector<double> gain_dbi;   // directivity until gain() normalizes by accepted power
  double radiated_power = 0.0;
  double accepted_power = 0.0;
  double max_gain_dbi = 0.0;
  double max_theta = 0.0;  // radians
  double max_phi = 0.0;

  double intensity_at(int it, int ip) const { return intensity[static_cast<std::size_t>(it + grid.n_theta * ip)]; }
  double gain_at(int it, int ip) const { return gain_dbi[static_cast<std::size_t>(it + grid.n_theta * ip)]; }
};

// Builds a pattern from sampled intensity: trapezoidal quadrature of U over
// the sphere gives the radiated power, and gain_dbi holds the directivity.
FarFieldPattern pattern_from_intensity(double frequency, const DirectionGrid &grid, std::vector<double> intensity);

struct NtffOptions
{
  DirectionGrid grid;
  // Patches are summed in blocks no larger than wavelength / block_fraction
  // before the phase factor is applied; 0 disables blocking.
  double block_fraction = 40.0;
};

// Equivalence-principle transformation: J = n x H, M = -n x E on the box,
// radiation vectors N and L, and
//   U = k^2 / (32 pi^2 eta) (|L_phi + eta N_theta|^2 + |L_theta - eta N_phi|^2).
FarFieldPattern ntff(const HuygensSurface &surface, double f, const NtffOptions &opts = {});

// Time-averaged Poynting flux out of the box, 1/2 Re sum (E x H*) . n dA.
double surface_power(const HuygensSurface &surface, double f);

// G = 4 pi U / P_accepted, in dBi.
FarFieldPattern gain(FarFieldPattern pattern, double accepted_power);

enum class CutPlane
{
  E,  // phi = 90 deg, the plane of a y-directed feed
  H,  // phi = 0
};

struct PatternCut
{
  std::vector<double> theta_deg;  // -180 .. 180; negative angles are phi + 180
  std::vector<double> gain_dbi;
};

PatternCut pattern_cut(const FarFieldPattern &pattern, CutPlane plane);
PatternCut pattern_cut_at_phi(const FarFieldPattern &pattern, double phi);

}  // namespace patchfdtd

#endif  // PATCHFDTD_FARFIELD_HPP
