// SPDX-License-Identifier: Apache-2.0

#ifndef PATCHFDTD_FDTD_ENGINE_HPP
#define PATCHFDTD_FDTD_ENGINE_HPP

#include "patchfdtd/farfield.hpp"
#include "patchfdtd/geometry.hpp"
#include "patchfdtd/worker_pool.hpp"
#include "patchfdtd/yee_grid.hpp"

#include <array>
#include <complex>
#include <iosfwd>
#include <memory>
#include <optional>
#include <vector>

namespace patchfdtd
{

// Convolutional PML (stretched coordinates with kappa and the CFS alpha term).
// Profiles are polynomial in depth: sigma = sigma_max rho^m,
// kappa = 1 + (kappa_max - 1) rho^m, alpha = alpha_max (1 - rho), with
// sigma_max = sigma_max_ratio * 0.8 (m + 1) / (eta0 d).
struct CpmlParams
{
  int thickness = 10;
  double order = 3.0;
  double sigma_max_ratio = 1.0;
  double kappa_max = 5.0;
  double alpha_max = 0.05;  // S/m

  bool operator==(const CpmlParams &) const = default;
};

void validate(const CpmlParams &p);

enum class BoundaryKind
{
  Pec,       // tangential E pinned to zero on the outer faces
  Cpml,      // absorbing layer of CpmlParams::thickness cells backed by PEC
  Periodic,  // node 0 and node n are the same plane
};

struct Boundaries
{
  std::array<BoundaryKind, 3> axis{BoundaryKind::Cpml, BoundaryKind::Cpml, BoundaryKind::Cpml};
};

// v(t) = A exp(-(t - t0)^2 / (2 sigma^2)) sin(2 pi f0 (t - t0)), an odd pulse
// about t0 with no DC content. `bandwidth` is the full width between the
// -20 dB points of the spectrum; `delay` = 0 selects t0 = 6 sigma_t().
struct SourceWaveform
{
  double f0 = 4.25e9;
  double bandwidth = 6.5e9;
  double delay = 0.0;
  double amplitude = 1.0;

  double sigma_t() const;
  double t0() const;
  double value(double t) const;
  // The pulse is cut to t0 +- 6 s; zero after end_time().
  double end_time() const { return t0() + 6.0 * sigma_t(); }
  // Continuous-time spectrum of the untruncated pulse.
  std::complex<double> spectrum(double f) const;
  // Relative spectral level 20 log10(|V(f)| / |V(f0)|) in dB.
  double level_db(double f) const;

  bool operator==(const SourceWaveform &) const = default;
};

// Rejects non-positive parameters and a DC level above -60 dB.
void validate(const SourceWaveform &w);

// Port voltage and current sampled once per step at the midpoint of the E
// update, t_n = (n + 1/2) dt, where the Thevenin element relation
// v = v_s - Z0 i holds exactly.
struct PortRecord
{
  double dt = 0.0;
  double t_start = 0.0;  // time of the first sample
  double reference_impedance = 50.0;
  std::vector<double> v;
  std::vector<double> i;
  std::vector<double> v_inc;  // v_s / 2

  std::size_t size() const { return v.size(); }
  double time(std::size_t n) const { return t_start + static_cast<double>(n) * dt; }
  bool operator==(const PortRecord &) const = default;
};

enum class Termination
{
  StepsExhausted,
  EnergyConverged,
  Diverged,
};

const char *to_string(Termination t);

// Lumped port resolved onto the grid: parallel vertical Ez columns between
// the ground plane and the conductor above it.
struct ResolvedPort
{
  std::vector<std::array<int, 2>> columns;  // node (i, j)
  int k_lo = 0, k_hi = 0;                   // Ez edges k_lo .. k_hi - 1
  double reference_impedance = 50.0;
};

ResolvedPort resolve_port(const PortSpec &port, const MaterialGrid &mats);

// One time-domain simulation on a fixed grid. The step is the usual leapfrog:
// H from curl E, then E from curl H with the CPML convolution terms and the
// lumped-port element. Real is the storage type of the fields; reductions
// (energy, port voltage, surface phasors) are carried out in double.
template <class Real>
class BasicSimulation
{
public:
  using Fields = BasicFieldState<Real>;

  BasicSimulation(MaterialGrid mats, Boundaries boundaries, CpmlParams cpml, int threads = 1);
  BasicSimulation(MaterialGrid mats, Boundaries boundaries, int threads = 1);
  ~BasicSimulation();

  BasicSimulation(const BasicSimulation &) = delete;
  BasicSimulation &operator=(const BasicSimulation &) = delete;

  void set_port(const PortSpec &port, const SourceWaveform &waveform);
  // Additive (soft) point source on one E edge: E += amplitude * w(t) at each E update.
  void add_soft_source(int comp, int i, int j, int k, const SourceWaveform &waveform);
  // Running DFT of the box every `stride` steps.
  void set_surface(const IndexBox &box, std::vector<double> freqs, int stride);
  // Keeps the conserved leapfrog energy eps|E^n|^2 + mu H^{n-1/2}.H^{n+1/2}
  // (computed inside step(), costs one extra H copy).
  void track_interleaved_energy(bool on);

  void step();

  Fields &fields() { return fields_; }
  const Fields &fields() const { return fields_; }
  const MaterialGrid &materials() const { return mats_; }
  const GridSpec &spec() const { return mats_.spec; }
  const PortRecord &port_record() const { return record_; }
  const ResolvedPort *port() const;
  const HuygensSurface *surface() const { return surface_ ? &*surface_ : nullptr; }
  HuygensSurface take_surface();

  // 1/2 sum eps E^2 dV + 1/2 sum mu0 H^2 dV over the stored fields.
  double total_energy() const;
  // Conserved energy at the E time level the last step started from (NaN
  // before the first step or when tracking is off).
  double interleaved_energy() const { return interleaved_energy_; }

private:
  struct Impl;
  struct PortState;
  struct SoftSource
  {
    int comp;
    std::size_t index;
    SourceWaveform waveform;
  };

  void update_h();
  void update_e();
  void apply_periodic_copies_e();
  double compute_interleaved_energy(const std::array<std::vector<Real>, 3> &h_prev) const;

  MaterialGrid mats_;
  Boundaries boundaries_;
  CpmlParams cpml_;
  Fields fields_;
  std::unique_ptr<WorkerPool> pool_;
  std::unique_ptr<Impl> impl_;
  std::unique_ptr<PortState> port_;
  std::vector<SoftSource> soft_sources_;
  std::optional<HuygensSurface> surface_;
  int surface_stride_ = 1;
  PortRecord record_;
  bool track_energy_ = false;
  double interleaved_energy_;
};

using Simulation = BasicSimulation<double>;
using SimulationF = BasicSimulation<float>;

enum class Precision
{
  Single,
  Double,
};

struct RunOptions
{
  AutoGridOptions grid;
  CpmlParams cpml;
  SourceWaveform source;
  long max_steps = 200000;
  double energy_threshold = 1e-5;  // relative to the peak, checked after the source ends
  int energy_interval = 50;        // steps between energy evaluations
  int threads = 1;
  Precision precision = Precision::Single;
  std::vector<double> farfield_freqs;  // empty: no Huygens surface
  double surface_sample_factor = 20.0;  // surface sampled at >= factor * max far-field frequency
  std::ostream *progress = nullptr;     // human-readable progress lines
  std::ostream *run_log = nullptr;      // JSON lines {"step", "time", "energy"}
};

struct RunResult
{
  GridPlan plan;
  PortRecord port;
  std::optional<HuygensSurface> surface;
  Termination reason = Termination::StepsExhausted;
  long steps = 0;
  long diverged_step = -1;
  double peak_energy = 0.0;
  double final_energy = 0.0;
};

// Grid, materials and port from the design, then time stepping until the
// field energy falls below energy_threshold * peak after the source ends,
// or max_steps. A divergence is reported in the result (reason Diverged).
RunResult run(const AntennaDesign &design, const RunOptions &opts);

// Field slice: a text header ending in a line "end", then the values as
// native float64, first in-plane axis fastest.
template <class Real>
void write_field_slice(std::ostream &out, const BasicFieldState<Real> &fields, int comp_index, int axis, int plane);

}  // namespace patchfdtd

#endif  // PATCHFDTD_FDTD_ENGINE_HPP
