// SPDX-License-Identifier: Apache-2.0

#include "patchfdtd/validation.hpp"

#include "patchfdtd/cavity_model.hpp"
#include "patchfdtd/constants.hpp"
#include "patchfdtd/error.hpp"
#include "patchfdtd/farfield.hpp"
#include "patchfdtd/fdtd_engine.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>
#include <thread>

namespace patchfdtd::validation
{

namespace fs = std::filesystem;
using constants::c0;
using constants::eps0;
using constants::eta0;
using constants::pi;

namespace
{

std::string fmt(const char *format, double v)
{
  char buf[64];
  std::snprintf(buf, sizeof buf, format, v);
  return buf;
}

std::string read_file(const fs::path &p)
{
  std::ifstream in(p, std::ios::binary);
  if (!in)
    throw Error(ErrorKind::Io, "cannot read '" + p.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

GridSpec cube_spec(int n, double d, double courant)
{
  GridSpec s;
  s.dx = s.dy = s.dz = d;
  s.nx = s.ny = s.nz = n;
  s.dt = cfl_timestep(s, courant);
  return s;
}

}  // namespace

// ---------------------------------------------------------------------------
// Rectangular patch against the cavity model

RunConfig rect_patch_config(const std::string &preset)
{
  RunConfig c = fixture_config("rect_patch", preset);
  c.farfield.band_points = 0;
  c.outputs.pattern_csv = false;
  return c;
}

double scaled_runtime_budget(int threads)
{
  return limits::resonance_runtime_s * 8.0 / std::max(1, threads);
}

ResonanceCheck rect_patch_resonance(const std::string &preset, const HarnessOptions &opts)
{
  const RunConfig c = rect_patch_config(preset);
  ResonanceCheck r;
  r.f_cavity = fixture_cavity_frequency("rect_patch");
  r.report = simulate(c, opts);
  r.runtime_s = r.report.compute_runtime_s;
  r.threads = r.report.compute_threads;
  const auto &g = r.report.summary.at("grid");
  r.grid.nx = g.at("nx");
  r.grid.ny = g.at("ny");
  r.grid.nz = g.at("nz");
  r.grid.dx = g.at("dx");
  r.grid.dy = g.at("dy");
  r.grid.dz = g.at("dz");
  r.grid.dt = g.at("dt");
  // Fundamental: the lowest-frequency dip.
  double f = std::numeric_limits<double>::infinity();
  for (const auto &res : r.report.summary.at("resonances"))
    f = std::min(f, res.at("f_res").get<double>());
  if (!std::isfinite(f))
    throw Error(ErrorKind::NoBandwidth, "rectangular patch shows no resonance below -10 dB");
  r.f_fdtd = f;
  r.rel_error = std::abs(f - r.f_cavity) / r.f_cavity;
  return r;
}

double fixture_cavity_frequency(const std::string &fixture)
{
  const AntennaDesign d = build_fixture(FixtureRef{fixture, {}});
  for (const auto &rect : d.layout.rects)
    if (rect.label == "patch")
      return cavity::resonant_frequency(
        {rect.width, rect.height, d.stack.substrate_height, d.stack.substrate.rel_permittivity});
  throw Error(ErrorKind::Geometry, "fixture has no patch rectangle");
}

// ---------------------------------------------------------------------------
// Hertzian dipole

DipoleCheck hertzian_dipole(double cells_per_wavelength, double half_width_wavelengths, double angle_step_deg)
{
  const double f = 1.0e9;
  const double lambda = c0 / f;
  const double k = 2.0 * pi / lambda;
  const double d = lambda / cells_per_wavelength;
  const int half = static_cast<int>(std::lround(half_width_wavelengths * cells_per_wavelength));
  GridSpec spec = cube_spec(2 * half + 2, d, 0.99);
  const double centre = (half + 1) * d;
  IndexBox box{{1, 1, 1}, {2 * half + 1, 2 * half + 1, 2 * half + 1}};
  HuygensSurface s = make_surface(spec, box, {f});

  // Unit current moment along z; e^{+j w t} phasors.
  const cplx j{0.0, 1.0};
  auto fields = [&](const std::array<double, 3> &p, std::array<cplx, 3> &e, std::array<cplx, 3> &h) {
    const double x = p[0] - centre, y = p[1] - centre, z = p[2] - centre;
    const double r = std::sqrt(x * x + y * y + z * z);
    const double ct = z / r, st = std::sqrt(x * x + y * y) / r;
    const double cp = st > 0 ? x / (r * st) : 1.0, sp = st > 0 ? y / (r * st) : 0.0;
    const cplx g = std::exp(-j * k * r) / (4.0 * pi * r);
    const cplx jkr = j * k * r;
    const cplx er = eta0 * 2.0 * ct * g / r * (1.0 + 1.0 / jkr);
    const cplx et = j * eta0 * k * st * g * (1.0 + 1.0 / jkr - 1.0 / (k * r * k * r));
    const cplx hp = j * k * st * g * (1.0 + 1.0 / jkr);
    e = {er * st * cp + et * ct * cp, er * st * sp + et * ct * sp, er * ct - et * st};
    h = {-hp * sp, hp * cp, cplx{0.0, 0.0}};
  };
  for (auto &face : s.faces)
    for (int q = 0; q < face.nv; ++q)
      for (int p = 0; p < face.nu; ++p)
      {
        std::array<cplx, 3> e, h;
        fields(s.patch_center(face, p, q), e, h);
        face.at(p, q, 0, 0, 1) = e[face.u];
        face.at(p, q, 0, 1, 1) = e[face.v];
        face.at(p, q, 0, 2, 1) = h[face.u];
        face.at(p, q, 0, 3, 1) = h[face.v];
      }

  NtffOptions opts;
  opts.grid = DirectionGrid::with_step_deg(angle_step_deg);
  const FarFieldPattern pat = ntff(s, f, opts);
  DipoleCheck out;
  out.directivity_dbi = pat.max_gain_dbi;
  out.radiated_power = pat.radiated_power;
  out.exact_power = eta0 * k * k / (12.0 * pi);
  out.surface_power = surface_power(s, f);
  double u_max = 0.0;
  for (double u : pat.intensity)
    u_max = std::max(u_max, u);
  double acc = 0.0;
  std::size_t n = 0;
  for (int ip = 0; ip < pat.grid.n_phi; ++ip)
    for (int it = 0; it < pat.grid.n_theta; ++it)
    {
      const double st = std::sin(pat.grid.theta(it));
      const double diff = pat.intensity_at(it, ip) / u_max - st * st;
      acc += diff * diff;
      ++n;
    }
  out.pattern_rms = std::sqrt(acc / static_cast<double>(n));
  return out;
}

// ---------------------------------------------------------------------------
// CPML reflection

namespace
{

struct PointSourceRun
{
  std::vector<double> probe;
};

SourceWaveform cpml_test_pulse()
{
  SourceWaveform w;
  w.f0 = 15.0e9;
  w.bandwidth = 30.0e9;
  return w;
}

PointSourceRun point_source_run(int half, int probe_offset, const CpmlParams &cpml, long steps, int threads)
{
  const int t = cpml.thickness;
  const int n = 2 * (half + t);
  const GridSpec spec = cube_spec(n, 1.0e-3, 0.99);
  Simulation sim(vacuum_materials(spec), Boundaries{}, cpml, threads);
  const int c = n / 2;
  sim.add_soft_source(2, c, c, c, cpml_test_pulse());
  const std::size_t idx = spec.index(c + probe_offset, c, c);
  PointSourceRun out;
  out.probe.reserve(static_cast<std::size_t>(steps));
  for (long s = 0; s < steps; ++s)
  {
    sim.step();
    out.probe.push_back(sim.fields().e[2][idx]);
  }
  return out;
}

}  // namespace

CpmlCheck cpml_reflection(const CpmlParams &cpml, int threads)
{
  const int half = 15;
  const int probe = (3 * half + 2) / 4;
  const double d = 1.0e-3;
  const SourceWaveform w = cpml_test_pulse();
  // Gate: the entire pulse reflected from the test boundary.
  const double window = ((2 * half - probe) * d + 2.0 * w.t0() * c0) / c0 + 10.0 * d / c0;
  const double dt = cube_spec(1, d, 0.99).dt;
  const long steps = static_cast<long>(std::ceil(window / dt));
  const int half_ref = half + static_cast<int>(std::ceil(w.t0() * c0 / d)) + 12;

  CpmlParams ref_cpml;
  const PointSourceRun test = point_source_run(half, probe, cpml, steps, threads);
  const PointSourceRun ref = point_source_run(half_ref, probe, ref_cpml, steps, threads);
  double peak = 0.0, err = 0.0;
  for (long s = 0; s < steps; ++s)
  {
    peak = std::max(peak, std::abs(ref.probe[static_cast<std::size_t>(s)]));
    err = std::max(err, std::abs(test.probe[static_cast<std::size_t>(s)] - ref.probe[static_cast<std::size_t>(s)]));
  }
  CpmlCheck out;
  out.thickness = cpml.thickness;
  out.steps = steps;
  out.reflection_db = 20.0 * std::log10(std::max(err, 1e-300) / peak);
  return out;
}

// ---------------------------------------------------------------------------
// Energy

EnergyCheck energy_bookkeeping(int steps)
{
  const double d = 1.0e-3;
  GridSpec spec;
  spec.dx = spec.dy = spec.dz = d;
  spec.nx = 16;
  spec.ny = 14;
  spec.nz = 12;
  spec.dt = cfl_timestep(spec, 0.99);
  SourceWaveform w;
  w.f0 = 30.0e9;
  w.bandwidth = 40.0e9;

  auto block = [&](double eps_r, double sigma) {
    MaterialGrid m = vacuum_materials(spec);
    const double eps = eps_r * eps0;
    const double loss = sigma * spec.dt / (2.0 * eps);
    EdgeCoefficients c;
    c.eps = eps;
    c.sigma = sigma;
    c.ca = (1.0 - loss) / (1.0 + loss);
    c.cb = spec.dt / eps / (1.0 + loss);
    const std::uint8_t id = m.intern(c);
    for (int comp = 0; comp < 3; ++comp)
      for (int k = 3; k <= 8; ++k)
        for (int j = 3; j <= 9; ++j)
          for (int i = 8; i <= 13; ++i)
            m.id[comp][spec.index(i, j, k)] = id;
    return m;
  };
  const Boundaries pec{{BoundaryKind::Pec, BoundaryKind::Pec, BoundaryKind::Pec}};

  EnergyCheck out;
  out.steps = steps;
  {
    Simulation sim(block(4.0, 0.0), pec);
    sim.add_soft_source(2, 4, 5, 6, w);
    sim.track_interleaved_energy(true);
    while (sim.fields().time <= w.end_time() + spec.dt)
      sim.step();
    sim.step();
    const double w0 = sim.interleaved_energy();
    const double n0 = sim.total_energy();
    double drift = 0.0, naive = 0.0;
    for (int s = 0; s < steps; ++s)
    {
      sim.step();
      drift = std::max(drift, std::abs(sim.interleaved_energy() - w0) / w0);
      naive = std::max(naive, std::abs(sim.total_energy() - n0) / n0);
    }
    out.lossless_drift = drift;
    out.naive_variation = naive;
  }
  {
    Simulation sim(block(4.0, 0.2), pec);
    sim.add_soft_source(2, 4, 5, 6, w);
    sim.track_interleaved_energy(true);
    while (sim.fields().time <= w.end_time() + spec.dt)
      sim.step();
    sim.step();
    const double w0 = sim.interleaved_energy();
    double prev = w0;
    for (int s = 0; s < steps; ++s)
    {
      sim.step();
      const double cur = sim.interleaved_energy();
      if (cur > prev)
        ++out.lossy_increases;
      prev = cur;
    }
    out.lossy_monotone = out.lossy_increases == 0;
    out.lossy_final_ratio = prev / w0;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Slab convergence

std::complex<double> slab_reflection(double f, double eps_r, double thickness)
{
  const double n = std::sqrt(eps_r);
  const double r12 = (1.0 - n) / (1.0 + n);
  const double delta = 2.0 * pi * f / c0 * n * thickness;
  const cplx ph = std::exp(cplx{0.0, -2.0 * delta});
  return r12 * (1.0 - ph) / (1.0 - r12 * r12 * ph);
}

namespace
{

constexpr double slab_eps_r = 4.0;
constexpr double slab_thickness = 30.0e-3;

// 1-D line along x (periodic y and z of one cell), PEC ends, soft Ez source.
std::vector<double> slab_run(int cells_per_thickness, bool with_slab, double &dt)
{
  const double d = slab_thickness;
  const int m = cells_per_thickness;
  GridSpec spec;
  spec.dx = d / m;
  spec.dy = spec.dz = std::numeric_limits<double>::infinity();
  spec.nx = 80 * m;
  spec.ny = spec.nz = 1;
  spec.dt = cfl_timestep(spec, 0.5);
  dt = spec.dt;
  MaterialGrid mats = vacuum_materials(spec);
  if (with_slab)
  {
    EdgeCoefficients in, edge;
    in.eps = slab_eps_r * eps0;
    in.cb = spec.dt / in.eps;
    edge.eps = 0.5 * (slab_eps_r + 1.0) * eps0;
    edge.cb = spec.dt / edge.eps;
    const std::uint8_t id_in = mats.intern(in), id_edge = mats.intern(edge);
    for (int k = 0; k <= 1; ++k)
      for (int j = 0; j <= 1; ++j)
        for (int i = 40 * m; i <= 41 * m; ++i)
          mats.id[2][spec.index(i, j, k)] = (i == 40 * m || i == 41 * m) ? id_edge : id_in;
  }
  const Boundaries b{{BoundaryKind::Pec, BoundaryKind::Periodic, BoundaryKind::Periodic}};
  Simulation sim(std::move(mats), b);
  SourceWaveform w;
  w.f0 = 5.0e9;
  w.bandwidth = 6.0e9;
  for (int k = 0; k <= 1; ++k)
    for (int j = 0; j <= 1; ++j)
      sim.add_soft_source(2, 36 * m, j, k, w);
  const std::size_t probe = spec.index(38 * m, 0, 0);
  const long steps = static_cast<long>(std::floor(70.0 * d / (c0 * spec.dt)));
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(steps));
  for (long s = 0; s < steps; ++s)
  {
    sim.step();
    out.push_back(sim.fields().e[2][probe]);
  }
  return out;
}

}  // namespace

ConvergenceCheck slab_convergence(int levels)
{
  ConvergenceCheck out;
  const std::vector<double> freqs = frequency_grid(2.5e9, 7.5e9, 0.25e9);
  for (int level = 0; level < levels; ++level)
  {
    const int m = 20 << level;
    double dt = 0.0;
    const std::vector<double> ref = slab_run(m, false, dt);
    std::vector<double> refl = slab_run(m, true, dt);
    for (std::size_t n = 0; n < refl.size(); ++n)
      refl[n] -= ref[n];
    const Spectrum inc = dft({dt, dt, ref}, freqs);
    const Spectrum rs = dft({dt, dt, refl}, freqs);
    SlabPoint pt;
    pt.dx = slab_thickness / m;
    double acc = 0.0;
    for (std::size_t f = 0; f < freqs.size(); ++f)
    {
      const double e = std::abs(std::abs(rs.values[f] / inc.values[f]) -
                                std::abs(slab_reflection(freqs[f], slab_eps_r, slab_thickness)));
      acc += e * e;
      pt.max_error = std::max(pt.max_error, e);
    }
    pt.rms_error = std::sqrt(acc / static_cast<double>(freqs.size()));
    out.points.push_back(pt);
  }
  for (std::size_t n = 0; n + 1 < out.points.size(); ++n)
    out.ratios.push_back(out.points[n].rms_error / out.points[n + 1].rms_error);
  return out;
}

// ---------------------------------------------------------------------------
// Fixture comparison

std::pair<RunConfig, RunConfig> comparison_configs(const std::string &preset)
{
  RunConfig s = fixture_config("simple_u", preset);
  RunConfig m = fixture_config("modified_u", preset);
  AutoGridOptions gs = s.simulation.grid, gm = m.simulation.grid;
  gs.cpml_cells = gm.cpml_cells = s.simulation.cpml.thickness;
  const double d = std::min(auto_grid(s.design, gs).spec.dx, auto_grid(m.design, gm).spec.dx);
  s.simulation.grid.cell_size = d;
  m.simulation.grid.cell_size = d;
  return {s, m};
}

FixtureComparison compare_fixtures(const std::string &preset, const HarnessOptions &opts)
{
  const auto [s, m] = comparison_configs(preset);
  FixtureComparison out;
  out.preset = preset;
  out.dx = s.simulation.grid.cell_size;
  HarnessOptions o = opts;
  o.out_dir = opts.out_dir / "simple_u";
  out.simple = simulate(s, o);
  o.out_dir = opts.out_dir / "modified_u";
  out.modified = simulate(m, o);
  return out;
}

// ---------------------------------------------------------------------------
// Determinism

RunConfig determinism_config()
{
  RunConfig c = fixture_config("simple_u", "coarse");
  c.simulation.max_steps = 2500;
  c.simulation.allow_truncated = true;
  c.farfield.band_points = 3;
  return c;
}

DeterminismCheck determinism(const fs::path &work_dir, int threads_b, std::ostream *log)
{
  const RunConfig c = determinism_config();
  DeterminismCheck out;
  out.threads_a = 1;
  out.threads_b = threads_b;
  out.hash = config_hash(c);
  HarnessOptions o;
  o.log = log;
  o.threads = out.threads_a;
  o.out_dir = work_dir / "threads_a";
  simulate(c, o);
  o.threads = out.threads_b;
  o.out_dir = work_dir / "threads_b";
  simulate(c, o);
  out.s1p_identical =
    read_file(work_dir / "threads_a" / output_files::s1p) == read_file(work_dir / "threads_b" / output_files::s1p);
  out.summary_identical = read_file(work_dir / "threads_a" / output_files::summary_json) ==
                          read_file(work_dir / "threads_b" / output_files::summary_json);
  return out;
}

// ---------------------------------------------------------------------------
// Formats

Spectrum synthetic_spectrum()
{
  // Two-pole reflection with a dip near 4.25 GHz.
  Spectrum s;
  for (int k = 0; k <= 20; ++k)
  {
    const double f = 3.5e9 + 0.075e9 * k;
    const double x = (f - 4.25e9) / 0.2e9;
    const cplx v = cplx{x, 0.1} / cplx{x, 1.0};
    s.freqs.push_back(f);
    s.values.push_back(0.9 * v * std::polar(1.0, -2.0 * pi * f * 0.1e-9));
  }
  return s;
}

std::string synthetic_touchstone()
{
  std::ostringstream o;
  write_touchstone(o, synthetic_spectrum(), 50.0, {"patchfdtd synthetic spectrum"});
  return o.str();
}

bool config_round_trip(const std::string &fixture)
{
  const RunConfig c = fixture_config(fixture, "standard");
  const ParsedConfig a = parse_config(serialize(c, true));
  const ParsedConfig b = parse_config(serialize(c, false));
  RunConfig explicit_c = c;
  explicit_c.fixture.reset();
  return a.run == c && b.run == explicit_c && serialize(a.run) == serialize(c) && a.run.design == c.design &&
         b.run.design == c.design;
}

// ---------------------------------------------------------------------------
// Validate command

bool ValidationResult::all_hard_passed() const
{
  for (const auto &c : checks)
    if (c.hard && !c.passed)
      return false;
  return true;
}

std::string format_table(const std::vector<CheckLine> &checks)
{
  std::size_t w_id = 2, w_name = 5, w_meas = 8;
  for (const auto &c : checks)
  {
    w_id = std::max(w_id, c.id.size());
    w_name = std::max(w_name, c.name.size());
    w_meas = std::max(w_meas, c.measured.size());
  }
  std::ostringstream o;
  auto pad = [](const std::string &s, std::size_t w) { return s + std::string(w - std::min(w, s.size()), ' '); };
  o << pad("id", w_id) << "  " << pad("check", w_name) << "  result  " << pad("measured", w_meas) << "  limit\n";
  for (const auto &c : checks)
  {
    const char *res = c.passed ? "PASS  " : (c.hard ? "FAIL  " : "INFO  ");
    o << pad(c.id, w_id) << "  " << pad(c.name, w_name) << "  " << res << "  " << pad(c.measured, w_meas) << "  "
      << c.limit << "\n";
  }
  return o.str();
}

namespace
{

std::string db(double v) { return std::isfinite(v) ? fmt("%.2f dB", v) : std::string("n/a"); }
std::string dbi(double v) { return std::isfinite(v) ? fmt("%.2f dBi", v) : std::string("n/a"); }
std::string ghz(double v) { return std::isfinite(v) ? fmt("%.4f GHz", v / 1e9) : std::string("n/a"); }

std::string resonance_list(const nlohmann::json &summary)
{
  std::string out;
  std::vector<double> fs;
  for (const auto &r : summary.at("resonances"))
    fs.push_back(r.at("f_res").get<double>());
  std::sort(fs.begin(), fs.end());
  for (double f : fs)
    out += (out.empty() ? "" : ", ") + fmt("%.3f", f / 1e9);
  return out.empty() ? "none" : out + " GHz";
}

}  // namespace

std::string reproduction_report(const FixtureComparison &cmp, const std::optional<ResonanceCheck> &rect)
{
  std::ostringstream o;
  o << "Reproduction report (" << cmp.preset << " preset, common cell " << fmt("%.4g", cmp.dx * 1e3)
    << " mm)\n\n";
  o << "| quantity | simple_u (sim) | simple_u (published) | modified_u (sim) | modified_u (published) |\n";
  o << "|---|---|---|---|---|\n";
  o << "| analysis band | 4.0-4.5 GHz | 4-4.5 GHz | 4.0-4.5 GHz | 4-4.5 GHz |\n";
  o << "| f at min RL in band | " << ghz(cmp.simple.f_min_rl()) << " | 4-4.5 GHz | " << ghz(cmp.modified.f_min_rl())
    << " | 4-4.5 GHz |\n";
  o << "| min RL in band | " << db(cmp.simple.min_rl_db()) << " | -38 dB | " << db(cmp.modified.min_rl_db())
    << " | -43 dB |\n";
  o << "| max gain at that dip | " << dbi(cmp.simple.max_gain_dbi()) << " | 7.834 dB | "
    << dbi(cmp.modified.max_gain_dbi()) << " | 8.99 dB |\n";
  o << "| all dips below -10 dB | " << resonance_list(cmp.simple.summary) << " | n/a | "
    << resonance_list(cmp.modified.summary) << " | n/a |\n\n";
  const double f10 = fixture_cavity_frequency("simple_u");
  o << "Cavity model: the unslotted " << fmt("%.2f", 1e3 * fixture_default("simple_u", "patch.width")) << " x "
    << fmt("%.3f", 1e3 * fixture_default("simple_u", "patch.length")) << " mm patch on "
    << fmt("%.2g", 1e3 * fixture_default("simple_u", "stack.substrate_height")) << " mm eps_r "
    << fmt("%.2g", fixture_default("simple_u", "stack.eps_r")) << " has its TM10 mode at " << ghz(f10)
    << ", below the published 4-4.5 GHz band.\n";
  if (rect)
    o << "Solver check: probe-fed rectangular patch synthesized for 2.5 GHz resonates at " << ghz(rect->f_fdtd)
      << " against " << ghz(rect->f_cavity) << " from the cavity model (" << fmt("%.2f", 100.0 * rect->rel_error)
      << " %).\n";
  o << "Comparative claims: min RL modified <= simple: "
    << (cmp.modified.min_rl_db() <= cmp.simple.min_rl_db() ? "holds" : "does not hold")
    << "; max gain modified >= simple: "
    << (cmp.modified.max_gain_dbi() >= cmp.simple.max_gain_dbi() ? "holds" : "does not hold") << ".\n";
  return o.str();
}

ValidationResult run_validation(const ValidateOptions &opts)
{
  ValidationResult out;
  HarnessOptions h;
  h.threads = opts.threads;
  h.log = opts.log;
  h.cache_dir = opts.cache_dir ? *opts.cache_dir : opts.work_dir / "cache";
  auto note = [&](const std::string &s) {
    if (opts.log)
      *opts.log << s << "\n";
  };

  // 1
  note("check 1: rectangular patch resonance");
  h.out_dir = opts.work_dir / "rect_patch";
  std::optional<ResonanceCheck> rect;
  try
  {
    rect = rect_patch_resonance(opts.preset, h);
    out.checks.push_back({"1", "rect patch f_res vs cavity model", true,
                          rect->rel_error <= limits::resonance_rel_error,
                          fmt("%.2f %%", 100.0 * rect->rel_error), "<= 5 %"});
    const bool in_budget = rect->runtime_s <= scaled_runtime_budget(rect->threads);
    out.checks.push_back({"1", "rect patch runtime budget", true, in_budget, in_budget ? "within" : "exceeded",
                          "15 min x 8 / threads"});
  }
  catch (const Error &e)
  {
    out.checks.push_back({"1", "rect patch f_res vs cavity model", true, false, e.what(), "<= 5 %"});
  }

  // 2
  note("check 2: dipole far field");
  {
    const DipoleCheck d = hertzian_dipole();
    out.checks.push_back({"2", "dipole directivity", true,
                          std::abs(d.directivity_dbi - limits::dipole_directivity_dbi) <=
                            limits::dipole_directivity_tol_db,
                          dbi(d.directivity_dbi), "1.76 +- 0.2 dBi"});
    out.checks.push_back({"2", "dipole pattern vs sin^2", true, d.pattern_rms <= limits::dipole_pattern_rms,
                          fmt("%.4f", d.pattern_rms), "<= 0.02 RMS"});
  }

  // 3
  note("check 3: CPML reflection");
  {
    CpmlParams p;
    if (opts.debug_cpml_thickness)
      p.thickness = *opts.debug_cpml_thickness;
    else
      validate(p);
    const CpmlCheck c = cpml_reflection(p, opts.threads);
    out.checks.push_back({"3", "CPML reflection (" + std::to_string(c.thickness) + " cells)", true,
                          c.reflection_db <= limits::cpml_reflection_db, db(c.reflection_db), "<= -40 dB"});
  }

  // 4
  note("check 4: energy");
  {
    const EnergyCheck e = energy_bookkeeping();
    out.checks.push_back({"4", "PEC box energy drift", true, e.lossless_drift <= limits::energy_drift,
                          fmt("%.1e", e.lossless_drift), "<= 1e-10"});
    out.checks.push_back({"4", "lossy box monotone decay", true, e.lossy_monotone,
                          std::to_string(e.lossy_increases) + " increases", "0"});
  }

  // 5
  note("check 5: slab convergence");
  {
    const ConvergenceCheck c = slab_convergence();
    for (std::size_t n = 0; n < c.ratios.size(); ++n)
      out.checks.push_back({"5", "slab |R| error ratio " + std::to_string(n + 1), true,
                            std::abs(c.ratios[n] - limits::convergence_ratio) <= limits::convergence_ratio_tol,
                            fmt("%.2f", c.ratios[n]), "4 +- 1"});
  }

  // 6
  note("check 6: fixture comparison");
  std::optional<FixtureComparison> cmp;
  try
  {
    h.out_dir = opts.work_dir / "fixtures";
    cmp = compare_fixtures(opts.preset, h);
    out.checks.push_back({"6", "min RL modified <= simple", true,
                          cmp->modified.min_rl_db() <= cmp->simple.min_rl_db(),
                          db(cmp->modified.min_rl_db()) + " vs " + db(cmp->simple.min_rl_db()), "<="});
    out.checks.push_back({"6", "max gain modified >= simple", true,
                          cmp->modified.max_gain_dbi() >= cmp->simple.max_gain_dbi(),
                          dbi(cmp->modified.max_gain_dbi()) + " vs " + dbi(cmp->simple.max_gain_dbi()), ">="});
  }
  catch (const Error &e)
  {
    out.checks.push_back({"6", "fixture comparison", true, false, e.what(), "runs complete"});
  }

  // 7
  if (cmp)
  {
    out.checks.push_back({"7", "reproduction report", false, true, opts.report ? "written" : "use --report",
                          "informational"});
    if (opts.report)
      out.report = reproduction_report(*cmp, rect);
  }

  // 8
  note("check 8: determinism");
  {
    const int n = std::max(2, static_cast<int>(std::thread::hardware_concurrency()));
    const DeterminismCheck d = determinism(opts.work_dir / "determinism", n, opts.log);
    out.checks.push_back({"8", "1 vs N threads s1p identical", true, d.s1p_identical,
                          d.s1p_identical ? "identical" : "differ", "bit-identical"});
    out.checks.push_back({"8", "1 vs N threads summary identical", true, d.summary_identical,
                          d.summary_identical ? "identical" : "differ", "bit-identical"});
  }

  // 9
  note("check 9: formats");
  {
    std::istringstream in(synthetic_touchstone());
    const TouchstoneData t = read_touchstone(in);
    const Spectrum s = synthetic_spectrum();
    bool ok = t.s11.size() == s.size();
    for (std::size_t k = 0; ok && k < s.size(); ++k)
      ok = std::abs(t.s11.values[k] - s.values[k]) <= 1e-9 && t.s11.freqs[k] == s.freqs[k];
    out.checks.push_back({"9", "touchstone write/read", true, ok, ok ? "matches" : "differs", "<= 1e-9"});
    for (const char *f : {"simple_u", "modified_u"})
    {
      const bool rt = config_round_trip(f);
      out.checks.push_back({"9", std::string("config round trip ") + f, true, rt, rt ? "identical" : "differs",
                            "identical"});
    }
  }
  return out;
}

}  // namespace patchfdtd::validation
