// SPDX-License-Identifier: Apache-2.0

#ifndef PATCHFDTD_VALIDATION_HPP
#define PATCHFDTD_VALIDATION_HPP

#include "patchfdtd/config.hpp"
#include "patchfdtd/harness.hpp"
#include "patchfdtd/spectra.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace patchfdtd::validation
{

// Limits used by the validate command.
namespace limits
{
inline constexpr double resonance_rel_error = 0.05;
inline constexpr double resonance_runtime_s = 15.0 * 60.0;  // on 8 cores
inline constexpr double dipole_directivity_dbi = 1.7609;
inline constexpr double dipole_directivity_tol_db = 0.2;
inline constexpr double dipole_pattern_rms = 0.02;
inline constexpr double cpml_reflection_db = -40.0;
inline constexpr double energy_drift = 1e-10;
inline constexpr double convergence_ratio = 4.0;
inline constexpr double convergence_ratio_tol = 1.0;
}  // namespace limits

// Criterion: FDTD fundamental of the probe-fed rectangular patch against
// the cavity model.
struct ResonanceCheck
{
  double f_cavity = 0.0;
  double f_fdtd = 0.0;
  double rel_error = 0.0;
  double runtime_s = 0.0;  // of the run that produced the result
  int threads = 1;
  GridSpec grid;
  SimulationReport report;
};

RunConfig rect_patch_config(const std::string &preset);
ResonanceCheck rect_patch_resonance(const std::string &preset, const HarnessOptions &opts);

// Runtime limit scaled from 8 cores to the cores used.
double scaled_runtime_budget(int threads);

// Criterion: analytic Hertzian dipole fields on a Huygens box through the
// far-field transformation.
struct DipoleCheck
{
  double directivity_dbi = 0.0;
  double pattern_rms = 0.0;  // RMS of U/U_max - sin^2(theta) over the direction grid
  double radiated_power = 0.0;
  double exact_power = 0.0;
  double surface_power = 0.0;
};

DipoleCheck hertzian_dipole(double cells_per_wavelength = 20.0, double half_width_wavelengths = 0.5,
                            double angle_step_deg = 2.0);

// Criterion: vacuum point-source pulse, probe three quarters of the way to
// the boundary, compared against a larger reference domain.
struct CpmlCheck
{
  int thickness = 0;
  double reflection_db = 0.0;  // peak |E - E_ref| over peak |E_ref| in the gate
  long steps = 0;
};

CpmlCheck cpml_reflection(const CpmlParams &cpml, int threads = 1);

// Criterion: leapfrog energy in a sealed PEC box.
struct EnergyCheck
{
  int steps = 0;
  double lossless_drift = 0.0;  // max |W_n - W_0| / W_0
  double naive_variation = 0.0; // same for the non-interleaved sum
  bool lossy_monotone = false;
  long lossy_increases = 0;
  double lossy_final_ratio = 0.0;  // W_end / W_source_off
};

EnergyCheck energy_bookkeeping(int steps = 1000);

// Criterion: |R| of a dielectric slab at normal incidence against the
// closed form, for a sequence of halved cell sizes.
struct SlabPoint
{
  double dx = 0.0;
  double rms_error = 0.0;
  double max_error = 0.0;
};

struct ConvergenceCheck
{
  std::vector<SlabPoint> points;
  std::vector<double> ratios;  // rms_error[n] / rms_error[n + 1]
};

// Closed-form reflection of a lossless slab of index n and thickness d.
std::complex<double> slab_reflection(double f, double eps_r, double thickness);
ConvergenceCheck slab_convergence(int levels = 3);

// Both U fixtures on a common cell size (the finer of the two preset grids).
struct FixtureComparison
{
  std::string preset;
  double dx = 0.0;
  SimulationReport simple;
  SimulationReport modified;
};

std::pair<RunConfig, RunConfig> comparison_configs(const std::string &preset);
FixtureComparison compare_fixtures(const std::string &preset, const HarnessOptions &opts);

// Criterion: one configuration with 1 and N threads.
struct DeterminismCheck
{
  int threads_a = 1;
  int threads_b = 1;
  bool s1p_identical = false;
  bool summary_identical = false;
  std::string hash;
};

RunConfig determinism_config();
DeterminismCheck determinism(const std::filesystem::path &work_dir, int threads_b, std::ostream *log = nullptr);

// Synthetic spectrum behind the Touchstone golden file.
Spectrum synthetic_spectrum();
std::string synthetic_touchstone();

// parse(serialize(x)) == x, for the fixture reference and for the explicit design.
bool config_round_trip(const std::string &fixture);

// Cavity-model TM10 frequency of a fixture's main patch rectangle.
double fixture_cavity_frequency(const std::string &fixture);

struct ValidateOptions
{
  std::string preset = "standard";
  int threads = 1;
  std::filesystem::path work_dir = "validate";
  std::optional<std::filesystem::path> cache_dir;  // defaults to <work_dir>/cache
  std::optional<int> debug_cpml_thickness;          // test hook; skips parameter validation
  bool report = false;
  std::ostream *log = nullptr;
};

struct CheckLine
{
  std::string id;
  std::string name;
  bool hard = true;
  bool passed = false;
  std::string measured;
  std::string limit;
};

struct ValidationResult
{
  std::vector<CheckLine> checks;
  std::string report;  // reproduction table when requested
  bool all_hard_passed() const;
};

ValidationResult run_validation(const ValidateOptions &opts);
std::string format_table(const std::vector<CheckLine> &checks);

// Table of simulated results next to the published values.
std::string reproduction_report(const FixtureComparison &cmp, const std::optional<ResonanceCheck> &rect);

}  // namespace patchfdtd::validation

#endif  // PATCHFDTD_VALIDATION_HPP
