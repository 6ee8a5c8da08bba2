// SPDX-License-Identifier: Apache-2.0

#ifndef PATCHFDTD_CONFIG_HPP
#define PATCHFDTD_CONFIG_HPP

#include "patchfdtd/fdtd_engine.hpp"
#include "patchfdtd/geometry.hpp"
#include "patchfdtd/yee_grid.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace patchfdtd
{

// Grid presets as (cells_per_wavelength, min_feature_cells, courant).
struct GridPreset
{
  std::string name;
  double cells_per_wavelength = 0.0;
  double min_feature_cells = 0.0;
  double courant = 0.0;
};

const std::vector<GridPreset> &grid_presets();
const GridPreset &find_preset(const std::string &name);  // throws ValidationError

// Fixture name plus numeric overrides, e.g. {"stack.substrate_height", 3.2e-3}.
struct FixtureRef
{
  std::string name;  // simple_u | modified_u | rect_patch
  std::map<std::string, double> params;

  bool operator==(const FixtureRef &) const = default;
};

const std::vector<std::string> &fixture_names();
// Parameter paths accepted by a fixture, in canonical order.
std::vector<std::string> fixture_parameters(const std::string &fixture);
double fixture_default(const std::string &fixture, const std::string &path);
AntennaDesign build_fixture(const FixtureRef &ref, const std::optional<Band> &band = std::nullopt);

struct FrequencyPlan
{
  double start = 1.0e9;
  double stop = 7.0e9;
  double step = 5.0e6;

  std::vector<double> list() const;
  bool operator==(const FrequencyPlan &) const = default;
};

struct FarFieldPlan
{
  int band_points = 11;     // comb across the analysis band
  double extra_step = 0.0;  // additional comb over the frequency plan; 0 disables
  double angle_step_deg = 2.0;

  bool operator==(const FarFieldPlan &) const = default;
};

struct OutputSet
{
  bool s1p = true;
  bool rl_csv = true;
  bool pattern_csv = true;
  bool summary_json = true;
  bool geometry_pgm = true;
  bool run_log = true;

  bool operator==(const OutputSet &) const = default;
};

struct SimulationSettings
{
  std::string preset = "standard";
  AutoGridOptions grid;  // cells_per_wavelength / min_feature_cells / courant from the preset unless overridden
  CpmlParams cpml;
  SourceWaveform source;
  long max_steps = 400000;
  double energy_threshold = 1e-5;
  Precision precision = Precision::Single;
  bool allow_truncated = false;

  bool operator==(const SimulationSettings &) const = default;
};

struct RunConfig
{
  std::optional<FixtureRef> fixture;  // empty for an explicit design
  AntennaDesign design;               // always resolved
  SimulationSettings simulation;
  FrequencyPlan frequencies;
  FarFieldPlan farfield;
  OutputSet outputs;

  bool operator==(const RunConfig &) const = default;
};

enum class SweepMetric
{
  MinRlDb,
  MaxGainDbi,
  FRes,
};

const char *to_string(SweepMetric m);

struct SweepConfig
{
  std::string parameter;
  std::vector<double> values;
  SweepMetric metric = SweepMetric::MinRlDb;

  bool operator==(const SweepConfig &) const = default;
};

struct ParsedConfig
{
  RunConfig run;
  std::optional<SweepConfig> sweep;
};

// Strict parser for the key-value format described in README.md. Unknown
// sections and keys are errors; messages carry the line number.
ParsedConfig parse_config(const std::string &text);
ParsedConfig load_config(const std::string &path);

// Applies a preset by name to the grid options (overrides the three preset fields).
void apply_preset(SimulationSettings &s, const std::string &preset);

// Canonical text that parse_config maps back to an equal object. Designs are
// always written out explicitly (fixture references become [stack], [[rect]]
// and [port] sections) unless keep_fixture is set.
std::string serialize(const RunConfig &config, bool keep_fixture = true);
std::string serialize(const ParsedConfig &config, bool keep_fixture = true);
std::string serialize_design(const AntennaDesign &design);

// Configuration for a fixture with default settings.
RunConfig fixture_config(const std::string &fixture, const std::string &preset = "standard");

// Stable 64-bit FNV-1a hash of the canonical text of everything that affects
// simulation results (outputs and thread count excluded).
std::string config_hash(const RunConfig &config);

}  // namespace patchfdtd

#endif  // PATCHFDTD_CONFIG_HPP
