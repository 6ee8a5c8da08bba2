// SPDX-License-Identifier: Apache-2.0

#ifndef PATCHFDTD_HARNESS_HPP
#define PATCHFDTD_HARNESS_HPP

#include "patchfdtd/config.hpp"

#include <json.hpp>

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace patchfdtd
{

struct HarnessOptions
{
  std::filesystem::path out_dir = ".";
  int threads = 1;
  // Results cache; entries are keyed by config_hash() and shared between
  // processes through file locks. Empty disables caching.
  std::optional<std::filesystem::path> cache_dir;
  std::ostream *log = nullptr;  // progress and cache messages
};

// File names inside an output directory.
namespace output_files
{
inline constexpr const char *s1p = "s11.s1p";
inline constexpr const char *rl_csv = "return_loss.csv";
inline constexpr const char *pattern_csv = "pattern.csv";
inline constexpr const char *summary_json = "summary.json";
inline constexpr const char *geometry_pgm = "geometry.pgm";
inline constexpr const char *run_log = "run_log.jsonl";
inline constexpr const char *config = "config.toml";
inline constexpr const char *timing = "timing.json";
}  // namespace output_files

struct SimulationReport
{
  std::string config_hash;
  bool cache_hit = false;
  double runtime_s = 0.0;          // this call
  double compute_runtime_s = 0.0;  // the run that produced the results (also for cache hits)
  int compute_threads = 1;
  nlohmann::json summary;

  // Shortcuts into the summary; NaN when absent.
  double min_rl_db() const;
  double f_min_rl() const;
  double max_gain_dbi() const;
};

// Everything a simulation produces, keyed by file name (all outputs,
// independent of OutputSet).
struct SimulationArtifacts
{
  std::map<std::string, std::string> files;
  nlohmann::json summary;
};

// Far-field frequencies: band_points across the analysis band (ends
// included) plus the optional extra comb over the frequency plan.
std::vector<double> farfield_frequencies(const RunConfig &config);

RunOptions run_options(const RunConfig &config, int threads);

// Runs the engine and derives every output in memory.
SimulationArtifacts compute_artifacts(const RunConfig &config, int threads, std::ostream *log = nullptr);

// compute_artifacts behind the cache, then writes the requested outputs.
SimulationReport simulate(const RunConfig &config, const HarnessOptions &opts);

struct SweepRow
{
  double value = 0.0;
  bool ok = false;
  bool cached = false;
  std::string error;
  int exit_code = 0;
  double f_res = 0.0;
  double min_rl_db = 0.0;
  double max_gain_dbi = 0.0;
  std::string config_hash;
};

struct SweepReport
{
  std::string parameter;
  SweepMetric metric = SweepMetric::MinRlDb;
  std::vector<SweepRow> rows;
  int best = -1;  // row index, -1 when every row failed

  bool all_failed() const { return best < 0; }
};

// One simulation per value, rows in <out_dir>/rows/<n>; the cache defaults
// to <out_dir>/cache. Writes sweep.csv and sweep.json.
SweepReport sweep(const ParsedConfig &config, const HarnessOptions &opts);

nlohmann::json describe_fixture(const std::string &fixture);

// Resonances, return-loss minimum and -10 dB bandwidth of a Touchstone file.
nlohmann::json analyze_touchstone(std::istream &in, const std::optional<Band> &band);

// Patch and feed dimensions from the cavity and microstrip models.
nlohmann::json synthesize_patch(double f0, double eps_r, double height, double z0);

// Textual JSON with a trailing newline; stable across runs.
std::string dump_json(const nlohmann::json &j);

}  // namespace patchfdtd

#endif  // PATCHFDTD_HARNESS_HPP
