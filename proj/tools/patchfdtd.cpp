// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end: simulate, sweep, validate, analyze, synthesize, describe.

#include "patchfdtd/config.hpp"
#include "patchfdtd/error.hpp"
#include "patchfdtd/harness.hpp"
#include "patchfdtd/validation.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

using namespace patchfdtd;

namespace
{

double parse_frequency(std::string text)
{
  double scale = 1.0;
  auto strip = [&](const char *suffix, double s) {
    const std::string suf = suffix;
    if (text.size() > suf.size() && text.compare(text.size() - suf.size(), suf.size(), suf) == 0)
    {
      text.erase(text.size() - suf.size());
      scale = s;
      return true;
    }
    return false;
  };
  strip("GHz", 1e9) || strip("MHz", 1e6) || strip("kHz", 1e3) || strip("Hz", 1.0);
  std::size_t used = 0;
  double v = 0.0;
  try
  {
    v = std::stod(text, &used);
  }
  catch (const std::exception &)
  {
    used = 0;
  }
  if (used != text.size() || text.empty())
    throw ValidationError("--band", "cannot read frequency '" + text + "'");
  return v * scale;
}

std::optional<Band> parse_band(const std::string &text)
{
  if (text.empty())
    return std::nullopt;
  const auto comma = text.find(',');
  if (comma == std::string::npos)
    throw ValidationError("--band", "expected F_LO,F_HI (e.g. 4GHz,4.5GHz)");
  Band b{parse_frequency(text.substr(0, comma)), parse_frequency(text.substr(comma + 1))};
  if (!(b.f_lo > 0.0 && b.f_hi > b.f_lo))
    throw ValidationError("--band", "need 0 < F_LO < F_HI");
  return b;
}

struct Common
{
  std::string preset;
  std::string out_dir = "out";
  int threads = 1;
  std::string band;
  std::string cache_dir;
  bool quiet = false;

  void add_to(CLI::App *app, bool with_band = true)
  {
    app->add_option("--preset", preset, "grid preset: coarse, standard or fine");
    app->add_option("--out-dir", out_dir, "output directory")->capture_default_str();
    app->add_option("--threads", threads, "worker threads")->check(CLI::Range(1, 1024))->capture_default_str();
    if (with_band)
      app->add_option("--band", band, "analysis band F_LO,F_HI (Hz, or with a GHz/MHz suffix)");
    app->add_option("--cache-dir", cache_dir, "results cache directory");
    app->add_flag("--quiet", quiet, "no progress output");
  }

  HarnessOptions harness() const
  {
    HarnessOptions h;
    h.out_dir = out_dir;
    h.threads = threads;
    if (!cache_dir.empty())
      h.cache_dir = cache_dir;
    h.log = quiet ? nullptr : &std::cerr;
    return h;
  }

  void apply(ParsedConfig &c) const
  {
    if (!preset.empty())
      apply_preset(c.run.simulation, preset);
    if (const auto b = parse_band(band))
      c.run.design.analysis_band = *b;
  }
};

void print(const nlohmann::json &j) { std::cout << dump_json(j); }

int dispatch(int argc, char **argv)
{
  CLI::App app{"FDTD simulator for microstrip patch antennas"};
  app.require_subcommand(1);

  Common sim_opts;
  std::string sim_config, sim_fixture;
  CLI::App *sim = app.add_subcommand("simulate", "run one simulation and write its outputs");
  sim->add_option("config", sim_config, "configuration file");
  sim->add_option("--fixture", sim_fixture, "built-in fixture: simple_u, modified_u or rect_patch");
  sim_opts.add_to(sim);

  Common sweep_opts;
  std::string sweep_config;
  CLI::App *sw = app.add_subcommand("sweep", "one simulation per value of a fixture parameter");
  sw->add_option("config", sweep_config, "configuration file with a [sweep] section")->required();
  sweep_opts.add_to(sw);

  Common val_opts;
  val_opts.out_dir = "validate";
  bool val_report = false;
  int debug_cpml = 0;
  CLI::App *val = app.add_subcommand("validate", "run the oracle and property checks");
  val_opts.add_to(val, false);
  val->add_flag("--report", val_report, "also print the reproduction table");
  val->add_option("--debug-cpml-thickness", debug_cpml)->group("");

  std::string an_file, an_band;
  CLI::App *an = app.add_subcommand("analyze", "resonances and bandwidth of a Touchstone file");
  an->add_option("file", an_file, "one-port .s1p file")->required();
  an->add_option("--band", an_band, "analysis band F_LO,F_HI");

  double syn_f0 = 0.0, syn_eps = 2.2, syn_h = 2.4e-3, syn_z0 = 50.0;
  CLI::App *syn = app.add_subcommand("synthesize", "patch and feed dimensions from closed-form models");
  syn->add_option("--f0", syn_f0, "target resonance (Hz)")->required();
  syn->add_option("--eps-r", syn_eps, "substrate relative permittivity")->capture_default_str();
  syn->add_option("--height", syn_h, "substrate height (m)")->capture_default_str();
  syn->add_option("--z0", syn_z0, "feed line impedance (ohm)")->capture_default_str();

  std::string desc_fixture;
  CLI::App *desc = app.add_subcommand("describe", "fixture parameters and resolved geometry");
  desc->add_option("fixture", desc_fixture, "fixture name")->required();

  try
  {
    app.parse(argc, argv);
  }
  catch (const CLI::ParseError &e)
  {
    const int code = app.exit(e);
    return code == 0 ? 0 : exit_code(ErrorKind::Config);
  }

  if (*sim)
  {
    ParsedConfig c;
    if (!sim_config.empty() && !sim_fixture.empty())
      throw ValidationError("simulate", "give either a configuration file or --fixture, not both");
    if (!sim_config.empty())
      c = load_config(sim_config);
    else if (!sim_fixture.empty())
      c.run = fixture_config(sim_fixture);
    else
      throw ValidationError("simulate", "need a configuration file or --fixture");
    sim_opts.apply(c);
    const SimulationReport r = simulate(c.run, sim_opts.harness());
    print(r.summary);
    return 0;
  }
  if (*sw)
  {
    ParsedConfig c = load_config(sweep_config);
    if (!c.sweep)
      throw ValidationError("sweep", "configuration has no [sweep] section");
    sweep_opts.apply(c);
    const SweepReport r = sweep(c, sweep_opts.harness());
    std::ifstream in(std::filesystem::path(sweep_opts.out_dir) / "sweep.json");
    std::cout << in.rdbuf();
    if (r.all_failed())
      return r.rows.empty() ? 1 : r.rows.front().exit_code;
    return 0;
  }
  if (*val)
  {
    validation::ValidateOptions v;
    v.preset = val_opts.preset.empty() ? "standard" : val_opts.preset;
    find_preset(v.preset);
    v.threads = val_opts.threads;
    v.work_dir = val_opts.out_dir;
    if (!val_opts.cache_dir.empty())
      v.cache_dir = val_opts.cache_dir;
    if (val->count("--debug-cpml-thickness"))
      v.debug_cpml_thickness = debug_cpml;
    v.report = val_report;
    v.log = val_opts.quiet ? nullptr : &std::cerr;
    const validation::ValidationResult r = validation::run_validation(v);
    std::cout << validation::format_table(r.checks);
    if (val_report && !r.report.empty())
    {
      std::cout << "\n" << r.report;
      std::ofstream(std::filesystem::path(v.work_dir) / "report.md") << r.report;
    }
    return r.all_hard_passed() ? 0 : 1;
  }
  if (*an)
  {
    std::ifstream in(an_file);
    if (!in)
      throw Error(ErrorKind::Io, "cannot read '" + an_file + "'");
    print(analyze_touchstone(in, parse_band(an_band)));
    return 0;
  }
  if (*syn)
  {
    print(synthesize_patch(syn_f0, syn_eps, syn_h, syn_z0));
    return 0;
  }
  if (*desc)
  {
    print(describe_fixture(desc_fixture));
    return 0;
  }
  return exit_code(ErrorKind::Config);
}

}  // namespace

int main(int argc, char **argv)
{
  try
  {
    return dispatch(argc, argv);
  }
  catch (const Error &e)
  {
    std::cerr << "error (" << to_string(e.kind()) << "): " << e.what() << "\n";
    return exit_code(e.kind());
  }
  catch (const std::exception &e)
  {
    std::cerr << "internal error: " << e.what() << "\n";
    return 10;
  }
}
