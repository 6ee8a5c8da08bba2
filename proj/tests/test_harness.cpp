// SPDX-License-Identifier: Apache-2.0

#include "patchfdtd/config.hpp"
#include "patchfdtd/error.hpp"
#include "patchfdtd/harness.hpp"
#include "patchfdtd/spectra.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <sys/wait.h>

using namespace patchfdtd;
namespace fs = std::filesystem;
using nlohmann::json;

namespace
{

// A small probe-fed patch that resonates inside 4.0-4.5 GHz on the coarse grid.
const char *small_config = R"(design = "rect_patch"
name = "small"

[params]
patch.width = 0.028
patch.length = 0.0205
probe.inset = 0.006
board.margin = 0.008

[band]
f_lo = 4.0e9
f_hi = 4.5e9

[simulation]
preset = "coarse"
max_steps = 2500
allow_truncated = true

[farfield]
band_points = 3
angle_step_deg = 10
)";

const fs::path work = PATCHFDTD_TEST_WORK;

std::string slurp(const fs::path &p)
{
  std::ifstream in(p, std::ios::binary);
  std::ostringstream o;
  o << in.rdbuf();
  return o.str();
}

void spit(const fs::path &p, const std::string &text)
{
  fs::create_directories(p.parent_path());
  std::ofstream(p, std::ios::binary) << text;
}

HarnessOptions options(const std::string &sub)
{
  HarnessOptions h;
  h.out_dir = work / sub;
  h.cache_dir = work / "cache";
  return h;
}

int cli(const std::string &args, const std::string &stdout_file = "/dev/null")
{
  const std::string cmd = std::string(PATCHFDTD_CLI) + " " + args + " > " + stdout_file + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("simulate writes every output and a consistent summary")
{
  const ParsedConfig c = parse_config(small_config);
  const HarnessOptions h = options("full");
  fs::remove_all(h.out_dir);
  const SimulationReport r = simulate(c.run, h);

  for (const char *f : {output_files::s1p, output_files::rl_csv, output_files::pattern_csv, output_files::summary_json,
                        output_files::geometry_pgm, output_files::run_log, output_files::config, output_files::timing})
    CHECK_MESSAGE(fs::exists(h.out_dir / f), f);

  const json s = json::parse(slurp(h.out_dir / output_files::summary_json));
  CHECK(s == r.summary);
  CHECK(s.at("schema") == "patchfdtd-summary/1");
  CHECK(s.at("design") == "small");
  CHECK(s.at("fixture") == "rect_patch");
  CHECK(s.at("preset") == "coarse");
  CHECK(s.at("config_hash") == r.config_hash);
  CHECK(r.config_hash == config_hash(c.run));
  CHECK_FALSE(s.contains("runtime_s"));
  for (const char *k : {"band", "grid", "run", "frequencies", "resonances", "f_min_rl", "min_rl_db", "bw_10db",
                        "max_gain_dbi", "gain_frequency", "farfield"})
    CHECK_MESSAGE(s.contains(k), k);

  const double f = r.f_min_rl();
  CHECK(f >= 4.0e9);
  CHECK(f <= 4.5e9);
  CHECK(std::isfinite(r.min_rl_db()));
  CHECK(r.min_rl_db() < 0.0);
  CHECK(r.max_gain_dbi() > 3.0);
  CHECK(r.max_gain_dbi() < 12.0);

  // the Touchstone file agrees with the summary
  std::istringstream in(slurp(h.out_dir / output_files::s1p));
  const TouchstoneData t = read_touchstone(in);
  CHECK(t.reference_impedance == 50.0);
  CHECK(t.s11.size() == s.at("frequencies").at("count").get<std::size_t>());
  const std::vector<double> rl = return_loss_db(t.s11);
  double best = 0.0;
  for (std::size_t k = 0; k < rl.size(); ++k)
    if (t.s11.freqs[k] >= 4.0e9 && t.s11.freqs[k] <= 4.5e9)
      best = std::min(best, rl[k]);
  // the summary refines the sampled minimum with a parabola
  CHECK(best >= r.min_rl_db() - 1e-9);
  CHECK(best - r.min_rl_db() < 0.1);

  const json timing = json::parse(slurp(h.out_dir / output_files::timing));
  CHECK(timing.at("threads") == 1);
  CHECK(timing.at("runtime_s").get<double>() > 0.0);
  CHECK(timing.contains("cache_hit"));

  // the written configuration reproduces the run
  const ParsedConfig back = parse_config(slurp(h.out_dir / output_files::config));
  CHECK(back.run.simulation == c.run.simulation);
  CHECK(config_hash(back.run) == r.config_hash);
}

TEST_CASE("a second run is served from the cache with identical bytes")
{
  const ParsedConfig c = parse_config(small_config);
  HarnessOptions a = options("full");
  HarnessOptions b = options("again");
  fs::remove_all(b.out_dir);
  const SimulationReport first = simulate(c.run, a);
  const SimulationReport second = simulate(c.run, b);
  CHECK(second.cache_hit);
  CHECK(second.config_hash == first.config_hash);
  CHECK(slurp(a.out_dir / output_files::s1p) == slurp(b.out_dir / output_files::s1p));
  CHECK(slurp(a.out_dir / output_files::summary_json) == slurp(b.out_dir / output_files::summary_json));
  const json timing = json::parse(slurp(b.out_dir / output_files::timing));
  CHECK(timing.at("cache_hit") == true);
  CHECK(timing.at("compute_runtime_s").get<double>() > 0.0);
}

TEST_CASE("the outputs section selects files")
{
  ParsedConfig c = parse_config(small_config);
  c.run.outputs.pattern_csv = false;
  c.run.outputs.geometry_pgm = false;
  c.run.outputs.run_log = false;
  const HarnessOptions h = options("subset");
  fs::remove_all(h.out_dir);
  const SimulationReport r = simulate(c.run, h);
  CHECK(r.config_hash == config_hash(parse_config(small_config).run));
  CHECK(fs::exists(h.out_dir / output_files::s1p));
  CHECK(fs::exists(h.out_dir / output_files::summary_json));
  CHECK_FALSE(fs::exists(h.out_dir / output_files::pattern_csv));
  CHECK_FALSE(fs::exists(h.out_dir / output_files::geometry_pgm));
  CHECK_FALSE(fs::exists(h.out_dir / output_files::run_log));
}

TEST_CASE("sweep keeps going past a failing row")
{
  const std::string text = std::string(small_config) +
                           "\n[sweep]\nparameter = \"patch.length\"\nvalues = [0.0205, -0.01, 0.0215]\n"
                           "metric = \"min_rl_db\"\n";
  const ParsedConfig c = parse_config(text);
  HarnessOptions h = options("sweep");
  fs::remove_all(h.out_dir);
  const SweepReport r = sweep(c, h);
  REQUIRE(r.rows.size() == 3u);
  CHECK(r.rows[0].ok);
  CHECK(r.rows[0].cached);
  CHECK_FALSE(r.rows[1].ok);
  CHECK(r.rows[1].exit_code == 2);
  CHECK(r.rows[1].error.find("patch.length") != std::string::npos);
  CHECK(r.rows[2].ok);
  CHECK(r.rows[2].f_res < r.rows[0].f_res);
  REQUIRE(r.best >= 0);
  CHECK(r.best != 1);
  const int other = r.best == 0 ? 2 : 0;
  CHECK(r.rows[static_cast<std::size_t>(r.best)].min_rl_db <= r.rows[static_cast<std::size_t>(other)].min_rl_db);

  const std::string csv = slurp(h.out_dir / "sweep.csv");
  CHECK(csv.rfind("value,status,f_res_hz,min_rl_db,max_gain_dbi,best,cached\n", 0) == 0);
  CHECK(csv.find("-0.01,failed,,,,0,0\n") != std::string::npos);
  const json j = json::parse(slurp(h.out_dir / "sweep.json"));
  CHECK(j.at("parameter") == "patch.length");
  CHECK(j.at("rows").size() == 3u);
  CHECK(j.at("rows")[1].at("status") == "failed");
  CHECK(j.at("best") == r.best);
  CHECK(fs::exists(h.out_dir / "rows" / "2" / output_files::s1p));
}

TEST_CASE("sweep needs a sweep section over a fixture")
{
  const ParsedConfig c = parse_config(small_config);
  CHECK_THROWS_AS(sweep(c, options("nosweep")), ValidationError);
}

TEST_CASE("describe, synthesize and analyze")
{
  const json d = describe_fixture("modified_u");
  CHECK(d.at("fixture") == "modified_u");
  CHECK(d.at("substrate").at("eps_r") == 2.2);
  CHECK(d.at("min_feature").get<double>() == doctest::Approx(0.5e-3));
  CHECK(d.at("parameters").contains("stub[1].width"));
  CHECK_THROWS_AS(describe_fixture("nope"), ValidationError);

  const json s = synthesize_patch(2.5e9, 2.2, 2.4e-3, 50.0);
  CHECK(s.at("patch").at("width").get<double>() == doctest::Approx(47.40e-3).epsilon(1e-3));
  CHECK(s.at("patch").at("f10_check").get<double>() == doctest::Approx(2.5e9).epsilon(1e-9));
  CHECK(s.at("feed").at("impedance_check").get<double>() == doctest::Approx(50.0).epsilon(0.02));
  CHECK_THROWS_AS(synthesize_patch(-1.0, 2.2, 2.4e-3, 50.0), ValidationError);

  // a parabolic dip at 4.25 GHz reaching -30 dB
  std::ostringstream ts;
  ts << "# GHZ S DB R 50\n";
  for (int k = 0; k <= 50; ++k)
  {
    const double f = 4.0 + 0.01 * k;
    const double rl = -30.0 + 25.0 * std::pow((f - 4.25) / 0.25, 2.0);
    ts << f << " " << rl << " 0\n";
  }
  std::istringstream in(ts.str());
  const json a = analyze_touchstone(in, std::nullopt);
  CHECK(a.at("points") == 51);
  CHECK(a.at("f_min_rl").get<double>() == doctest::Approx(4.25e9));
  CHECK(a.at("min_rl_db").get<double>() == doctest::Approx(-30.0).epsilon(1e-6));
  CHECK_FALSE(a.at("bw_10db").is_null());
  REQUIRE(a.at("resonances").size() == 1u);
  CHECK(a.at("resonances")[0].at("f_res").get<double>() == doctest::Approx(4.25e9).epsilon(1e-4));

  std::istringstream out_of_band(ts.str());
  CHECK_THROWS_AS(analyze_touchstone(out_of_band, Band{6e9, 7e9}), Error);
}

TEST_CASE("dump_json ends with a newline")
{
  const std::string s = dump_json(json{{"a", 1}});
  REQUIRE_FALSE(s.empty());
  CHECK(s.back() == '\n');
  CHECK(json::parse(s) == json{{"a", 1}});
}

TEST_CASE("command line exit codes")
{
  const fs::path dir = work / "cli";
  fs::create_directories(dir);
  auto file = [&](const std::string &name, const std::string &text) {
    spit(dir / name, text);
    return (dir / name).string();
  };
  const std::string quiet = " --quiet --out-dir " + (dir / "out").string();

  CHECK(cli("simulate " + file("syntax.toml", "design = \n") + quiet) == 2);
  CHECK(cli("simulate " + (dir / "missing.toml").string() + quiet) == 8);
  CHECK(cli("simulate " + file("fixture.toml", "design = \"nope\"\n") + quiet) == 2);
  CHECK(cli("simulate " + file("geometry.toml", "design = \"rect_patch\"\n[params]\nprobe.inset = 0.05\n") + quiet) ==
        3);
  CHECK(cli("simulate " + file("budget.toml", "design = \"simple_u\"\n[simulation]\ncell_budget = 1e4\n") + quiet) ==
        4);
  CHECK(cli("simulate --fixture rect_patch --band 5GHz,4GHz" + quiet) == 2);
  CHECK(cli("simulate --fixture rect_patch --band 4GHz" + quiet) == 2);
  CHECK(cli("simulate" + quiet) == 2);
  CHECK(cli("frobnicate") == 2);
  CHECK(cli("") == 2);
  CHECK(cli("--help") == 0);

  const fs::path syn = dir / "syn.json";
  REQUIRE(cli("synthesize --f0 2.5e9", syn.string()) == 0);
  const json s = json::parse(slurp(syn));
  CHECK(s.at("patch").at("width").get<double>() == doctest::Approx(47.40e-3).epsilon(1e-3));

  const fs::path desc = dir / "desc.json";
  REQUIRE(cli("describe simple_u", desc.string()) == 0);
  CHECK(json::parse(slurp(desc)).at("min_feature").get<double>() == doctest::Approx(0.7e-3));
  CHECK(cli("describe nope") == 2);

  const std::string s1p =
    file("dip.s1p", "# HZ S RI R 50\n4.0e9 0.5 0\n4.1e9 0.2 0\n4.2e9 0.01 0\n4.3e9 0.2 0\n4.4e9 0.5 0\n");
  const fs::path an = dir / "an.json";
  REQUIRE(cli("analyze " + s1p, an.string()) == 0);
  const json a = json::parse(slurp(an));
  CHECK(a.at("min_rl_db").get<double>() == doctest::Approx(-40.0));
  CHECK(a.at("f_min_rl").get<double>() == doctest::Approx(4.2e9));
  CHECK(cli("analyze " + (dir / "none.s1p").string()) == 8);
  CHECK(cli("analyze " + file("bad.s1p", "# HZ S RI R 50\n4.0e9 x 0\n")) == 8);
}
