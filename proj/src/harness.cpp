// SPDX-License-Identifier: Apache-2.0

#include "patchfdtd/harness.hpp"

#include "patchfdtd/cavity_model.hpp"
#include "patchfdtd/error.hpp"
#include "patchfdtd/farfield.hpp"
#include "patchfdtd/spectra.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>

namespace patchfdtd
{

namespace fs = std::filesystem;
using nlohmann::json;

namespace
{

constexpr double nan = std::numeric_limits<double>::quiet_NaN();

double number_or_nan(const json &j, const char *key)
{
  const auto it = j.find(key);
  return it != j.end() && it->is_number() ? it->get<double>() : nan;
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

void write_file(const fs::path &p, const std::string &text)
{
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out)
    throw Error(ErrorKind::Io, "cannot write '" + p.string() + "'");
  out << text;
  out.close();
  if (!out)
    throw Error(ErrorKind::Io, "failed writing '" + p.string() + "'");
}

void make_dirs(const fs::path &p)
{
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec)
    throw Error(ErrorKind::Io, "cannot create directory '" + p.string() + "': " + ec.message());
}

// Exclusive lock on a file for the lifetime of the object.
class FileLock
{
public:
  explicit FileLock(const fs::path &p)
  {
    fd_ = ::open(p.c_str(), O_RDWR | O_CREAT, 0644);
    if (fd_ < 0)
      throw Error(ErrorKind::Io, "cannot open lock file '" + p.string() + "'");
    if (::flock(fd_, LOCK_EX) != 0)
    {
      ::close(fd_);
      throw Error(ErrorKind::Io, "cannot lock '" + p.string() + "'");
    }
  }
  ~FileLock()
  {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
  FileLock(const FileLock &) = delete;
  FileLock &operator=(const FileLock &) = delete;

private:
  int fd_ = -1;
};

json band_json(const Band &b) { return {{"f_lo", b.f_lo}, {"f_hi", b.f_hi}}; }

json interval_json(const std::optional<Interval> &iv)
{
  if (!iv)
    return nullptr;
  return {{"f1", iv->f1}, {"f2", iv->f2}, {"width", iv->width()}};
}

std::optional<Interval> try_bandwidth(const std::vector<double> &freqs, const std::vector<double> &rl, double f)
{
  try
  {
    return bandwidth(freqs, rl, f);
  }
  catch (const Error &e)
  {
    if (e.kind() != ErrorKind::NoBandwidth)
      throw;
    return std::nullopt;
  }
}

std::string pattern_csv(const std::vector<FarFieldPattern> &patterns)
{
  std::ostringstream o;
  o << "f_hz,plane,theta_deg,gain_dbi\n";
  char line[128];
  for (const auto &p : patterns)
    for (const auto plane : {CutPlane::E, CutPlane::H})
    {
      const PatternCut cut = pattern_cut(p, plane);
      for (std::size_t k = 0; k < cut.theta_deg.size(); ++k)
      {
        std::snprintf(line, sizeof line, "%.12g,%s,%.6g,%.6f\n", p.frequency, plane == CutPlane::E ? "E" : "H",
                      cut.theta_deg[k], cut.gain_dbi[k]);
        o << line;
      }
    }
  return o.str();
}

std::size_t nearest(const std::vector<double> &xs, double x)
{
  std::size_t best = 0;
  for (std::size_t k = 1; k < xs.size(); ++k)
    if (std::abs(xs[k] - x) < std::abs(xs[best] - x))
      best = k;
  return best;
}

}  // namespace

double SimulationReport::min_rl_db() const { return number_or_nan(summary, "min_rl_db"); }
double SimulationReport::f_min_rl() const { return number_or_nan(summary, "f_min_rl"); }
double SimulationReport::max_gain_dbi() const { return number_or_nan(summary, "max_gain_dbi"); }

std::string dump_json(const json &j) { return j.dump(2) + "\n"; }

std::vector<double> farfield_frequencies(const RunConfig &c)
{
  std::vector<double> out;
  const Band &b = c.design.analysis_band;
  const int n = c.farfield.band_points;
  if (n == 1)
    out.push_back(b.center());
  else
    for (int k = 0; k < n; ++k)
      out.push_back(b.f_lo + (b.f_hi - b.f_lo) * k / (n - 1));
  if (c.farfield.extra_step > 0.0)
    for (double f : frequency_grid(c.frequencies.start, c.frequencies.stop, c.farfield.extra_step))
      out.push_back(f);
  std::sort(out.begin(), out.end());
  std::vector<double> unique;
  for (double f : out)
    if (unique.empty() || f > unique.back() * (1.0 + 1e-9))
      unique.push_back(f);
  return unique;
}

RunOptions run_options(const RunConfig &c, int threads)
{
  RunOptions o;
  o.grid = c.simulation.grid;
  o.grid.cpml_cells = c.simulation.cpml.thickness;
  o.cpml = c.simulation.cpml;
  o.source = c.simulation.source;
  o.max_steps = c.simulation.max_steps;
  o.energy_threshold = c.simulation.energy_threshold;
  o.threads = threads;
  o.precision = c.simulation.precision;
  o.farfield_freqs = farfield_frequencies(c);
  return o;
}

SimulationArtifacts compute_artifacts(const RunConfig &config, int threads, std::ostream *log)
{
  std::ostringstream run_log;
  RunOptions opts = run_options(config, threads);
  opts.progress = log;
  opts.run_log = &run_log;
  const RunResult result = run(config.design, opts);
  if (result.reason == Termination::Diverged)
    throw DivergenceError(result.diverged_step,
                          "fields diverged at step " + std::to_string(result.diverged_step));

  const bool decayed = result.reason == Termination::EnergyConverged;
  const DftOptions dft_opts{decayed, config.simulation.allow_truncated};
  const std::vector<double> freqs = config.frequencies.list();
  const FrequencyResponse fr = s11(result.port, freqs, dft_opts);
  const Band &band = config.design.analysis_band;

  // Far field over the comb.
  std::vector<FarFieldPattern> patterns;
  std::vector<double> comb;
  if (result.surface)
  {
    comb = result.surface->freqs;
    const std::vector<double> p_acc = accepted_power(result.port, comb, dft_opts);
    NtffOptions nopts;
    nopts.grid = DirectionGrid::with_step_deg(config.farfield.angle_step_deg);
    for (std::size_t f = 0; f < comb.size(); ++f)
      patterns.push_back(gain(ntff(*result.surface, comb[f], nopts), p_acc[f]));
  }
  auto gain_near = [&](double f) -> json {
    if (patterns.empty())
      return {{"gain_frequency", nullptr}, {"max_gain_dbi", nullptr}};
    const FarFieldPattern &p = patterns[nearest(comb, f)];
    return {{"gain_frequency", p.frequency},
            {"max_gain_dbi", p.max_gain_dbi},
            {"theta_deg", p.max_theta * 180.0 / 3.14159265358979323846},
            {"phi_deg", p.max_phi * 180.0 / 3.14159265358979323846}};
  };

  // Return-loss minimum inside the analysis band.
  std::size_t k_min = freqs.size();
  for (std::size_t k = 0; k < freqs.size(); ++k)
    if (freqs[k] >= band.f_lo && freqs[k] <= band.f_hi && (k_min == freqs.size() || fr.rl_db[k] < fr.rl_db[k_min]))
      k_min = k;
  if (k_min == freqs.size())
    throw Error(ErrorKind::BandCoverage, "frequency plan has no point inside the analysis band");
  double f_min = freqs[k_min];
  double rl_min = fr.rl_db[k_min];
  for (const auto &r : fr.resonances)
    if (std::abs(r.frequency - f_min) <= 1.5 * config.frequencies.step && r.depth_db < rl_min + 3.0)
    {
      f_min = r.frequency;
      rl_min = std::min(rl_min, r.depth_db);
      break;
    }

  json resonances = json::array();
  for (const auto &r : fr.resonances)
  {
    json e{{"f_res", r.frequency},
           {"rl_db", r.depth_db},
           {"in_band", r.frequency >= band.f_lo && r.frequency <= band.f_hi},
           {"bw_10db", interval_json(try_bandwidth(freqs, fr.rl_db, r.frequency))}};
    e.update(gain_near(r.frequency));
    resonances.push_back(e);
  }

  const GridSpec &g = result.plan.spec;
  const BitGrid2D mask = conductor_mask(config.design.layout, g.dx);

  json summary;
  summary["schema"] = "patchfdtd-summary/1";
  summary["design"] = config.design.name;
  summary["fixture"] = config.fixture ? json(config.fixture->name) : json(nullptr);
  if (config.fixture)
  {
    json params = json::object();
    for (const auto &[k, v] : config.fixture->params)
      params[k] = v;
    summary["params"] = params;
  }
  summary["preset"] = config.simulation.preset;
  summary["precision"] = config.simulation.precision == Precision::Single ? "single" : "double";
  summary["config_hash"] = config_hash(config);
  summary["band"] = band_json(band);
  summary["grid"] = {{"nx", g.nx},
                     {"ny", g.ny},
                     {"nz", g.nz},
                     {"cells", g.cell_count()},
                     {"dx", g.dx},
                     {"dy", g.dy},
                     {"dz", g.dz},
                     {"dt", g.dt},
                     {"cpml_cells", result.plan.cpml_cells},
                     {"k_ground", result.plan.k_ground},
                     {"k_patch", result.plan.k_patch},
                     {"under_resolved", mask.under_resolved}};
  summary["run"] = {{"steps", result.steps},
                    {"termination", to_string(result.reason)},
                    {"peak_energy", result.peak_energy},
                    {"final_energy", result.final_energy}};
  summary["frequencies"] = {{"start", freqs.front()}, {"stop", freqs.back()}, {"count", freqs.size()}};
  summary["resonances"] = resonances;
  summary["f_res"] = [&] {
    json a = json::array();
    for (const auto &r : fr.resonances)
      a.push_back(r.frequency);
    return a;
  }();
  summary["f_min_rl"] = f_min;
  summary["min_rl_db"] = rl_min;
  summary["bw_10db"] = interval_json(try_bandwidth(freqs, fr.rl_db, f_min));
  {
    const json gn = gain_near(f_min);
    summary["max_gain_dbi"] = gn["max_gain_dbi"];
    summary["gain_frequency"] = gn["gain_frequency"];
  }
  json ff = json::array();
  for (const auto &p : patterns)
    ff.push_back({{"f", p.frequency},
                  {"max_gain_dbi", p.max_gain_dbi},
                  {"radiated_power", p.radiated_power},
                  {"accepted_power", p.accepted_power},
                  {"efficiency", p.radiated_power / p.accepted_power}});
  summary["farfield"] = ff;

  SimulationArtifacts a;
  a.summary = summary;
  {
    std::ostringstream o;
    write_touchstone(o, fr.s11, config.design.port.reference_impedance,
                     {"patchfdtd " + config.design.name, "config " + config_hash(config)});
    a.files[output_files::s1p] = o.str();
  }
  {
    std::ostringstream o;
    write_return_loss_csv(o, freqs, fr.rl_db);
    a.files[output_files::rl_csv] = o.str();
  }
  a.files[output_files::pattern_csv] = pattern_csv(patterns);
  a.files[output_files::summary_json] = dump_json(summary);
  {
    std::ostringstream o;
    write_pgm(mask, o);
    a.files[output_files::geometry_pgm] = o.str();
  }
  a.files[output_files::run_log] = run_log.str();
  a.files[output_files::config] = serialize(config);
  return a;
}

namespace
{

bool wanted(const OutputSet &o, const std::string &name)
{
  if (name == output_files::s1p)
    return o.s1p;
  if (name == output_files::rl_csv)
    return o.rl_csv;
  if (name == output_files::pattern_csv)
    return o.pattern_csv;
  if (name == output_files::summary_json)
    return o.summary_json;
  if (name == output_files::geometry_pgm)
    return o.geometry_pgm;
  if (name == output_files::run_log)
    return o.run_log;
  return true;
}

const std::vector<std::string> &artifact_names()
{
  static const std::vector<std::string> names{output_files::s1p,          output_files::rl_csv,
                                              output_files::pattern_csv,  output_files::summary_json,
                                              output_files::geometry_pgm, output_files::run_log,
                                              output_files::config};
  return names;
}

}  // namespace

SimulationReport simulate(const RunConfig &config, const HarnessOptions &opts)
{
  const auto t0 = std::chrono::steady_clock::now();
  SimulationReport report;
  report.config_hash = config_hash(config);
  make_dirs(opts.out_dir);

  std::map<std::string, std::string> files;
  if (opts.cache_dir)
  {
    make_dirs(*opts.cache_dir);
    const fs::path entry = *opts.cache_dir / report.config_hash;
    FileLock lock(*opts.cache_dir / (report.config_hash + ".lock"));
    if (fs::exists(entry / "complete"))
    {
      for (const auto &name : artifact_names())
        files[name] = read_file(entry / name);
      const json c = json::parse(read_file(entry / "compute.json"));
      report.compute_runtime_s = c.at("runtime_s").get<double>();
      report.compute_threads = c.at("threads").get<int>();
      report.cache_hit = true;
      if (opts.log)
        *opts.log << "cache hit " << report.config_hash << " (" << config.design.name << ")\n";
    }
    else
    {
      if (opts.log)
        *opts.log << "cache miss " << report.config_hash << " (" << config.design.name << ")\n";
      SimulationArtifacts a = compute_artifacts(config, opts.threads, opts.log);
      report.compute_runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      report.compute_threads = opts.threads;
      const fs::path tmp = *opts.cache_dir / (report.config_hash + ".tmp");
      std::error_code ec;
      fs::remove_all(tmp, ec);
      make_dirs(tmp);
      for (const auto &[name, text] : a.files)
        write_file(tmp / name, text);
      write_file(tmp / "compute.json",
                 dump_json({{"runtime_s", report.compute_runtime_s}, {"threads", report.compute_threads}}));
      write_file(tmp / "complete", report.config_hash + "\n");
      fs::remove_all(entry, ec);
      fs::rename(tmp, entry, ec);
      if (ec)
        throw Error(ErrorKind::Io, "cannot populate cache entry '" + entry.string() + "': " + ec.message());
      files = std::move(a.files);
    }
  }
  else
  {
    files = compute_artifacts(config, opts.threads, opts.log).files;
    report.compute_runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    report.compute_threads = opts.threads;
  }

  for (const auto &[name, text] : files)
    if (wanted(config.outputs, name))
      write_file(opts.out_dir / name, text);
  report.summary = json::parse(files.at(output_files::summary_json));
  report.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  json timing{{"runtime_s", report.runtime_s},
              {"threads", opts.threads},
              {"cache_hit", report.cache_hit},
              {"compute_runtime_s", report.compute_runtime_s},
              {"compute_threads", report.compute_threads}};
  write_file(opts.out_dir / output_files::timing, dump_json(timing));
  return report;
}

// ---------------------------------------------------------------------------

SweepReport sweep(const ParsedConfig &config, const HarnessOptions &opts)
{
  if (!config.sweep || !config.run.fixture)
    throw ValidationError("sweep", "configuration has no [sweep] section over a fixture");
  const SweepConfig &sw = *config.sweep;
  SweepReport report;
  report.parameter = sw.parameter;
  report.metric = sw.metric;
  HarnessOptions row_opts = opts;
  if (!row_opts.cache_dir)
    row_opts.cache_dir = opts.out_dir / "cache";
  make_dirs(opts.out_dir);

  for (std::size_t n = 0; n < sw.values.size(); ++n)
  {
    SweepRow row;
    row.value = sw.values[n];
    row_opts.out_dir = opts.out_dir / "rows" / std::to_string(n);
    try
    {
      RunConfig rc = config.run;
      rc.fixture->params[sw.parameter] = row.value;
      const std::string name = rc.design.name;
      rc.design = build_fixture(*rc.fixture, config.run.design.analysis_band);
      rc.design.name = name;
      if (opts.log)
        *opts.log << "sweep row " << n << ": " << sw.parameter << " = " << row.value << "\n";
      const SimulationReport r = simulate(rc, row_opts);
      row.ok = true;
      row.cached = r.cache_hit;
      row.config_hash = r.config_hash;
      row.f_res = r.f_min_rl();
      row.min_rl_db = r.min_rl_db();
      row.max_gain_dbi = r.max_gain_dbi();
    }
    catch (const Error &e)
    {
      row.error = e.what();
      row.exit_code = exit_code(e.kind());
      if (opts.log)
        *opts.log << "sweep row " << n << " failed: " << e.what() << "\n";
    }
    report.rows.push_back(row);
  }

  const double centre = config.run.design.analysis_band.center();
  auto better = [&](const SweepRow &a, const SweepRow &b) {
    switch (sw.metric)
    {
    case SweepMetric::MinRlDb:
      return a.min_rl_db < b.min_rl_db;
    case SweepMetric::MaxGainDbi:
      return a.max_gain_dbi > b.max_gain_dbi;
    case SweepMetric::FRes:
      return std::abs(a.f_res - centre) < std::abs(b.f_res - centre);
    }
    return false;
  };
  for (std::size_t n = 0; n < report.rows.size(); ++n)
    if (report.rows[n].ok && (report.best < 0 || better(report.rows[n], report.rows[report.best])))
      report.best = static_cast<int>(n);

  std::ostringstream csv;
  csv << "value,status,f_res_hz,min_rl_db,max_gain_dbi,best,cached\n";
  json rows = json::array();
  char line[256];
  for (std::size_t n = 0; n < report.rows.size(); ++n)
  {
    const SweepRow &r = report.rows[n];
    const bool best = static_cast<int>(n) == report.best;
    if (r.ok)
      std::snprintf(line, sizeof line, "%.12g,ok,%.12g,%.6f,%.6f,%d,%d\n", r.value, r.f_res, r.min_rl_db,
                    r.max_gain_dbi, best ? 1 : 0, r.cached ? 1 : 0);
    else
      std::snprintf(line, sizeof line, "%.12g,failed,,,,0,0\n", r.value);
    csv << line;
    json jr{{"value", r.value}, {"status", r.ok ? "ok" : "failed"}, {"best", best}, {"cached", r.cached}};
    if (r.ok)
    {
      jr["f_res"] = r.f_res;
      jr["min_rl_db"] = r.min_rl_db;
      jr["max_gain_dbi"] = r.max_gain_dbi;
      jr["config_hash"] = r.config_hash;
    }
    else
    {
      jr["error"] = r.error;
      jr["exit_code"] = r.exit_code;
    }
    rows.push_back(jr);
  }
  json j{{"parameter", sw.parameter},
         {"metric", to_string(sw.metric)},
         {"fixture", config.run.fixture->name},
         {"rows", rows},
         {"best", report.best >= 0 ? json(report.best) : json(nullptr)}};
  write_file(opts.out_dir / "sweep.csv", csv.str());
  write_file(opts.out_dir / "sweep.json", dump_json(j));
  return report;
}

// ---------------------------------------------------------------------------

nlohmann::json describe_fixture(const std::string &fixture)
{
  const AntennaDesign d = build_fixture(FixtureRef{fixture, {}});
  json params = json::object();
  for (const auto &p : fixture_parameters(fixture))
    params[p] = fixture_default(fixture, p);
  json rects = json::array();
  for (const auto &r : d.layout.rects)
    rects.push_back({{"label", r.label},
                     {"op", r.op == RectOp::Add ? "add" : "cut"},
                     {"x0", r.x0},
                     {"y0", r.y0},
                     {"width", r.width},
                     {"height", r.height}});
  const Box2D bb = d.layout.bounding_box();
  return {{"fixture", fixture},
          {"design", d.name},
          {"parameters", params},
          {"substrate",
           {{"name", d.stack.substrate.name},
            {"eps_r", d.stack.substrate.rel_permittivity},
            {"loss_tangent", d.stack.substrate.loss_tangent},
            {"height", d.stack.substrate_height}}},
          {"board",
           {{"x0", d.stack.board.x0},
            {"y0", d.stack.board.y0},
            {"width", d.stack.board.width},
            {"depth", d.stack.board.depth}}},
          {"layout_bbox", {{"x0", bb.x0}, {"y0", bb.y0}, {"x1", bb.x1}, {"y1", bb.y1}}},
          {"conductor_area", layout_area(d.layout)},
          {"min_feature", min_feature(d.layout)},
          {"rects", rects},
          {"port",
           {{"x", d.port.x},
            {"y", d.port.y},
            {"axis", d.port.axis == Axis2D::X ? "x" : "y"},
            {"impedance", d.port.reference_impedance},
            {"width", d.port.width}}},
          {"band", band_json(d.analysis_band)}};
}

nlohmann::json analyze_touchstone(std::istream &in, const std::optional<Band> &band)
{
  const TouchstoneData t = read_touchstone(in);
  if (t.s11.size() < 3)
    throw Error(ErrorKind::Io, "touchstone data needs at least three frequencies");
  const std::vector<double> rl = return_loss_db(t.s11);
  const Band b = band ? *band : Band{t.s11.freqs.front(), t.s11.freqs.back()};
  json res = json::array();
  for (const auto &r : find_resonances(t.s11.freqs, rl, b))
    res.push_back({{"f_res", r.frequency},
                   {"rl_db", r.depth_db},
                   {"bw_10db", interval_json(try_bandwidth(t.s11.freqs, rl, r.frequency))}});
  std::size_t k_min = t.s11.size();
  for (std::size_t k = 0; k < t.s11.size(); ++k)
    if (t.s11.freqs[k] >= b.f_lo && t.s11.freqs[k] <= b.f_hi && (k_min == t.s11.size() || rl[k] < rl[k_min]))
      k_min = k;
  if (k_min == t.s11.size())
    throw Error(ErrorKind::BandCoverage, "no data inside the requested band");
  return {{"reference_impedance", t.reference_impedance},
          {"points", t.s11.size()},
          {"band", band_json(b)},
          {"f_min_rl", t.s11.freqs[k_min]},
          {"min_rl_db", rl[k_min]},
          {"bw_10db", interval_json(try_bandwidth(t.s11.freqs, rl, t.s11.freqs[k_min]))},
          {"resonances", res}};
}

nlohmann::json synthesize_patch(double f0, double eps_r, double height, double z0)
{
  if (!(f0 > 0.0) || !(eps_r >= 1.0) || !(height > 0.0) || !(z0 > 0.0))
    throw ValidationError("synthesize", "need f0 > 0, eps_r >= 1, height > 0 and z0 > 0");
  const cavity::PatchDimensions dims = cavity::design_patch(f0, eps_r, height);
  const cavity::PatchModel m{dims.width, dims.length, height, eps_r};
  const double eps_eff = cavity::effective_permittivity(m);
  const double w_line = cavity::microstrip_width(z0, height, eps_r);
  return {{"f0", f0},
          {"eps_r", eps_r},
          {"height", height},
          {"patch",
           {{"width", dims.width},
            {"length", dims.length},
            {"eps_eff", eps_eff},
            {"length_extension", cavity::length_extension(m, eps_eff)},
            {"f10_check", cavity::resonant_frequency(m)}}},
          {"feed",
           {{"impedance", z0},
            {"width", w_line},
            {"eps_eff", cavity::microstrip_effective_permittivity(w_line, height, eps_r)},
            {"impedance_check", cavity::microstrip_impedance(w_line, height, eps_r)}}}};
}

}  // namespace patchfdtd
