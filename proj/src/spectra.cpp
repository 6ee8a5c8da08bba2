// SPDX-License-Identifier: Apache-2.0

#include "patchfdtd/spectra.hpp"

#include "patchfdtd/constants.hpp"
#include "patchfdtd/error.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

namespace patchfdtd
{

using constants::pi;

Spectrum dft(const TimeSeries &series, const std::vector<double> &freqs, const DftOptions &opts)
{
  if (!opts.decayed && !opts.allow_truncated)
    throw Error(ErrorKind::Truncation, "record did not decay; rerun longer or allow a truncated record");
  Spectrum out;
  out.freqs = freqs;
  out.values.assign(freqs.size(), {0.0, 0.0});
  const std::size_t n = series.x.size();
  // Phasors by recurrence, re-anchored every block to bound the drift.
  constexpr std::size_t block = 256;
  for (std::size_t f = 0; f < freqs.size(); ++f)
  {
    const double w = -2.0 * pi * freqs[f];
    const std::complex<double> rot = std::polar(1.0, w * series.dt);
    std::complex<double> acc{0.0, 0.0};
    for (std::size_t b = 0; b < n; b += block)
    {
      std::complex<double> z = std::polar(1.0, w * (series.t_start + static_cast<double>(b) * series.dt));
      std::complex<double> part{0.0, 0.0};
      const std::size_t e = std::min(n, b + block);
      for (std::size_t m = b; m < e; ++m)
      {
        part += series.x[m] * z;
        z *= rot;
      }
      acc += part;
    }
    out.values[f] = acc * series.dt;
  }
  return out;
}

std::vector<double> frequency_grid(double f_lo, double f_hi, double step)
{
  if (!(step > 0.0) || !(f_hi >= f_lo))
    throw ValidationError("band", "invalid frequency grid");
  std::vector<double> out;
  const long count = static_cast<long>(std::floor((f_hi - f_lo) / step + 1e-9));
  for (long k = 0; k <= count; ++k)
    out.push_back(f_lo + static_cast<double>(k) * step);
  return out;
}

FrequencyResponse s11(const PortRecord &port, const std::vector<double> &freqs, const DftOptions &opts)
{
  if (port.v.size() != port.v_inc.size())
    throw Error(ErrorKind::Config, "port record lengths differ");
  if (freqs.empty())
    throw Error(ErrorKind::BandCoverage, "no frequencies requested");
  TimeSeries refl{port.dt, port.t_start, port.v};
  TimeSeries inc{port.dt, port.t_start, port.v_inc};
  for (std::size_t n = 0; n < refl.x.size(); ++n)
    refl.x[n] -= inc.x[n];
  const Spectrum a = dft(inc, freqs, opts);
  const Spectrum b = dft(refl, freqs, opts);

  double bound = 0.0;
  for (double v : port.v_inc)
    bound += std::abs(v);
  bound *= port.dt;
  const double floor = 1e-3 * bound;

  FrequencyResponse r;
  r.s11.freqs = freqs;
  r.s11.values.resize(freqs.size());
  for (std::size_t f = 0; f < freqs.size(); ++f)
  {
    if (!(std::abs(a.values[f]) > floor) || floor <= 0.0)
    {
      char msg[160];
      std::snprintf(msg, sizeof msg, "incident spectrum below the noise floor at %.6g Hz", freqs[f]);
      throw Error(ErrorKind::BandCoverage, msg);
    }
    r.s11.values[f] = b.values[f] / a.values[f];
  }
  r.rl_db = return_loss_db(r.s11);
  r.band_used = {freqs.front(), freqs.back()};
  r.resonances = find_resonances(freqs, r.rl_db, r.band_used);
  return r;
}

std::vector<double> accepted_power(const PortRecord &port, const std::vector<double> &freqs, const DftOptions &opts)
{
  const Spectrum v = dft({port.dt, port.t_start, port.v}, freqs, opts);
  const Spectrum i = dft({port.dt, port.t_start, port.i}, freqs, opts);
  std::vector<double> out(freqs.size());
  for (std::size_t f = 0; f < freqs.size(); ++f)
    out[f] = 0.5 * std::real(v.values[f] * std::conj(i.values[f]));
  return out;
}

double return_loss_db(std::complex<double> s)
{
  const double m = std::abs(s);
  if (!(m > 0.0))
    return return_loss_floor_db;
  return std::max(return_loss_floor_db, 20.0 * std::log10(m));
}

std::vector<double> return_loss_db(const Spectrum &s)
{
  std::vector<double> out;
  out.reserve(s.values.size());
  for (const auto &v : s.values)
    out.push_back(return_loss_db(v));
  return out;
}

std::vector<Resonance> find_resonances(const std::vector<double> &freqs, const std::vector<double> &rl,
                                       const Band &band, double threshold_db)
{
  std::vector<Resonance> out;
  for (std::size_t k = 1; k + 1 < rl.size(); ++k)
  {
    if (freqs[k] < band.f_lo || freqs[k] > band.f_hi)
      continue;
    const double y0 = rl[k - 1], y1 = rl[k], y2 = rl[k + 1];
    if (!(y1 < y0 && y1 <= y2 && y1 < threshold_db))
      continue;
    const double den = y0 - 2.0 * y1 + y2;
    double delta = den > 0.0 ? 0.5 * (y0 - y2) / den : 0.0;
    delta = std::clamp(delta, -0.5, 0.5);
    const double step = freqs[k + 1] - freqs[k];
    Resonance r;
    r.frequency = freqs[k] + delta * step;
    r.depth_db = std::min(y1, y1 - 0.25 * (y0 - y2) * delta);
    out.push_back(r);
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const Resonance &a, const Resonance &b) { return a.depth_db < b.depth_db; });
  return out;
}

Interval bandwidth(const std::vector<double> &freqs, const std::vector<double> &rl, double f_res,
                   double threshold_db)
{
  if (freqs.empty() || freqs.size() != rl.size())
    throw Error(ErrorKind::NoBandwidth, "empty return-loss series");
  std::size_t c = 0;
  for (std::size_t k = 1; k < freqs.size(); ++k)
    if (std::abs(freqs[k] - f_res) < std::abs(freqs[c] - f_res))
      c = k;
  if (!(rl[c] <= threshold_db))
  {
    char msg[160];
    std::snprintf(msg, sizeof msg, "dip at %.6g Hz (%.2f dB) does not reach %.2f dB", f_res, rl[c], threshold_db);
    throw Error(ErrorKind::NoBandwidth, msg);
  }
  auto cross = [&](std::size_t in, std::size_t out) {
    const double t = (threshold_db - rl[in]) / (rl[out] - rl[in]);
    return freqs[in] + t * (freqs[out] - freqs[in]);
  };
  Interval r;
  std::size_t lo = c;
  while (lo > 0 && rl[lo - 1] <= threshold_db)
    --lo;
  r.f1 = lo > 0 ? cross(lo, lo - 1) : freqs.front();
  std::size_t hi = c;
  while (hi + 1 < rl.size() && rl[hi + 1] <= threshold_db)
    ++hi;
  r.f2 = hi + 1 < rl.size() ? cross(hi, hi + 1) : freqs.back();
  return r;
}

void write_touchstone(std::ostream &out, const Spectrum &s, double z0, const std::vector<std::string> &comments)
{
  for (const auto &c : comments)
    out << "! " << c << '\n';
  char line[128];
  std::snprintf(line, sizeof line, "# HZ S RI R %.12g\n", z0);
  out << line;
  for (std::size_t k = 0; k < s.freqs.size(); ++k)
  {
    if (k > 0 && !(s.freqs[k] > s.freqs[k - 1]))
      throw Error(ErrorKind::Io, "touchstone frequencies must be ascending");
    std::snprintf(line, sizeof line, "%.12g %.9e %.9e\n", s.freqs[k], s.values[k].real(), s.values[k].imag());
    out << line;
  }
  if (!out)
    throw Error(ErrorKind::Io, "failed to write touchstone data");
}

TouchstoneData read_touchstone(std::istream &in)
{
  TouchstoneData d;
  double unit = 1e9;  // Touchstone default is GHz
  std::string format = "MA";
  bool have_options = false;
  std::string line;
  int line_no = 0;
  auto fail = [&](const std::string &msg) {
    throw Error(ErrorKind::Io, "touchstone line " + std::to_string(line_no) + ": " + msg);
  };
  while (std::getline(in, line))
  {
    ++line_no;
    const auto bang = line.find('!');
    if (bang != std::string::npos)
      line.erase(bang);
    std::istringstream ss(line);
    std::string first;
    if (!(ss >> first))
      continue;
    if (first[0] == '#')
    {
      if (have_options)
        fail("repeated option line");
      have_options = true;
      std::string tok = first.substr(1);
      std::vector<std::string> toks;
      if (!tok.empty())
        toks.push_back(tok);
      while (ss >> tok)
        toks.push_back(tok);
      for (std::size_t k = 0; k < toks.size(); ++k)
      {
        std::string t = toks[k];
        for (auto &ch : t)
          ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
        if (t == "HZ")
          unit = 1.0;
        else if (t == "KHZ")
          unit = 1e3;
        else if (t == "MHZ")
          unit = 1e6;
        else if (t == "GHZ")
          unit = 1e9;
        else if (t == "RI" || t == "MA" || t == "DB")
          format = t;
        else if (t == "S")
          continue;
        else if (t == "R")
        {
          if (k + 1 >= toks.size())
            fail("missing reference impedance");
          try
          {
            d.reference_impedance = std::stod(toks[++k]);
          }
          catch (const std::exception &)
          {
            fail("bad reference impedance");
          }
        }
        else
          fail("unsupported option '" + toks[k] + "'");
      }
      continue;
    }
    double f = 0.0, a = 0.0, b = 0.0;
    std::istringstream data(line);
    if (!(data >> f >> a >> b))
      fail("expected three numbers");
    std::string extra;
    if (data >> extra)
      fail("trailing data (only one-port files are supported)");
    std::complex<double> v;
    if (format == "RI")
      v = {a, b};
    else if (format == "MA")
      v = std::polar(a, b * pi / 180.0);
    else
      v = std::polar(std::pow(10.0, a / 20.0), b * pi / 180.0);
    d.s11.freqs.push_back(f * unit);
    d.s11.values.push_back(v);
  }
  if (!have_options)
    throw Error(ErrorKind::Io, "touchstone data has no option line");
  return d;
}

void write_return_loss_csv(std::ostream &out, const std::vector<double> &freqs, const std::vector<double> &rl)
{
  out << "f_hz,rl_db\n";
  char line[96];
  for (std::size_t k = 0; k < freqs.size(); ++k)
  {
    std::snprintf(line, sizeof line, "%.12g,%.6f\n", freqs[k], rl[k]);
    out << line;
  }
  if (!out)
    throw Error(ErrorKind::Io, "failed to write return-loss csv");
}

}  // namespace patchfdtd
