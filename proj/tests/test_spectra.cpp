// SPDX-License-Identifier: Apache-2.0

#include "patchfdtd/constants.hpp"
#include "patchfdtd/error.hpp"
#include "patchfdtd/spectra.hpp"

#include <doctest.h>

#include <cmath>
#include <functional>
#include <initializer_list>
#include <sstream>
#include <string>

using namespace patchfdtd;
using constants::pi;

namespace
{

// exp(-(t - tc)^2 / (2 s^2)) sampled on [0, 2 tc].
TimeSeries gaussian(double s, double tc, double dt)
{
  TimeSeries ts;
  ts.dt = dt;
  const int n = static_cast<int>(std::ceil(2.0 * tc / dt)) + 1;
  for (int k = 0; k < n; ++k)
  {
    const double u = k * dt - tc;
    ts.x.push_back(std::exp(-u * u / (2.0 * s * s)));
  }
  return ts;
}

ErrorKind kind_of(const std::function<void()> &f)
{
  try
  {
    f();
  }
  catch (const Error &e)
  {
    return e.kind();
  }
  FAIL("no error thrown");
  return ErrorKind::Io;
}

PortRecord pulse_record(double gamma, int delay_samples)
{
  PortRecord r;
  r.dt = 1e-12;
  r.t_start = 0.5e-12;
  SourceWaveform w;
  const int n = static_cast<int>(std::ceil(w.end_time() / r.dt)) + delay_samples + 10;
  for (int k = 0; k < n; ++k)
  {
    const double inc = 0.5 * w.value(r.time(k));
    const double late = k >= delay_samples ? 0.5 * w.value(r.time(k - delay_samples)) : 0.0;
    r.v_inc.push_back(inc);
    r.v.push_back(inc + gamma * late);
    r.i.push_back((2.0 * inc - r.v.back()) / r.reference_impedance);
  }
  return r;
}

}  // namespace

TEST_CASE("DFT of a Gaussian matches its Fourier transform")
{
  const double s = 50e-12, tc = 400e-12;
  const TimeSeries g = gaussian(s, tc, 1e-12);
  const std::vector<double> fs = {0.0, 1e9, 2.5e9, 4e9, 6e9};
  const Spectrum x = dft(g, fs);
  for (std::size_t k = 0; k < fs.size(); ++k)
  {
    const double f = fs[k];
    const std::complex<double> exact =
      s * std::sqrt(2.0 * pi) * std::exp(-2.0 * pi * pi * s * s * f * f) * std::polar(1.0, -2.0 * pi * f * tc);
    CHECK(std::abs(x.values[k] - exact) < 1e-9 * s);
  }
}

TEST_CASE("Parseval: time-domain energy equals the spectral integral")
{
  const double dt = 1e-12;
  const TimeSeries g = gaussian(30e-12, 300e-12, dt);
  double time_energy = 0.0;
  for (double v : g.x)
    time_energy += v * v * dt;
  // one-sided integral up to Nyquist, doubled
  const double df = 1e8;
  const std::vector<double> fs = frequency_grid(0.0, 0.5 / dt, df);
  const Spectrum x = dft(g, fs);
  double freq_energy = 0.0;
  for (std::size_t k = 0; k < fs.size(); ++k)
  {
    const double w = (k == 0 || k + 1 == fs.size()) ? 0.5 : 1.0;
    freq_energy += w * std::norm(x.values[k]) * df;
  }
  CHECK(2.0 * freq_energy == doctest::Approx(time_energy).epsilon(1e-6));
}

TEST_CASE("DFT is linear and a start-time shift is a phase factor")
{
  TimeSeries a = gaussian(40e-12, 300e-12, 1e-12);
  TimeSeries b = a;
  b.t_start = 25e-12;
  const std::vector<double> fs = {1e9, 3e9, 5e9};
  const Spectrum xa = dft(a, fs), xb = dft(b, fs);
  for (std::size_t k = 0; k < fs.size(); ++k)
    CHECK(std::abs(xb.values[k] - xa.values[k] * std::polar(1.0, -2.0 * pi * fs[k] * 25e-12)) <
          1e-12 * std::abs(xa.values[k]));

  TimeSeries c = a;
  for (auto &v : c.x)
    v *= -3.0;
  const Spectrum xc = dft(c, fs);
  for (std::size_t k = 0; k < fs.size(); ++k)
    CHECK(std::abs(xc.values[k] + 3.0 * xa.values[k]) < 1e-12 * std::abs(xa.values[k]));
}

TEST_CASE("a truncated record needs explicit permission")
{
  const TimeSeries g = gaussian(40e-12, 300e-12, 1e-12);
  CHECK(kind_of([&] { dft(g, {1e9}, {false, false}); }) == ErrorKind::Truncation);
  CHECK_NOTHROW(dft(g, {1e9}, {false, true}));
}

TEST_CASE("frequency grid includes both ends")
{
  const auto g = frequency_grid(1e9, 7e9, 5e6);
  CHECK(g.size() == 1201u);
  CHECK(g.front() == 1e9);
  CHECK(g.back() == doctest::Approx(7e9));
  CHECK(frequency_grid(4e9, 4e9, 1e6).size() == 1u);
  CHECK_THROWS_AS(frequency_grid(5e9, 4e9, 1e6), ValidationError);
}

TEST_CASE("S11 of a delayed constant reflection")
{
  const double gamma = -0.4;
  const int delay = 37;
  const PortRecord r = pulse_record(gamma, delay);
  const std::vector<double> fs = frequency_grid(2e9, 7e9, 0.5e9);
  const FrequencyResponse fr = s11(r, fs);
  for (std::size_t k = 0; k < fs.size(); ++k)
  {
    const std::complex<double> exact = gamma * std::polar(1.0, -2.0 * pi * fs[k] * delay * r.dt);
    CHECK(std::abs(fr.s11.values[k] - exact) < 1e-9);
    CHECK(fr.rl_db[k] == doctest::Approx(20.0 * std::log10(0.4)).epsilon(1e-9));
  }
  CHECK(fr.resonances.empty());
}

TEST_CASE("matched port: accepted power equals the available power")
{
  const PortRecord r = pulse_record(0.0, 0);
  const std::vector<double> fs = {3e9, 4.25e9, 6e9};
  const std::vector<double> p = accepted_power(r, fs);
  const Spectrum vi = dft({r.dt, r.t_start, r.v_inc}, fs);
  for (std::size_t k = 0; k < fs.size(); ++k)
    CHECK(p[k] == doctest::Approx(0.5 * std::norm(vi.values[k]) / r.reference_impedance).epsilon(1e-12));

  // full reflection accepts nothing
  const PortRecord shorted = pulse_record(-1.0, 0);
  for (double v : accepted_power(shorted, fs))
    CHECK(std::abs(v) < 1e-30);
}

TEST_CASE("band coverage is enforced")
{
  const PortRecord r = pulse_record(-0.3, 5);
  CHECK(kind_of([&] { s11(r, {30e9}); }) == ErrorKind::BandCoverage);
  CHECK(kind_of([&] { s11(r, {}); }) == ErrorKind::BandCoverage);
}

TEST_CASE("return loss clamps at the floor")
{
  CHECK(return_loss_db(std::complex<double>(0.0, 0.0)) == return_loss_floor_db);
  CHECK(return_loss_db(std::complex<double>(1e-9, 0.0)) == return_loss_floor_db);
  CHECK(return_loss_db(std::complex<double>(0.0, 0.1)) == doctest::Approx(-20.0));
}

TEST_CASE("resonances are refined to the parabola vertex")
{
  const double fr = 4.1234e9, a = 30.0 / 1e16;
  const std::vector<double> fs = frequency_grid(3.5e9, 5e9, 5e6);
  std::vector<double> rl;
  for (double f : fs)
    rl.push_back(std::min(-1.0, -35.0 + a * (f - fr) * (f - fr)));
  const auto res = find_resonances(fs, rl, {3.5e9, 5e9});
  REQUIRE(res.size() == 1u);
  CHECK(res[0].frequency == doctest::Approx(fr).epsilon(1e-10));
  CHECK(res[0].depth_db == doctest::Approx(-35.0).epsilon(1e-9));

  // outside the band nothing is reported
  CHECK(find_resonances(fs, rl, {4.5e9, 5e9}).empty());
  // a shallow dip is not a resonance
  CHECK(find_resonances(fs, rl, {3.5e9, 5e9}, -40.0).empty());
}

TEST_CASE("several dips come back deepest first")
{
  const std::vector<double> fs = frequency_grid(3e9, 6e9, 10e6);
  std::vector<double> rl;
  for (double f : fs)
  {
    const double d1 = -15.0 + 1e-15 * (f - 3.6e9) * (f - 3.6e9);
    const double d2 = -28.0 + 1e-15 * (f - 4.4e9) * (f - 4.4e9);
    const double d3 = -12.0 + 1e-15 * (f - 5.3e9) * (f - 5.3e9);
    rl.push_back(std::min({d1, d2, d3, -0.5}));
  }
  const auto res = find_resonances(fs, rl, {3e9, 6e9});
  REQUIRE(res.size() == 3u);
  CHECK(res[0].frequency == doctest::Approx(4.4e9));
  CHECK(res[1].frequency == doctest::Approx(3.6e9));
  CHECK(res[2].frequency == doctest::Approx(5.3e9));
}

TEST_CASE("-10 dB bandwidth of a parabolic dip")
{
  const double fr = 4.2e9, a = 25.0 / 1e16;
  const std::vector<double> fs = frequency_grid(3.5e9, 5e9, 1e6);
  std::vector<double> rl;
  for (double f : fs)
    rl.push_back(-30.0 + a * (f - fr) * (f - fr));
  const Interval bw = bandwidth(fs, rl, fr);
  const double half = std::sqrt(20.0 / a);
  CHECK(bw.f1 == doctest::Approx(fr - half).epsilon(1e-6));
  CHECK(bw.f2 == doctest::Approx(fr + half).epsilon(1e-6));
  CHECK(bw.width() == doctest::Approx(2.0 * half).epsilon(1e-4));

  for (auto &v : rl)
    v = std::max(v, -8.0);
  CHECK(kind_of([&] { bandwidth(fs, rl, fr); }) == ErrorKind::NoBandwidth);
}

TEST_CASE("bandwidth running into the sweep edge stops at the edge")
{
  const std::vector<double> fs = frequency_grid(4e9, 4.5e9, 10e6);
  std::vector<double> rl(fs.size(), -20.0);
  const Interval bw = bandwidth(fs, rl, 4.2e9);
  CHECK(bw.f1 == 4e9);
  CHECK(bw.f2 == doctest::Approx(4.5e9));
}

TEST_CASE("Touchstone write and read round trip")
{
  Spectrum s;
  s.freqs = {1e9, 1.5e9, 2.25e9};
  s.values = {{0.5, -0.25}, {-0.1, 0.9}, {1e-6, 0.0}};
  std::ostringstream out;
  write_touchstone(out, s, 50.0, {"test"});
  const std::string text = out.str();
  CHECK(text.rfind("! test\n# HZ S RI R 50\n", 0) == 0);
  CHECK(text.find("1500000000 -1.000000000e-01 9.000000000e-01\n") != std::string::npos);

  std::istringstream in(text);
  const TouchstoneData d = read_touchstone(in);
  CHECK(d.reference_impedance == 50.0);
  REQUIRE(d.s11.size() == 3u);
  for (std::size_t k = 0; k < 3; ++k)
  {
    CHECK(d.s11.freqs[k] == s.freqs[k]);
    CHECK(std::abs(d.s11.values[k] - s.values[k]) < 1e-9);
  }

  Spectrum bad = s;
  bad.freqs[2] = 1e9;
  std::ostringstream sink;
  CHECK(kind_of([&] { write_touchstone(sink, bad); }) == ErrorKind::Io);
}

TEST_CASE("Touchstone reader accepts other units and formats")
{
  std::istringstream ma("! comment\n# GHz S MA R 75\n4.0 0.5 90\n4.5 0.1 -180 ! trailing comment\n");
  const TouchstoneData a = read_touchstone(ma);
  CHECK(a.reference_impedance == 75.0);
  CHECK(a.s11.freqs[0] == 4e9);
  CHECK(std::abs(a.s11.values[0] - std::complex<double>(0.0, 0.5)) < 1e-12);
  CHECK(std::abs(a.s11.values[1] - std::complex<double>(-0.1, 0.0)) < 1e-12);

  std::istringstream db("#MHZ S DB\n4000 -20 0\n");
  const TouchstoneData b = read_touchstone(db);
  CHECK(b.reference_impedance == 50.0);
  CHECK(b.s11.freqs[0] == 4e9);
  CHECK(std::abs(b.s11.values[0]) == doctest::Approx(0.1));
}

TEST_CASE("malformed Touchstone input reports the line")
{
  auto message = [](const std::string &text) {
    std::istringstream in(text);
    try
    {
      read_touchstone(in);
    }
    catch (const Error &e)
    {
      CHECK(e.kind() == ErrorKind::Io);
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(message("# HZ S RI R 50\n1e9 0.1\n").find("line 2") != std::string::npos);
  CHECK(message("# HZ S RI R 50\n1e9 0.1 0.2 0.3 0.4\n").find("line 2") != std::string::npos);
  CHECK(message("# HZ Y RI R 50\n").find("unsupported") != std::string::npos);
  CHECK(message("1e9 0.1 0.2\n").find("no option line") != std::string::npos);
  CHECK(message("# HZ S RI R 50\n# HZ S RI R 50\n").find("repeated") != std::string::npos);
}

TEST_CASE("return-loss CSV")
{
  std::ostringstream out;
  write_return_loss_csv(out, {4e9, 4.005e9}, {-12.5, -100.0});
  CHECK(out.str() == "f_hz,rl_db\n4000000000,-12.500000\n4005000000,-100.000000\n");
}
