// SPDX-License-Identifier: Apache-2.0

#ifndef PATCHFDTD_SPECTRA_HPP
#define PATCHFDTD_SPECTRA_HPP

#include "patchfdtd/fdtd_engine.hpp"
#include "patchfdtd/geometry.hpp"

#include <complex>
#include <iosfwd>
#include <string>
#include <vector>

namespace patchfdtd
{

struct TimeSeries
{
  double dt = 0.0;
  double t_start = 0.0;
  std::vector<double> x;
};

struct Spectrum
{
  std::vector<double> freqs;
  std::vector<std::complex<double>> values;

  std::size_t size() const { return freqs.size(); }
};

struct DftOptions
{
  bool decayed = true;          // the record ran until the fields decayed
  bool allow_truncated = false; // accept a record that did not
};

// X(f) = dt sum_n x_n exp(-j 2 pi f t_n), t_n = t_start + n dt.
Spectrum dft(const TimeSeries &series, const std::vector<double> &freqs, const DftOptions &opts = {});

// Uniform list f_lo, f_lo + step, ... up to f_hi (inclusive within 1e-9 step).
std::vector<double> frequency_grid(double f_lo, double f_hi, double step);

struct Resonance
{
  double frequency = 0.0;
  double depth_db = 0.0;
};

struct FrequencyResponse
{
  Spectrum s11;
  std::vector<double> rl_db;
  std::vector<Resonance> resonances;  // over band_used
  Band band_used;
};

// S11 = DFT[v - v_inc] / DFT[v_inc]. Throws BandCoverage when the incident
// spectrum drops below -60 dB of its bound at a requested frequency.
FrequencyResponse s11(const PortRecord &port, const std::vector<double> &freqs, const DftOptions &opts = {});

// Time-averaged power into the port, 1/2 Re(V I*), per frequency.
std::vector<double> accepted_power(const PortRecord &port, const std::vector<double> &freqs,
                                   const DftOptions &opts = {});

constexpr double return_loss_floor_db = -100.0;

// 20 log10 |S11|, clamped below at return_loss_floor_db.
std::vector<double> return_loss_db(const Spectrum &s11);
double return_loss_db(std::complex<double> s11);

// Local minima below threshold_db of a uniformly sampled series inside band,
// deepest first; frequency and depth from a parabola through three bins.
std::vector<Resonance> find_resonances(const std::vector<double> &freqs, const std::vector<double> &rl_db,
                                       const Band &band, double threshold_db = -10.0);

struct Interval
{
  double f1 = 0.0;
  double f2 = 0.0;
  double width() const { return f2 - f1; }
};

// Widest contiguous interval around f_res where rl <= threshold, with linear
// interpolation at the crossings. Throws NoBandwidth when the dip is too shallow.
Interval bandwidth(const std::vector<double> &freqs, const std::vector<double> &rl_db, double f_res,
                   double threshold_db = -10.0);

// Touchstone v1 one-port: "# HZ S RI R <z0>" and "f re im" lines.
void write_touchstone(std::ostream &out, const Spectrum &s11, double reference_impedance = 50.0,
                      const std::vector<std::string> &comments = {});

struct TouchstoneData
{
  double reference_impedance = 50.0;
  Spectrum s11;
};

// Reads HZ/KHZ/MHZ/GHZ frequencies and RI/MA/DB pairs; throws Io on malformed input.
TouchstoneData read_touchstone(std::istream &in);

// "f_hz,rl_db" header and one line per frequency.
void write_return_loss_csv(std::ostream &out, const std::vector<double> &freqs, const std::vector<double> &rl_db);

}  // namespace patchfdtd

#endif  // PATCHFDTD_SPECTRA_HPP
