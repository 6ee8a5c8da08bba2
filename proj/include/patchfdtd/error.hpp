// SPDX-License-Identifier: Apache-2.0

#ifndef PATCHFDTD_ERROR_HPP
#define PATCHFDTD_ERROR_HPP

#include <stdexcept>
#include <string>

namespace patchfdtd
{

// Every failure the library reports carries one of these kinds. The CLI maps
// them onto process exit codes (see exit_code()).
enum class ErrorKind
{
  Config,           // parse error or invalid field value
  Geometry,         // inconsistent layout (cuts outside the patch, overlapping stubs)
  Budget,           // grid exceeds the configured cell budget
  Coverage,         // design does not fit the grid
  PortPlacement,    // lumped port not on a conductor or not over ground
  Divergence,       // non-finite field value during time stepping
  Truncation,       // record not decayed when a spectrum was requested
  BandCoverage,     // excitation spectrum too weak at a requested frequency
  NoBandwidth,      // dip shallower than the bandwidth threshold
  PowerAccounting,  // non-positive accepted power
  MissingFrequency, // far-field requested at a frequency that was not recorded
  Io,
};

class Error : public std::runtime_error
{
public:
  Error(ErrorKind kind, const std::string &what) : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

// Raised when time stepping produces a non-finite value.
class DivergenceError : public Error
{
public:
  DivergenceError(long step, const std::string &what)
    : Error(ErrorKind::Divergence, what), step_(step)
  {
  }

  long step() const noexcept { return step_; }

private:
  long step_;
};

// A validation error that names the offending field, e.g. "stack.substrate_height".
class ValidationError : public Error
{
public:
  ValidationError(std::string field, const std::string &what)
    : Error(ErrorKind::Config, field + ": " + what), field_(std::move(field))
  {
  }

  const std::string &field() const noexcept { return field_; }

private:
  std::string field_;
};

// Stable process exit codes, documented in README.md.
int exit_code(ErrorKind kind);

const char *to_string(ErrorKind kind);

}  // namespace patchfdtd

#endif  // PATCHFDTD_ERROR_HPP
