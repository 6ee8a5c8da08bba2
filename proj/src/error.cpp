// SPDX-License-Identifier: Apache-2.0

#include "patchfdtd/error.hpp"

namespace patchfdtd
{

int exit_code(ErrorKind kind)
{
  switch (kind)
  {
    case ErrorKind::Config:
      return 2;
    case ErrorKind::Geometry:
      return 3;
    case ErrorKind::Budget:
      return 4;
    case ErrorKind::Coverage:
    case ErrorKind::PortPlacement:
      return 5;
    case ErrorKind::Divergence:
      return 6;
    case ErrorKind::Truncation:
    case ErrorKind::BandCoverage:
    case ErrorKind::NoBandwidth:
    case ErrorKind::PowerAccounting:
    case ErrorKind::MissingFrequency:
      return 7;
    case ErrorKind::Io:
      return 8;
  }
  return 10;
}

const char *to_string(ErrorKind kind)
{
  switch (kind)
  {
    case ErrorKind::Config:
      return "config";
    case ErrorKind::Geometry:
      return "geometry";
    case ErrorKind::Budget:
      return "budget";
    case ErrorKind::Coverage:
      return "coverage";
    case ErrorKind::PortPlacement:
      return "port-placement";
    case ErrorKind::Divergence:
      return "divergence";
    case ErrorKind::Truncation:
      return "truncation";
    case ErrorKind::BandCoverage:
      return "band-coverage";
    case ErrorKind::NoBandwidth:
      return "no-bandwidth";
    case ErrorKind::PowerAccounting:
      return "power-accounting";
    case ErrorKind::MissingFrequency:
      return "missing-frequency";
    case ErrorKind::Io:
      return "io";
  }
  return "unknown";
}

}  // namespace patchfdtd
