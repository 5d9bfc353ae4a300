#pragma once

#include <stdexcept>
#include <string>

namespace floodmob {

/// Malformed ring or polygon (open ring, too few distinct vertices, bad coordinates).
class GeometryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Fatal input problem. The message names the file and the offending record.
class IngestError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Statistic is undefined for the given input (empty sample, degenerate variance, ...).
class StatsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SynthError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace floodmob
