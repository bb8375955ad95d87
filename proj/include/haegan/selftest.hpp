#pragma once

// Randomized property suite over the geometry and the differentiable layers,
// reported as one row per property with the worst error observed.

#include <cstdint>
#include <string>
#include <vector>

namespace haegan::selftest {

enum class Fault {
  None,
  BadClamp,  // clamps spatial coordinates after exp_map without recomputing time
};

Fault parse_fault(const std::string& name);

struct Options {
  std::size_t cases = 10000;
  std::size_t fd_seeds = 20;
  std::uint64_t seed = 0;
  Fault fault = Fault::None;
};

struct PropertyResult {
  std::string name;
  std::size_t cases = 0;
  double max_error = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

std::vector<PropertyResult> run(const Options& opts);

}  // namespace haegan::selftest
