#pragma once

// Named experiments. Each run resolves its configuration, writes its outputs
// into <out_root>/<name>-<config hash>-s<seed>/ together with the resolved
// config (config.resolved), the output schema (SCHEMA) and, only on success,
// a DONE marker.

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "haegan/config.hpp"

namespace haegan::experiments {

enum class Status {
  Ok = 0,
  Failure = 1,           // a property or invariant check failed
  ConfigError = 2,
  NumericalAbort = 3,
};

const std::vector<std::string>& names();
config::Schema schema(const std::string& name);

struct Request {
  std::string name;
  std::string config_path;  // optional
  std::optional<std::uint64_t> seed;
  std::string out_root = "out";
  std::string scale = "ci";
  std::vector<std::string> overrides;  // "key=value"
  std::ostream* log = nullptr;         // progress lines
};

struct Outcome {
  Status status = Status::Ok;
  std::string run_dir;
  std::string message;
};

// Never throws; failures are reported through the outcome.
Outcome run(const Request& req);

// Resolves the configuration of a request without running it.
config::Config resolve(const Request& req);

}  // namespace haegan::experiments
