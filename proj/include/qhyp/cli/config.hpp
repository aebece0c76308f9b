#pragma once

#include "qhyp/montecarlo.hpp"

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace qhyp::cli {

/// Invalid configuration; the message starts with the offending location,
/// either a JSON pointer ("/scheme/eta") or "line L, column C" for syntax errors.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct OutputPaths {
  std::string dir = ".";
  std::string prefix;  // defaults to the experiment name
};

struct Config {
  std::string experiment = "experiment";
  ExperimentSpec spec;
  std::size_t true_hypothesis = 0;  // used by the trajectory command
  OutputPaths output;
};

struct ParsedConfig {
  Config config;
  std::vector<std::string> warnings;  // ignored fields
};

/// Parses and fully validates a JSON configuration.
ParsedConfig parse_config(std::string_view text);
ParsedConfig load_config(const std::string& path);

/// Writes a configuration that parse_config reads back unchanged. Hypotheses are
/// always written in explicit matrix form.
std::string serialize_config(const Config& config);

}  // namespace qhyp::cli
