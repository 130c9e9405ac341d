#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mapflow/rotation.hpp"

namespace mapflow::cli {

enum Exit : int {
  kPass = 0,
  kCheckFailed = 1,
  kConfigError = 2,
  kDomainExit = 3,
  kNonClosure = 4,
  kNotInvariant = 5,
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raw key/value settings with where each one came from, for error messages.
struct Setting {
  std::string value;
  std::string origin;  // "file:line" or "--flag"
};
using Settings = std::map<std::string, Setting>;

/// Parses the flat config format: `key = value` lines, optional `[section]`
/// headers, `#` comments. Keys are stored as given; sections only restrict
/// which keys may appear under them.
Settings parse_config(std::istream& in, const std::string& source);
Settings load_config_file(const std::string& path);

struct RunConfig {
  std::string command;
  std::string map;
  Params params;
  std::string mu;
  int power = 1;
  std::optional<Vec> seed;
  std::optional<Vec> center;
  std::optional<Vec> origin;
  std::optional<Vec> direction;
  double s_min = 0.05;
  double s_max = 1.0;
  std::size_t count = 10;
  int mmax = 4;
  std::size_t samples = 1000;
  std::size_t measure_samples = 200000;
  std::uint64_t rng_seed = 1;
  IntegratorConfig integrator;
  double threshold = kDefaultThreshold;
  std::string out;
  std::optional<std::vector<double>> bounds;  // xmin, xmax, ymin, ymax
  std::optional<std::vector<double>> box;     // lo_1, hi_1, ..., lo_n, hi_n
  std::vector<int> axes{0, 1};
  int iterations = 60;

  /// The map after parameters and power have been applied. Throws
  /// ConfigError for unknown names or bad parameters.
  MapSpec build_map() const;
  /// Multiplier name, falling back to the map's default.
  std::string multiplier_name(const MapSpec& m) const;
};

/// Builds a RunConfig from merged settings (file values overridden by
/// flags) and validates it against the built-in registry.
RunConfig make_run_config(const std::string& command, const Settings& settings);

int cmd_verify(const RunConfig& cfg, std::ostream& out);
int cmd_rotnum(const RunConfig& cfg, std::ostream& out);
int cmd_sweep(const RunConfig& cfg, std::ostream& out);
int cmd_portrait(const RunConfig& cfg, std::ostream& out);

/// Column names for a map of dimension n.
std::vector<std::string> csv_header(std::size_t n);
std::string csv_line(const SweepRow& row, std::size_t n);

/// Writes via a temporary file and rename, so readers never see half a file.
void write_atomic(const std::string& path, const std::string& content);

/// Exit code for a row status.
int exit_code_for(const std::string& status);

/// Entry point shared by the executable and the tests.
int run(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace mapflow::cli
