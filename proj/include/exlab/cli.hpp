// Command-line front end: configuration, experiment dispatch, and output files
// (<name>.csv, <name>.gp.dat, <name>.manifest.json).
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace exlab::cli {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Params {
  double T = 1000.0;
  std::vector<double> grid;  // horizons; empty selects the command's default
  std::size_t n = 1000;
  std::size_t samples = 100;
  std::vector<double> R{1, 2, 4, 8, 16};
  double c = 0.6;
  std::string mode = "uniform01";
  std::vector<double> x0{0.3, 0.97};
  std::uint64_t bit_budget = 0;  // 0: sized automatically
  double margin = 10.0;
  std::vector<double> lags{0, 1, 2, 3, 5, 7, 10, 15, 20};
  double threshold = 0.69314718055994531;  // ln 2
  std::string source = "dyadic";
  double band_lo = 0.35, band_hi = 0.65;
};

struct RunConfig {
  std::string command;
  Params params;
  std::uint64_t seed = 0;
  std::string seed_source;  // flag, config, env or entropy
  int threads = 0;          // 0: available parallelism
  bool check = false;
  std::string out_dir = ".";
  std::string name;  // defaults to the command
  std::string config_path;
};

/// Parse arguments (without the program name). Flags override config-file
/// values; unknown config keys are rejected. Throws UsageError.
RunConfig parse_config(const std::vector<std::string>& args);

struct OutputFile {
  std::string path;
  std::string sha256;
  std::uint64_t bytes = 0;
};

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct RunManifest {
  std::vector<OutputFile> files;
  std::vector<CheckResult> checks;
  double seconds = 0.0;
  bool checks_pass() const;
};

/// Run one experiment and write its files; the manifest is written last.
RunManifest execute(const RunConfig& config);

/// Full program: returns 0 on success, 2 when --check fails, 1 on error.
int run(int argc, char** argv);

std::string format_number(double x);
std::string sha256_hex(const std::string& bytes);

}  // namespace exlab::cli
