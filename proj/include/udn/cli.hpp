#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace udn {

struct SweepGrid {
  std::string name;  // "p" or "theta"
  std::vector<double> values;
};

// NAME=START:STOP:STEP (arithmetic, stop inclusive), NAME=START:STOP:*FACTOR
// (geometric), or NAME=v1,v2,... An empty grid (start beyond stop) is legal.
SweepGrid parse_sweep(const std::string& spec);

struct CliOptions {
  std::string config_path;  // empty: built-in defaults
  std::string out_path;
  std::optional<std::string> sweep;
  std::optional<std::uint64_t> seed;
  std::optional<std::int64_t> horizon;
  std::size_t realizations = 20;
  long long workers = 0;  // 0: UDN_WORKERS env, then hardware concurrency
};

// Each command returns a process exit code and reports problems to diag.
// They are plain functions so tests can drive them in-process.
int cmd_stability_region(const CliOptions& opt, std::ostream& diag);
int cmd_local_delay(const CliOptions& opt, std::ostream& diag);
int cmd_delay_cdf(const CliOptions& opt, std::ostream& diag);
int cmd_link_stats(const CliOptions& opt, std::ostream& diag);
int cmd_dump_realization(const CliOptions& opt, std::ostream& diag);
int cmd_selfcheck(std::ostream& report);

int run_cli(int argc, const char* const* argv);

}  // namespace udn
