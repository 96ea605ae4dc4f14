#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace udn {

enum class SystemVariant {
  Original,          // link transmits iff queue nonempty and access drawn
  Dominant,          // always transmits on access; empty queues send dummies
  FavorableDrop,     // interferer packets live one slot, dropped on miss
  SimplifiedNearest, // only the nearest interferer counts, treated backlogged
  Backlogged,        // queues never empty; measures time-to-success per packet
};

enum class FadingModel { Rayleigh, None };

std::string to_string(SystemVariant v);
std::string to_string(FadingModel f);
SystemVariant variant_from_string(const std::string& s);
FadingModel fading_from_string(const std::string& s);

struct SimConfig {
  double lambda = 0.05;         // transmitters per m^2
  double window_side = 100.0;   // m, square torus side
  double link_distance = 1.0;   // m, tx-rx separation
  double access_prob = 0.5;     // per-slot ALOHA access probability
  double arrival_rate = 0.1;    // per-slot Bernoulli arrival probability
  double sinr_threshold = 1.0;
  double path_loss_exponent = 4.0;
  double noise_power = 0.0;     // linear, relative to unit tx power
  std::int64_t horizon = 10000; // slots
  std::uint64_t seed = 1;
  SystemVariant variant = SystemVariant::Original;
  double epsilon = 0.1;         // tolerated fraction of unstable queues
  FadingModel fading = FadingModel::Rayleigh;

  // estimation and diagnostics knobs
  std::int64_t mc_samples = 1000;       // Monte-Carlo samples per success-probability estimate
  std::int64_t queue_sample_stride = 16;
  double stability_slope_frac = 0.1;    // unstable if queue slope > arrival_rate * this
  double stability_queue_min = 50.0;    // ... and final queue length exceeds this
  double divergence_growth = 0.2;       // pooled-mean growth on horizon doubling
  double cdf_grid_min = 1.0;
  double cdf_grid_max = 1000.0;
  std::int64_t cdf_grid_points = 100;
  double fixed_point_tol = 1e-6;
  std::int64_t fixed_point_max_iter = 200;
  double fixed_point_damping = 0.5;
};

bool operator==(const SimConfig& a, const SimConfig& b);

// Carries every violated invariant, one message per field.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> issues);
  const std::vector<std::string>& issues() const noexcept { return issues_; }

 private:
  std::vector<std::string> issues_;
};

// Only obtainable through validate_config, so downstream code can rely on
// the invariants without rechecking.
class ValidatedConfig {
 public:
  const SimConfig& get() const noexcept { return cfg_; }
  const SimConfig* operator->() const noexcept { return &cfg_; }
  double own_gain() const noexcept { return own_gain_; } // link_distance^-alpha

 private:
  friend ValidatedConfig validate_config(const SimConfig&);
  explicit ValidatedConfig(const SimConfig& cfg);
  SimConfig cfg_;
  double own_gain_;
};

ValidatedConfig validate_config(const SimConfig& cfg);

// Flat key=value text, '#' starts a comment, unknown keys rejected.
SimConfig parse_config(std::istream& in);
SimConfig parse_config_file(const std::string& path);
void write_config(std::ostream& out, const SimConfig& cfg);
std::string config_to_string(const SimConfig& cfg);

}  // namespace udn
