#include "udn/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace udn {

std::string to_string(SystemVariant v) {
  switch (v) {
    case SystemVariant::Original: return "original";
    case SystemVariant::Dominant: return "dominant";
    case SystemVariant::FavorableDrop: return "favorable_drop";
    case SystemVariant::SimplifiedNearest: return "simplified_nearest";
    case SystemVariant::Backlogged: return "backlogged";
  }
  throw std::logic_error("unknown SystemVariant value");
}

std::string to_string(FadingModel f) {
  switch (f) {
    case FadingModel::Rayleigh: return "rayleigh";
    case FadingModel::None: return "none";
  }
  throw std::logic_error("unknown FadingModel value");
}

SystemVariant variant_from_string(const std::string& s) {
  if (s == "original") return SystemVariant::Original;
  if (s == "dominant") return SystemVariant::Dominant;
  if (s == "favorable_drop") return SystemVariant::FavorableDrop;
  if (s == "simplified_nearest") return SystemVariant::SimplifiedNearest;
  if (s == "backlogged") return SystemVariant::Backlogged;
  throw std::invalid_argument("variant: unknown value '" + s +
                              "' (expected original|dominant|favorable_drop|"
                              "simplified_nearest|backlogged)");
}

FadingModel fading_from_string(const std::string& s) {
  if (s == "rayleigh") return FadingModel::Rayleigh;
  if (s == "none") return FadingModel::None;
  throw std::invalid_argument("fading: unknown value '" + s +
                              "' (expected rayleigh|none)");
}

bool operator==(const SimConfig& a, const SimConfig& b) {
  return a.lambda == b.lambda && a.window_side == b.window_side &&
         a.link_distance == b.link_distance && a.access_prob == b.access_prob &&
         a.arrival_rate == b.arrival_rate && a.sinr_threshold == b.sinr_threshold &&
         a.path_loss_exponent == b.path_loss_exponent && a.noise_power == b.noise_power &&
         a.horizon == b.horizon && a.seed == b.seed && a.variant == b.variant &&
         a.epsilon == b.epsilon && a.fading == b.fading && a.mc_samples == b.mc_samples &&
         a.queue_sample_stride == b.queue_sample_stride &&
         a.stability_slope_frac == b.stability_slope_frac &&
         a.stability_queue_min == b.stability_queue_min &&
         a.divergence_growth == b.divergence_growth && a.cdf_grid_min == b.cdf_grid_min &&
         a.cdf_grid_max == b.cdf_grid_max && a.cdf_grid_points == b.cdf_grid_points &&
         a.fixed_point_tol == b.fixed_point_tol &&
         a.fixed_point_max_iter == b.fixed_point_max_iter &&
         a.fixed_point_damping == b.fixed_point_damping;
}

namespace {

std::string join_issues(const std::vector<std::string>& issues) {
  std::string out = "invalid configuration:";
  for (const auto& s : issues) {
    out += "\n  - ";
    out += s;
  }
  return out;
}

bool finite(double x) { return std::isfinite(x); }

}  // namespace

ConfigError::ConfigError(std::vector<std::string> issues)
    : std::runtime_error(join_issues(issues)), issues_(std::move(issues)) {}

ValidatedConfig::ValidatedConfig(const SimConfig& cfg)
    : cfg_(cfg),
      own_gain_(std::pow(cfg.link_distance, -cfg.path_loss_exponent)) {}

ValidatedConfig validate_config(const SimConfig& cfg) {
  std::vector<std::string> issues;
  auto bad = [&issues](const std::string& msg) { issues.push_back(msg); };

  if (!finite(cfg.lambda) || cfg.lambda < 0)
    bad("lambda: must be finite and >= 0");
  if (!finite(cfg.window_side) || cfg.window_side <= 0)
    bad("window_side: must be finite and > 0");
  if (!finite(cfg.link_distance) || cfg.link_distance <= 0)
    bad("link_distance: must be finite and > 0");
  else if (finite(cfg.window_side) && cfg.window_side > 0 &&
           !(cfg.link_distance < cfg.window_side / 2))
    bad("link_distance: must be < window_side/2");
  if (!finite(cfg.access_prob) || cfg.access_prob < 0 || cfg.access_prob > 1)
    bad("access_prob: must lie in [0,1]");
  if (!finite(cfg.arrival_rate) || cfg.arrival_rate < 0 || cfg.arrival_rate > 1)
    bad("arrival_rate: must lie in [0,1]");
  if (!finite(cfg.sinr_threshold) || cfg.sinr_threshold <= 0)
    bad("sinr_threshold: must be finite and > 0");
  if (!finite(cfg.path_loss_exponent) || cfg.path_loss_exponent <= 2)
    bad("path_loss_exponent: must exceed 2; at alpha <= 2 the mean "
        "interference of the unbounded network the window stands in for "
        "diverges, so no finite window can approximate it");
  if (!finite(cfg.noise_power) || cfg.noise_power < 0)
    bad("noise_power: must be finite and >= 0");
  if (cfg.horizon < 1) bad("horizon: must be >= 1");
  if (!finite(cfg.epsilon) || cfg.epsilon < 0 || cfg.epsilon > 1)
    bad("epsilon: must lie in [0,1]");
  if (cfg.mc_samples < 1) bad("mc_samples: must be >= 1");
  if (cfg.queue_sample_stride < 1) bad("queue_sample_stride: must be >= 1");
  if (!finite(cfg.stability_slope_frac) || cfg.stability_slope_frac <= 0)
    bad("stability_slope_frac: must be finite and > 0");
  if (!finite(cfg.stability_queue_min) || cfg.stability_queue_min < 0)
    bad("stability_queue_min: must be finite and >= 0");
  if (!finite(cfg.divergence_growth) || cfg.divergence_growth <= 0)
    bad("divergence_growth: must be finite and > 0");
  if (!finite(cfg.cdf_grid_min) || cfg.cdf_grid_min <= 0)
    bad("cdf_grid_min: must be finite and > 0");
  if (!finite(cfg.cdf_grid_max) || cfg.cdf_grid_max < cfg.cdf_grid_min)
    bad("cdf_grid_max: must be finite and >= cdf_grid_min");
  if (cfg.cdf_grid_points < 1) bad("cdf_grid_points: must be >= 1");
  if (!finite(cfg.fixed_point_tol) || cfg.fixed_point_tol <= 0)
    bad("fixed_point_tol: must be finite and > 0");
  if (cfg.fixed_point_max_iter < 1) bad("fixed_point_max_iter: must be >= 1");
  if (!finite(cfg.fixed_point_damping) || cfg.fixed_point_damping <= 0 ||
      cfg.fixed_point_damping > 1)
    bad("fixed_point_damping: must lie in (0,1]");

  if (!issues.empty()) throw ConfigError(std::move(issues));
  return ValidatedConfig(cfg);
}

namespace {

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw std::logic_error("double formatting failed");
  return std::string(buf, end);
}

double parse_double(const std::string& key, const std::string& v) {
  double out{};
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw std::invalid_argument(key + ": not a number: '" + v + "'");
  return out;
}

std::int64_t parse_i64(const std::string& key, const std::string& v) {
  std::int64_t out{};
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw std::invalid_argument(key + ": not an integer: '" + v + "'");
  return out;
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  std::uint64_t out{};
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw std::invalid_argument(key + ": not an unsigned integer: '" + v + "'");
  return out;
}

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  auto e = s.find_last_not_of(" \t\r");
  if (b == std::string::npos) return {};
  return s.substr(b, e - b + 1);
}

using Setter = std::function<void(SimConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"lambda", [](SimConfig& c, const std::string& k, const std::string& v) { c.lambda = parse_double(k, v); }},
      {"window_side", [](SimConfig& c, const std::string& k, const std::string& v) { c.window_side = parse_double(k, v); }},
      {"link_distance", [](SimConfig& c, const std::string& k, const std::string& v) { c.link_distance = parse_double(k, v); }},
      {"access_prob", [](SimConfig& c, const std::string& k, const std::string& v) { c.access_prob = parse_double(k, v); }},
      {"arrival_rate", [](SimConfig& c, const std::string& k, const std::string& v) { c.arrival_rate = parse_double(k, v); }},
      {"sinr_threshold", [](SimConfig& c, const std::string& k, const std::string& v) { c.sinr_threshold = parse_double(k, v); }},
      {"path_loss_exponent", [](SimConfig& c, const std::string& k, const std::string& v) { c.path_loss_exponent = parse_double(k, v); }},
      {"noise_power", [](SimConfig& c, const std::string& k, const std::string& v) { c.noise_power = parse_double(k, v); }},
      {"horizon", [](SimConfig& c, const std::string& k, const std::string& v) { c.horizon = parse_i64(k, v); }},
      {"seed", [](SimConfig& c, const std::string& k, const std::string& v) { c.seed = parse_u64(k, v); }},
      {"variant", [](SimConfig& c, const std::string&, const std::string& v) { c.variant = variant_from_string(v); }},
      {"epsilon", [](SimConfig& c, const std::string& k, const std::string& v) { c.epsilon = parse_double(k, v); }},
      {"fading", [](SimConfig& c, const std::string&, const std::string& v) { c.fading = fading_from_string(v); }},
      {"mc_samples", [](SimConfig& c, const std::string& k, const std::string& v) { c.mc_samples = parse_i64(k, v); }},
      {"queue_sample_stride", [](SimConfig& c, const std::string& k, const std::string& v) { c.queue_sample_stride = parse_i64(k, v); }},
      {"stability_slope_frac", [](SimConfig& c, const std::string& k, const std::string& v) { c.stability_slope_frac = parse_double(k, v); }},
      {"stability_queue_min", [](SimConfig& c, const std::string& k, const std::string& v) { c.stability_queue_min = parse_double(k, v); }},
      {"divergence_growth", [](SimConfig& c, const std::string& k, const std::string& v) { c.divergence_growth = parse_double(k, v); }},
      {"cdf_grid_min", [](SimConfig& c, const std::string& k, const std::string& v) { c.cdf_grid_min = parse_double(k, v); }},
      {"cdf_grid_max", [](SimConfig& c, const std::string& k, const std::string& v) { c.cdf_grid_max = parse_double(k, v); }},
      {"cdf_grid_points", [](SimConfig& c, const std::string& k, const std::string& v) { c.cdf_grid_points = parse_i64(k, v); }},
      {"fixed_point_tol", [](SimConfig& c, const std::string& k, const std::string& v) { c.fixed_point_tol = parse_double(k, v); }},
      {"fixed_point_max_iter", [](SimConfig& c, const std::string& k, const std::string& v) { c.fixed_point_max_iter = parse_i64(k, v); }},
      {"fixed_point_damping", [](SimConfig& c, const std::string& k, const std::string& v) { c.fixed_point_damping = parse_double(k, v); }},
  };
  return table;
}

}  // namespace

SimConfig parse_config(std::istream& in) {
  SimConfig cfg;
  std::vector<std::string> issues;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      issues.push_back("line " + std::to_string(lineno) + ": expected key=value, got '" + line + "'");
      continue;
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    auto it = setters().find(key);
    if (it == setters().end()) {
      issues.push_back("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
      continue;
    }
    try {
      it->second(cfg, key, value);
    } catch (const std::invalid_argument& e) {
      issues.push_back("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (!issues.empty()) throw ConfigError(std::move(issues));
  return cfg;
}

SimConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  return parse_config(in);
}

void write_config(std::ostream& out, const SimConfig& c) {
  out << "lambda = " << format_double(c.lambda) << '\n'
      << "window_side = " << format_double(c.window_side) << '\n'
      << "link_distance = " << format_double(c.link_distance) << '\n'
      << "access_prob = " << format_double(c.access_prob) << '\n'
      << "arrival_rate = " << format_double(c.arrival_rate) << '\n'
      << "sinr_threshold = " << format_double(c.sinr_threshold) << '\n'
      << "path_loss_exponent = " << format_double(c.path_loss_exponent) << '\n'
      << "noise_power = " << format_double(c.noise_power) << '\n'
      << "horizon = " << c.horizon << '\n'
      << "seed = " << c.seed << '\n'
      << "variant = " << to_string(c.variant) << '\n'
      << "epsilon = " << format_double(c.epsilon) << '\n'
      << "fading = " << to_string(c.fading) << '\n'
      << "mc_samples = " << c.mc_samples << '\n'
      << "queue_sample_stride = " << c.queue_sample_stride << '\n'
      << "stability_slope_frac = " << format_double(c.stability_slope_frac) << '\n'
      << "stability_queue_min = " << format_double(c.stability_queue_min) << '\n'
      << "divergence_growth = " << format_double(c.divergence_growth) << '\n'
      << "cdf_grid_min = " << format_double(c.cdf_grid_min) << '\n'
      << "cdf_grid_max = " << format_double(c.cdf_grid_max) << '\n'
      << "cdf_grid_points = " << c.cdf_grid_points << '\n'
      << "fixed_point_tol = " << format_double(c.fixed_point_tol) << '\n'
      << "fixed_point_max_iter = " << c.fixed_point_max_iter << '\n'
      << "fixed_point_damping = " << format_double(c.fixed_point_damping) << '\n';
}

std::string config_to_string(const SimConfig& cfg) {
  std::ostringstream os;
  write_config(os, cfg);
  return os.str();
}

}  // namespace udn
