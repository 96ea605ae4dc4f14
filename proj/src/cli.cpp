#include "udn/cli.hpp"

#include <chrono>
#include <cmath>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "udn/csv.hpp"
#include "udn/delay_analysis.hpp"
#include "udn/ensemble.hpp"
#include "udn/phy.hpp"
#include "udn/stability.hpp"

namespace udn {

SweepGrid parse_sweep(const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos)
    throw std::invalid_argument("sweep: expected NAME=VALUES, got '" + spec + "'");
  SweepGrid grid;
  grid.name = spec.substr(0, eq);
  if (grid.name != "p" && grid.name != "theta")
    throw std::invalid_argument("sweep: unknown parameter '" + grid.name +
                                "' (expected p or theta)");
  const std::string body = spec.substr(eq + 1);
  if (body.empty()) throw std::invalid_argument("sweep: empty value list");

  auto to_double = [](const std::string& s) {
    std::size_t used = 0;
    double v{};
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      throw std::invalid_argument("sweep: not a number: '" + s + "'");
    }
    if (used != s.size())
      throw std::invalid_argument("sweep: not a number: '" + s + "'");
    return v;
  };

  if (body.find(',') != std::string::npos) {
    std::stringstream ss(body);
    std::string item;
    while (std::getline(ss, item, ','))
      grid.values.push_back(to_double(item));
    return grid;
  }

  const auto c1 = body.find(':');
  if (c1 == std::string::npos) {
    grid.values.push_back(to_double(body));
    return grid;
  }
  const auto c2 = body.find(':', c1 + 1);
  if (c2 == std::string::npos)
    throw std::invalid_argument("sweep: expected START:STOP:STEP in '" + body + "'");
  const double start = to_double(body.substr(0, c1));
  const double stop = to_double(body.substr(c1 + 1, c2 - c1 - 1));
  std::string step_str = body.substr(c2 + 1);

  if (!step_str.empty() && step_str.front() == '*') {
    const double factor = to_double(step_str.substr(1));
    if (!(factor > 1) || !(start > 0))
      throw std::invalid_argument("sweep: geometric grid needs start > 0 and factor > 1");
    for (double v = start; v <= stop * (1 + 1e-12); v *= factor)
      grid.values.push_back(v);
    return grid;
  }
  const double step = to_double(step_str);
  if (!(step > 0)) throw std::invalid_argument("sweep: step must be > 0");
  for (long long k = 0;; ++k) {
    const double v = start + step * static_cast<double>(k);
    if (v > stop + step * 1e-9) break;
    grid.values.push_back(v);
  }
  return grid;
}

namespace {

SimConfig load_config(const CliOptions& opt) {
  SimConfig cfg = opt.config_path.empty() ? SimConfig{} : parse_config_file(opt.config_path);
  if (opt.seed) cfg.seed = *opt.seed;
  if (opt.horizon) cfg.horizon = *opt.horizon;
  return cfg;
}

SimConfig with_sweep_value(SimConfig cfg, const std::string& name, double v) {
  if (name == "p")
    cfg.access_prob = v;
  else
    cfg.sinr_threshold = v;
  return cfg;
}

int report_error(std::ostream& diag, const std::exception& e) {
  if (const auto* ce = dynamic_cast<const ConfigError*>(&e)) {
    diag << "error: invalid configuration\n";
    for (const auto& issue : ce->issues()) diag << "  " << issue << '\n';
  } else {
    diag << "error: " << e.what() << '\n';
  }
  return 1;
}

}  // namespace

int cmd_stability_region(const CliOptions& opt, std::ostream& diag) {
  try {
    const SimConfig base = load_config(opt);
    const SweepGrid grid = parse_sweep(opt.sweep.value_or("p=0.1:1.0:0.1"));
    if (grid.name != "p")
      throw std::invalid_argument("stability-region sweeps the access probability; "
                                  "use --sweep p=...");
    const unsigned workers = resolve_workers(opt.workers);

    // Geometry is shared across the sweep so the curves ride on the same
    // deployments.
    const ValidatedConfig vbase = validate_config(base);
    const auto nets = sample_ensemble(vbase, opt.realizations, workers);

    std::ostringstream csv;
    csv << "p,epsilon,xi_star_sufficient,xi_star_type_i,xi_star_type_ii\n";
    for (double p : grid.values) {
      const ValidatedConfig cfg = validate_config(with_sweep_value(base, "p", p));
      const double xs = critical_arrival_rate(nets, cfg, ConditionKind::Sufficient,
                                              cfg->epsilon, workers);
      const double x1 = critical_arrival_rate(nets, cfg, ConditionKind::NecessaryTypeI,
                                              cfg->epsilon, workers);
      const double x2 = critical_arrival_rate(nets, cfg, ConditionKind::NecessaryTypeII,
                                              cfg->epsilon, workers);
      csv << format_double(p) << ',' << format_double(cfg->epsilon) << ','
          << format_double(xs) << ',' << format_double(x1) << ',' << format_double(x2)
          << '\n';
    }
    write_file_atomic(opt.out_path, csv.str());
    return 0;
  } catch (const std::exception& e) {
    return report_error(diag, e);
  }
}

int cmd_local_delay(const CliOptions& opt, std::ostream& diag) {
  try {
    SimConfig base = load_config(opt);
    base.variant = SystemVariant::Backlogged;
    const SweepGrid grid = parse_sweep(opt.sweep.value_or("theta=0.25:8:*2"));
    const unsigned workers = resolve_workers(opt.workers);

    const ValidatedConfig vbase = validate_config(base);
    const auto nets = sample_ensemble(vbase, opt.realizations, workers);

    RunOptions ro;
    ro.queue_sample_stride = 0;

    std::ostringstream csv;
    csv << "sweep_param,mean,variance,censored_fraction,diverging_flag\n";
    for (double v : grid.values) {
      const ValidatedConfig cfg = validate_config(with_sweep_value(base, grid.name, v));
      RunOptions at_t = ro, at_2t = ro;
      at_t.horizon = cfg->horizon;
      at_2t.horizon = 2 * cfg->horizon;
      const auto runs_t = run_ensemble(cfg, nets, SystemVariant::Backlogged, at_t, workers);
      const auto runs_2t = run_ensemble(cfg, nets, SystemVariant::Backlogged, at_2t, workers);
      const LocalDelaySummary s = local_delay_summary(runs_t, runs_2t, cfg);
      csv << format_double(v) << ',' << format_double(s.mean) << ','
          << format_double(s.variance) << ',' << format_double(s.censored_fraction)
          << ',' << (s.diverging ? 1 : 0) << '\n';
    }
    write_file_atomic(opt.out_path, csv.str());
    return 0;
  } catch (const std::exception& e) {
    return report_error(diag, e);
  }
}

int cmd_delay_cdf(const CliOptions& opt, std::ostream& diag) {
  try {
    const SimConfig base = load_config(opt);
    const ValidatedConfig cfg = validate_config(base);
    const unsigned workers = resolve_workers(opt.workers);

    const auto nets = sample_ensemble(cfg, opt.realizations, workers);
    const auto grid = log_grid(cfg->cdf_grid_min, cfg->cdf_grid_max,
                               static_cast<std::size_t>(cfg->cdf_grid_points));

    RunOptions ro;
    ro.queue_sample_stride = 0;
    const auto dominant = run_ensemble(cfg, nets, SystemVariant::Dominant, ro, workers);
    const auto original = run_ensemble(cfg, nets, SystemVariant::Original, ro, workers);
    const auto favorable = run_ensemble(cfg, nets, SystemVariant::FavorableDrop, ro, workers);

    const CdfEstimate lower = mean_delay_cdf(dominant, grid);
    const CdfEstimate empirical = mean_delay_cdf(original, grid);
    const CdfEstimate upper = mean_delay_cdf(favorable, grid);

    const FixedPointResult fp = fixed_point_busy(cfg, nets, cfg->fixed_point_tol,
                                                 static_cast<int>(cfg->fixed_point_max_iter),
                                                 workers);
    if (!fp.converged)
      diag << "note: busy-probability fixed point did not converge (residual "
           << format_double(fp.residual) << "); approximate column uses the last iterate\n";
    const CdfEstimate approx = approx_delay_cdf(cfg, nets, fp.rho, grid, workers);

    std::ostringstream csv;
    csv << "grid_t,cdf_lower,cdf_empirical,cdf_upper,cdf_approx,censored_fraction\n";
    for (std::size_t i = 0; i < grid.size(); ++i) {
      csv << format_double(grid[i]) << ',' << format_double(lower.cdf[i]) << ','
          << format_double(empirical.cdf[i]) << ',' << format_double(upper.cdf[i]) << ','
          << format_double(approx.cdf[i]) << ','
          << format_double(empirical.censored_fraction()) << '\n';
    }
    write_file_atomic(opt.out_path, csv.str());
    return 0;
  } catch (const std::exception& e) {
    return report_error(diag, e);
  }
}

int cmd_link_stats(const CliOptions& opt, std::ostream& diag) {
  try {
    const ValidatedConfig cfg = validate_config(load_config(opt));
    const unsigned workers = resolve_workers(opt.workers);
    const auto nets = sample_ensemble(cfg, opt.realizations, workers);
    RunOptions ro;
    ro.queue_sample_stride = 0;
    const auto runs = run_ensemble(cfg, nets, cfg->variant, ro, workers);

    std::ostringstream csv;
    write_link_stats_csv(csv, runs);
    write_file_atomic(opt.out_path, csv.str());
    return 0;
  } catch (const std::exception& e) {
    return report_error(diag, e);
  }
}

int cmd_dump_realization(const CliOptions& opt, std::ostream& diag) {
  try {
    const ValidatedConfig cfg = validate_config(load_config(opt));
    const unsigned workers = resolve_workers(opt.workers);
    const auto nets = sample_ensemble(cfg, opt.realizations, workers);
    std::ostringstream csv;
    write_realization_csv(csv, nets);
    write_file_atomic(opt.out_path, csv.str());
    return 0;
  } catch (const std::exception& e) {
    return report_error(diag, e);
  }
}

int cmd_selfcheck(std::ostream& report) {
  int failures = 0;
  auto verdict = [&](bool ok) -> const char* {
    if (!ok) ++failures;
    return ok ? "pass" : "FAIL";
  };

  // 1. Coupled-variant ordering on small shared deployments: the
  // always-transmit system must never have the shorter queue, and one-shot
  // interferers must never slow the observed deliveries down.
  {
    SimConfig sc;
    sc.lambda = 0.01;
    sc.window_side = 40;
    sc.access_prob = 0.4;
    sc.arrival_rate = 0.25;
    sc.sinr_threshold = 1.0;
    sc.horizon = 2000;
    sc.seed = 20240811;
    const ValidatedConfig cfg = validate_config(sc);

    std::uint64_t queue_violations = 0, delay_violations = 0;
    std::int64_t slots_checked = 0;
    RunOptions ro;
    ro.queue_sample_stride = 0;
    for (std::uint64_t rid = 0; rid < 3; ++rid) {
      const NetworkRealization net = sample_bipolar(cfg, rid);
      if (net.empty()) continue;
      Simulator dom(cfg, net, SystemVariant::Dominant, ro);
      Simulator orig(cfg, net, SystemVariant::Original, ro);
      for (std::int64_t t = 0; t < sc.horizon; ++t) {
        dom.step();
        orig.step();
        for (std::size_t i = 0; i < net.size(); ++i)
          if (dom.queue(i).fifo.size() < orig.queue(i).fifo.size()) ++queue_violations;
      }
      slots_checked += sc.horizon;
      const auto orig_stats = orig.finish();
      const auto fav_stats = run_simulation(cfg, net, SystemVariant::FavorableDrop, ro);
      for (std::size_t i = 0; i < net.size(); ++i) {
        if (fav_stats[i].delivered < orig_stats[i].delivered) ++delay_violations;
        const std::size_t k = std::min(fav_stats[i].delays.size(),
                                       orig_stats[i].delays.size());
        for (std::size_t j = 0; j < k; ++j)
          if (fav_stats[i].delays[j] > orig_stats[i].delays[j]) ++delay_violations;
      }
    }
    const bool ok = queue_violations == 0 && delay_violations == 0;
    report << "[1/3] coupled-variant ordering ... " << verdict(ok) << " ("
           << queue_violations << " queue violations, " << delay_violations
           << " delay violations over " << slots_checked << " slots)\n";
  }

  // 2. Isolated queue against the single-queue sojourn formula.
  {
    SimConfig sc;
    sc.lambda = 0;
    sc.window_side = 20;
    sc.link_distance = 1.0;
    sc.access_prob = 0.9;
    sc.arrival_rate = 0.3;
    sc.sinr_threshold = 1.0;
    sc.path_loss_exponent = 4.0;
    sc.noise_power = 0.3;
    sc.horizon = 200000;
    sc.seed = 7;
    const ValidatedConfig cfg = validate_config(sc);

    NetworkRealization net;
    net.window_side = sc.window_side;
    net.realization_id = 0;
    net.links.push_back(Link{{5, 5}, {6, 5}});

    RunOptions ro;
    ro.queue_sample_stride = 0;
    const auto stats = run_simulation(cfg, net, SystemVariant::Original, ro);
    const double mu = sc.access_prob * std::exp(-sc.sinr_threshold * sc.noise_power);
    const double expected = geo_geo1_mean_delay(sc.arrival_rate, mu);
    const double observed = stats[0].delivered_mean_delay();
    const bool ok = std::fabs(observed - expected) <= 0.04 * expected;
    report << "[2/3] single-queue delay formula ... " << verdict(ok)
           << " (expected " << format_double(expected) << ", observed "
           << format_double(observed) << ")\n";
  }

  // 3. Success probability against the closed forms for zero and one
  // always-on interferer under unit-mean exponential fading.
  {
    SimConfig sc;
    sc.lambda = 0;
    sc.window_side = 30;
    sc.link_distance = 1.0;
    sc.sinr_threshold = 0.8;
    sc.path_loss_exponent = 4.0;
    sc.noise_power = 0.2;
    sc.seed = 99;
    const ValidatedConfig cfg = validate_config(sc);

    NetworkRealization net;
    net.window_side = sc.window_side;
    net.links.push_back(Link{{10, 10}, {11, 10}});
    net.links.push_back(Link{{11, 12}, {12, 12}});  // tx 2 m from rx 0

    const double noise_term =
        std::exp(-sc.sinr_threshold * sc.noise_power *
                 std::pow(sc.link_distance, sc.path_loss_exponent));
    const double d = toroidal_distance(net.links[1].tx, net.links[0].rx, net.window_side);
    const double expected_busy =
        noise_term / (1.0 + sc.sinr_threshold *
                                std::pow(sc.link_distance / d, sc.path_loss_exponent));

    const std::uint64_t mc = 200000;
    RngStream s0 = derive_stream(sc.seed, "selfcheck", 0);
    RngStream s1 = derive_stream(sc.seed, "selfcheck", 1);
    const double activity_off[2] = {0, 0};
    const double activity_on[2] = {0, 1};
    const auto est_off = conditional_success_prob(0, net, cfg, activity_off, mc, s0);
    const auto est_on = conditional_success_prob(0, net, cfg, activity_on, mc, s1);

    const bool ok_off = std::fabs(est_off.value - noise_term) <= 3 * est_off.std_err + 1e-9;
    const bool ok_on = std::fabs(est_on.value - expected_busy) <= 3 * est_on.std_err + 1e-9;
    const bool ok = ok_off && ok_on;
    report << "[3/3] success-probability closed forms ... " << verdict(ok)
           << " (noise-only expected " << format_double(noise_term) << " observed "
           << format_double(est_off.value) << "; one-interferer expected "
           << format_double(expected_busy) << " observed "
           << format_double(est_on.value) << ")\n";
  }

  report << "selfcheck: " << (3 - failures) << "/3 passed\n";
  return failures == 0 ? 0 : 1;
}

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"udnlab: delay and stability experiments for dense slotted-ALOHA networks"};
  app.require_subcommand(1);

  CliOptions opt;
  std::string sweep_raw;
  long long realizations = 20;

  auto add_common = [&](CLI::App* sub, bool needs_out) {
    sub->add_option("--config", opt.config_path, "key=value config file");
    auto* out = sub->add_option("--out", opt.out_path, "output CSV path");
    if (needs_out) out->required();
    sub->add_option("--seed", [&opt](const CLI::results_t& res) {
      opt.seed = std::stoull(res[0]);
      return true;
    }, "override the config seed");
    sub->add_option("--horizon", [&opt](const CLI::results_t& res) {
      opt.horizon = std::stoll(res[0]);
      return true;
    }, "override the horizon (slots)");
    sub->add_option("--realizations", realizations, "ensemble size")
        ->check(CLI::PositiveNumber);
    sub->add_option("--workers", opt.workers,
                    "worker threads (default: UDN_WORKERS or hardware)");
  };

  auto* stab = app.add_subcommand("stability-region",
                                  "critical arrival rates over an access-probability grid");
  add_common(stab, true);
  stab->add_option("--sweep", sweep_raw, "p=START:STOP:STEP (default p=0.1:1.0:0.1)");

  auto* local = app.add_subcommand("local-delay",
                                   "backlogged time-to-success statistics over a sweep");
  add_common(local, true);
  local->add_option("--sweep", sweep_raw,
                    "theta=... or p=... (default theta=0.25:8:*2)");

  auto* cdf = app.add_subcommand("delay-cdf",
                                 "mean-delay cdf with coupled bounds and the busy-probability "
                                 "approximation");
  add_common(cdf, true);

  auto* stats = app.add_subcommand("link-stats", "per-link delivery statistics");
  add_common(stats, true);

  auto* dump = app.add_subcommand("dump-realization", "sampled deployments as CSV");
  add_common(dump, true);

  auto* self = app.add_subcommand("selfcheck", "fast internal consistency checks");
  (void)self;

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  opt.realizations = static_cast<std::size_t>(realizations);
  if (!sweep_raw.empty()) opt.sweep = sweep_raw;

  if (stab->parsed()) return cmd_stability_region(opt, std::cerr);
  if (local->parsed()) return cmd_local_delay(opt, std::cerr);
  if (cdf->parsed()) return cmd_delay_cdf(opt, std::cerr);
  if (stats->parsed()) return cmd_link_stats(opt, std::cerr);
  if (dump->parsed()) return cmd_dump_realization(opt, std::cerr);
  if (self->parsed()) return cmd_selfcheck(std::cout);
  return 1;
}

}  // namespace udn
