// End-to-end acceptance checks. Each numbered block prints exactly one
// PASS/FAIL line; the binary exits nonzero if any block fails. Budgets are
// sized for a single core; the whole suite stays well under an hour.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "udn/cli.hpp"
#include "udn/config.hpp"
#include "udn/csv.hpp"
#include "udn/delay_analysis.hpp"
#include "udn/ensemble.hpp"
#include "udn/geometry.hpp"
#include "udn/phy.hpp"
#include "udn/queuesim.hpp"
#include "udn/rng.hpp"
#include "udn/stability.hpp"

using namespace udn;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

constexpr std::uint64_t kSeed = 7;
constexpr int kTotal = 13;

int g_failures = 0;

double secs_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v, int prec = 4) {
  std::ostringstream ss;
  ss.precision(prec);
  ss << v;
  return ss.str();
}

void report(int idx, const char* name, bool pass, const std::string& detail, double secs) {
  if (!pass) ++g_failures;
  std::printf("[%2d/%d] %s  %s: %s (%.1fs)\n", idx, kTotal, pass ? "PASS" : "FAIL", name,
              detail.c_str(), secs);
  std::fflush(stdout);
}

template <typename Fn>
void criterion(int idx, const char* name, Fn&& fn) {
  const auto t0 = Clock::now();
  try {
    auto [pass, detail] = fn();
    report(idx, name, pass, detail, secs_since(t0));
  } catch (const std::exception& e) {
    report(idx, name, false, std::string("exception: ") + e.what(), secs_since(t0));
  }
}

// reference protocol: default density and medium access, 10^4 slots
SimConfig base_protocol() {
  SimConfig c;
  c.horizon = 10000;
  c.seed = kSeed;
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / "udn_acceptance_tmp";
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

NetworkRealization single_link_net() {
  NetworkRealization net;
  net.window_side = 20;
  net.links.push_back(Link{{5, 5}, {6, 5}});
  return net;
}

}  // namespace

int main() {
  const SimConfig base = base_protocol();
  const ValidatedConfig cfg = validate_config(base);
  constexpr std::size_t kRuns = 20;

  // Shared fixture: coupled runs of the three variants on one ensemble.
  // Reductions feed blocks 1, 2, 11 and 12.
  const auto nets = sample_ensemble(cfg, kRuns, 1);

  std::vector<std::vector<PerLinkStats>> orig_runs(kRuns);
  std::uint64_t c1_checks = 0, c1_violations = 0;
  std::uint64_t c2_links = 0, c2_violations = 0;
  double c1_secs = 0, c2_secs = 0;

  const RunOptions orig_opt{-1, 0, true, {}};
  const RunOptions lean_opt{-1, 0, false, {}};

  for (std::size_t r = 0; r < kRuns; ++r) {
    const auto t0 = Clock::now();
    Simulator sim_orig(cfg, nets[r], SystemVariant::Original, orig_opt);
    Simulator sim_dom(cfg, nets[r], SystemVariant::Dominant, lean_opt);
    const std::size_t n = nets[r].size();
    for (std::int64_t t = 0; t < cfg->horizon; ++t) {
      sim_orig.step();
      sim_dom.step();
      for (std::size_t i = 0; i < n; ++i) {
        ++c1_checks;
        if (sim_dom.queue(i).fifo.size() < sim_orig.queue(i).fifo.size()) ++c1_violations;
      }
    }
    orig_runs[r] = sim_orig.finish();
    c1_secs += secs_since(t0);

    const auto t1 = Clock::now();
    const auto fav = run_simulation(cfg, nets[r], SystemVariant::FavorableDrop, orig_opt);
    for (std::size_t i = 0; i < n; ++i) {
      ++c2_links;
      const auto& od = orig_runs[r][i].delays;
      const auto& fd = fav[i].delays;
      if (fd.size() < od.size()) {
        ++c2_violations;
        continue;
      }
      for (std::size_t k = 0; k < od.size(); ++k)
        if (fd[k] > od[k]) {
          ++c2_violations;
          break;
        }
    }
    c2_secs += secs_since(t1);
  }

  report(1, "dominant-system queues never fall below the original system's",
         c1_violations == 0 && c1_secs <= 300.0,
         fmt(static_cast<double>(c1_checks), 10) + " link-slot checks, " +
             std::to_string(c1_violations) + " violations, coupled stepping " +
             fmt(c1_secs, 3) + "s (budget 300s)",
         c1_secs);

  report(2, "per-packet delays with one-slot interferer drops never exceed the original's",
         c2_violations == 0,
         std::to_string(c2_links) + " links compared packetwise, " +
             std::to_string(c2_violations) + " violations",
         c2_secs);

  criterion(3, "delay-cdf bounds sandwich the empirical curve at every grid point", [&] {
    TempDir tmp;
    SimConfig c3 = base;
    c3.mc_samples = 500;
    write_file_atomic((tmp.path / "c3.cfg").string(), config_to_string(c3));
    CliOptions opt;
    opt.config_path = (tmp.path / "c3.cfg").string();
    opt.out_path = (tmp.path / "c3.csv").string();
    opt.realizations = 6;
    opt.workers = 1;
    std::ostringstream diag;
    if (cmd_delay_cdf(opt, diag) != 0)
      return std::pair{false, "command failed: " + diag.str()};
    std::istringstream is(slurp(tmp.path / "c3.csv"));
    std::string line;
    std::getline(is, line);  // header
    std::size_t rows = 0, bad = 0;
    while (std::getline(is, line)) {
      std::istringstream row(line);
      std::string cell;
      std::vector<double> v;
      while (std::getline(row, cell, ',')) v.push_back(std::stod(cell));
      if (v.size() != 6 || v[1] > v[2] || v[2] > v[3]) ++bad;
      ++rows;
    }
    return std::pair{rows == static_cast<std::size_t>(base.cdf_grid_points) && bad == 0,
                     std::to_string(rows) + " grid rows, " + std::to_string(bad) +
                         " ordering violations"};
  });

  criterion(4, "isolated-queue mean delay matches the birth-death chain within 2%", [&] {
    SimConfig c4 = base;
    c4.arrival_rate = 0.05;
    c4.horizon = 1000000;
    const auto vc4 = validate_config(c4);
    const auto net = single_link_net();
    const auto t0 = Clock::now();
    const auto stats = run_simulation(vc4, net, SystemVariant::Original, orig_opt);
    const double wall = secs_since(t0);
    // no interference and no noise, so the service rate is the access draw
    const double mu = c4.access_prob;
    const double sim = stats[0].delivered_mean_delay();
    const double chain = oracle::geo_geo1_mean_delay_dense(c4.arrival_rate, mu, 200);
    const double rel = std::abs(sim - chain) / chain;
    return std::pair{rel <= 0.02 && wall <= 60.0,
                     "simulated " + fmt(sim) + " vs chain " + fmt(chain) + ", rel err " +
                         fmt(rel, 2) + ", " + fmt(wall, 3) + "s (budget 60s)"};
  });

  criterion(5, "single-interferer success probability matches the closed form within 3 SE", [&] {
    NetworkRealization net;
    net.window_side = 40;
    net.links.push_back(Link{{10, 10}, {11, 10}});  // own distance 1
    net.links.push_back(Link{{13, 10}, {13, 15}});  // interferer 2 away from the receiver
    const std::vector<double> activity{1.0, 1.0};
    std::size_t combo = 0, bad = 0;
    std::string worst;
    double worst_pull = 0;
    for (double theta : {0.5, 1.0, 4.0})
      for (double alpha : {3.0, 4.0}) {
        SimConfig c5 = base;
        c5.sinr_threshold = theta;
        c5.path_loss_exponent = alpha;
        const auto vc5 = validate_config(c5);
        const auto est = conditional_success_prob(0, net, vc5, activity, 1000000,
                                                  derive_stream(kSeed, "accept5", combo));
        const double closed = 1.0 / (1.0 + theta * std::pow(0.5, alpha));
        const double pull = std::abs(est.value - closed) / est.std_err;
        if (pull > worst_pull) {
          worst_pull = pull;
          worst = "theta=" + fmt(theta, 2) + " alpha=" + fmt(alpha, 2);
        }
        if (std::abs(est.value - closed) > 3.0 * est.std_err + 1e-12) ++bad;
        ++combo;
      }
    return std::pair{bad == 0, std::to_string(combo) + " combinations, worst " +
                                   fmt(worst_pull, 2) + " SE at " + worst};
  });

  criterion(6, "backlogged per-link delay means match 1/(p*q) for 95% of links", [&] {
    const double p = base.access_prob;
    std::size_t testable = 0, within = 0, skipped = 0;
    for (std::size_t r = 0; r < kRuns; ++r) {
      const auto bl = run_simulation(cfg, nets[r], SystemVariant::Backlogged, orig_opt);
      const std::vector<double> activity(nets[r].size(), p);
      for (std::size_t i = 0; i < nets[r].size(); ++i) {
        const auto n_del = bl[i].delivered;
        if (n_del < 2) {
          ++skipped;  // too few packets for a standard error
          continue;
        }
        ++testable;
        const double mean = bl[i].delivered_mean_delay();
        const double se_d =
            std::sqrt(bl[i].delivered_delay_variance() / static_cast<double>(n_del));
        const auto q = conditional_success_prob(i, nets[r], cfg, activity, 2000,
                                                derive_stream(kSeed, "accept6",
                                                              r * 1000003ull + i));
        if (q.value <= 0) continue;  // delivered packets contradict q = 0
        const double pred = 1.0 / (p * q.value);
        const double se_p = q.std_err / (p * q.value * q.value);
        if (std::abs(mean - pred) <= 3.0 * std::hypot(se_d, se_p)) ++within;
      }
    }
    const double frac =
        testable == 0 ? 0.0 : static_cast<double>(within) / static_cast<double>(testable);
    return std::pair{frac >= 0.95, fmt(frac, 4) + " of " + std::to_string(testable) +
                                       " testable links within 3 SE (" +
                                       std::to_string(skipped) + " with <2 deliveries skipped)"};
  });

  // Critical-rate rows feed block 8 as well.
  double xs05 = 0, x105 = 0, x205 = 0;
  criterion(7, "critical arrival rates keep sufficient <= necessary and grow with epsilon", [&] {
    const std::span<const NetworkRealization> ens(nets.data(), 2);
    std::size_t bad_rows = 0;
    for (int k = 1; k <= 10; ++k) {
      SimConfig c7 = base;
      c7.access_prob = k / 10.0;
      c7.mc_samples = 300;
      const auto vc7 = validate_config(c7);
      const double xs = critical_arrival_rate(ens, vc7, ConditionKind::Sufficient, 0.1, 1);
      const double x1 = critical_arrival_rate(ens, vc7, ConditionKind::NecessaryTypeI, 0.1, 1);
      const double x2 = critical_arrival_rate(ens, vc7, ConditionKind::NecessaryTypeII, 0.1, 1);
      if (xs > x1 + 1e-12 || xs > x2 + 2e-4) ++bad_rows;
      if (k == 5) {
        xs05 = xs;
        x105 = x1;
        x205 = x2;
      }
    }
    // epsilon sensitivity at mid access probability, every condition kind
    std::size_t bad_eps = 0;
    SimConfig c7 = base;
    c7.access_prob = 0.5;
    c7.mc_samples = 300;
    const auto vc7 = validate_config(c7);
    for (auto kind : {ConditionKind::Sufficient, ConditionKind::NecessaryTypeI,
                      ConditionKind::NecessaryTypeII}) {
      const double tol = kind == ConditionKind::NecessaryTypeII ? 2e-4 : 1e-12;
      const double lo = critical_arrival_rate(ens, vc7, kind, 0.05, 1);
      const double mid = critical_arrival_rate(ens, vc7, kind, 0.10, 1);
      const double hi = critical_arrival_rate(ens, vc7, kind, 0.20, 1);
      if (lo > mid + tol || mid > hi + tol) ++bad_eps;
    }
    return std::pair{bad_rows == 0 && bad_eps == 0,
                     "10 access-probability rows (" + std::to_string(bad_rows) +
                         " ordering violations), epsilon 0.05/0.1/0.2 (" +
                         std::to_string(bad_eps) + " monotonicity violations)"};
  });

  criterion(8, "queues are stable below the sufficient rate, unstable past the necessary",
            [&] {
              if (xs05 <= 0)
                return std::pair{false, std::string("no critical rates from the sweep")};
              auto unstable_fraction = [&](double xi) {
                SimConfig c8 = base;
                c8.arrival_rate = xi;
                const auto vc8 = validate_config(c8);
                const RunOptions opt{-1, -1, false, {}};  // default queue sampling
                std::size_t links = 0, unstable = 0;
                for (std::size_t r = 0; r < kRuns; ++r) {
                  const auto stats = run_simulation(vc8, nets[r], SystemVariant::Original, opt);
                  const auto verdict = empirical_stability(stats, vc8);
                  for (bool st : verdict) {
                    ++links;
                    if (!st) ++unstable;
                  }
                }
                return static_cast<double>(unstable) / static_cast<double>(links);
              };
              const double xi_low = 0.5 * xs05;
              const double xi_high = std::min(1.0, 1.2 * std::max(x105, x205));
              const double f_low = unstable_fraction(xi_low);
              const double f_high = unstable_fraction(xi_high);
              return std::pair{f_low <= 0.15 && f_high > 0.1,
                               "unstable fraction " + fmt(f_low, 3) + " at rate " +
                                   fmt(xi_low, 3) + " (limit 0.15), " + fmt(f_high, 3) +
                                   " at rate " + fmt(xi_high, 3) + " (must exceed 0.1)"};
            });

  criterion(9, "censoring grows with the threshold and divergence flags the sweep top", [&] {
    SimConfig c9 = base;
    c9.lambda = 0.01;
    c9.link_distance = 5;
    c9.horizon = 6000;
    const auto vc9t = validate_config(c9);
    c9.horizon = 12000;
    const auto vc92t = validate_config(c9);
    const auto nets9 = sample_ensemble(vc9t, 8, 1);

    const std::vector<double> thetas{0.25, 0.5, 1, 2, 4, 8};
    std::vector<double> censored, growth;
    std::vector<bool> flags;
    for (double theta : thetas) {
      SimConfig ct = vc9t.get();
      ct.sinr_threshold = theta;
      const auto vt = validate_config(ct);
      ct.horizon = vc92t->horizon;
      const auto v2t = validate_config(ct);
      const auto runs_t = run_ensemble(vt, nets9, SystemVariant::Backlogged, orig_opt, 1);
      const auto runs_2t = run_ensemble(v2t, nets9, SystemVariant::Backlogged, orig_opt, 1);
      const auto s = local_delay_summary(runs_t, runs_2t, vt);
      const auto s2 = local_delay_summary(runs_2t, runs_2t, v2t);
      censored.push_back(s.censored_fraction);
      flags.push_back(s.diverging);
      growth.push_back(s2.mean / s.mean - 1.0);
    }
    bool monotone = true;
    for (std::size_t k = 1; k < censored.size(); ++k)
      if (censored[k] < censored[k - 1]) monotone = false;
    const bool flag_low = flags.front();
    const bool flag_high = flags.back();
    std::string detail = "censored monotone " + std::string(monotone ? "yes" : "NO") +
                         ", flag(0.25)=" + (flag_low ? "on" : "off") +
                         ", flag(8)=" + (flag_high ? "on" : "off") +
                         "; doubled-horizon mean growth at theta=8: " + fmt(growth.back(), 2) +
                         " (indicator needs > " + fmt(base.divergence_growth, 2) + ")";
    return std::pair{monotone && !flag_low && flag_high, detail};
  });

  criterion(10, "without fading at full access every delay is one slot or the link never delivers",
            [&] {
              SimConfig c10 = base;
              c10.window_side = 50;
              c10.access_prob = 1.0;
              c10.fading = FadingModel::None;
              c10.horizon = 2000;
              const auto vc10 = validate_config(c10);
              const auto nets10 = sample_ensemble(vc10, 5, 1);
              std::size_t one_slot = 0, censored_links = 0, intermediate = 0;
              for (const auto& net : nets10) {
                const auto stats = run_simulation(vc10, net, SystemVariant::Backlogged, orig_opt);
                for (const auto& st : stats) {
                  if (st.delivered == 0) {
                    ++censored_links;
                    continue;
                  }
                  bool all_one = true;
                  for (auto d : st.delays)
                    if (d != 1) all_one = false;
                  if (all_one)
                    ++one_slot;
                  else
                    ++intermediate;
                }
              }
              return std::pair{intermediate == 0 && one_slot > 0 && censored_links > 0,
                               std::to_string(one_slot) + " one-slot links, " +
                                   std::to_string(censored_links) + " censored, " +
                                   std::to_string(intermediate) + " intermediate"};
            });

  criterion(11, "doubling the window moves the empirical delay cdf by at most 0.02", [&] {
    const auto grid = log_grid(base.cdf_grid_min, base.cdf_grid_max,
                               static_cast<std::size_t>(base.cdf_grid_points));
    const auto cdf100 = mean_delay_cdf(orig_runs, grid);
    SimConfig c11 = base;
    c11.window_side = 200;
    const auto vc11 = validate_config(c11);
    const auto nets200 = sample_ensemble(vc11, 6, 1);
    std::vector<std::vector<PerLinkStats>> runs200;
    runs200.reserve(nets200.size());
    for (const auto& net : nets200)
      runs200.push_back(run_simulation(vc11, net, SystemVariant::Original, orig_opt));
    const auto cdf200 = mean_delay_cdf(runs200, grid);
    double sup = 0;
    for (std::size_t k = 0; k < grid.size(); ++k)
      sup = std::max(sup, std::abs(cdf100.cdf[k] - cdf200.cdf[k]));
    return std::pair{sup <= 0.02, "sup-norm gap " + fmt(sup, 3) + " over " +
                                      std::to_string(grid.size()) + " grid points (" +
                                      std::to_string(cdf100.total) + " vs " +
                                      std::to_string(cdf200.total) + " links)"};
  });

  criterion(12, "busy-fraction fixed point converges and matches the simulated busy share", [&] {
    SimConfig c12 = base;
    c12.mc_samples = 500;
    const auto vc12 = validate_config(c12);
    const auto fp = fixed_point_busy(vc12, std::span(nets.data(), 3), 1e-6, 200, 1);
    double busy_sum = 0;
    std::size_t links = 0;
    for (const auto& run : orig_runs)
      for (const auto& st : run) {
        busy_sum += static_cast<double>(st.busy_slots) / static_cast<double>(st.horizon);
        ++links;
      }
    const double busy = busy_sum / static_cast<double>(links);
    const bool ok = fp.converged && fp.residual <= 1e-6 && fp.iterations <= 200 &&
                    std::abs(fp.rho - busy) <= 0.05;
    return std::pair{ok, "rho " + fmt(fp.rho, 4) + " vs simulated busy share " + fmt(busy, 4) +
                             ", residual " + fmt(fp.residual, 2) + " after " +
                             std::to_string(fp.iterations) + " iterations"};
  });

  criterion(13, "reruns and worker-count changes leave command output byte-identical", [&] {
    TempDir tmp;
    SimConfig small;
    small.lambda = 0.008;
    small.window_side = 40;
    small.horizon = 400;
    small.mc_samples = 150;
    small.cdf_grid_points = 12;
    small.seed = 99;
    write_file_atomic((tmp.path / "small.cfg").string(), config_to_string(small));

    struct Case {
      const char* tag;
      int (*run)(const CliOptions&, std::ostream&);
      const char* sweep;
    };
    const Case cases[] = {
        {"link-stats", &cmd_link_stats, nullptr},
        {"delay-cdf", &cmd_delay_cdf, nullptr},
        {"stability-region", &cmd_stability_region, "p=0.4"},
        {"local-delay", &cmd_local_delay, "theta=0.5,2"},
    };
    for (const auto& c : cases) {
      CliOptions opt;
      opt.config_path = (tmp.path / "small.cfg").string();
      opt.realizations = 2;
      if (c.sweep) opt.sweep = c.sweep;
      std::ostringstream diag;
      std::vector<std::string> outs;
      for (int v = 0; v < 3; ++v) {
        opt.workers = v == 2 ? 3 : 1;  // two identical runs, then more workers
        opt.out_path = (tmp.path / (std::string(c.tag) + std::to_string(v))).string();
        if (c.run(opt, diag) != 0)
          return std::pair{false, std::string(c.tag) + " failed: " + diag.str()};
        outs.push_back(slurp(opt.out_path));
      }
      if (outs[0] != outs[1] || outs[0] != outs[2])
        return std::pair{false, std::string(c.tag) + " output differs across runs"};
    }
    return std::pair{true, std::string("4 commands, 3 runs each, all byte-identical")};
  });

  std::printf("acceptance: %d/%d passed\n", kTotal - g_failures, kTotal);
  return g_failures == 0 ? 0 : 1;
}
