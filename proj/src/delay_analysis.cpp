#include "udn/delay_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "udn/ensemble.hpp"
#include "udn/phy.hpp"

namespace udn {

std::vector<double> log_grid(double lo, double hi, std::size_t points) {
  if (!(lo > 0) || hi < lo || points < 1)
    throw std::invalid_argument("log_grid: need 0 < lo <= hi and points >= 1");
  std::vector<double> g;
  g.reserve(points);
  if (points == 1) {
    g.push_back(lo);
    return g;
  }
  const double step = std::log(hi / lo) / static_cast<double>(points - 1);
  for (std::size_t i = 0; i < points; ++i)
    g.push_back(lo * std::exp(step * static_cast<double>(i)));
  g.back() = hi;
  return g;
}

CdfEstimate build_cdf(std::vector<double> means, std::size_t censored,
                      std::span<const double> grid) {
  CdfEstimate est;
  std::sort(means.begin(), means.end());
  est.sorted_means = std::move(means);
  est.censored = censored;
  est.total = est.sorted_means.size() + censored;
  est.grid.assign(grid.begin(), grid.end());
  est.cdf.reserve(grid.size());
  for (double t : grid) {
    const auto below = std::upper_bound(est.sorted_means.begin(),
                                        est.sorted_means.end(), t) -
                       est.sorted_means.begin();
    est.cdf.push_back(est.total == 0
                          ? 0.0
                          : static_cast<double>(below) / static_cast<double>(est.total));
  }
  return est;
}

CdfEstimate mean_delay_cdf(std::span<const std::vector<PerLinkStats>> runs,
                           std::span<const double> grid) {
  if (runs.empty()) throw std::invalid_argument("mean_delay_cdf: empty ensemble");
  std::vector<double> means;
  std::size_t censored = 0;
  for (const auto& run : runs) {
    for (const auto& st : run) {
      if (st.delivered == 0) {
        ++censored;
        continue;
      }
      means.push_back(st.horizon_mean_delay());
    }
  }
  return build_cdf(std::move(means), censored, grid);
}

namespace {

// q_i(rho) for every link of every realization, with all interferers active
// with probability rho * access_prob. Streams depend only on (seed,
// realization, link), so repeated calls at different rho are coupled.
std::vector<double> pooled_success_probs(const ValidatedConfig& cfg,
                                         std::span<const NetworkRealization> ensemble,
                                         double rho, unsigned workers) {
  std::vector<double> out;
  const auto mc = static_cast<std::uint64_t>(cfg->mc_samples);
  for (const auto& net : ensemble) {
    const std::size_t n = net.size();
    const std::size_t base = out.size();
    out.resize(base + n);
    const std::vector<double> activity(n, rho * cfg->access_prob);
    const std::uint64_t base_key = derive_key(cfg->seed, "busy_mc", net.realization_id);
    parallel_for(n, workers, [&](std::size_t i) {
      RngStream stream(split_key(base_key, i));
      out[base + i] = conditional_success_prob(i, net, cfg, activity, mc, stream).value;
    });
  }
  return out;
}

}  // namespace

FixedPointResult fixed_point_busy(const ValidatedConfig& cfg,
                                  std::span<const NetworkRealization> ensemble,
                                  double tolerance, int max_iter,
                                  unsigned workers) {
  if (!(tolerance > 0))
    throw std::invalid_argument("fixed_point_busy: tolerance must be > 0");
  if (max_iter < 1)
    throw std::invalid_argument("fixed_point_busy: max_iter must be >= 1");
  if (ensemble.empty())
    throw std::invalid_argument("fixed_point_busy: empty ensemble");

  FixedPointResult res;
  const double xi = cfg->arrival_rate;
  const double p = cfg->access_prob;

  if (xi == 0) {
    // No traffic: never busy. Short-circuit rather than letting the damped
    // iteration crawl down from 1 geometrically.
    res.rho = 0;
    res.iterations = 1;
    res.residual = 0;
    res.converged = true;
    res.history = {1.0, 0.0};
    return res;
  }

  auto f = [&](double rho) {
    const auto qs = pooled_success_probs(cfg, ensemble, rho, workers);
    double acc = 0;
    for (double q : qs) {
      const double mu = p * q;
      acc += mu > 0 ? std::min(1.0, xi / mu) : 1.0;
    }
    return acc / static_cast<double>(qs.size());
  };

  double gamma = cfg->fixed_point_damping;
  double rho = 1.0;
  res.history = {rho};
  double prev_residual = std::numeric_limits<double>::infinity();
  for (int k = 0; k < max_iter; ++k) {
    const double frho = f(rho);
    const double residual = std::fabs(rho - frho);
    res.iterations = k + 1;
    res.residual = residual;
    res.rho = rho;
    if (residual <= tolerance) {
      res.converged = true;
      return res;
    }
    if (k >= 3 && residual > prev_residual) gamma *= 0.5;
    prev_residual = residual;
    rho = (1 - gamma) * rho + gamma * frho;
    res.history.push_back(rho);
  }
  return res;  // converged stays false
}

double geo_geo1_mean_delay(double xi, double mu, std::size_t cap, double tail_tol) {
  if (!(mu > 0)) return std::numeric_limits<double>::infinity();
  if (mu > 1) throw std::invalid_argument("geo_geo1_mean_delay: mu must be <= 1");
  if (xi < 0 || xi > 1) throw std::invalid_argument("geo_geo1_mean_delay: xi outside [0,1]");
  if (xi == 0) return 1.0 / mu;  // an arriving packet always finds the queue empty
  if (xi >= mu) return std::numeric_limits<double>::infinity();

  // Stationary queue-length distribution at slot starts is geometric with
  // ratio r: one up-step needs an arrival and no service, one down-step a
  // service and no arrival. An arriving packet behind n others leaves after
  // n+1 successes, (n+1)/mu slots in expectation.
  const double r = xi * (1 - mu) / ((1 - xi) * mu);
  double w = 1.0, norm = 1.0, weighted = 0.0;
  for (std::size_t n = 1; n <= cap; ++n) {
    w *= r;
    norm += w;
    weighted += static_cast<double>(n) * w;
    const double remaining = w * r / (1 - r);
    if (remaining < tail_tol * norm) break;
  }
  const double mean_len = weighted / norm;
  return (mean_len + 1.0) / mu;
}

CdfEstimate approx_delay_cdf(const ValidatedConfig& cfg,
                             std::span<const NetworkRealization> ensemble,
                             double rho, std::span<const double> grid,
                             unsigned workers) {
  if (rho < 0 || rho > 1)
    throw std::invalid_argument("approx_delay_cdf: rho outside [0,1]");
  if (ensemble.empty())
    throw std::invalid_argument("approx_delay_cdf: empty ensemble");

  const double xi = cfg->arrival_rate;
  const double p = cfg->access_prob;
  const auto qs = pooled_success_probs(cfg, ensemble, rho, workers);

  std::vector<double> means;
  std::size_t censored = 0;
  for (double q : qs) {
    const double mean = geo_geo1_mean_delay(xi, p * q);
    if (std::isinf(mean))
      ++censored;
    else
      means.push_back(mean);
  }
  return build_cdf(std::move(means), censored, grid);
}

LocalDelaySummary local_delay_summary(std::span<const std::vector<PerLinkStats>> runs_at_t,
                                      std::span<const std::vector<PerLinkStats>> runs_at_2t,
                                      const ValidatedConfig& cfg) {
  if (runs_at_t.empty() || runs_at_2t.empty())
    throw std::invalid_argument("local_delay_summary: empty ensemble");

  // The pool is over links, one value per link (its mean time-to-success).
  // Packet weighting would let fast links drown out the slow ones whose
  // growth with the horizon is the divergence signature being watched for.
  auto pool = [](std::span<const std::vector<PerLinkStats>> runs, std::size_t& links,
                 std::size_t& censored_links, std::uint64_t& packets, double& mean,
                 double& variance) {
    links = censored_links = 0;
    packets = 0;
    std::vector<double> link_means;
    for (const auto& run : runs)
      for (const auto& st : run) {
        ++links;
        if (st.delivered == 0) {
          ++censored_links;
          continue;
        }
        packets += st.delivered;
        link_means.push_back(st.delivered_mean_delay());
      }
    const auto n = link_means.size();
    mean = n == 0 ? std::numeric_limits<double>::quiet_NaN()
                  : std::accumulate(link_means.begin(), link_means.end(), 0.0) /
                        static_cast<double>(n);
    if (n >= 2) {
      double s2 = 0;
      for (double m : link_means) {
        const double e = m - mean;
        s2 += e * e;
      }
      variance = s2 / static_cast<double>(n - 1);
    } else {
      variance = std::numeric_limits<double>::quiet_NaN();
    }
  };

  LocalDelaySummary out;
  std::size_t links_t = 0, cens_t = 0;
  pool(runs_at_t, links_t, cens_t, out.packets, out.mean, out.variance);
  out.links = links_t;
  out.censored_fraction =
      links_t == 0 ? 0.0 : static_cast<double>(cens_t) / static_cast<double>(links_t);

  std::size_t links_2t = 0, cens_2t = 0;
  std::uint64_t packets_2t = 0;
  double mean_2t = 0, var_2t = 0;
  pool(runs_at_2t, links_2t, cens_2t, packets_2t, mean_2t, var_2t);

  const bool all_censored = links_t > 0 && cens_t == links_t;
  const bool mean_grows = !std::isnan(out.mean) && !std::isnan(mean_2t) &&
                          mean_2t > (1.0 + cfg->divergence_growth) * out.mean;
  out.diverging = all_censored || mean_grows;
  return out;
}

}  // namespace udn
