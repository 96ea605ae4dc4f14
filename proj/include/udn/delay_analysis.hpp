#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "udn/config.hpp"
#include "udn/geometry.hpp"
#include "udn/queuesim.hpp"

namespace udn {

struct CdfEstimate {
  std::vector<double> grid;
  std::vector<double> cdf;           // fraction of all links with mean <= t
  std::vector<double> sorted_means;  // non-censored per-link means, ascending
  std::size_t censored = 0;          // links with nothing delivered
  std::size_t total = 0;

  double censored_fraction() const {
    return total == 0 ? 0.0 : static_cast<double>(censored) / static_cast<double>(total);
  }
};

std::vector<double> log_grid(double lo, double hi, std::size_t points);

CdfEstimate build_cdf(std::vector<double> means, std::size_t censored,
                      std::span<const double> grid);

// Distribution of per-link mean delay pooled across an ensemble of runs of
// one variant. Links that delivered nothing are censored mass above the
// grid. The per-link mean covers every arrived packet (delivered packets by
// their delay, still-queued packets by their age), which keeps the coupled
// dominant/original/favorable cdfs ordered slot-exactly at any horizon.
CdfEstimate mean_delay_cdf(std::span<const std::vector<PerLinkStats>> runs,
                           std::span<const double> grid);

struct FixedPointResult {
  double rho = 0;  // common busy probability
  int iterations = 0;
  double residual = 0;
  bool converged = false;
  std::vector<double> history;  // all iterates, starting at rho_0
};

// Solves rho = f(rho), f(rho) = ensemble average of min(1, xi/(p*q_i(rho)))
// with q_i(rho) the success probability when every interferer is active
// with probability rho*p. Damped iteration from rho_0 = 1; the damping is
// halved whenever the residual stops shrinking after the first 3 steps.
FixedPointResult fixed_point_busy(const ValidatedConfig& cfg,
                                  std::span<const NetworkRealization> ensemble,
                                  double tolerance, int max_iter,
                                  unsigned workers = 1);

// Mean sojourn of the discrete-time single queue with Bernoulli arrivals
// (rate xi) and Bernoulli service (rate mu), from its stationary chain with
// the given queue cap, terminating early once the remaining tail mass drops
// below tail_tol. Infinite when xi >= mu.
double geo_geo1_mean_delay(double xi, double mu, std::size_t cap = 10000,
                           double tail_tol = 1e-12);

// Plug-in cdf: per-link mean delay from the single-queue formula with
// service rate mu_i = p * q_i(rho); links with xi >= mu_i are censored.
CdfEstimate approx_delay_cdf(const ValidatedConfig& cfg,
                             std::span<const NetworkRealization> ensemble,
                             double rho, std::span<const double> grid,
                             unsigned workers = 1);

struct LocalDelaySummary {
  double mean = 0;       // average over non-censored links of the per-link mean delay
  double variance = 0;   // sample variance of those per-link means
  double censored_fraction = 0;
  bool diverging = false;
  std::size_t links = 0;     // censored included
  std::uint64_t packets = 0; // deliveries behind the per-link means
};

// Backlogged-ensemble summary at horizon T, with a divergence indicator
// driven by a doubled-horizon ensemble: the indicator fires when every link
// is censored or the pooled mean grows by more than cfg.divergence_growth
// when the horizon doubles.
LocalDelaySummary local_delay_summary(std::span<const std::vector<PerLinkStats>> runs_at_t,
                                      std::span<const std::vector<PerLinkStats>> runs_at_2t,
                                      const ValidatedConfig& cfg);

}  // namespace udn
