#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "udn/config.hpp"
#include "udn/geometry.hpp"
#include "udn/queuesim.hpp"

namespace udn {

enum class ConditionKind {
  Sufficient,       // every interferer always has traffic, active w.p. p
  NecessaryTypeI,   // only the nearest interferer, active w.p. p
  NecessaryTypeII,  // every interferer drops stale packets, active w.p. xi*p
  Empirical,        // measured from Original-variant queue trajectories
};

std::string to_string(ConditionKind k);

struct StabilityReport {
  ConditionKind kind = ConditionKind::Sufficient;
  double epsilon = 0;
  std::vector<double> service_rates;  // empty for Empirical
  std::vector<bool> stable;
  double unstable_fraction = 0;
  bool epsilon_stable = false;  // unstable_fraction <= epsilon
};

// Strict Loynes test; xi = 0 is stable by convention (no traffic).
bool loynes_stable(double arrival_rate, double service_rate);

// Per-link service-rate estimates mu_i = p * q_i under the activity model
// the condition kind induces. The interferer-activity arrival rate for
// NecessaryTypeII can be overridden so the critical-rate bisection can move
// it; by default the config's arrival_rate is used. Streams are shared
// across kinds and rates, so comparisons ride on common random numbers.
std::vector<double> condition_service_rates(const NetworkRealization& net,
                                            const ValidatedConfig& cfg,
                                            ConditionKind kind,
                                            double type_ii_arrival_rate = -1,
                                            unsigned workers = 1);

StabilityReport make_report(ConditionKind kind, double epsilon, double arrival_rate,
                            std::vector<double> service_rates);

// Largest arrival rate keeping the pooled unstable fraction within epsilon.
// Sufficient/TypeI: the epsilon-quantile of pooled service rates. TypeII:
// the fixed point of xi = quantile(mu(xi)), bisected to 1e-4 absolute.
double critical_arrival_rate(std::span<const NetworkRealization> ensemble,
                             const ValidatedConfig& cfg, ConditionKind kind,
                             double epsilon, unsigned workers = 1);

// Lower empirical quantile: order statistic at index ceil(eps*n), floor 1.
double lower_quantile(std::vector<double> values, double eps);

// Queue-growth test on Original-run trajectories: a link is unstable when
// the least-squares slope over the last half of the horizon exceeds
// arrival_rate * stability_slope_frac and the final queue length exceeds
// stability_queue_min. Demands horizon >= 10^4.
std::vector<bool> empirical_stability(std::span<const PerLinkStats> stats,
                                      const ValidatedConfig& cfg);

enum class StabilityRegime {
  EpsilonToZero,
  AccessProbToZero,
  DensityToZero,
  ThresholdToZeroAccessToOne,
  LinkDistanceSqMuchLargerThanInverseDensity,
};

StabilityRegime regime_from_string(const std::string& s);

enum class NecessaryConditionType { TypeI, TypeII };

NecessaryConditionType recommend_condition_type(StabilityRegime regime);

// Long-format rows: p, kind, epsilon, xi_star.
void write_stability_csv(std::ostream& out,
                         std::span<const std::tuple<double, ConditionKind, double, double>> rows);

}  // namespace udn
