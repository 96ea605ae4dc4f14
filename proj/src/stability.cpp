#include "udn/stability.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <ostream>
#include <stdexcept>
#include <tuple>

#include "udn/ensemble.hpp"
#include "udn/phy.hpp"

namespace udn {

std::string to_string(ConditionKind k) {
  switch (k) {
    case ConditionKind::Sufficient: return "sufficient";
    case ConditionKind::NecessaryTypeI: return "necessary_type_i";
    case ConditionKind::NecessaryTypeII: return "necessary_type_ii";
    case ConditionKind::Empirical: return "empirical";
  }
  throw std::logic_error("unknown ConditionKind value");
}

bool loynes_stable(double arrival_rate, double service_rate) {
  if (arrival_rate == 0) return true;  // no traffic, nothing to destabilize
  return arrival_rate < service_rate;
}

std::vector<double> condition_service_rates(const NetworkRealization& net,
                                            const ValidatedConfig& cfg,
                                            ConditionKind kind,
                                            double type_ii_arrival_rate,
                                            unsigned workers) {
  if (net.empty())
    throw std::invalid_argument("condition_service_rates: empty realization");
  if (kind == ConditionKind::Empirical)
    throw std::invalid_argument(
        "condition_service_rates: Empirical comes from empirical_stability, "
        "not an activity model");

  const std::size_t n = net.size();
  const double p = cfg->access_prob;
  const double xi =
      type_ii_arrival_rate >= 0 ? type_ii_arrival_rate : cfg->arrival_rate;

  const double uniform_activity = kind == ConditionKind::Sufficient ? p
                                  : kind == ConditionKind::NecessaryTypeII ? xi * p
                                                                           : 0.0;
  std::vector<double> rates(n, 0.0);
  const auto mc = static_cast<std::uint64_t>(cfg->mc_samples);
  const std::uint64_t base_key = derive_key(cfg->seed, "service_mc", net.realization_id);

  parallel_for(n, workers, [&](std::size_t i) {
    std::vector<double> activity(n, uniform_activity);
    if (kind == ConditionKind::NecessaryTypeI)
      if (auto near = nearest_interferer(i, net)) activity[near->index] = p;
    // One stream per (realization, link), independent of kind and rate, so
    // the estimates across kinds differ only through the activity model.
    RngStream stream(split_key(base_key, i));
    rates[i] = p * conditional_success_prob(i, net, cfg, activity, mc, stream).value;
  });
  return rates;
}

StabilityReport make_report(ConditionKind kind, double epsilon, double arrival_rate,
                            std::vector<double> service_rates) {
  StabilityReport rep;
  rep.kind = kind;
  rep.epsilon = epsilon;
  rep.service_rates = std::move(service_rates);
  rep.stable.reserve(rep.service_rates.size());
  std::size_t unstable = 0;
  for (double mu : rep.service_rates) {
    const bool s = loynes_stable(arrival_rate, mu);
    rep.stable.push_back(s);
    unstable += !s;
  }
  rep.unstable_fraction = rep.service_rates.empty()
                              ? 0.0
                              : static_cast<double>(unstable) /
                                    static_cast<double>(rep.service_rates.size());
  rep.epsilon_stable = rep.unstable_fraction <= epsilon;
  return rep;
}

double lower_quantile(std::vector<double> values, double eps) {
  if (values.empty()) throw std::invalid_argument("lower_quantile: no values");
  if (eps < 0 || eps > 1) throw std::invalid_argument("lower_quantile: eps outside [0,1]");
  std::sort(values.begin(), values.end());
  const auto n = static_cast<double>(values.size());
  auto idx = static_cast<std::size_t>(std::ceil(eps * n));
  if (idx < 1) idx = 1;
  if (idx > values.size()) idx = values.size();
  return values[idx - 1];
}

namespace {

std::vector<double> pooled_rates(std::span<const NetworkRealization> ensemble,
                                 const ValidatedConfig& cfg, ConditionKind kind,
                                 double type_ii_rate, unsigned workers) {
  // Parallelism sits at the link level inside each realization; realizations
  // stay sequential so the pool order is fixed.
  std::vector<double> pool;
  for (const auto& net : ensemble) {
    auto rates = condition_service_rates(net, cfg, kind, type_ii_rate, workers);
    pool.insert(pool.end(), rates.begin(), rates.end());
  }
  return pool;
}

}  // namespace

double critical_arrival_rate(std::span<const NetworkRealization> ensemble,
                             const ValidatedConfig& cfg, ConditionKind kind,
                             double epsilon, unsigned workers) {
  if (ensemble.empty())
    throw std::invalid_argument("critical_arrival_rate: empty ensemble");
  if (epsilon < 0 || epsilon > 1)
    throw std::invalid_argument("critical_arrival_rate: epsilon outside [0,1]");

  if (kind != ConditionKind::NecessaryTypeII)
    return lower_quantile(pooled_rates(ensemble, cfg, kind, -1, workers), epsilon);

  // mu(xi) is nonincreasing in xi, so g(xi) = quantile(mu(xi)) - xi is
  // strictly decreasing and the fixed point is unique.
  auto quantile_at = [&](double xi) {
    return lower_quantile(pooled_rates(ensemble, cfg, kind, xi, workers), epsilon);
  };
  double lo = 0.0, hi = 1.0;
  const double g_lo = quantile_at(lo);
  if (g_lo <= 0) return 0.0;  // zero service even with silent interferers
  const double g_hi = quantile_at(hi) - hi;
  if (g_hi > 0)
    throw EngineFault("critical_arrival_rate: bisection not bracketed; "
                      "service rate above 1 is impossible");
  while (hi - lo > 1e-4) {
    const double mid = 0.5 * (lo + hi);
    if (quantile_at(mid) - mid >= 0)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

std::vector<bool> empirical_stability(std::span<const PerLinkStats> stats,
                                      const ValidatedConfig& cfg) {
  std::vector<bool> out;
  out.reserve(stats.size());
  const double xi = cfg->arrival_rate;
  const double slope_limit = xi * cfg->stability_slope_frac;
  for (const auto& st : stats) {
    if (st.horizon < 10000)
      throw std::invalid_argument(
          "empirical_stability: needs horizon >= 10000 slots, got " +
          std::to_string(st.horizon));
    if (st.sample_stride < 1 || st.queue_samples.empty())
      throw std::invalid_argument(
          "empirical_stability: run recorded no queue-length samples");

    // least-squares slope over samples in the last half of the horizon
    const std::int64_t half = st.horizon / 2;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::size_t cnt = 0;
    for (std::size_t j = 0; j < st.queue_samples.size(); ++j) {
      const auto slot = static_cast<std::int64_t>(j + 1) * st.sample_stride - 1;
      if (slot < half) continue;
      const auto x = static_cast<double>(slot);
      const auto y = static_cast<double>(st.queue_samples[j]);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
      ++cnt;
    }
    if (cnt < 2)
      throw std::invalid_argument(
          "empirical_stability: fewer than 2 samples in the trailing half; "
          "lower queue_sample_stride");
    const double denom = cnt * sxx - sx * sx;
    const double slope = denom == 0 ? 0.0 : (cnt * sxy - sx * sy) / denom;
    const bool unstable = slope > slope_limit &&
                          static_cast<double>(st.final_queue_len) > cfg->stability_queue_min;
    out.push_back(!unstable);
  }
  return out;
}

StabilityRegime regime_from_string(const std::string& s) {
  if (s == "epsilon_to_zero") return StabilityRegime::EpsilonToZero;
  if (s == "access_prob_to_zero") return StabilityRegime::AccessProbToZero;
  if (s == "density_to_zero") return StabilityRegime::DensityToZero;
  if (s == "threshold_to_zero_access_to_one")
    return StabilityRegime::ThresholdToZeroAccessToOne;
  if (s == "link_distance_sq_much_larger_than_inverse_density")
    return StabilityRegime::LinkDistanceSqMuchLargerThanInverseDensity;
  throw std::invalid_argument("unknown stability regime: '" + s + "'");
}

NecessaryConditionType recommend_condition_type(StabilityRegime regime) {
  switch (regime) {
    case StabilityRegime::EpsilonToZero:
      return NecessaryConditionType::TypeII;
    case StabilityRegime::AccessProbToZero:
      return NecessaryConditionType::TypeI;
    case StabilityRegime::DensityToZero:
      return NecessaryConditionType::TypeI;
    case StabilityRegime::ThresholdToZeroAccessToOne:
      return NecessaryConditionType::TypeII;
    case StabilityRegime::LinkDistanceSqMuchLargerThanInverseDensity:
      return NecessaryConditionType::TypeII;
  }
  throw std::invalid_argument("unknown stability regime");
}

namespace {

void put_double(std::ostream& out, double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw std::logic_error("double formatting failed");
  out.write(buf, end - buf);
}

}  // namespace

void write_stability_csv(
    std::ostream& out,
    std::span<const std::tuple<double, ConditionKind, double, double>> rows) {
  out << "p,kind,epsilon,xi_star\n";
  for (const auto& [p, kind, eps, xi_star] : rows) {
    put_double(out, p);
    out << ',' << to_string(kind) << ',';
    put_double(out, eps);
    out << ',';
    put_double(out, xi_star);
    out << '\n';
  }
}

}  // namespace udn
