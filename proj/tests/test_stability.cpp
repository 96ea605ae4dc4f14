#include "doctest.h"

#include <cmath>
#include <sstream>
#include <tuple>
#include <vector>

#include "udn/ensemble.hpp"
#include "udn/stability.hpp"

using namespace udn;

namespace {

ValidatedConfig small_cfg(double p = 0.5, std::uint64_t seed = 31,
                          std::int64_t mc = 300) {
  SimConfig c;
  c.lambda = 0.01;
  c.window_side = 40;
  c.access_prob = p;
  c.arrival_rate = 0.1;
  c.sinr_threshold = 1.0;
  c.path_loss_exponent = 4.0;
  c.mc_samples = mc;
  c.seed = seed;
  return validate_config(c);
}

}  // namespace

TEST_CASE("loynes test is strict with an idle-traffic convention") {
  CHECK(loynes_stable(0.0, 0.0));
  CHECK(loynes_stable(0.0, 0.5));
  CHECK(loynes_stable(0.3, 0.5));
  CHECK_FALSE(loynes_stable(0.5, 0.5));  // boundary counts as unstable
  CHECK_FALSE(loynes_stable(0.6, 0.5));
}

TEST_CASE("lower quantile is the order statistic with a floor of one") {
  const std::vector<double> v{40, 10, 30, 20};  // sorted: 10 20 30 40
  CHECK(lower_quantile(v, 0.0) == 10);
  CHECK(lower_quantile(v, 0.25) == 10);
  CHECK(lower_quantile(v, 0.26) == 20);
  CHECK(lower_quantile(v, 0.5) == 20);
  CHECK(lower_quantile(v, 0.75) == 30);
  CHECK(lower_quantile(v, 1.0) == 40);
  CHECK(lower_quantile({7.0}, 0.0) == 7);
  CHECK_THROWS_AS(lower_quantile({}, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(lower_quantile({1.0}, 1.5), std::invalid_argument);
}

TEST_CASE("reports count unstable links against epsilon") {
  auto rep = make_report(ConditionKind::Sufficient, 0.34, 0.2, {0.3, 0.1, 0.5});
  CHECK(rep.stable == std::vector<bool>{true, false, true});
  CHECK(rep.unstable_fraction == doctest::Approx(1.0 / 3));
  CHECK(rep.epsilon_stable);

  auto tight = make_report(ConditionKind::Sufficient, 0.3, 0.2, {0.3, 0.1, 0.5});
  CHECK_FALSE(tight.epsilon_stable);

  auto idle = make_report(ConditionKind::Sufficient, 0.0, 0.0, {0.0, 0.0});
  CHECK(idle.unstable_fraction == 0.0);
  CHECK(idle.epsilon_stable);
}

TEST_CASE("service rates reject misuse") {
  const auto cfg = small_cfg();
  NetworkRealization empty;
  CHECK_THROWS_AS(condition_service_rates(empty, cfg, ConditionKind::Sufficient),
                  std::invalid_argument);
  const auto net = sample_bipolar(cfg, 0);
  CHECK_THROWS_AS(condition_service_rates(net, cfg, ConditionKind::Empirical),
                  std::invalid_argument);
}

TEST_CASE("with a single interferer the nearest-only model is the full model") {
  const auto cfg = small_cfg();
  NetworkRealization net;
  net.window_side = 40;
  net.links.push_back(Link{{10, 10}, {11, 10}});
  net.links.push_back(Link{{13, 10}, {14, 10}});
  const auto suff = condition_service_rates(net, cfg, ConditionKind::Sufficient);
  const auto type1 = condition_service_rates(net, cfg, ConditionKind::NecessaryTypeI);
  REQUIRE(suff.size() == 2);
  // identical activity vectors and identical streams: bitwise equal
  CHECK(suff[0] == type1[0]);
  CHECK(suff[1] == type1[1]);
}

TEST_CASE("busier interference models give lower service rates link by link") {
  const auto cfg = small_cfg();
  const auto net = sample_bipolar(cfg, 1);
  REQUIRE(net.size() >= 3);
  const auto suff = condition_service_rates(net, cfg, ConditionKind::Sufficient);
  const auto type1 = condition_service_rates(net, cfg, ConditionKind::NecessaryTypeI);
  const auto type2 = condition_service_rates(net, cfg, ConditionKind::NecessaryTypeII);
  for (std::size_t i = 0; i < net.size(); ++i) {
    // common random numbers make these orderings hold sample by sample
    CHECK(suff[i] <= type1[i]);
    CHECK(suff[i] <= type2[i]);
    CHECK(suff[i] > 0);
    CHECK(type1[i] <= cfg->access_prob);
  }
}

TEST_CASE("zero access probability pins every critical rate to zero") {
  const auto cfg = small_cfg(0.0);
  const auto nets = sample_ensemble(cfg, 2);
  for (auto kind : {ConditionKind::Sufficient, ConditionKind::NecessaryTypeI,
                    ConditionKind::NecessaryTypeII})
    CHECK(critical_arrival_rate(nets, cfg, kind, 0.1) == 0.0);
}

TEST_CASE("critical rates order sufficient below both necessary conditions") {
  const auto cfg = small_cfg();
  const auto nets = sample_ensemble(cfg, 2);
  const double eps = 0.1;
  const double xs = critical_arrival_rate(nets, cfg, ConditionKind::Sufficient, eps);
  const double x1 = critical_arrival_rate(nets, cfg, ConditionKind::NecessaryTypeI, eps);
  const double x2 = critical_arrival_rate(nets, cfg, ConditionKind::NecessaryTypeII, eps);
  CHECK(xs > 0);
  CHECK(xs <= x1);
  CHECK(xs <= x2 + 1e-4);  // bisection quantizes the type-II rate
  CHECK(x1 <= cfg->access_prob);
}

TEST_CASE("type-II critical rate solves its fixed-point equation") {
  const auto cfg = small_cfg();
  const auto nets = sample_ensemble(cfg, 2);
  const double eps = 0.1;
  const double xs = critical_arrival_rate(nets, cfg, ConditionKind::NecessaryTypeII, eps);
  auto g = [&](double xi) {
    std::vector<double> pool;
    for (const auto& net : nets) {
      auto r = condition_service_rates(net, cfg, ConditionKind::NecessaryTypeII, xi);
      pool.insert(pool.end(), r.begin(), r.end());
    }
    return lower_quantile(pool, eps) - xi;
  };
  // the bisection keeps g >= 0 on the left and g < 0 on the right
  CHECK(g(xs - 2e-4) >= 0);
  CHECK(g(xs + 2e-4) < 0);
}

TEST_CASE("critical rate rises with epsilon") {
  const auto cfg = small_cfg();
  const auto nets = sample_ensemble(cfg, 2);
  for (auto kind : {ConditionKind::Sufficient, ConditionKind::NecessaryTypeI,
                    ConditionKind::NecessaryTypeII}) {
    const double a = critical_arrival_rate(nets, cfg, kind, 0.05);
    const double b = critical_arrival_rate(nets, cfg, kind, 0.1);
    const double c = critical_arrival_rate(nets, cfg, kind, 0.2);
    CAPTURE(to_string(kind));
    CHECK(a <= b + 1e-4);
    CHECK(b <= c + 1e-4);
  }
}

TEST_CASE("empirical stability classifies trajectories") {
  SimConfig sc;
  sc.arrival_rate = 0.2;
  sc.stability_slope_frac = 0.1;  // slope limit 0.02 per slot
  sc.stability_queue_min = 50;
  const auto cfg = validate_config(sc);

  auto make = [](std::vector<std::int64_t> samples, std::int64_t stride,
                 std::int64_t final_len) {
    PerLinkStats st;
    st.queue_samples = std::move(samples);
    st.sample_stride = stride;
    st.horizon = 10000;
    st.final_queue_len = final_len;
    return st;
  };

  std::vector<PerLinkStats> stats;
  stats.push_back(make({3, 2, 4, 3, 2, 3, 4, 3, 2, 3}, 1000, 3));        // flat
  stats.push_back(make({100, 200, 300, 400, 500, 600, 700, 800, 900, 1000},
                       1000, 1000));                                      // growing
  stats.push_back(make({100, 200, 300, 400, 500, 600, 700, 800, 900, 1000},
                       1000, 10));  // growing samples but drained at the end

  const auto stable = empirical_stability(stats, cfg);
  REQUIRE(stable.size() == 3);
  CHECK(stable[0]);
  CHECK_FALSE(stable[1]);
  CHECK(stable[2]);  // both conditions must fire
}

TEST_CASE("empirical stability validates its inputs") {
  const auto cfg = validate_config(SimConfig{});
  PerLinkStats short_run;
  short_run.horizon = 5000;
  short_run.sample_stride = 16;
  short_run.queue_samples = {1, 2, 3};
  std::vector<PerLinkStats> v1{short_run};
  CHECK_THROWS_AS(empirical_stability(v1, cfg), std::invalid_argument);

  PerLinkStats no_samples;
  no_samples.horizon = 10000;
  no_samples.sample_stride = 0;
  std::vector<PerLinkStats> v2{no_samples};
  CHECK_THROWS_AS(empirical_stability(v2, cfg), std::invalid_argument);

  PerLinkStats coarse;
  coarse.horizon = 10000;
  coarse.sample_stride = 8000;
  coarse.queue_samples = {5};  // single sample in the trailing half
  std::vector<PerLinkStats> v3{coarse};
  CHECK_THROWS_AS(empirical_stability(v3, cfg), std::invalid_argument);
}

TEST_CASE("empirical stability detects a simulated saturated queue") {
  // isolated link: service rate is exactly p (no noise, no interferers)
  SimConfig sc;
  sc.lambda = 0;
  sc.window_side = 20;
  sc.access_prob = 0.5;
  sc.horizon = 20000;
  sc.queue_sample_stride = 16;
  sc.seed = 12;

  NetworkRealization net;
  net.window_side = 20;
  net.links.push_back(Link{{5, 5}, {6, 5}});

  sc.arrival_rate = 0.1;  // well under p
  const auto cfg_ok = validate_config(sc);
  const auto run_ok = run_simulation(cfg_ok, net, SystemVariant::Original);
  CHECK(empirical_stability(run_ok, cfg_ok)[0]);

  sc.arrival_rate = 0.9;  // far over p, queue drifts at ~0.4/slot
  const auto cfg_bad = validate_config(sc);
  const auto run_bad = run_simulation(cfg_bad, net, SystemVariant::Original);
  CHECK_FALSE(empirical_stability(run_bad, cfg_bad)[0]);
}

TEST_CASE("regime names map to the recommended necessary condition") {
  CHECK(recommend_condition_type(regime_from_string("epsilon_to_zero")) ==
        NecessaryConditionType::TypeII);
  CHECK(recommend_condition_type(regime_from_string("access_prob_to_zero")) ==
        NecessaryConditionType::TypeI);
  CHECK(recommend_condition_type(regime_from_string("density_to_zero")) ==
        NecessaryConditionType::TypeI);
  CHECK(recommend_condition_type(regime_from_string("threshold_to_zero_access_to_one")) ==
        NecessaryConditionType::TypeII);
  CHECK(recommend_condition_type(regime_from_string(
            "link_distance_sq_much_larger_than_inverse_density")) ==
        NecessaryConditionType::TypeII);
  CHECK_THROWS_AS(regime_from_string("warp_speed"), std::invalid_argument);
}

TEST_CASE("condition kinds print their names") {
  CHECK(to_string(ConditionKind::Sufficient) == "sufficient");
  CHECK(to_string(ConditionKind::NecessaryTypeI) == "necessary_type_i");
  CHECK(to_string(ConditionKind::NecessaryTypeII) == "necessary_type_ii");
  CHECK(to_string(ConditionKind::Empirical) == "empirical");
}

TEST_CASE("stability csv uses the long row format") {
  std::vector<std::tuple<double, ConditionKind, double, double>> rows{
      {0.5, ConditionKind::Sufficient, 0.1, 0.25},
      {0.5, ConditionKind::NecessaryTypeII, 0.1, 0.375},
  };
  std::ostringstream os;
  write_stability_csv(os, rows);
  CHECK(os.str() ==
        "p,kind,epsilon,xi_star\n"
        "0.5,sufficient,0.1,0.25\n"
        "0.5,necessary_type_ii,0.1,0.375\n");
}
