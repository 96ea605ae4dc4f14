#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "udn/config.hpp"
#include "udn/geometry.hpp"
#include "udn/rng.hpp"

namespace udn {

// Dense table of per-pair power gains for one slot, h(tx -> rx).
// Rayleigh amplitude fading makes the power gain unit-mean exponential.
struct SlotChannelDraw {
  std::size_t n = 0;
  std::vector<double> gain;  // row = receiver link, column = transmitter link

  double operator()(std::size_t tx, std::size_t rx) const noexcept {
    return gain[rx * n + tx];
  }

  static SlotChannelDraw sample(std::size_t n, RngStream& stream);
  static SlotChannelDraw fixed_unit(std::size_t n);  // no-fading mode
};

// distance^(-alpha); throws std::domain_error at distance <= 0 because the
// bipolar construction guarantees strictly positive separations and a
// coincident pair indicates a geometry bug upstream.
double path_loss(double distance, double alpha);

// SINR of link_index's own transmission against the given active set.
// Returns +infinity when noise and interference are both zero.
double sinr(std::size_t link_index, std::span<const std::size_t> active_set,
            const NetworkRealization& net, const SlotChannelDraw& draw,
            double noise_power, double alpha);

inline bool attempt_success(double sinr_value, double theta) noexcept {
  return sinr_value >= theta;
}

struct SuccessProbEstimate {
  double value = 0;
  double std_err = 0;
  std::uint64_t samples = 0;
};

// Monte-Carlo estimate of P(SINR >= theta) for one link, averaging over
// fading and independent per-slot interferer activity. activity[k] is the
// probability that interferer k transmits in a slot; activity[link_index]
// is ignored. Draws are addressed by (sample, link) so estimates with the
// same stream are coupled across theta and activity changes.
SuccessProbEstimate conditional_success_prob(std::size_t link_index,
                                             const NetworkRealization& net,
                                             const ValidatedConfig& cfg,
                                             std::span<const double> activity,
                                             std::uint64_t mc_samples,
                                             RngStream stream);

}  // namespace udn
