#include "udn/phy.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace udn {

SlotChannelDraw SlotChannelDraw::sample(std::size_t n, RngStream& stream) {
  SlotChannelDraw d;
  d.n = n;
  d.gain.resize(n * n);
  for (auto& g : d.gain) g = stream.exponential_mean1();
  return d;
}

SlotChannelDraw SlotChannelDraw::fixed_unit(std::size_t n) {
  SlotChannelDraw d;
  d.n = n;
  d.gain.assign(n * n, 1.0);
  return d;
}

double path_loss(double distance, double alpha) {
  if (!(distance > 0))
    throw std::domain_error("path_loss: distance must be > 0 (coincident "
                            "transmitter and receiver indicates a geometry bug)");
  return std::pow(distance, -alpha);
}

double sinr(std::size_t link_index, std::span<const std::size_t> active_set,
            const NetworkRealization& net, const SlotChannelDraw& draw,
            double noise_power, double alpha) {
  bool member = false;
  for (std::size_t k : active_set)
    if (k == link_index) { member = true; break; }
  if (!member)
    throw std::invalid_argument("sinr: link must belong to the active set to "
                                "have an SINR of its own transmission");

  const Vec2 rx = net.links[link_index].rx;
  const double own_d = toroidal_distance(net.links[link_index].tx, rx, net.window_side);
  const double signal = draw(link_index, link_index) * path_loss(own_d, alpha);

  double denom = noise_power;
  for (std::size_t k : active_set) {
    if (k == link_index) continue;
    const double d = toroidal_distance(net.links[k].tx, rx, net.window_side);
    denom += draw(k, link_index) * path_loss(d, alpha);
  }
  if (denom == 0) return std::numeric_limits<double>::infinity();
  return signal / denom;
}

SuccessProbEstimate conditional_success_prob(std::size_t link_index,
                                             const NetworkRealization& net,
                                             const ValidatedConfig& cfg,
                                             std::span<const double> activity,
                                             std::uint64_t mc_samples,
                                             RngStream stream) {
  if (net.empty())
    throw std::invalid_argument("conditional_success_prob: empty realization");
  if (link_index >= net.size())
    throw std::out_of_range("conditional_success_prob: link index out of range");
  if (activity.size() != net.size())
    throw std::invalid_argument("conditional_success_prob: activity size mismatch");
  if (mc_samples < 1)
    throw std::invalid_argument("conditional_success_prob: mc_samples must be >= 1");

  const std::size_t n = net.size();
  const double alpha = cfg->path_loss_exponent;
  const double theta = cfg->sinr_threshold;
  const double noise = cfg->noise_power;
  const bool fading = cfg->fading == FadingModel::Rayleigh;
  const Vec2 rx = net.links[link_index].rx;

  const double own_gain =
      path_loss(toroidal_distance(net.links[link_index].tx, rx, net.window_side), alpha);

  // Only links that can ever transmit matter; ascending order keeps the
  // interference sum deterministic.
  std::vector<std::uint32_t> cand;
  std::vector<double> cand_gain, cand_act;
  for (std::size_t k = 0; k < n; ++k) {
    if (k == link_index || activity[k] <= 0) continue;
    cand.push_back(static_cast<std::uint32_t>(k));
    cand_gain.push_back(
        path_loss(toroidal_distance(net.links[k].tx, rx, net.window_side), alpha));
    cand_act.push_back(activity[k]);
  }

  // Addressed draws: position (sample s, link k) always consumes the same
  // variate regardless of which other links happen to be active, so two
  // estimates sharing a stream differ only through the parameters.
  const std::uint64_t key_act = split_key(stream.key(), 1);
  const std::uint64_t key_fad = split_key(stream.key(), 2);
  const std::uint64_t key_own = split_key(stream.key(), 3);

  std::uint64_t hits = 0;
  for (std::uint64_t s = 0; s < mc_samples; ++s) {
    double interf = 0;
    const std::uint64_t base = s * n;
    for (std::size_t j = 0; j < cand.size(); ++j) {
      const std::uint64_t idx = base + cand[j];
      if (draw_unit(key_act, idx) < cand_act[j]) {
        const double h = fading ? -std::log(draw_unit_open(key_fad, idx)) : 1.0;
        interf += h * cand_gain[j];
      }
    }
    const double h_own = fading ? -std::log(draw_unit_open(key_own, s)) : 1.0;
    const double denom = noise + interf;
    const bool ok = denom == 0 ? true : (h_own * own_gain / denom >= theta);
    hits += ok;
  }

  SuccessProbEstimate est;
  est.samples = mc_samples;
  est.value = static_cast<double>(hits) / static_cast<double>(mc_samples);
  est.std_err = std::sqrt(est.value * (1 - est.value) / static_cast<double>(mc_samples));
  return est;
}

}  // namespace udn
