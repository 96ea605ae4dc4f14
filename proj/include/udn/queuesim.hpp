#pragma once

#include <cstdint>
#include <deque>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "udn/config.hpp"
#include "udn/geometry.hpp"
#include "udn/phy.hpp"
#include "udn/rng.hpp"

namespace udn {

// Raised on an internal invariant breach; distinct from user errors.
class EngineFault : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

struct LinkQueueState {
  std::deque<std::int64_t> fifo;  // packet arrival slots, nondecreasing
  std::uint32_t head_attempts = 0;
  std::uint64_t arrivals = 0;
  std::uint64_t delivered = 0;
  std::uint64_t dropped = 0;  // nonzero only for FavorableDrop interferers
};

struct PerLinkStats {
  std::vector<std::uint32_t> delays;  // arrival slot through success slot, inclusive
  std::uint64_t attempts = 0;         // real head-of-line transmissions (dummies excluded)
  std::uint64_t successes = 0;
  std::uint64_t arrivals = 0;
  std::uint64_t delivered = 0;
  std::uint64_t dropped = 0;
  std::vector<std::int64_t> queue_samples;  // queue length at each sampled slot end
  std::int64_t final_queue_len = 0;
  std::uint64_t busy_slots = 0;        // slots with a nonempty queue at the access draw
  double residual_age_sum = 0;         // ages of packets still queued at the horizon
  std::int64_t horizon = 0;
  std::int64_t sample_stride = 0;
  std::optional<bool> stable;          // filled by the stability module

  double delivered_mean_delay() const;      // NaN when nothing was delivered
  double delivered_delay_variance() const;  // sample variance, NaN below 2 deliveries
  // Mean over every arrived packet: delivered ones contribute their delay,
  // packets still queued contribute their age. This is what the cdf bounds
  // use; the coupled-variant orderings hold for it packet by packet.
  double horizon_mean_delay() const;
};

struct SlotEvents {
  std::int64_t slot = -1;
  std::vector<std::uint8_t> arrival;      // Bernoulli arrival landed this slot
  std::vector<std::uint8_t> interfering;  // emitted RF energy (dummies and droppers included)
  std::vector<std::uint8_t> delivering;   // attempted a real head-of-line packet
  std::vector<std::uint8_t> success;      // delivering and the attempt succeeded
};

struct RunOptions {
  std::int64_t horizon = -1;             // <0: take the config value
  std::int64_t queue_sample_stride = -1; // <0: take the config value; 0: no samples
  bool record_delays = true;
  // FavorableDrop / SimplifiedNearest: which links are measured as-is.
  // Empty means all. Unobserved links follow the variant's interferer rule.
  std::vector<std::uint8_t> observed;
};

// Stream addressing used by the engine, exposed so tests can re-derive any
// single draw. Arrival and access draws for (link, slot) are at counter
// position slot of the per-link key; fading for pair (tx -> rx) at slot t is
// draw_exp(fading_pair(...), t). The same addresses are used by every
// variant, which is what couples them draw-for-draw.
struct LinkStreamKeys {
  static std::uint64_t arrivals(std::uint64_t seed, std::uint64_t realization_id, std::size_t link);
  static std::uint64_t access(std::uint64_t seed, std::uint64_t realization_id, std::size_t link);
  static std::uint64_t fading_base(std::uint64_t seed, std::uint64_t realization_id);
  static std::uint64_t fading_pair(std::uint64_t fading_base, std::size_t n_links,
                                   std::size_t tx, std::size_t rx);
};

// The full fading table the engine addresses for one slot.
SlotChannelDraw slot_fading(std::size_t n_links, std::uint64_t fading_base,
                            std::int64_t slot, FadingModel model);

class Simulator {
 public:
  Simulator(const ValidatedConfig& cfg, const NetworkRealization& net,
            SystemVariant variant, const RunOptions& opt = {});

  // Advances one slot: arrivals, access, active set, fading, success,
  // queue updates, in that order.
  const SlotEvents& step();

  std::int64_t slot() const noexcept { return slot_; }
  std::size_t link_count() const noexcept { return n_; }
  const LinkQueueState& queue(std::size_t link) const { return queues_.at(link); }

  // Throws EngineFault if any per-link conservation count went inconsistent.
  void verify_conservation() const;

  // Harvests statistics for the slots stepped so far.
  std::vector<PerLinkStats> finish();

  // step() times horizon, then finish().
  std::vector<PerLinkStats> run();

 private:
  void step_arrivals();
  void step_access();
  bool evaluate(std::size_t link, std::span<const std::uint32_t> interferers,
                std::size_t skip_self);
  double pair_fade(std::size_t tx, std::size_t rx, std::int64_t t) const;

  const NetworkRealization& net_;
  SystemVariant variant_;
  std::size_t n_;
  double xi_, p_, theta_, noise_, alpha_;
  bool fading_;
  std::int64_t horizon_, stride_;
  bool record_delays_;
  std::vector<std::uint8_t> observed_;

  std::vector<double> gain_;           // gain_[i*n+k]: path gain tx k -> rx i
  std::vector<std::uint32_t> nearest_; // SimplifiedNearest; n_ marks "none"
  std::vector<std::uint64_t> arr_key_, acc_key_;
  std::uint64_t fad_base_;

  bool has_unobserved_ = false;

  std::vector<LinkQueueState> queues_;
  std::vector<std::int64_t> head_start_;  // Backlogged: first slot of current packet
  std::vector<PerLinkStats> stats_;
  std::vector<std::uint8_t> acc_scratch_;
  std::vector<std::uint32_t> active_;        // interferer scratch, ascending
  std::vector<std::uint32_t> shadows_;       // FavorableDrop dropper scratch, ascending
  std::vector<std::uint32_t> dropper_eval_;  // active set seen by unobserved droppers
  SlotEvents ev_;
  std::int64_t slot_ = 0;
  bool finished_ = false;
};

std::vector<PerLinkStats> run_simulation(const ValidatedConfig& cfg,
                                         const NetworkRealization& net,
                                         SystemVariant variant,
                                         const RunOptions& opt = {});

struct LocalDelayStats {
  double mean = 0;
  double variance = 0;
  bool censored = true;  // no success within the horizon
  std::uint64_t count = 0;
};

// Per-link time-to-success statistics from a Backlogged run.
LocalDelayStats local_delay_stats(const PerLinkStats& stats);

void write_link_stats_csv(std::ostream& out, std::uint64_t realization_id,
                          std::span<const PerLinkStats> stats);
// Ensemble variant: one header, realization ids 0..runs.size()-1.
void write_link_stats_csv(std::ostream& out,
                          std::span<const std::vector<PerLinkStats>> runs);

}  // namespace udn
