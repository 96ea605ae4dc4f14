#include "udn/queuesim.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <ostream>

namespace udn {

double PerLinkStats::delivered_mean_delay() const {
  if (delays.empty()) return std::numeric_limits<double>::quiet_NaN();
  double s = 0;
  for (auto d : delays) s += d;
  return s / static_cast<double>(delays.size());
}

double PerLinkStats::delivered_delay_variance() const {
  if (delays.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  const double m = delivered_mean_delay();
  double s = 0;
  for (auto d : delays) {
    const double e = d - m;
    s += e * e;
  }
  return s / static_cast<double>(delays.size() - 1);
}

double PerLinkStats::horizon_mean_delay() const {
  if (arrivals == 0) return std::numeric_limits<double>::quiet_NaN();
  double s = residual_age_sum;
  for (auto d : delays) s += d;
  return s / static_cast<double>(arrivals);
}

std::uint64_t LinkStreamKeys::arrivals(std::uint64_t seed, std::uint64_t realization_id,
                                       std::size_t link) {
  return split_key(derive_key(seed, "arrivals", realization_id), link);
}

std::uint64_t LinkStreamKeys::access(std::uint64_t seed, std::uint64_t realization_id,
                                     std::size_t link) {
  return split_key(derive_key(seed, "access", realization_id), link);
}

std::uint64_t LinkStreamKeys::fading_base(std::uint64_t seed, std::uint64_t realization_id) {
  return derive_key(seed, "fading", realization_id);
}

std::uint64_t LinkStreamKeys::fading_pair(std::uint64_t fading_base, std::size_t n_links,
                                          std::size_t tx, std::size_t rx) {
  return mix64(fading_base ^ (rx * n_links + tx + 1));
}

SlotChannelDraw slot_fading(std::size_t n_links, std::uint64_t fading_base,
                            std::int64_t slot, FadingModel model) {
  if (model == FadingModel::None) return SlotChannelDraw::fixed_unit(n_links);
  SlotChannelDraw d;
  d.n = n_links;
  d.gain.resize(n_links * n_links);
  for (std::size_t rx = 0; rx < n_links; ++rx)
    for (std::size_t tx = 0; tx < n_links; ++tx)
      d.gain[rx * n_links + tx] =
          draw_exp(LinkStreamKeys::fading_pair(fading_base, n_links, tx, rx), slot);
  return d;
}

Simulator::Simulator(const ValidatedConfig& cfg, const NetworkRealization& net,
                     SystemVariant variant, const RunOptions& opt)
    : net_(net),
      variant_(variant),
      n_(net.size()),
      xi_(cfg->arrival_rate),
      p_(cfg->access_prob),
      theta_(cfg->sinr_threshold),
      noise_(cfg->noise_power),
      alpha_(cfg->path_loss_exponent),
      fading_(cfg->fading == FadingModel::Rayleigh),
      horizon_(opt.horizon >= 0 ? opt.horizon : cfg->horizon),
      stride_(opt.queue_sample_stride >= 0 ? opt.queue_sample_stride
                                           : cfg->queue_sample_stride),
      record_delays_(opt.record_delays) {
  if (!opt.observed.empty() && opt.observed.size() != n_)
    throw std::invalid_argument("Simulator: observed mask size mismatch");
  observed_ = opt.observed.empty() ? std::vector<std::uint8_t>(n_, 1) : opt.observed;

  gain_.resize(n_ * n_);
  for (std::size_t i = 0; i < n_; ++i) {
    const Vec2 rx = net.links[i].rx;
    for (std::size_t k = 0; k < n_; ++k)
      gain_[i * n_ + k] =
          path_loss(toroidal_distance(net.links[k].tx, rx, net.window_side), alpha_);
  }

  nearest_.assign(n_, static_cast<std::uint32_t>(n_));
  if (variant_ == SystemVariant::SimplifiedNearest) {
    for (std::size_t i = 0; i < n_; ++i)
      if (auto ni = nearest_interferer(i, net)) nearest_[i] = static_cast<std::uint32_t>(ni->index);
  }

  arr_key_.resize(n_);
  acc_key_.resize(n_);
  for (std::size_t i = 0; i < n_; ++i) {
    arr_key_[i] = LinkStreamKeys::arrivals(cfg->seed, net.realization_id, i);
    acc_key_[i] = LinkStreamKeys::access(cfg->seed, net.realization_id, i);
  }
  fad_base_ = LinkStreamKeys::fading_base(cfg->seed, net.realization_id);
  for (std::size_t i = 0; i < n_; ++i)
    if (!observed_[i]) { has_unobserved_ = true; break; }

  queues_.resize(n_);
  head_start_.assign(n_, 0);
  stats_.resize(n_);

  ev_.arrival.assign(n_, 0);
  ev_.interfering.assign(n_, 0);
  ev_.delivering.assign(n_, 0);
  ev_.success.assign(n_, 0);
}

double Simulator::pair_fade(std::size_t tx, std::size_t rx, std::int64_t t) const {
  if (!fading_) return 1.0;
  return draw_exp(LinkStreamKeys::fading_pair(fad_base_, n_, tx, rx),
                  static_cast<std::uint64_t>(t));
}

void Simulator::step_arrivals() {
  const std::int64_t t = slot_;
  if (variant_ == SystemVariant::Backlogged) {
    std::fill(ev_.arrival.begin(), ev_.arrival.end(), 0);
    return;
  }
  for (std::size_t i = 0; i < n_; ++i) {
    const bool a = draw_unit(arr_key_[i], static_cast<std::uint64_t>(t)) < xi_;
    ev_.arrival[i] = a;
    if (a) {
      queues_[i].fifo.push_back(t);
      ++queues_[i].arrivals;
      ++stats_[i].arrivals;
    }
  }
}

void Simulator::step_access() {
  const auto t = static_cast<std::uint64_t>(slot_);
  for (std::size_t i = 0; i < n_; ++i)
    ev_.interfering[i] = 0;  // reset; filled by the variant rules
  acc_scratch_.resize(n_);
  for (std::size_t i = 0; i < n_; ++i)
    acc_scratch_[i] = draw_unit(acc_key_[i], t) < p_;
}

bool Simulator::evaluate(std::size_t link, std::span<const std::uint32_t> interferers,
                         std::size_t skip_self) {
  const std::int64_t t = slot_;
  double denom = noise_;
  const double* grow = gain_.data() + link * n_;
  for (std::uint32_t k : interferers) {
    if (k == skip_self) continue;
    denom += pair_fade(k, link, t) * grow[k];
  }
  const double signal = pair_fade(link, link, t) * grow[link];
  const double sv = denom == 0 ? std::numeric_limits<double>::infinity() : signal / denom;
  return attempt_success(sv, theta_);
}

const SlotEvents& Simulator::step() {
  if (finished_) throw EngineFault("step() after finish()");
  const std::int64_t t = slot_;
  ev_.slot = t;

  step_arrivals();

  for (std::size_t i = 0; i < n_; ++i) {
    const bool busy = variant_ == SystemVariant::Backlogged || !queues_[i].fifo.empty();
    if (busy) ++stats_[i].busy_slots;
  }

  step_access();
  const auto& acc = acc_scratch_;

  std::fill(ev_.delivering.begin(), ev_.delivering.end(), 0);
  std::fill(ev_.success.begin(), ev_.success.end(), 0);

  switch (variant_) {
    case SystemVariant::Original: {
      active_.clear();
      for (std::size_t i = 0; i < n_; ++i) {
        const bool on = acc[i] && !queues_[i].fifo.empty();
        ev_.interfering[i] = on;
        ev_.delivering[i] = on;
        if (on) active_.push_back(static_cast<std::uint32_t>(i));
      }
      for (std::uint32_t i : active_)
        ev_.success[i] = evaluate(i, active_, i);
      break;
    }
    case SystemVariant::Dominant: {
      active_.clear();
      for (std::size_t i = 0; i < n_; ++i) {
        ev_.interfering[i] = acc[i];
        ev_.delivering[i] = acc[i] && !queues_[i].fifo.empty();
        if (acc[i]) active_.push_back(static_cast<std::uint32_t>(i));
      }
      for (std::uint32_t i : active_)
        if (ev_.delivering[i]) ev_.success[i] = evaluate(i, active_, i);
      break;
    }
    case SystemVariant::Backlogged: {
      active_.clear();
      for (std::size_t i = 0; i < n_; ++i) {
        ev_.interfering[i] = acc[i];
        ev_.delivering[i] = acc[i];
        if (acc[i]) active_.push_back(static_cast<std::uint32_t>(i));
      }
      for (std::uint32_t i : active_)
        ev_.success[i] = evaluate(i, active_, i);
      break;
    }
    case SystemVariant::FavorableDrop: {
      // Shadow activity: a link interferes only on a slot where a packet
      // arrived and access was drawn; that packet then leaves immediately.
      shadows_.clear();
      active_.clear();  // observed links attempting a real packet
      for (std::size_t i = 0; i < n_; ++i) {
        const bool shadow = ev_.arrival[i] && acc[i];
        if (shadow) shadows_.push_back(static_cast<std::uint32_t>(i));
        const bool deliver = observed_[i] && acc[i] && !queues_[i].fifo.empty();
        ev_.delivering[i] = deliver;
        if (deliver) active_.push_back(static_cast<std::uint32_t>(i));
        ev_.interfering[i] = shadow || deliver;
      }
      for (std::uint32_t i : active_)
        ev_.success[i] = evaluate(i, shadows_, i);
      // Unobserved links deliver or drop against the real observed
      // transmitters plus the other unobserved shadows.
      if (has_unobserved_) {
        dropper_eval_.clear();
        for (std::uint32_t k : shadows_)
          if (!observed_[k]) dropper_eval_.push_back(k);
        dropper_eval_.insert(dropper_eval_.end(), active_.begin(), active_.end());
        std::sort(dropper_eval_.begin(), dropper_eval_.end());
        for (std::uint32_t k : shadows_) {
          if (observed_[k]) continue;
          ev_.success[k] = evaluate(k, dropper_eval_, k);
        }
      }
      break;
    }
    case SystemVariant::SimplifiedNearest: {
      for (std::size_t i = 0; i < n_; ++i) {
        const bool deliver = observed_[i] && acc[i] && !queues_[i].fifo.empty();
        ev_.delivering[i] = deliver;
        ev_.interfering[i] = acc[i];  // nearest interferers are backlogged
      }
      for (std::size_t i = 0; i < n_; ++i) {
        if (!ev_.delivering[i]) continue;
        double denom = noise_;
        const std::uint32_t near = nearest_[i];
        if (near < n_ && acc[near])
          denom += pair_fade(near, i, slot_) * gain_[i * n_ + near];
        const double signal = pair_fade(i, i, slot_) * gain_[i * n_ + i];
        const double sv =
            denom == 0 ? std::numeric_limits<double>::infinity() : signal / denom;
        ev_.success[i] = attempt_success(sv, theta_);
      }
      break;
    }
  }

  // queue updates
  if (variant_ == SystemVariant::Backlogged) {
    for (std::size_t i = 0; i < n_; ++i) {
      if (!ev_.delivering[i]) continue;
      auto& q = queues_[i];
      auto& st = stats_[i];
      ++st.attempts;
      if (ev_.success[i]) {
        ++st.successes;
        ++st.delivered;
        ++q.delivered;
        if (record_delays_)
          st.delays.push_back(static_cast<std::uint32_t>(t - head_start_[i] + 1));
        head_start_[i] = t + 1;
        q.head_attempts = 0;
      } else {
        ++q.head_attempts;
      }
    }
  } else if (variant_ == SystemVariant::FavorableDrop) {
    for (std::size_t i = 0; i < n_; ++i) {
      auto& q = queues_[i];
      auto& st = stats_[i];
      if (observed_[i]) {
        if (!ev_.delivering[i]) continue;
        ++st.attempts;
        if (ev_.success[i]) {
          const std::int64_t arr = q.fifo.front();
          q.fifo.pop_front();
          ++st.successes;
          ++st.delivered;
          ++q.delivered;
          if (record_delays_)
            st.delays.push_back(static_cast<std::uint32_t>(t - arr + 1));
          q.head_attempts = 0;
        } else {
          ++q.head_attempts;
        }
      } else if (ev_.arrival[i]) {
        // one-slot packet lifetime: delivered on success, dropped otherwise
        q.fifo.pop_front();
        q.head_attempts = 0;
        const bool transmitted = acc[i];
        if (transmitted) ++st.attempts;
        if (transmitted && ev_.success[i]) {
          ++st.successes;
          ++st.delivered;
          ++q.delivered;
          if (record_delays_) st.delays.push_back(1);
        } else {
          ++st.dropped;
          ++q.dropped;
        }
      }
    }
  } else {
    for (std::size_t i = 0; i < n_; ++i) {
      if (!ev_.delivering[i]) continue;
      auto& q = queues_[i];
      auto& st = stats_[i];
      ++st.attempts;
      if (ev_.success[i]) {
        const std::int64_t arr = q.fifo.front();
        q.fifo.pop_front();
        ++st.successes;
        ++st.delivered;
        ++q.delivered;
        if (record_delays_)
          st.delays.push_back(static_cast<std::uint32_t>(t - arr + 1));
        q.head_attempts = 0;
      } else {
        ++q.head_attempts;
      }
    }
  }

  if (stride_ > 0 && (t + 1) % stride_ == 0)
    for (std::size_t i = 0; i < n_; ++i)
      stats_[i].queue_samples.push_back(static_cast<std::int64_t>(queues_[i].fifo.size()));

  ++slot_;
  return ev_;
}

void Simulator::verify_conservation() const {
  if (variant_ == SystemVariant::Backlogged) return;  // synthetic queues
  for (std::size_t i = 0; i < n_; ++i) {
    const auto& q = queues_[i];
    if (q.arrivals != q.fifo.size() + q.delivered + q.dropped)
      throw EngineFault("conservation breach at link " + std::to_string(i));
    if (variant_ != SystemVariant::FavorableDrop && q.dropped != 0)
      throw EngineFault("drops outside FavorableDrop at link " + std::to_string(i));
    for (std::size_t j = 1; j < q.fifo.size(); ++j)
      if (q.fifo[j - 1] > q.fifo[j])
        throw EngineFault("FIFO order breach at link " + std::to_string(i));
  }
}

std::vector<PerLinkStats> Simulator::finish() {
  if (finished_) throw EngineFault("finish() called twice");
  finished_ = true;
  const std::int64_t T = slot_;
  for (std::size_t i = 0; i < n_; ++i) {
    auto& st = stats_[i];
    st.final_queue_len = static_cast<std::int64_t>(queues_[i].fifo.size());
    for (const std::int64_t arr : queues_[i].fifo)
      st.residual_age_sum += static_cast<double>(T - arr);
    st.horizon = T;
    st.sample_stride = stride_;
  }
  return std::move(stats_);
}

std::vector<PerLinkStats> Simulator::run() {
  for (std::int64_t t = 0; t < horizon_; ++t) step();
  return finish();
}

std::vector<PerLinkStats> run_simulation(const ValidatedConfig& cfg,
                                         const NetworkRealization& net,
                                         SystemVariant variant, const RunOptions& opt) {
  Simulator sim(cfg, net, variant, opt);
  return sim.run();
}

LocalDelayStats local_delay_stats(const PerLinkStats& stats) {
  LocalDelayStats out;
  out.count = stats.delays.size();
  out.censored = stats.delays.empty();
  if (out.censored) {
    out.mean = std::numeric_limits<double>::quiet_NaN();
    out.variance = std::numeric_limits<double>::quiet_NaN();
    return out;
  }
  out.mean = stats.delivered_mean_delay();
  out.variance = stats.delays.size() < 2 ? 0.0 : stats.delivered_delay_variance();
  return out;
}

namespace {

void put_double(std::ostream& out, double v) {
  if (std::isnan(v)) {
    out << "nan";
    return;
  }
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw std::logic_error("double formatting failed");
  out.write(buf, end - buf);
}

}  // namespace

namespace {

void put_link_stats_rows(std::ostream& out, std::uint64_t realization_id,
                         std::span<const PerLinkStats> stats) {
  for (std::size_t i = 0; i < stats.size(); ++i) {
    const auto& s = stats[i];
    out << realization_id << ',' << i << ',' << s.delivered << ',' << s.dropped << ',';
    put_double(out, s.delivered_mean_delay());
    out << ',';
    put_double(out, s.delivered_delay_variance());
    out << ',' << (s.delivered == 0 ? 1 : 0) << ',' << s.final_queue_len << '\n';
  }
}

constexpr const char* kLinkStatsHeader =
    "realization_id,link_id,delivered,dropped,mean_delay,var_delay,"
    "censored_flag,final_queue_len\n";

}  // namespace

void write_link_stats_csv(std::ostream& out, std::uint64_t realization_id,
                          std::span<const PerLinkStats> stats) {
  out << kLinkStatsHeader;
  put_link_stats_rows(out, realization_id, stats);
}

void write_link_stats_csv(std::ostream& out,
                          std::span<const std::vector<PerLinkStats>> runs) {
  out << kLinkStatsHeader;
  for (std::size_t r = 0; r < runs.size(); ++r)
    put_link_stats_rows(out, r, runs[r]);
}

}  // namespace udn
