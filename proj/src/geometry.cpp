#include "udn/geometry.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>
#include <stdexcept>

namespace udn {

NetworkRealization sample_bipolar(const ValidatedConfig& cfg, RngStream& stream,
                                  std::uint64_t realization_id) {
  const double L = cfg->window_side;
  const double mean_count = cfg->lambda * L * L;

  std::size_t count = 0;
  if (mean_count > 0) {
    std::poisson_distribution<long long> pois(mean_count);
    count = static_cast<std::size_t>(pois(stream));
  }

  NetworkRealization net;
  net.window_side = L;
  net.realization_id = realization_id;
  net.links.reserve(count);

  // fmod can land on L itself after the negative adjustment rounds up
  auto wrap = [L](double v) {
    v = std::fmod(v, L);
    if (v < 0) v += L;
    if (v >= L) v = 0;
    return v;
  };

  const double two_pi = 2.0 * std::acos(-1.0);
  for (std::size_t i = 0; i < count; ++i) {
    Vec2 tx{stream.uniform01() * L, stream.uniform01() * L};
    const double phi = stream.uniform01() * two_pi;
    Vec2 rx{wrap(tx.x + cfg->link_distance * std::cos(phi)),
            wrap(tx.y + cfg->link_distance * std::sin(phi))};
    net.links.push_back(Link{tx, rx});
  }
  return net;
}

NetworkRealization sample_bipolar(const ValidatedConfig& cfg, std::uint64_t realization_id) {
  RngStream stream = derive_stream(cfg->seed, "geometry", realization_id);
  return sample_bipolar(cfg, stream, realization_id);
}

double toroidal_distance(Vec2 a, Vec2 b, double window_side) noexcept {
  double dx = std::fabs(a.x - b.x);
  if (dx > window_side - dx) dx = window_side - dx;
  double dy = std::fabs(a.y - b.y);
  if (dy > window_side - dy) dy = window_side - dy;
  return std::sqrt(dx * dx + dy * dy);
}

std::optional<NearestInterferer> nearest_interferer(std::size_t link_index,
                                                    const NetworkRealization& net) {
  if (link_index >= net.size())
    throw std::out_of_range("nearest_interferer: link index out of range");
  const Vec2 rx = net.links[link_index].rx;
  std::optional<NearestInterferer> best;
  for (std::size_t k = 0; k < net.size(); ++k) {
    if (k == link_index) continue;
    const double d = toroidal_distance(net.links[k].tx, rx, net.window_side);
    if (!best || d < best->distance) best = NearestInterferer{k, d};
  }
  return best;
}

namespace {

void put_double(std::ostream& out, double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw std::logic_error("double formatting failed");
  out.write(buf, end - buf);
}

}  // namespace

namespace {

void put_realization_rows(std::ostream& out, const NetworkRealization& net) {
  for (std::size_t i = 0; i < net.size(); ++i) {
    out << net.realization_id << ',' << i << ',';
    put_double(out, net.links[i].tx.x);
    out << ',';
    put_double(out, net.links[i].tx.y);
    out << ',';
    put_double(out, net.links[i].rx.x);
    out << ',';
    put_double(out, net.links[i].rx.y);
    out << '\n';
  }
}

}  // namespace

void write_realization_csv(std::ostream& out, const NetworkRealization& net) {
  out << "realization_id,link_id,tx_x,tx_y,rx_x,rx_y\n";
  put_realization_rows(out, net);
}

void write_realization_csv(std::ostream& out, std::span<const NetworkRealization> nets) {
  out << "realization_id,link_id,tx_x,tx_y,rx_x,rx_y\n";
  for (const auto& net : nets) put_realization_rows(out, net);
}

}  // namespace udn
