#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "udn/config.hpp"
#include "udn/rng.hpp"

namespace udn {

struct Vec2 {
  double x = 0;
  double y = 0;
};

struct Link {
  Vec2 tx;
  Vec2 rx;
};

// One static deployment on the square torus [0, window_side)^2.
struct NetworkRealization {
  std::vector<Link> links;
  double window_side = 0;
  std::uint64_t realization_id = 0;

  std::size_t size() const noexcept { return links.size(); }
  bool empty() const noexcept { return links.empty(); }
};

// Transmitter count ~ Poisson(lambda * window_side^2), positions uniform,
// each receiver at link_distance in a uniform random direction, wrapped.
NetworkRealization sample_bipolar(const ValidatedConfig& cfg, RngStream& stream,
                                  std::uint64_t realization_id);

// Convenience: derives the geometry substream for the id and samples.
NetworkRealization sample_bipolar(const ValidatedConfig& cfg, std::uint64_t realization_id);

// Minimum-image Euclidean distance on the torus.
double toroidal_distance(Vec2 a, Vec2 b, double window_side) noexcept;

struct NearestInterferer {
  std::size_t index;
  double distance;
};

// Transmitter (other than the link's own) toroidally closest to the link's
// receiver; ties broken by lowest index. Empty on single-link realizations.
std::optional<NearestInterferer> nearest_interferer(std::size_t link_index,
                                                    const NetworkRealization& net);

void write_realization_csv(std::ostream& out, const NetworkRealization& net);
void write_realization_csv(std::ostream& out, std::span<const NetworkRealization> nets);

}  // namespace udn
