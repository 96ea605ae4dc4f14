#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "udn/config.hpp"
#include "udn/geometry.hpp"
#include "udn/queuesim.hpp"

namespace udn {

// Worker count resolution: explicit value if > 0, else UDN_WORKERS from the
// environment, else hardware concurrency. Never returns 0.
unsigned resolve_workers(long long requested);

// Runs fn(0..count-1) across at most `workers` threads. Tasks are claimed
// from an atomic counter; each index runs exactly once. The first exception
// is rethrown after all threads join. Results must be written to
// index-addressed slots so the output is independent of scheduling.
void parallel_for(std::size_t count, unsigned workers,
                  const std::function<void(std::size_t)>& fn);

// Realization ids 0..count-1 on independent geometry substreams.
std::vector<NetworkRealization> sample_ensemble(const ValidatedConfig& cfg,
                                                std::size_t count, unsigned workers = 1);

std::vector<std::vector<PerLinkStats>> run_ensemble(
    const ValidatedConfig& cfg, std::span<const NetworkRealization> realizations,
    SystemVariant variant, const RunOptions& opt = {}, unsigned workers = 1);

}  // namespace udn
