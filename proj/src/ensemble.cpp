#include "udn/ensemble.hpp"

#include <atomic>
#include <charconv>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>

namespace udn {

unsigned resolve_workers(long long requested) {
  if (requested > 0) return static_cast<unsigned>(requested);
  if (const char* env = std::getenv("UDN_WORKERS")) {
    long long v = 0;
    const char* end = env;
    while (*end) ++end;
    auto [ptr, ec] = std::from_chars(env, end, v);
    if (ec == std::errc() && ptr == end && v > 0) return static_cast<unsigned>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? hw : 1;
}

void parallel_for(std::size_t count, unsigned workers,
                  const std::function<void(std::size_t)>& fn) {
  if (count == 0) return;
  if (workers <= 1 || count == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  const unsigned nthreads = static_cast<unsigned>(
      std::min<std::size_t>(workers, count));
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mu;
  auto body = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(nthreads);
  for (unsigned t = 0; t < nthreads; ++t) pool.emplace_back(body);
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

std::vector<NetworkRealization> sample_ensemble(const ValidatedConfig& cfg,
                                                std::size_t count, unsigned workers) {
  std::vector<NetworkRealization> out(count);
  parallel_for(count, workers,
               [&](std::size_t i) { out[i] = sample_bipolar(cfg, i); });
  return out;
}

std::vector<std::vector<PerLinkStats>> run_ensemble(
    const ValidatedConfig& cfg, std::span<const NetworkRealization> realizations,
    SystemVariant variant, const RunOptions& opt, unsigned workers) {
  std::vector<std::vector<PerLinkStats>> out(realizations.size());
  parallel_for(realizations.size(), workers, [&](std::size_t i) {
    out[i] = run_simulation(cfg, realizations[i], variant, opt);
  });
  return out;
}

}  // namespace udn
