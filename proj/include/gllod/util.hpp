#pragma once
// Small shared utilities: a reproducible RNG, worker-count resolution,
// a static-partition parallel_for, and FNV-1a hashing for config/file hashes.

#include <complex>
#include <cstdint>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>
#include <functional>

namespace gllod {

// Deterministic RNG. splitmix64 core with an explicit uint64->double mapping,
// so streams are bitwise reproducible across platforms and standard libraries
// (std::uniform_real_distribution is implementation-defined).
struct Rng {
  std::uint64_t state;

  explicit Rng(std::uint64_t seed) : state(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // uniform in [0,1): top 53 bits scaled by 2^-53
  double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  // uniform complex in the closed unit disc as r*e^{i theta},
  // r ~ U[0,1], theta ~ U[-pi, pi)  (draw order: r first, then theta)
  std::complex<double> unit_disc() {
    double r = uniform();
    double th = uniform(-3.14159265358979323846, 3.14159265358979323846);
    return {r * std::cos(th), r * std::sin(th)};
  }
};

// Worker count: GLLOD_WORKERS if set and positive, else hardware concurrency.
inline int worker_count() {
  if (const char* env = std::getenv("GLLOD_WORKERS")) {
    int w = std::atoi(env);
    if (w > 0) return w;
  }
  unsigned hc = std::thread::hardware_concurrency();
  return hc > 0 ? int(hc) : 1;
}

// Static-partition parallel loop. Work items must write to disjoint locations;
// the partition does not affect results, so any worker count is deterministic.
inline void parallel_for(std::int64_t n, const std::function<void(std::int64_t, std::int64_t)>& body,
                         int workers = -1) {
  if (workers <= 0) workers = worker_count();
  if (workers <= 1 || n < 2) {
    if (n > 0) body(0, n);
    return;
  }
  int k = int(std::min<std::int64_t>(workers, n));
  std::vector<std::thread> pool;
  pool.reserve(k - 1);
  std::int64_t chunk = (n + k - 1) / k;
  for (int t = 1; t < k; ++t) {
    std::int64_t b = t * chunk, e = std::min<std::int64_t>(n, b + chunk);
    if (b >= e) break;
    pool.emplace_back([&body, b, e] { body(b, e); });
  }
  body(0, std::min<std::int64_t>(n, chunk));
  for (auto& th : pool) th.join();
}

// FNV-1a 64-bit, used for config hashes and reference-file keys.
inline std::uint64_t fnv1a(const void* data, std::size_t len, std::uint64_t h = 0xcbf29ce484222325ull) {
  const unsigned char* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::uint64_t fnv1a(const std::string& s, std::uint64_t h = 0xcbf29ce484222325ull) {
  return fnv1a(s.data(), s.size(), h);
}

}  // namespace gllod
