#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

namespace qf {

using cplx = std::complex<double>;
using cmat = Eigen::MatrixXcd;
using cvec = Eigen::VectorXcd;
using rvec = Eigen::VectorXd;
using rmat = Eigen::MatrixXd;

// Error taxonomy maps onto process exit codes: argument/precondition 2,
// capacity 3, stochastic 4.
struct error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct argument_error : error {
  using error::error;
};
struct domain_error : argument_error {
  using argument_error::argument_error;
};
struct singularity_error : argument_error {
  using argument_error::argument_error;
};
struct unsupported_state_error : argument_error {
  using argument_error::argument_error;
};
struct precondition_error : argument_error {
  using argument_error::argument_error;
};
struct capacity_error : error {
  using error::error;
};
struct stochastic_error : error {
  using error::error;
};

// Default eigen-tolerance for validation; individual calls accept overrides.
inline constexpr double kEigTol = 1e-9;
// Dense operators cap out at 2^12 = 4096.
inline constexpr int kMaxQubits = 12;

inline int pow2(int n) { return 1 << n; }
inline std::int64_t pow4(int n) { return std::int64_t(1) << (2 * n); }

// Non-negative integer power by repeated multiplication. Noise scalings use
// this instead of std::pow so that composing channels multiplies the exact
// same factors and identities like "apply rho then rho'" stay reproducible.
inline double int_pow(double x, int k) {
  double acc = 1.0;
  for (int i = 0; i < k; ++i) acc *= x;
  return acc;
}

// ---------------------------------------------------------------------------
// Counter-based RNG: value i of stream s is a pure function of (seed, s, i),
// so parallel consumers never contend and replays are exact.

inline std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t mix3(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  return splitmix64(splitmix64(splitmix64(a) ^ b) ^ c);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt) {
  return splitmix64(seed ^ splitmix64(salt));
}

struct CounterRng {
  std::uint64_t seed = 0;

  // uniform on (0,1); never returns an endpoint
  double uniform(std::uint64_t stream, std::uint64_t counter) const {
    const std::uint64_t bits = mix3(seed, stream, counter);
    return (double(bits >> 11) + 0.5) * 0x1.0p-53;
  }

  // standard normal via Box-Muller; consumes uniforms 2i and 2i+1 of the stream
  double normal(std::uint64_t stream, std::uint64_t counter) const {
    const double u1 = uniform(stream, 2 * counter);
    const double u2 = uniform(stream, 2 * counter + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
  }
};

// ---------------------------------------------------------------------------
// Deterministic parallel reduction: work is cut into fixed-size blocks and the
// per-block partials are folded in block order, so the result is independent
// of the worker count.

int resolve_threads(int requested);  // 0 -> QFOURIER_THREADS or hardware

inline constexpr std::int64_t kMcBlock = 4096;

template <typename Part, typename BlockFn, typename FoldFn>
Part blocked_reduce(std::int64_t total, int threads, const Part& init,
                    BlockFn block_fn, FoldFn fold) {
  if (total <= 0) return init;
  const std::int64_t nblocks = (total + kMcBlock - 1) / kMcBlock;
  std::vector<Part> parts(static_cast<std::size_t>(nblocks), init);
  const int nw = std::max<int>(1, static_cast<int>(std::min<std::int64_t>(resolve_threads(threads), nblocks)));
  std::atomic<std::int64_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::int64_t b = next.fetch_add(1);
      if (b >= nblocks) return;
      const std::int64_t lo = b * kMcBlock;
      const std::int64_t hi = std::min(total, lo + kMcBlock);
      parts[static_cast<std::size_t>(b)] = block_fn(b, lo, hi);
    }
  };
  if (nw == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(nw));
    for (int w = 0; w < nw; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  Part acc = init;
  for (const auto& p : parts) acc = fold(acc, p);
  return acc;
}

}  // namespace qf
