#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <vector>

#include "negmn/errors.hpp"
#include "negmn/special.hpp"

namespace negmn {

// Identifies one reproducible random stream. The same (seed, stream) pair
// yields the same draw sequence on any platform and under any thread count;
// parallel code derives one stream per independent task.
struct RngSpec {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
};

// Philox4x32-10 counter-based generator (verified against the published
// known-answer vectors in the tests). Key <- seed, counter high words <-
// stream, counter low words <- block index.
class CounterRng {
 public:
  explicit CounterRng(RngSpec spec)
      : key0_(std::uint32_t(spec.seed)),
        key1_(std::uint32_t(spec.seed >> 32)),
        s0_(std::uint32_t(spec.stream)),
        s1_(std::uint32_t(spec.stream >> 32)) {}

  std::uint64_t next_u64() {
    if (have_ == 0) refill();
    --have_;
    return buf_[have_];
  }

  // Uniform on the open interval (0,1); never returns 0 or 1, so logs are safe.
  double uniform() {
    return (double(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller (two uniforms per draw, no carried state).
  double normal() {
    double u1 = uniform(), u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  static void philox_block(std::uint32_t c0, std::uint32_t c1, std::uint32_t c2,
                           std::uint32_t c3, std::uint32_t k0, std::uint32_t k1,
                           std::uint32_t out[4]) {
    for (int round = 0; round < 10; ++round) {
      std::uint64_t p0 = std::uint64_t(0xD2511F53u) * c0;
      std::uint64_t p1 = std::uint64_t(0xCD9E8D57u) * c2;
      std::uint32_t hi0 = std::uint32_t(p0 >> 32), lo0 = std::uint32_t(p0);
      std::uint32_t hi1 = std::uint32_t(p1 >> 32), lo1 = std::uint32_t(p1);
      std::uint32_t n0 = hi1 ^ c1 ^ k0;
      std::uint32_t n1 = lo1;
      std::uint32_t n2 = hi0 ^ c3 ^ k1;
      std::uint32_t n3 = lo0;
      c0 = n0; c1 = n1; c2 = n2; c3 = n3;
      k0 += 0x9E3779B9u;
      k1 += 0xBB67AE85u;
    }
    out[0] = c0; out[1] = c1; out[2] = c2; out[3] = c3;
  }

 private:
  void refill() {
    std::uint32_t out[4];
    philox_block(std::uint32_t(block_), std::uint32_t(block_ >> 32), s0_, s1_,
                 key0_, key1_, out);
    ++block_;
    buf_[0] = (std::uint64_t(out[0]) << 32) | out[1];
    buf_[1] = (std::uint64_t(out[2]) << 32) | out[3];
    have_ = 2;
  }

  std::uint32_t key0_, key1_, s0_, s1_;
  std::uint64_t block_ = 0;
  std::uint64_t buf_[2] = {0, 0};
  int have_ = 0;
};

// Gamma(shape, scale 1) draw, Marsaglia-Tsang; shape < 1 handled by boosting.
inline double gamma_draw(CounterRng& rng, double shape) {
  if (!(shape > 0.0)) throw domain_error("gamma_draw: shape must be positive");
  if (shape < 1.0) {
    double u = rng.uniform();
    return gamma_draw(rng, shape + 1.0) * std::pow(u, 1.0 / shape);
  }
  double d = shape - 1.0 / 3.0;
  double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x = rng.normal();
    double t = 1.0 + c * x;
    if (t <= 0.0) continue;
    double v = t * t * t;
    double u = rng.uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

// log of a Gamma(shape, scale 1) draw; stays finite for tiny shapes where the
// linear-space draw would underflow.
inline double log_gamma_draw(CounterRng& rng, double shape) {
  if (!(shape > 0.0)) throw domain_error("log_gamma_draw: shape must be positive");
  if (shape < 0.02) {
    double u = rng.uniform();
    return std::log(gamma_draw(rng, shape + 1.0)) + std::log(u) / shape;
  }
  return std::log(gamma_draw(rng, shape));
}

// Dirichlet draw returned as log-coordinates (normalized log gammas).
inline void dirichlet_log_draw(CounterRng& rng, std::span<const double> alpha,
                               std::span<double> log_p) {
  double hi = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    log_p[i] = log_gamma_draw(rng, alpha[i]);
    hi = std::max(hi, log_p[i]);
  }
  double s = 0.0;
  for (std::size_t i = 0; i < alpha.size(); ++i) s += std::exp(log_p[i] - hi);
  double lse = hi + std::log(s);
  for (std::size_t i = 0; i < alpha.size(); ++i) log_p[i] -= lse;
}

// Index draw from an unnormalized probability vector.
inline int categorical(CounterRng& rng, std::span<const double> prob) {
  double total = 0.0;
  for (double q : prob) total += q;
  double u = rng.uniform() * total;
  double cum = 0.0;
  for (std::size_t i = 0; i + 1 < prob.size(); ++i) {
    cum += prob[i];
    if (u <= cum) return int(i);
  }
  return int(prob.size()) - 1;
}

// Negative binomial total: pmf(k) = Gamma(r+k)/(Gamma(r) k!) p0^r (1-p0)^k,
// sampled by CDF inversion with the pmf ratio recurrence.
inline std::int64_t negbin_draw(CounterRng& rng, double r, double p0) {
  if (!(r > 0.0) || !(p0 > 0.0) || !(p0 < 1.0))
    throw domain_error("negbin_draw: need r > 0 and p0 in (0,1)");
  double pdot = 1.0 - p0;
  double pmf = std::exp(r * std::log(p0));
  if (pmf == 0.0)
    throw numerical_error("negbin_draw: pmf(0) underflows for these parameters", pmf);
  double u = rng.uniform();
  double cum = pmf;
  std::int64_t k = 0;
  while (u > cum) {
    pmf *= pdot * (r + double(k)) / (double(k) + 1.0);
    ++k;
    cum += pmf;
    if (pmf == 0.0) break;  // numeric mass exhausted; cum ~ 1 here
  }
  return k;
}

}  // namespace negmn
