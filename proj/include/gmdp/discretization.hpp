#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <vector>

#include "gmdp/mdp_core.hpp"
#include "gmdp/rng.hpp"

namespace gmdp {

// Uniform grid of cell centers on [0,1]^D. Point i has per-axis indices given
// by the base-n digits of i, lowest axis first.
struct Net {
  int D = 1;
  int n = 1;
  std::size_t k = 1;  // n^D
  std::vector<double> points;

  double width() const { return 1.0 / n; }
  std::span<const double> point(std::size_t i) const { return {points.data() + i * D, static_cast<std::size_t>(D)}; }
  double covering_radius() const { return std::sqrt(static_cast<double>(D)) / (2.0 * n); }
};

inline Net build_uniform_net(int D, int n, std::size_t cap = 1000000) {
  if (D < 1 || n < 1) throw InvalidInput("build_uniform_net: D and n must be positive");
  double size = std::pow(static_cast<double>(n), D);
  if (size > static_cast<double>(cap)) throw InvalidInput("build_uniform_net: n^D exceeds the cap");
  Net net;
  net.D = D;
  net.n = n;
  net.k = static_cast<std::size_t>(std::llround(size));
  net.points.resize(net.k * D);
  for (std::size_t i = 0; i < net.k; ++i) {
    std::size_t rem = i;
    for (int d = 0; d < D; ++d) {
      net.points[i * D + d] = (static_cast<double>(rem % n) + 0.5) / n;
      rem /= n;
    }
  }
  return net;
}

// Cell of x under half-open boxes [i/n, (i+1)/n), with the last cell closed.
inline std::size_t quantize(const Net& net, std::span<const double> x) {
  if (static_cast<int>(x.size()) != net.D) throw InvalidInput("quantize: dimension mismatch");
  std::size_t idx = 0, stride = 1;
  for (int d = 0; d < net.D; ++d) {
    double v = x[d];
    if (!(v >= 0.0 && v <= 1.0)) throw InvalidInput("quantize: point outside the unit cube");
    auto c = static_cast<std::size_t>(std::floor(v * net.n));
    if (c >= static_cast<std::size_t>(net.n)) c = net.n - 1;
    idx += c * stride;
    stride *= net.n;
  }
  return idx;
}

struct HolderParams {
  double L = 0.0;
  double alpha = 1.0;

  // L n^{-alpha}
  double term(int n) const { return L == 0.0 ? 0.0 : L * std::pow(static_cast<double>(n), -alpha); }
};

// Per-action kernel: with probability w(x) jump to `mode`, otherwise uniform on
// the cube. w(x) = w0 + amp * sin(2 pi <freq, x> + phase).
struct KernelPart {
  double w0 = 0.5;
  double amp = 0.0;
  std::vector<double> freq;
  double phase = 0.0;
  std::vector<double> mode;
};

// Per-action reward: base + height * exp(-|x - center|^2 / (2 width^2)).
struct RewardPart {
  double base = 0.0;
  double height = 0.0;
  std::vector<double> center;
  double width = 0.2;
};

struct CompactMdpSpec {
  int D = 1;
  int A = 1;
  double beta = 0.0;
  std::uint64_t seed = 0;
  std::vector<KernelPart> kernel;
  std::vector<RewardPart> reward_parts;
  double L_kernel = 0.0;
  double L_reward = 0.0;
  HolderParams cert;

  double weight(std::span<const double> x, int a) const {
    const auto& k = kernel[a];
    double dot = 0.0;
    for (int d = 0; d < D; ++d) dot += k.freq[d] * x[d];
    return k.w0 + k.amp * std::sin(2.0 * std::numbers::pi * dot + k.phase);
  }

  double reward(std::span<const double> x, int a) const {
    const auto& rp = reward_parts[a];
    double d2 = 0.0;
    for (int d = 0; d < D; ++d) d2 += (x[d] - rp.center[d]) * (x[d] - rp.center[d]);
    return rp.base + rp.height * std::exp(-d2 / (2.0 * rp.width * rp.width));
  }

  // Lipschitz constants of the closed-form families, recomputed from parameters.
  void certify() {
    L_kernel = 0.0;
    L_reward = 0.0;
    for (const auto& k : kernel) {
      double fn = 0.0;
      for (double f : k.freq) fn += f * f;
      L_kernel = std::max(L_kernel, std::abs(k.amp) * 2.0 * std::numbers::pi * std::sqrt(fn));
    }
    // Max slope of a Gaussian bump is height / (width * sqrt(e)).
    for (const auto& rp : reward_parts)
      L_reward = std::max(L_reward, rp.height / (rp.width * std::sqrt(std::numbers::e)));
    cert = HolderParams{std::max(L_kernel, L_reward), 1.0};
  }

  void validate() const {
    if (D < 1 || A < 1) throw InvalidInput("CompactMdpSpec: D and A must be positive");
    if (static_cast<int>(kernel.size()) != A || static_cast<int>(reward_parts.size()) != A)
      throw InvalidInput("CompactMdpSpec: per-action parameter count differs from A");
    for (const auto& k : kernel) {
      if (k.w0 - std::abs(k.amp) < 0.0 || k.w0 + std::abs(k.amp) > 1.0)
        throw InvalidInput("CompactMdpSpec: mixture weight leaves [0,1]");
      for (double m : k.mode)
        if (m < 0.0 || m > 1.0) throw InvalidInput("CompactMdpSpec: mode outside the unit cube");
    }
    for (const auto& rp : reward_parts)
      if (rp.base < 0.0 || rp.height < 0.0 || rp.base + rp.height > 1.0)
        throw InvalidInput("CompactMdpSpec: reward leaves [0,1]");
  }
};

inline CompactMdpSpec make_holder_family(int D, int A, double beta, std::uint64_t seed) {
  if (D < 1 || A < 1) throw InvalidInput("make_holder_family: D and A must be positive");
  if (beta < 0.0) throw InvalidInput("make_holder_family: beta must be nonnegative");
  Stream rng(seed, stream_id::family);
  CompactMdpSpec spec;
  spec.D = D;
  spec.A = A;
  spec.beta = beta;
  spec.seed = seed;
  for (int a = 0; a < A; ++a) {
    KernelPart k;
    k.w0 = 0.35 + 0.3 * rng.uniform();
    k.freq.resize(D);
    double fn = 0.0;
    for (int d = 0; d < D; ++d) {
      k.freq[d] = 1.0 + static_cast<double>(rng.uniform_index(2));
      fn += k.freq[d] * k.freq[d];
    }
    k.amp = std::min(0.3, beta / (2.0 * std::numbers::pi * std::sqrt(fn)));
    k.phase = 2.0 * std::numbers::pi * rng.uniform();
    k.mode.resize(D);
    for (int d = 0; d < D; ++d) k.mode[d] = rng.uniform();
    spec.kernel.push_back(std::move(k));

    RewardPart rp;
    rp.width = 0.15 + 0.15 * rng.uniform();
    rp.center.resize(D);
    for (int d = 0; d < D; ++d) rp.center[d] = rng.uniform();
    rp.base = 0.05 + 0.3 * rng.uniform();
    rp.height = std::min(0.6, beta * rp.width * std::sqrt(std::numbers::e));
    spec.reward_parts.push_back(std::move(rp));
  }
  spec.certify();
  spec.validate();
  return spec;
}

// Total variation distance between p(.|x,a) and p(.|x',a). Both are mixtures of
// the same point mass and the same uniform law, which are mutually singular.
inline double tvd(const CompactMdpSpec& spec, std::span<const double> x, std::span<const double> x2, int a) {
  return std::abs(spec.weight(x, a) - spec.weight(x2, a));
}

inline std::vector<double> sample_compact(const CompactMdpSpec& spec, std::span<const double> x, int a, Stream& rng) {
  double w = spec.weight(x, a);
  std::vector<double> out(spec.D);
  if (rng.uniform() < w) {
    out = spec.kernel[a].mode;
  } else {
    for (int d = 0; d < spec.D; ++d) out[d] = rng.uniform();
  }
  return out;
}

// The finite MDP seen through the net: cell probabilities of the successor law
// at each net point, rewards at net points.
inline FiniteMdp discretize(const CompactMdpSpec& spec, const Net& net) {
  if (spec.D != net.D) throw InvalidInput("discretize: dimension mismatch");
  const int S = static_cast<int>(net.k);
  FiniteMdp mdp(S, spec.A);
  const double u = 1.0 / static_cast<double>(net.k);
  for (int a = 0; a < spec.A; ++a) {
    std::size_t mode_cell = quantize(net, spec.kernel[a].mode);
    for (int s = 0; s < S; ++s) {
      auto x = net.point(s);
      double w = spec.weight(x, a);
      double* row = mdp.row(s, a);
      for (int s2 = 0; s2 < S; ++s2) row[s2] = (1.0 - w) * u;
      row[mode_cell] += w;
      mdp.r(s, a) = spec.reward(x, a);
    }
  }
  return mdp;
}

}  // namespace gmdp
