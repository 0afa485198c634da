#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "gmdp/discretization.hpp"
#include "gmdp/mdp_core.hpp"
#include "gmdp/rng.hpp"

namespace gmdp {

// Rows are (1 - lambda) * point mass on a random state + lambda * uniform;
// rewards are uniform on [0,1]. Any two rows overlap by at least lambda.
inline FiniteMdp generate_random_mdp(int S, int A, double lambda, std::uint64_t seed) {
  if (S < 1 || A < 1) throw InvalidInput("generate_random_mdp: S and A must be positive");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw InvalidInput("generate_random_mdp: lambda must be in [0,1]");
  Stream rng(seed, stream_id::generator);
  FiniteMdp mdp(S, A);
  for (int s = 0; s < S; ++s)
    for (int a = 0; a < A; ++a) {
      int target = static_cast<int>(rng.uniform_index(S));
      double* row = mdp.row(s, a);
      for (int s2 = 0; s2 < S; ++s2) row[s2] = lambda / S;
      row[target] += 1.0 - lambda;
      mdp.r(s, a) = rng.uniform();
    }
  return mdp;
}

// Two states, actions {stay, go}. Kernel 0.9 * deterministic + 0.1 * uniform.
inline FiniteMdp fixture_m2() {
  FiniteMdp m(2, 2);
  constexpr int stay = 0, go = 1;
  m.r(0, stay) = 0.0;
  m.r(0, go) = 0.5;
  m.r(1, stay) = 1.0;
  m.r(1, go) = 1.0;
  auto set = [&](int s, int a, int target) {
    for (int s2 = 0; s2 < 2; ++s2) m.p(s, a, s2) = 0.05 + (s2 == target ? 0.9 : 0.0);
  };
  set(0, stay, 0);
  set(0, go, 1);
  set(1, stay, 1);
  set(1, go, 1);
  return m;
}

// Six-state river chain, actions {left, right}, mixed 0.9 / 0.1 with uniform.
// Left moves one state left deterministically. Right moves right w.p. 0.35,
// stays w.p. 0.6 and slips left w.p. 0.05 in the interior; at the left bank it
// moves right w.p. 0.6 (else stays), at the right bank it stays w.p. 0.6 (else
// slips left). Rewards: 0.005 for left at state 0, 1 for right at state 5.
inline FiniteMdp fixture_riverswim6() {
  constexpr int S = 6, left = 0, right = 1;
  FiniteMdp base(S, 2);
  for (int s = 0; s < S; ++s) {
    base.p(s, left, std::max(s - 1, 0)) = 1.0;
    if (s == 0) {
      base.p(s, right, 0) = 0.4;
      base.p(s, right, 1) = 0.6;
    } else if (s == S - 1) {
      base.p(s, right, S - 2) = 0.4;
      base.p(s, right, S - 1) = 0.6;
    } else {
      base.p(s, right, s - 1) = 0.05;
      base.p(s, right, s) = 0.6;
      base.p(s, right, s + 1) = 0.35;
    }
  }
  base.r(0, left) = 0.005;
  base.r(S - 1, right) = 1.0;
  FiniteMdp m = base;
  for (std::size_t i = 0; i < m.kernel.size(); ++i) m.kernel[i] = 0.9 * base.kernel[i] + 0.1 / S;
  return m;
}

inline CompactMdpSpec fixture_compact_d1() { return make_holder_family(1, 2, 1.0, 0); }

using Fixture = std::variant<FiniteMdp, CompactMdpSpec>;

inline Fixture fixture(const std::string& name) {
  if (name == "M2") return fixture_m2();
  if (name == "riverswim6") return fixture_riverswim6();
  if (name == "compactD1") return fixture_compact_d1();
  throw InvalidInput("unknown fixture: " + name);
}

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double t_lo = 0.0;
  double t_hi = 0.0;
  double residual = 0.0;  // RMS of log-space residuals
  std::size_t points = 0;
};

// Least-squares slope of log(value) against log(t) over t in [t_lo, t_hi].
inline SlopeFit fit_loglog_slope(const std::vector<double>& t, const std::vector<double>& value, double t_lo,
                                 double t_hi) {
  if (t.size() != value.size()) throw InvalidInput("fit_loglog_slope: length mismatch");
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] < t_lo || t[i] > t_hi) continue;
    if (!(value[i] > 0.0) || !(t[i] > 0.0)) throw InvalidInput("fit_loglog_slope: non-positive value in window");
    xs.push_back(std::log(t[i]));
    ys.push_back(std::log(value[i]));
  }
  if (xs.size() < 2) throw InvalidInput("fit_loglog_slope: fewer than two points in window");
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (sxx == 0.0) throw InvalidInput("fit_loglog_slope: window spans a single t");
  SlopeFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double rss = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    double e = ys[i] - (f.intercept + f.slope * xs[i]);
    rss += e * e;
  }
  f.residual = std::sqrt(rss / n);
  f.t_lo = t_lo;
  f.t_hi = t_hi;
  f.points = xs.size();
  return f;
}

// Log-spaced sample of t in [1, n] (inclusive), useful for thinning long traces.
inline std::vector<long long> log_grid(long long n, int per_decade = 40) {
  std::vector<long long> out;
  double step = std::pow(10.0, 1.0 / per_decade);
  double x = 1.0;
  while (x <= static_cast<double>(n)) {
    long long v = static_cast<long long>(std::llround(x));
    if (out.empty() || v != out.back()) out.push_back(v);
    x *= step;
  }
  if (out.empty() || out.back() != n) out.push_back(n);
  return out;
}

}  // namespace gmdp
