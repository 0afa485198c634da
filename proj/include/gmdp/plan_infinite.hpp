#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <vector>

#include "gmdp/mdp_core.hpp"
#include "gmdp/oracles.hpp"
#include "gmdp/rng.hpp"

namespace gmdp {

struct VIConfig {
  double eps = 0.1;
  double Lambda = 1.0;  // upper bound on sp(h*)
  double nu = 0.5;      // 1-stage span-contraction coefficient
  double delta = 0.1;
  double safety_factor = 10.0;
  double scale = 1.0;  // multiplier on classical m_t
  QuantumEmulationConfig qcfg;
  // Oracle-query allowance for the run. When the next sweep would exceed it,
  // the run stops early and reports `truncated`.
  std::optional<double> budget;

  double eps_u() const { return 0.25 * (1.0 - nu) * eps; }

  long long sweep_cap() const {
    double ratio = 0.0;
    if (nu > 0.0 && eps < 1.0) ratio = std::ceil(std::log(1.0 / eps) / std::log(1.0 / nu));
    return static_cast<long long>(std::ceil(safety_factor * std::max(1.0, ratio)));
  }

  double stop_threshold(double Ln) const { return 1.5 * eps + 18.0 * (1.0 + Lambda) * Ln / (1.0 - nu); }

  // A-priori bound on sp(u_t) along a successful run.
  double iterate_span_bound() const {
    return std::min(4.0 * Lambda + 3.0, nu < 1.0 ? 2.0 * Lambda / (1.0 - nu) : 4.0 * Lambda + 3.0);
  }

  void validate(double Ln) const {
    if (!(eps > 0.0)) throw InvalidInput("VIConfig: eps must be positive");
    if (!(delta > 0.0 && delta < 1.0)) throw InvalidInput("VIConfig: delta must be in (0,1)");
    if (!(nu >= 0.0 && nu < 1.0)) throw HypothesisViolation("VIConfig: nu must lie in [0,1)");
    if (Lambda < 0.0) throw InvalidInput("VIConfig: Lambda must be nonnegative");
    if (!(scale > 0.0) || !(safety_factor > 0.0)) throw InvalidInput("VIConfig: scale and safety factor must be positive");
    if (nu > 0.0 && eps > 2.0 / nu) throw HypothesisViolation("VIConfig: eps must not exceed 2/nu");
    if (nu > 0.0 && Ln > (1.0 - nu) / nu) throw HypothesisViolation("VIConfig: L n^-alpha exceeds (1-nu)/nu");
  }
};

struct VIOutput {
  DecisionRule rule;
  double gain = 0.0;                  // g^eps
  std::vector<double> span_history;   // sp(u_t - u_{t-1}), t = 1, 2, ...
  std::vector<double> iterate_span;   // sp(u_t), t = 1, 2, ...
  std::vector<double> backup_error;   // |u_{t+1} - L u_t|_inf on the net model, per sweep
  double initial_residual_span = 0.0;  // sp(L u_0 - u_0)
  long long sweeps = 0;
  long long cap = 0;
  double threshold = 0.0;
  bool truncated = false;
  // Quantum runs: sweeps whose iterate span exceeded the a-priori bound, so the
  // predicted cost no longer bounds the charge.
  int contract_misses = 0;
  unsigned long long classical_samples = 0;
  unsigned long long q_mean = 0;
  unsigned long long q_max_inner = 0;
};

class SweepCapExceeded : public ConvergenceFailure {
 public:
  using ConvergenceFailure::ConvergenceFailure;
};

// Pull values within eps_u/2 of the max down and push values within eps_u/2 of
// the min up. The max test is applied first.
inline ValueVec clip_update(const ValueVec& u, double eps_u) {
  if (u.empty()) throw InvalidInput("clip_update: empty input");
  auto [lo_it, hi_it] = std::minmax_element(u.begin(), u.end());
  const double lo = *lo_it, hi = *hi_it, half = 0.5 * eps_u;
  ValueVec out(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (u[i] >= hi - half)
      out[i] = std::max(hi - half, lo);
    else if (u[i] <= lo + half)
      out[i] = std::min(lo + half, hi);
    else
      out[i] = u[i];
  }
  return out;
}

inline long long classical_vi_samples(const VIConfig& cfg, long long t, int S, int A) {
  const double one_nu = 1.0 - cfg.nu;
  const double L1 = 1.0 + cfg.Lambda;
  const double factor = std::min(4.0 * L1 * L1, cfg.Lambda * cfg.Lambda / (one_nu * one_nu));
  const double lg = std::log(std::numbers::pi * std::numbers::pi * static_cast<double>(t) * t * S * A / (6.0 * cfg.delta));
  double raw = 512.0 / (one_nu * one_nu * cfg.eps * cfg.eps) * factor * lg;
  return std::max<long long>(1, static_cast<long long>(std::ceil(cfg.scale * raw)));
}

struct QuantumSweepCharge {
  double rel_eps = 0.0;
  double delta_max = 0.0;
  double delta_mean = 0.0;
  unsigned long long outer = 0;
  unsigned long long inner = 0;
};

// Mean accuracy eps_u/2 in absolute terms for a function of span `u_span`;
// the oracle's error is relative to the span, hence rel = (eps_u/2)/u_span.
// Without `u_span` the a-priori bound on sp(u_t) is used, which upper-bounds
// the charge of any sweep of a successful run.
inline QuantumSweepCharge quantum_vi_charge(const VIConfig& cfg, long long t, int S, int A,
                                            std::optional<double> u_span = std::nullopt) {
  QuantumSweepCharge c;
  const double B = u_span ? *u_span : cfg.iterate_span_bound();
  const double half = 0.5 * cfg.eps_u();
  c.rel_eps = B > half ? half / B : 1.0;
  c.delta_max = std::min(0.5, 6.0 * cfg.delta / (std::numbers::pi * std::numbers::pi * static_cast<double>(t) * t * S));
  double lg = std::log(1.0 / c.delta_max);
  c.delta_mean = std::min(c.delta_max, c.delta_max * c.delta_max / (A * lg * lg));
  c.outer = q_max_charge(A, c.delta_max, cfg.qcfg);
  c.inner = q_mean_charge(c.rel_eps, c.delta_mean, cfg.qcfg);
  return c;
}

// Sweep count after which the stopping rule is guaranteed to fire.
inline long long theoretical_sweeps(const VIConfig& cfg, double Ln) {
  if (cfg.nu <= 0.0) return 1;
  const double eu = cfg.eps_u();
  const double L1 = 1.0 + cfg.Lambda;
  double arg = (1.0 - cfg.nu) * (1.0 + 2.0 * eu + 8.0 * L1 * Ln) / (2.0 * eu + 2.0 * L1 * Ln);
  if (arg <= 1.0) return 1;
  return std::max<long long>(1, static_cast<long long>(std::ceil(std::log(arg) / std::log(1.0 / cfg.nu))));
}

inline double predicted_classical_vi_cost(const VIConfig& cfg, double Ln, int S, int A) {
  long long ts = theoretical_sweeps(cfg, Ln);
  double total = 0.0;
  for (long long t = 1; t <= ts; ++t) total += static_cast<double>(classical_vi_samples(cfg, t, S, A)) * S * A;
  return total;
}

inline double predicted_quantum_vi_cost(const VIConfig& cfg, double Ln, int S, int A) {
  long long ts = theoretical_sweeps(cfg, Ln);
  double total = 0.0;
  for (long long t = 1; t <= ts; ++t) {
    auto c = quantum_vi_charge(cfg, t, S, A);
    total += static_cast<double>(S) * c.outer * c.inner;
  }
  return total;
}

namespace detail {

template <class Env>
double exact_backup_error(const Env& env, const ValueVec& u, const ValueVec& next) {
  const int S = env.num_states(), A = env.num_actions();
  double err = 0.0;
  for (int s = 0; s < S; ++s) {
    double best = -std::numeric_limits<double>::infinity();
    for (int a = 0; a < A; ++a) best = std::max(best, env.reward(s, a) + dist_mean(env.distribution(s, a), u));
    err = std::max(err, std::abs(next[s] - best));
  }
  return err;
}

template <class Env>
void initial_vi(const Env& env, ValueVec& u, std::vector<int>& rule) {
  const int S = env.num_states(), A = env.num_actions();
  u.assign(S, 0.0);
  rule.assign(S, 0);
  std::vector<double> q(A);
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) q[a] = env.reward(s, a);
    rule[s] = argmax_lowest(q.data(), A);
    u[s] = q[rule[s]];
  }
}

// Shared loop. `backup` fills u_tilde and the greedy actions for sweep t and
// returns false if the budget does not allow the sweep.
template <class Env, class Backup>
VIOutput run_vi(const Env& env, const VIConfig& cfg, Backup&& backup) {
  const double Ln = env.holder_term();
  cfg.validate(Ln);
  const int S = env.num_states();
  VIOutput out;
  out.cap = cfg.sweep_cap();
  out.threshold = cfg.stop_threshold(Ln);

  ValueVec u_prev(S, 0.0), u;
  std::vector<int> rule;
  initial_vi(env, u, rule);
  out.initial_residual_span = span(u);
  out.span_history.push_back(span(difference(u, u_prev)));
  out.iterate_span.push_back(span(u));

  ValueVec u_tilde(S);
  std::vector<int> next_rule(S);
  long long t = 1;
  while (out.span_history.back() > out.threshold) {
    if (t > out.cap) throw SweepCapExceeded("value iteration exceeded its sweep cap");
    if (!backup(t, u, u_tilde, next_rule, out)) {
      out.truncated = true;
      break;
    }
    ValueVec next = clip_update(u_tilde, cfg.eps_u());
    out.backup_error.push_back(exact_backup_error(env, u, next));
    u_prev = std::move(u);
    u = std::move(next);
    rule = next_rule;
    ++t;
    out.span_history.push_back(span(difference(u, u_prev)));
    out.iterate_span.push_back(span(u));
  }
  out.sweeps = t - 1;
  ValueVec d = difference(u, u_prev);
  out.gain = 0.5 * (*std::max_element(d.begin(), d.end()) + *std::min_element(d.begin(), d.end()));
  out.rule = DecisionRule::deterministic(std::move(rule));
  return out;
}

}  // namespace detail

template <class Env>
VIOutput classical_value_iteration(const Env& env, const VIConfig& cfg, QueryLedger& ledger, Stream& rng) {
  const int S = env.num_states(), A = env.num_actions();
  std::vector<long long> counts;
  std::vector<double> q(A);
  ValueVec w(S);
  auto backup = [&](long long t, const ValueVec& u, ValueVec& u_tilde, std::vector<int>& acts, VIOutput& out) {
    const long long m = classical_vi_samples(cfg, t, S, A);
    const double cost = static_cast<double>(m) * S * A;
    if (cfg.budget && static_cast<double>(out.classical_samples) + cost > *cfg.budget) return false;
    // Centre at min u so the estimate's range is the span of u.
    const double lo = *std::min_element(u.begin(), u.end());
    for (int s2 = 0; s2 < S; ++s2) w[s2] = u[s2] - lo;
    for (int s = 0; s < S; ++s) {
      for (int a = 0; a < A; ++a) {
        sample_batch(env, s, a, m, ledger, rng, counts);
        q[a] = env.reward(s, a) + lo + empirical_mean_var(w, counts).mean;
      }
      acts[s] = argmax_lowest(q.data(), A);
      u_tilde[s] = q[acts[s]];
    }
    out.classical_samples += static_cast<unsigned long long>(cost);
    return true;
  };
  return detail::run_vi(env, cfg, backup);
}

template <class Env>
VIOutput quantum_value_iteration(const Env& env, const VIConfig& cfg, QueryLedger& ledger, Stream& rng) {
  cfg.qcfg.validate();
  const int S = env.num_states(), A = env.num_actions();
  std::vector<double> vals(A);
  auto backup = [&](long long t, const ValueVec& u, ValueVec& u_tilde, std::vector<int>& acts, VIOutput& out) {
    const QuantumSweepCharge c = quantum_vi_charge(cfg, t, S, A, span(u));
    const double cost = static_cast<double>(S) * c.outer * c.inner;
    if (cfg.budget && static_cast<double>(out.q_mean) + cost > *cfg.budget) return false;
    if (span(u) > cfg.iterate_span_bound() + 1e-9) ++out.contract_misses;
    for (int s = 0; s < S; ++s) {
      for (int a = 0; a < A; ++a)
        vals[a] = env.reward(s, a) + detail::noisy_mean(u, env.distribution(s, a), c.rel_eps, cfg.qcfg.noise, rng);
      MaxResult mx = emulated_q_max(vals, c.delta_max, ledger, cfg.qcfg, c.inner, OracleKind::q_mean);
      acts[s] = mx.index;
      u_tilde[s] = mx.value;
    }
    out.q_mean += static_cast<unsigned long long>(cost);
    out.q_max_inner += static_cast<unsigned long long>(S) * c.outer;
    return true;
  };
  return detail::run_vi(env, cfg, backup);
}

struct SpanCertificate {
  std::vector<double> bound;  // per t, for sp(u_{t+1} - u_t)
  bool holds = true;
  long long first_violation = -1;
};

// Bound nu^t (sp(N u_0 - u_0) + 2 eps) + 4 eps (1 - nu^t)/(1 - nu) for a
// sequence whose backups each err by at most eps in sup norm.
inline SpanCertificate robust_vi_span_certificate(const std::vector<double>& span_history, double eps, double nu,
                                                  double initial_residual_span, double tol = 1e-9) {
  SpanCertificate cert;
  for (std::size_t t = 0; t < span_history.size(); ++t) {
    double nut = std::pow(nu, static_cast<double>(t));
    double geo = nu < 1.0 ? (1.0 - nut) / (1.0 - nu) : static_cast<double>(t);
    double b = nut * (initial_residual_span + 2.0 * eps) + 4.0 * eps * geo;
    cert.bound.push_back(b);
    if (span_history[t] > b + tol && cert.holds) {
      cert.holds = false;
      cert.first_violation = static_cast<long long>(t);
    }
  }
  return cert;
}

}  // namespace gmdp
