#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "gmdp/mdp_core.hpp"
#include "gmdp/oracles.hpp"
#include "gmdp/rng.hpp"

namespace gmdp {

struct FinitePlanConfig {
  int H = 1;
  double eps = 0.1;
  double delta = 0.1;
  // Multiplier on classical sample counts (m_k, l_k). 1 keeps the proof constants.
  double scale = 1.0;
  QuantumEmulationConfig qcfg;
  bool record_epochs = true;
};

struct EpochRecord {
  int k = 0;
  double eps_k = 0.0;
  long long m_k = 0;
  long long l_k = 0;
  double theta_k = 0.0;
  // Indexed [t-1][s*A + a].
  std::vector<ValueVec> mu_hat;
  std::vector<ValueVec> sigma;
  std::vector<ValueVec> beta_hat;
  std::vector<ValueVec> u;  // u^{(k)}_t after the epoch, [t-1][s]
  Policy pi;
};

struct Guarantee {
  double bound = 0.0;  // claimed V*_1 - V^pi_1 upper bound
  double delta = 0.0;
};

struct PlannerOutput {
  Policy policy;
  std::vector<ValueVec> u;
  std::vector<EpochRecord> epochs;
  Guarantee guarantee;
  unsigned long long classical_samples = 0;
  unsigned long long q_mean = 0;
  unsigned long long q_mean_multi = 0;
  unsigned long long q_max_inner = 0;
  // Emulated calls whose a-priori accuracy target was looser than the
  // algorithm needed (only possible when the span assumption fails).
  int contract_misses = 0;
};

namespace detail {

struct LedgerMark {
  unsigned long long c, qm, qmm, qx;
  explicit LedgerMark(const QueryLedger& l)
      : c(l.total(OracleKind::classical_sample)),
        qm(l.total(OracleKind::q_mean)),
        qmm(l.total(OracleKind::q_mean_multi)),
        qx(l.total(OracleKind::q_max_inner)) {}
  void fill(const QueryLedger& l, PlannerOutput& out) const {
    out.classical_samples = l.total(OracleKind::classical_sample) - c;
    out.q_mean = l.total(OracleKind::q_mean) - qm;
    out.q_mean_multi = l.total(OracleKind::q_mean_multi) - qmm;
    out.q_max_inner = l.total(OracleKind::q_max_inner) - qx;
  }
};

inline void check_plan_config(const FinitePlanConfig& cfg) {
  if (cfg.H < 1) throw InvalidInput("planner: H must be >= 1");
  if (!(cfg.eps > 0.0)) throw InvalidInput("planner: eps must be positive");
  if (!(cfg.delta > 0.0 && cfg.delta < 1.0)) throw InvalidInput("planner: delta must be in (0,1)");
  if (!(cfg.scale > 0.0)) throw InvalidInput("planner: scale must be positive");
}

inline int epoch_count(int H, double eps) {
  double k = std::ceil(std::log2(static_cast<double>(H) / eps));
  return k < 0.0 ? 0 : static_cast<int>(k);
}

inline long long scaled_count(double scale, double raw) {
  return std::max<long long>(1, static_cast<long long>(std::ceil(scale * raw)));
}

// u_H = max_a r with the argmax rule; every earlier step starts at 0 with action 0.
template <class Env>
void initial_values(const Env& env, int H, double terminal_shift, std::vector<ValueVec>& u, Policy& pi) {
  const int S = env.num_states(), A = env.num_actions();
  u.assign(H, ValueVec(S, 0.0));
  pi.assign(H, DecisionRule::constant(S, 0));
  std::vector<double> q(A);
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) q[a] = env.reward(s, a);
    int best = argmax_lowest(q.data(), A);
    u[H - 1][s] = q[best] - terminal_shift;
    pi[H - 1].actions[s] = best;
  }
}

}  // namespace detail

// Per-epoch constants of the classical planner.
struct ClassicalSchedule {
  int K = 0;
  std::vector<double> eps_k;
  std::vector<long long> m;
  std::vector<long long> l;
  std::vector<double> theta;
};

inline ClassicalSchedule classical_schedule(int H, int S, int A, double eps, double delta, double scale) {
  ClassicalSchedule sc;
  sc.K = detail::epoch_count(H, eps);
  if (sc.K == 0) return sc;
  const double HSAK = static_cast<double>(H) * S * A * sc.K;
  const double log_m = std::log(16.0 * HSAK / delta);
  const double log_l = std::log(4.0 * HSAK / delta);
  for (int k = 1; k <= sc.K; ++k) {
    double ek = H / std::ldexp(1.0, k);
    long long m = detail::scaled_count(scale, 128.0 * H * H * H / std::min(ek * ek, 1.0) * log_m);
    sc.eps_k.push_back(ek);
    sc.m.push_back(m);
    sc.l.push_back(detail::scaled_count(scale, 512.0 * H * H * log_l));
    sc.theta.push_back(log_m / static_cast<double>(m));
  }
  return sc;
}

// Sum over epochs of (m_k + (H-1) l_k) S A.
inline unsigned long long classical_total_samples(const ClassicalSchedule& sc, int H, int S, int A) {
  unsigned long long total = 0;
  for (int k = 0; k < sc.K; ++k)
    total += static_cast<unsigned long long>(sc.m[k] + static_cast<long long>(H - 1) * sc.l[k]) * S * A;
  return total;
}

template <class Env>
PlannerOutput classical_backward_induction(const Env& env, const FinitePlanConfig& cfg, QueryLedger& ledger,
                                           Stream& rng) {
  detail::check_plan_config(cfg);
  const int H = cfg.H, S = env.num_states(), A = env.num_actions();
  const double Ln = env.holder_term();
  if (Ln > 1.0 / (16.0 * H)) throw HypothesisViolation("classical planner needs L n^-alpha <= 1/(16H)");
  detail::LedgerMark mark(ledger);
  PlannerOutput out;
  out.guarantee = {cfg.eps + 12.0 * Ln * H * H, cfg.delta};

  std::vector<ValueVec> u_prev;
  Policy pi_prev;
  detail::initial_values(env, H, 0.0, u_prev, pi_prev);
  const ClassicalSchedule sc = classical_schedule(H, S, A, cfg.eps, cfg.delta, cfg.scale);

  std::vector<long long> counts;
  std::vector<ValueVec> mu_hat(H, ValueVec(static_cast<std::size_t>(S) * A));
  std::vector<ValueVec> sigma(H, ValueVec(static_cast<std::size_t>(S) * A));
  std::vector<ValueVec> beta_hat(H, ValueVec(static_cast<std::size_t>(S) * A, 0.0));
  std::vector<double> q(A);

  for (int k = 1; k <= sc.K; ++k) {
    const double ek = sc.eps_k[k - 1];
    const long long m = sc.m[k - 1], l = sc.l[k - 1];
    const double theta = sc.theta[k - 1];
    const double mu_shift = (2.0 / 3.0 * theta + 2.0 * std::pow(2.0 * theta, 0.75) + Ln) * H;

    for (int s = 0; s < S; ++s)
      for (int a = 0; a < A; ++a) {
        sample_batch(env, s, a, m, ledger, rng, counts);
        for (int t = 0; t < H; ++t) {
          MeanVar mv = empirical_mean_var(u_prev[t], counts);
          std::size_t i = static_cast<std::size_t>(s) * A + a;
          sigma[t][i] = mv.var;
          mu_hat[t][i] = mv.mean - std::sqrt(2.0 * theta * mv.var) - mu_shift;
        }
      }

    std::vector<ValueVec> u_cur = u_prev;
    Policy pi_cur = pi_prev;
    ValueVec diff(S);
    for (int t = H - 1; t >= 1; --t) {
      // Step t+1 lives at index t.
      for (int s2 = 0; s2 < S; ++s2) diff[s2] = u_cur[t][s2] - u_prev[t][s2];
      for (int s = 0; s < S; ++s)
        for (int a = 0; a < A; ++a) {
          sample_batch(env, s, a, l, ledger, rng, counts);
          beta_hat[t][static_cast<std::size_t>(s) * A + a] =
              empirical_mean_var(diff, counts).mean - ek / (4.0 * H) - 1.5 * Ln * H;
        }
      for (int s = 0; s < S; ++s) {
        for (int a = 0; a < A; ++a) {
          std::size_t i = static_cast<std::size_t>(s) * A + a;
          q[a] = env.reward(s, a) + mu_hat[t][i] + beta_hat[t][i];
        }
        int best = argmax_lowest(q.data(), A);
        double val = q[best] - Ln;
        if (val > u_prev[t - 1][s]) {
          u_cur[t - 1][s] = val;
          pi_cur[t - 1].actions[s] = best;
        }
      }
    }
    u_prev = std::move(u_cur);
    pi_prev = std::move(pi_cur);
    if (cfg.record_epochs)
      out.epochs.push_back(EpochRecord{k, ek, m, l, theta, mu_hat, sigma, beta_hat, u_prev, pi_prev});
  }
  out.policy = std::move(pi_prev);
  out.u = std::move(u_prev);
  mark.fill(ledger, out);
  return out;
}

// Per-epoch accuracies and failure shares of the variance-reduced quantum planner.
struct ModernSchedule {
  int K = 0;
  std::vector<double> eps_k;
  std::vector<double> theta;
  std::vector<double> beta_acc;  // required |beta~ - beta| accuracy
  std::vector<double> beta_eps;  // relative accuracy passed to the mean oracle
  double delta_multi = 0.0;
  double delta_beta = 0.0;
};

// The difference u^(k) - u^(k-1) is assumed to have span at most 4 eps_k; the
// mean oracle's relative accuracy is set from that bound so that charges are
// data-independent.
inline ModernSchedule modern_schedule(int H, int S, int A, double eps, double delta, double Ln) {
  ModernSchedule sc;
  sc.K = detail::epoch_count(H, eps);
  if (sc.K == 0) return sc;
  const double SA = static_cast<double>(S) * A;
  sc.delta_multi = delta / (4.0 * sc.K * SA);
  sc.delta_beta = delta / (2.0 * sc.K * H * SA);
  for (int k = 1; k <= sc.K; ++k) {
    double ek = H / std::ldexp(1.0, k);
    double acc = std::max(ek / (4.0 * H) - Ln * H, ek / (16.0 * H));
    sc.eps_k.push_back(ek);
    sc.theta.push_back(std::min(ek, 1.0) / (20.0 * std::pow(H, 1.5)));
    sc.beta_acc.push_back(acc);
    sc.beta_eps.push_back(acc / (4.0 * ek));
  }
  return sc;
}

struct QuantumTotals {
  unsigned long long q_mean = 0;
  unsigned long long q_mean_multi = 0;
  unsigned long long q_max_inner = 0;
  unsigned long long oracle_queries() const { return q_mean + q_mean_multi; }
};

inline QuantumTotals modern_totals(const ModernSchedule& sc, int H, int S, int A, const QuantumEmulationConfig& q) {
  QuantumTotals t;
  const unsigned long long SA = static_cast<unsigned long long>(S) * A;
  for (int k = 0; k < sc.K; ++k) {
    double rel = sc.theta[k] / std::sqrt(static_cast<double>(H));
    t.q_mean_multi += 2ULL * SA * q_mean_multi_charge(H, rel, sc.delta_multi, q);
    t.q_mean += static_cast<unsigned long long>(H - 1) * SA * q_mean_charge(sc.beta_eps[k], sc.delta_beta, q);
  }
  return t;
}

template <class Env>
PlannerOutput quantum_modern_backward_induction(const Env& env, const FinitePlanConfig& cfg, QueryLedger& ledger,
                                                Stream& rng) {
  detail::check_plan_config(cfg);
  cfg.qcfg.validate();
  const int H = cfg.H, S = env.num_states(), A = env.num_actions();
  const double Ln = env.holder_term();
  if (Ln > 1.0 / (16.0 * H)) throw HypothesisViolation("quantum planner needs L n^-alpha <= 1/(16H)");
  detail::LedgerMark mark(ledger);
  PlannerOutput out;
  out.guarantee = {cfg.eps + 8.0 * Ln * H * H, cfg.delta};

  std::vector<ValueVec> u_prev;
  Policy pi_prev;
  detail::initial_values(env, H, 0.0, u_prev, pi_prev);
  const ModernSchedule sc = modern_schedule(H, S, A, cfg.eps, cfg.delta, Ln);

  std::vector<ValueVec> mu_hat(H, ValueVec(static_cast<std::size_t>(S) * A));
  std::vector<ValueVec> sigma(H, ValueVec(static_cast<std::size_t>(S) * A));
  std::vector<ValueVec> beta_hat(H, ValueVec(static_cast<std::size_t>(S) * A, 0.0));
  std::vector<ValueVec> centred(H, ValueVec(S));
  std::vector<double> q(A);
  const double sqrtH = std::sqrt(static_cast<double>(H));

  for (int k = 1; k <= sc.K; ++k) {
    const double ek = sc.eps_k[k - 1];
    const double theta = sc.theta[k - 1];
    const double rel = theta / sqrtH;
    for (int s = 0; s < S; ++s)
      for (int a = 0; a < A; ++a) {
        const double* p = env.distribution(s, a);
        std::vector<double> mu = emulated_q_mean_multi(u_prev, p, rel, sc.delta_multi, ledger, cfg.qcfg, rng);
        // Variances as means of (u_t - E u_t)^2; each lies in [0, H^2], so the
        // multivariate contract keeps every error within theta H^2 / 2.
        for (int t = 0; t < H; ++t) {
          double m = detail::dist_mean(p, u_prev[t]);
          for (int s2 = 0; s2 < S; ++s2) centred[t][s2] = (u_prev[t][s2] - m) * (u_prev[t][s2] - m);
        }
        std::vector<double> var = emulated_q_mean_multi(centred, p, rel, sc.delta_multi, ledger, cfg.qcfg, rng);
        double var_sum = 0.0;
        std::size_t i = static_cast<std::size_t>(s) * A + a;
        for (int t = 0; t < H; ++t) {
          sigma[t][i] = std::max(0.0, var[t]);
          var_sum += sigma[t][i];
        }
        double shift = theta * std::sqrt(var_sum / H) + (std::pow(theta, 1.5) + Ln) * H;
        for (int t = 0; t < H; ++t) mu_hat[t][i] = mu[t] - shift;
      }

    std::vector<ValueVec> u_cur = u_prev;
    Policy pi_cur = pi_prev;
    ValueVec diff(S);
    const double beta_shift = ek / (4.0 * H) + Ln * H;
    for (int t = H - 1; t >= 1; --t) {
      for (int s2 = 0; s2 < S; ++s2) diff[s2] = u_cur[t][s2] - u_prev[t][s2];
      const double sp = span(diff);
      if (sp * sc.beta_eps[k - 1] > sc.beta_acc[k - 1]) out.contract_misses += S * A;
      for (int s = 0; s < S; ++s)
        for (int a = 0; a < A; ++a) {
          double b = emulated_q_mean(diff, env.distribution(s, a), sc.beta_eps[k - 1], sc.delta_beta, ledger,
                                     cfg.qcfg, rng);
          beta_hat[t][static_cast<std::size_t>(s) * A + a] = b - beta_shift;
        }
      for (int s = 0; s < S; ++s) {
        for (int a = 0; a < A; ++a) {
          std::size_t i = static_cast<std::size_t>(s) * A + a;
          q[a] = env.reward(s, a) + mu_hat[t][i] + beta_hat[t][i];
        }
        int best = argmax_lowest(q.data(), A);
        double val = q[best] - Ln;
        if (val > u_prev[t - 1][s]) {
          u_cur[t - 1][s] = val;
          pi_cur[t - 1].actions[s] = best;
        }
      }
    }
    u_prev = std::move(u_cur);
    pi_prev = std::move(pi_cur);
    if (cfg.record_epochs)
      out.epochs.push_back(EpochRecord{k, ek, 0, 0, theta, mu_hat, sigma, beta_hat, u_prev, pi_prev});
  }
  out.policy = std::move(pi_prev);
  out.u = std::move(u_prev);
  mark.fill(ledger, out);
  return out;
}

// Failure shares and accuracy of the max-finding planner.
struct SimpleSchedule {
  double delta_max = 0.0;   // per max-finding call
  double delta_mean = 0.0;  // per mean-estimation unitary
  double mean_eps = 0.0;    // relative accuracy: eps/(2H) over a span of at most H
  unsigned long long outer = 0;
  unsigned long long inner = 0;
};

inline SimpleSchedule simple_schedule(int H, int S, int A, double eps, double delta, const QuantumEmulationConfig& q) {
  SimpleSchedule sc;
  sc.delta_max = delta / (static_cast<double>(H) * S);
  double lg = std::log(1.0 / sc.delta_max);
  sc.delta_mean = std::min(sc.delta_max, sc.delta_max * sc.delta_max / (A * lg * lg));
  sc.mean_eps = eps / (2.0 * H * H);
  sc.outer = q_max_charge(A, sc.delta_max, q);
  sc.inner = q_mean_charge(sc.mean_eps, sc.delta_mean, q);
  return sc;
}

inline QuantumTotals simple_totals(const SimpleSchedule& sc, int H, int S) {
  QuantumTotals t;
  const unsigned long long calls = static_cast<unsigned long long>(H - 1) * S;
  t.q_max_inner = calls * sc.outer;
  t.q_mean = calls * sc.outer * sc.inner;
  return t;
}

template <class Env>
PlannerOutput quantum_simple_backward_induction(const Env& env, const FinitePlanConfig& cfg, QueryLedger& ledger,
                                                Stream& rng) {
  detail::check_plan_config(cfg);
  cfg.qcfg.validate();
  const int H = cfg.H, S = env.num_states(), A = env.num_actions();
  const double Ln = env.holder_term();
  detail::LedgerMark mark(ledger);
  PlannerOutput out;
  out.guarantee = {cfg.eps + 2.0 * (1.0 + H) * H * Ln, cfg.delta};

  std::vector<ValueVec> u;
  Policy pi;
  detail::initial_values(env, H, Ln, u, pi);
  const SimpleSchedule sc = simple_schedule(H, S, A, cfg.eps, cfg.delta, cfg.qcfg);
  const double shift = cfg.eps / (2.0 * H) + (1.0 + H) * Ln;
  std::vector<double> vals(A);

  for (int t = H - 1; t >= 1; --t) {
    const ValueVec& next = u[t];
    if (span(next) * sc.mean_eps > cfg.eps / (2.0 * H)) out.contract_misses += S;
    for (int s = 0; s < S; ++s) {
      for (int a = 0; a < A; ++a)
        vals[a] = env.reward(s, a) + detail::noisy_mean(next, env.distribution(s, a), sc.mean_eps, cfg.qcfg.noise, rng);
      MaxResult mx = emulated_q_max(vals, sc.delta_max, ledger, cfg.qcfg, sc.inner, OracleKind::q_mean);
      double val = mx.value - shift;
      if (val <= next[s]) {
        u[t - 1][s] = next[s];
        pi[t - 1].actions[s] = pi[t].actions[s];
      } else {
        u[t - 1][s] = val;
        pi[t - 1].actions[s] = mx.index;
      }
    }
  }
  if (cfg.record_epochs) {
    EpochRecord rec;
    rec.k = 1;
    rec.eps_k = cfg.eps;
    rec.u = u;
    rec.pi = pi;
    out.epochs.push_back(std::move(rec));
  }
  out.policy = std::move(pi);
  out.u = std::move(u);
  mark.fill(ledger, out);
  return out;
}

}  // namespace gmdp
