#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gmdp/mdp_core.hpp"
#include "gmdp/oracles.hpp"
#include "gmdp/plan_finite.hpp"
#include "gmdp/plan_infinite.hpp"
#include "gmdp/rng.hpp"

namespace gmdp {

enum class FiniteMode { classical, quantum_modern, quantum_simple, oracle_exact };
enum class InfiniteMode { classical, quantum, oracle_exact };

inline const char* to_string(FiniteMode m) {
  switch (m) {
    case FiniteMode::classical: return "classical";
    case FiniteMode::quantum_modern: return "quantum_modern";
    case FiniteMode::quantum_simple: return "quantum_simple";
    case FiniteMode::oracle_exact: return "oracle_exact";
  }
  return "unknown";
}

inline const char* to_string(InfiniteMode m) {
  switch (m) {
    case InfiniteMode::classical: return "classical";
    case InfiniteMode::quantum: return "quantum";
    case InfiniteMode::oracle_exact: return "oracle_exact";
  }
  return "unknown";
}

struct OnlineConfig {
  double delta = 0.1;
  double c_budget = 8.0;
  double scale = 1.0;  // classical sample-count multiplier passed to planners
  QuantumEmulationConfig qcfg;
  std::uint64_t seed = 0;
  bool record_steps = true;
  // Throw BudgetOverflow from the ledger instead of flagging the phase.
  bool strict = false;
  // Average-reward runs only.
  double Lambda = 1.0;
  double nu = 0.5;
};

struct StepRecord {
  long long t;
  int episode;
  int state;  // net cell of the current state
  int action;
  double reward;
};

struct EpisodeLog {
  int k = 0;
  long long t_start = 0;
  long long length = 0;
  bool refreshed = false;  // planner produced a new policy this episode
  bool attempted = false;  // a generative phase took place
  bool flagged = false;    // planner failed or was cut short
  std::string note;
  double eps_target = 0.0;
  double delta_share = 0.0;
  double budget = 0.0;
  unsigned long long queries = 0;
  int policy_id = 0;
  double rule_gain = std::numeric_limits<double>::quiet_NaN();  // min_x gain of the rule in force
  double initial_gap = std::numeric_limits<double>::quiet_NaN();  // V*_1 - V^pi_1 at x_1
};

// Cumulative regret series, one entry per exploration step. NaN marks a
// series that is undefined for the run type.
struct RegretTrace {
  std::vector<StepRecord> steps;
  std::vector<double> cum_inpath;
  std::vector<double> cum_expected;
  std::vector<double> cum_finiteH;
  std::vector<long long> episode_starts;  // step index (1-based t) of each episode start

  std::size_t size() const { return cum_inpath.size(); }
};

struct OracleBundle {
  std::optional<double> g_star;
  std::vector<double> episode_min_gain;   // per episode, average-reward runs
  std::vector<double> episode_opt_value;  // V*_1(x_1) per episode, finite-horizon runs
  std::vector<double> episode_gap;        // V*_1(x_1) - V^pi_1(x_1) per episode
};

// Fill the three cumulative regret series from a step log. Finite-horizon
// increments are booked at the first step of their episode.
inline RegretTrace compute_regrets(const std::vector<StepRecord>& raw, const OracleBundle& oracle, bool keep_steps = true) {
  const bool average = oracle.g_star.has_value();
  const bool episodic = !oracle.episode_gap.empty();
  if (!average && !episodic) throw InvalidInput("compute_regrets: no oracle values");
  const double nan = std::numeric_limits<double>::quiet_NaN();
  RegretTrace tr;
  tr.cum_inpath.reserve(raw.size());
  tr.cum_expected.reserve(raw.size());
  tr.cum_finiteH.reserve(raw.size());
  double reward_sum = 0.0, expected = 0.0, finite = 0.0, opt_sum = 0.0;
  int last_episode = -1;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const StepRecord& st = raw[i];
    if (st.episode != last_episode) {
      last_episode = st.episode;
      tr.episode_starts.push_back(st.t);
      if (episodic) {
        if (st.episode >= static_cast<int>(oracle.episode_gap.size()) ||
            st.episode >= static_cast<int>(oracle.episode_opt_value.size()))
          throw InvalidInput("compute_regrets: missing per-episode oracle values");
        finite += oracle.episode_gap[st.episode];
        opt_sum += oracle.episode_opt_value[st.episode];
      }
    }
    reward_sum += st.reward;
    if (average) {
      if (st.episode >= static_cast<int>(oracle.episode_min_gain.size()))
        throw InvalidInput("compute_regrets: missing per-episode gain");
      expected += *oracle.g_star - oracle.episode_min_gain[st.episode];
      tr.cum_inpath.push_back(static_cast<double>(i + 1) * *oracle.g_star - reward_sum);
      tr.cum_expected.push_back(expected);
      tr.cum_finiteH.push_back(nan);
    } else {
      tr.cum_inpath.push_back(opt_sum - reward_sum);
      tr.cum_expected.push_back(nan);
      tr.cum_finiteH.push_back(finite);
    }
  }
  if (keep_steps) tr.steps = raw;
  return tr;
}

struct OnlineResult {
  RegretTrace trace;
  std::vector<EpisodeLog> episodes;
  QueryLedger ledger;
  int refreshes = 0;   // generative phases attempted
  int overflows = 0;
  double g_star = std::numeric_limits<double>::quiet_NaN();
};

namespace detail {

inline bool is_power_of_two(long long k) { return k > 0 && (k & (k - 1)) == 0; }

inline int ceil_log2(long long k) {
  int c = 0;
  while ((1LL << c) < k) ++c;
  return c;
}

// Smallest eps in [lo, hi] (log scale) whose predicted cost fits; nullopt if even hi does not.
template <class Cost>
std::optional<double> fit_eps(Cost&& cost, double budget, double lo, double hi) {
  if (cost(hi) > budget) return std::nullopt;
  if (cost(lo) <= budget) return lo;
  double a = std::log(lo), b = std::log(hi);
  for (int i = 0; i < 60; ++i) {
    double mid = 0.5 * (a + b);
    if (cost(std::exp(mid)) <= budget)
      b = mid;
    else
      a = mid;
  }
  return std::exp(b);
}

}  // namespace detail

// Episodic loop with policy refreshes at k = 1, 2, 4, ... and H-step exploration.
template <class Env>
OnlineResult run_online_finite(const Env& env, int H, long long K, FiniteMode mode, const OnlineConfig& cfg) {
  if (K < 1) throw InvalidInput("run_online_finite: K must be >= 1");
  if (H < 1) throw InvalidInput("run_online_finite: H must be >= 1");
  const FiniteMdp& model = env.model();
  const int S = env.num_states(), A = env.num_actions();
  OnlineResult res;
  res.ledger = QueryLedger(cfg.strict);
  Stream plan_rng(cfg.seed, stream_id::planner);
  Stream explore_rng(cfg.seed, stream_id::explore);
  const FiniteSolution opt = exact_backward_induction(model, H);

  Policy pi;
  {
    std::vector<ValueVec> u0;
    detail::initial_values(env, H, 0.0, u0, pi);
  }
  ValueVec v_pi = policy_value_finite(model, pi, H).V[0];
  const double delta_share = cfg.delta / std::max(1, detail::ceil_log2(K));
  int policy_id = 0;

  OracleBundle oracle;
  std::vector<StepRecord> raw;
  raw.reserve(static_cast<std::size_t>(H) * K);
  long long t = 1;

  for (long long k = 1; k <= K; ++k) {
    EpisodeLog log;
    log.k = static_cast<int>(k);
    log.t_start = t;
    if (detail::is_power_of_two(k)) {
      log.attempted = true;
      ++res.refreshes;
      log.budget = cfg.c_budget * H * static_cast<double>(k) / 2.0;
      log.delta_share = delta_share;
      int phase = res.ledger.begin_phase(log.budget);
      std::optional<Policy> fresh;
      try {
        FinitePlanConfig pc;
        pc.H = H;
        pc.delta = delta_share;
        pc.scale = cfg.scale;
        pc.qcfg = cfg.qcfg;
        pc.record_epochs = false;
        switch (mode) {
          case FiniteMode::oracle_exact:
            fresh = opt.pi;
            break;
          case FiniteMode::classical:
          case FiniteMode::quantum_modern: {
            // Deepest epoch count whose closed-form cost fits the budget.
            int best = 0;
            for (int kk = 1; kk <= 60; ++kk) {
              double e = H / std::ldexp(1.0, kk);
              double cost = mode == FiniteMode::classical
                                ? static_cast<double>(classical_total_samples(
                                      classical_schedule(H, S, A, e, delta_share, cfg.scale), H, S, A))
                                : static_cast<double>(
                                      modern_totals(modern_schedule(H, S, A, e, delta_share, env.holder_term()), H, S,
                                                    A, cfg.qcfg)
                                          .oracle_queries());
              if (cost > log.budget) break;
              best = kk;
            }
            if (best > 0) {
              pc.eps = H / std::ldexp(1.0, best);
              log.eps_target = pc.eps;
              fresh = mode == FiniteMode::classical
                          ? classical_backward_induction(env, pc, res.ledger, plan_rng).policy
                          : quantum_modern_backward_induction(env, pc, res.ledger, plan_rng).policy;
            } else {
              log.note = "budget below one epoch";
            }
            break;
          }
          case FiniteMode::quantum_simple: {
            auto cost = [&](double e) {
              return static_cast<double>(simple_totals(simple_schedule(H, S, A, e, delta_share, cfg.qcfg), H, S)
                                             .oracle_queries());
            };
            auto e = detail::fit_eps(cost, log.budget, 1e-9 * H, static_cast<double>(H));
            if (e) {
              pc.eps = *e;
              log.eps_target = pc.eps;
              fresh = quantum_simple_backward_induction(env, pc, res.ledger, plan_rng).policy;
            } else {
              log.note = "budget below one pass";
            }
            break;
          }
        }
      } catch (const HypothesisViolation& e) {
        log.flagged = true;
        log.note = e.what();
      }
      res.ledger.end_phase();
      log.queries = res.ledger.phase_used(phase);
      if (res.ledger.overflow(phase)) ++res.overflows;
      if (fresh) {
        pi = std::move(*fresh);
        v_pi = policy_value_finite(model, pi, H).V[0];
        log.refreshed = true;
        ++policy_id;
      }
    }
    log.policy_id = policy_id;

    auto x = env.initial_state(explore_rng);
    int c1 = env.cell(x);
    log.initial_gap = opt.V[0][c1] - v_pi[c1];
    oracle.episode_gap.push_back(log.initial_gap);
    oracle.episode_opt_value.push_back(opt.V[0][c1]);
    for (int h = 0; h < H; ++h) {
      int c = env.cell(x);
      int a = pi[h].actions[c];
      raw.push_back(StepRecord{t, static_cast<int>(k - 1), c, a, env.true_reward(x, a)});
      x = env.step(x, a, explore_rng);
      ++t;
    }
    log.length = H;
    res.episodes.push_back(std::move(log));
  }
  res.trace = compute_regrets(raw, oracle, cfg.record_steps);
  return res;
}

// Doubling episodes: episode k plans with budget c_budget * tau_k and then
// explores while t < 2 tau_{k+1}, where tau_{k+1} is the time at its start.
template <class Env>
OnlineResult run_online_infinite(const Env& env, long long T, InfiniteMode mode, const OnlineConfig& cfg) {
  if (T < 1) throw InvalidInput("run_online_infinite: T must be >= 1");
  const FiniteMdp& model = env.model();
  const int S = env.num_states(), A = env.num_actions();
  OnlineResult res;
  res.ledger = QueryLedger(cfg.strict);
  Stream plan_rng(cfg.seed, stream_id::planner);
  Stream explore_rng(cfg.seed, stream_id::explore);
  const OptimalGainBias opt = exact_gain_bias_optimal(model);
  res.g_star = opt.g;
  const double Ln = env.holder_term();

  // Refreshes mostly return a rule seen before; each gain needs a limiting matrix.
  std::map<std::vector<int>, double> gain_cache;
  auto min_gain_of = [&](const DecisionRule& d) {
    auto [it, fresh] = gain_cache.try_emplace(d.actions, 0.0);
    if (fresh) it->second = gain_bias_of_stationary(model, d).min_gain();
    return it->second;
  };
  DecisionRule rule = DecisionRule::constant(S, 0);
  double rule_gain = min_gain_of(rule);
  int policy_id = 0;

  OracleBundle oracle;
  oracle.g_star = opt.g;
  std::vector<StepRecord> raw;
  raw.reserve(static_cast<std::size_t>(T));
  long long t = 1;
  long long tau = 1;
  // Loosest accuracy the planner hypotheses admit (eps <= 2/nu).
  const double eps_max = cfg.nu > 0.0 ? 2.0 / cfg.nu : 2.0;

  for (int k = 1; t <= T; ++k) {
    EpisodeLog log;
    log.k = k;
    log.t_start = t;
    log.attempted = true;
    ++res.refreshes;
    log.budget = cfg.c_budget * static_cast<double>(tau);
    log.delta_share = cfg.delta / (8.0 * std::pow(static_cast<double>(t), 1.25));
    int phase = res.ledger.begin_phase(log.budget);
    try {
      VIConfig vc;
      vc.Lambda = cfg.Lambda;
      vc.nu = cfg.nu;
      vc.delta = log.delta_share;
      vc.scale = cfg.scale;
      vc.qcfg = cfg.qcfg;
      vc.budget = log.budget;
      std::optional<VIOutput> out;
      switch (mode) {
        case InfiniteMode::oracle_exact:
          rule = opt.rule;
          log.refreshed = true;
          break;
        case InfiniteMode::classical:
        case InfiniteMode::quantum: {
          auto cost = [&](double e) {
            VIConfig c = vc;
            c.eps = e;
            return mode == InfiniteMode::classical ? predicted_classical_vi_cost(c, Ln, S, A)
                                                   : predicted_quantum_vi_cost(c, Ln, S, A);
          };
          auto e = detail::fit_eps(cost, log.budget, 1e-6, eps_max);
          if (!e) {
            log.note = "budget below the loosest accuracy";
            break;
          }
          vc.eps = *e;
          log.eps_target = vc.eps;
          out = mode == InfiniteMode::classical ? classical_value_iteration(env, vc, res.ledger, plan_rng)
                                                : quantum_value_iteration(env, vc, res.ledger, plan_rng);
          rule = out->rule;
          log.refreshed = true;
          if (out->truncated) {
            log.flagged = true;
            log.note = "stopped at the budget";
          }
          break;
        }
      }
    } catch (const ConvergenceFailure& e) {
      log.flagged = true;
      log.note = e.what();
    } catch (const HypothesisViolation& e) {
      log.flagged = true;
      log.note = e.what();
    }
    res.ledger.end_phase();
    log.queries = res.ledger.phase_used(phase);
    if (res.ledger.overflow(phase)) ++res.overflows;
    if (log.refreshed) {
      ++policy_id;
      rule_gain = min_gain_of(rule);
    }
    log.policy_id = policy_id;
    log.rule_gain = rule_gain;
    oracle.episode_min_gain.push_back(rule_gain);

    const long long tau_next = t;
    auto x = env.initial_state(explore_rng);
    while (t < 2 * tau_next && t <= T) {
      int c = env.cell(x);
      int a = rule.actions[c];
      raw.push_back(StepRecord{t, k - 1, c, a, env.true_reward(x, a)});
      x = env.step(x, a, explore_rng);
      ++t;
    }
    log.length = t - log.t_start;
    tau = tau_next;
    res.episodes.push_back(std::move(log));
  }
  res.trace = compute_regrets(raw, oracle, cfg.record_steps);
  return res;
}

struct DoublingCheck {
  bool admissible = true;  // 0 <= z_k <= Z_{k-1}
  double log_sum = 0.0;    // sum z_k / Z_{k-1}
  double log_bound = 0.0;  // 4 log2(Z_n / 2), applied when Z_n >= 4
  double sqrt_sum = 0.0;   // sum z_k / sqrt(Z_{k-1})
  double sqrt_bound = 0.0; // sqrt(Z_n) / (sqrt(2) - 1)
  bool log_applies = false;
  bool ok = true;
};

// Z_{k-1} = max(1, z_1 + ... + z_{k-1}).
inline DoublingCheck doubling_bound_check(const std::vector<double>& z) {
  DoublingCheck c;
  double acc = 0.0;
  for (double zk : z) {
    double Z = std::max(1.0, acc);
    if (zk < 0.0 || zk > Z) c.admissible = false;
    c.log_sum += zk / Z;
    c.sqrt_sum += zk / std::sqrt(Z);
    acc += zk;
  }
  const double Zn = std::max(1.0, acc);
  c.sqrt_bound = std::sqrt(Zn) / (std::sqrt(2.0) - 1.0);
  c.log_applies = Zn >= 4.0;
  c.log_bound = c.log_applies ? 4.0 * std::log2(Zn / 2.0) : std::numeric_limits<double>::infinity();
  c.ok = c.admissible && c.sqrt_sum <= c.sqrt_bound * (1.0 + 1e-12) &&
         (!c.log_applies || c.log_sum <= c.log_bound * (1.0 + 1e-12));
  return c;
}

// tau_1 = 1 followed by the exploration lengths of each episode.
inline std::vector<double> doubling_lengths(const std::vector<EpisodeLog>& episodes) {
  std::vector<double> z{1.0};
  for (const auto& e : episodes) z.push_back(static_cast<double>(e.length));
  return z;
}

}  // namespace gmdp
