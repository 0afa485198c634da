#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace gmdp {

using ValueVec = std::vector<double>;

class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ConvergenceFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tabular MDP. kernel is S*A*S row-major (kernel[(s*A + a)*S + s']), rewards
// is S*A row-major.
struct FiniteMdp {
  int S = 0;
  int A = 0;
  std::vector<double> kernel;
  std::vector<double> rewards;

  FiniteMdp() = default;
  FiniteMdp(int num_states, int num_actions)
      : S(num_states),
        A(num_actions),
        kernel(static_cast<std::size_t>(num_states) * num_actions * num_states, 0.0),
        rewards(static_cast<std::size_t>(num_states) * num_actions, 0.0) {}

  std::size_t sa(int s, int a) const { return static_cast<std::size_t>(s) * A + a; }
  const double* row(int s, int a) const { return kernel.data() + sa(s, a) * S; }
  double* row(int s, int a) { return kernel.data() + sa(s, a) * S; }
  double p(int s, int a, int s2) const { return row(s, a)[s2]; }
  double& p(int s, int a, int s2) { return row(s, a)[s2]; }
  double r(int s, int a) const { return rewards[sa(s, a)]; }
  double& r(int s, int a) { return rewards[sa(s, a)]; }

  // Throws InvalidInput unless every row is a distribution and every reward is in [0,1].
  void validate(double tol = 1e-12) const {
    if (S <= 0 || A <= 0) throw InvalidInput("FiniteMdp: S and A must be positive");
    if (kernel.size() != static_cast<std::size_t>(S) * A * S)
      throw InvalidInput("FiniteMdp: kernel has wrong size");
    if (rewards.size() != static_cast<std::size_t>(S) * A)
      throw InvalidInput("FiniteMdp: rewards have wrong size");
    for (int s = 0; s < S; ++s)
      for (int a = 0; a < A; ++a) {
        double sum = 0.0;
        for (int s2 = 0; s2 < S; ++s2) {
          double q = p(s, a, s2);
          if (!(q >= 0.0)) throw InvalidInput("FiniteMdp: negative transition probability");
          sum += q;
        }
        if (std::abs(sum - 1.0) > tol) throw InvalidInput("FiniteMdp: kernel row does not sum to 1");
        double rv = r(s, a);
        if (!(rv >= 0.0 && rv <= 1.0)) throw InvalidInput("FiniteMdp: reward outside [0,1]");
      }
  }
};

// Deterministic (one action per state) or randomized (distribution per state).
struct DecisionRule {
  std::vector<int> actions;
  std::vector<std::vector<double>> probs;  // empty unless randomized

  static DecisionRule deterministic(std::vector<int> a) {
    DecisionRule d;
    d.actions = std::move(a);
    return d;
  }
  static DecisionRule constant(int S, int a) { return deterministic(std::vector<int>(S, a)); }
  static DecisionRule randomized(std::vector<std::vector<double>> p) {
    DecisionRule d;
    d.probs = std::move(p);
    return d;
  }

  bool is_randomized() const { return !probs.empty(); }
  std::size_t size() const { return is_randomized() ? probs.size() : actions.size(); }
  double prob(int s, int a) const {
    if (is_randomized()) return probs[s][a];
    return actions[s] == a ? 1.0 : 0.0;
  }

  void validate(int S, int A, double tol = 1e-12) const {
    if (static_cast<int>(size()) != S) throw InvalidInput("DecisionRule: wrong number of states");
    if (is_randomized()) {
      for (const auto& row : probs) {
        if (static_cast<int>(row.size()) != A) throw InvalidInput("DecisionRule: wrong number of actions");
        double sum = 0.0;
        for (double q : row) {
          if (!(q >= 0.0)) throw InvalidInput("DecisionRule: negative probability");
          sum += q;
        }
        if (std::abs(sum - 1.0) > tol) throw InvalidInput("DecisionRule: distribution does not sum to 1");
      }
    } else {
      for (int a : actions)
        if (a < 0 || a >= A) throw InvalidInput("DecisionRule: action index out of range");
    }
  }
};

// pi[0] is the rule at t=1.
using Policy = std::vector<DecisionRule>;

inline double span(const ValueVec& u) {
  if (u.empty()) throw InvalidInput("span: empty input");
  auto [lo, hi] = std::minmax_element(u.begin(), u.end());
  return *hi - *lo;
}

inline double sup_norm(const ValueVec& u) {
  double m = 0.0;
  for (double x : u) m = std::max(m, std::abs(x));
  return m;
}

inline ValueVec difference(const ValueVec& u, const ValueVec& v) {
  ValueVec d(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) d[i] = u[i] - v[i];
  return d;
}

inline double expectation(const FiniteMdp& mdp, int s, int a, const ValueVec& u) {
  const double* p = mdp.row(s, a);
  double acc = 0.0;
  for (int s2 = 0; s2 < mdp.S; ++s2) acc += p[s2] * u[s2];
  return acc;
}

inline double variance(const FiniteMdp& mdp, int s, int a, const ValueVec& u) {
  const double* p = mdp.row(s, a);
  double m = expectation(mdp, s, a, u);
  double acc = 0.0;
  for (int s2 = 0; s2 < mdp.S; ++s2) acc += p[s2] * (u[s2] - m) * (u[s2] - m);
  return acc;
}

// Index of the largest entry; the lowest index wins ties.
inline int argmax_lowest(const double* q, int n) {
  int best = 0;
  for (int i = 1; i < n; ++i)
    if (q[i] > q[best]) best = i;
  return best;
}

struct BellmanResult {
  ValueVec values;
  DecisionRule greedy;
};

// With a rule d: r_d + P_d u. Without: max over actions, plus the argmax rule.
inline BellmanResult bellman_apply(const FiniteMdp& mdp, const ValueVec& u, const DecisionRule* rule = nullptr) {
  if (static_cast<int>(u.size()) != mdp.S) throw InvalidInput("bellman_apply: u has wrong dimension");
  if (rule) rule->validate(mdp.S, mdp.A);
  BellmanResult out;
  out.values.assign(mdp.S, 0.0);
  std::vector<int> best(mdp.S, 0);
  std::vector<double> q(mdp.A);
  for (int s = 0; s < mdp.S; ++s) {
    for (int a = 0; a < mdp.A; ++a) q[a] = mdp.r(s, a) + expectation(mdp, s, a, u);
    best[s] = argmax_lowest(q.data(), mdp.A);
    if (rule) {
      double acc = 0.0;
      for (int a = 0; a < mdp.A; ++a) acc += rule->prob(s, a) * q[a];
      out.values[s] = acc;
    } else {
      out.values[s] = q[best[s]];
    }
  }
  out.greedy = DecisionRule::deterministic(std::move(best));
  return out;
}

struct FiniteSolution {
  std::vector<ValueVec> V;  // V[t-1] = V*_t, t = 1..H
  Policy pi;
};

inline FiniteSolution exact_backward_induction(const FiniteMdp& mdp, int H) {
  if (H < 1) throw InvalidInput("exact_backward_induction: H must be >= 1");
  FiniteSolution sol;
  sol.V.assign(H, ValueVec(mdp.S, 0.0));
  sol.pi.assign(H, DecisionRule{});
  ValueVec next(mdp.S, 0.0);
  for (int t = H; t >= 1; --t) {
    auto b = bellman_apply(mdp, next);
    sol.V[t - 1] = b.values;
    sol.pi[t - 1] = std::move(b.greedy);
    next = sol.V[t - 1];
  }
  return sol;
}

struct PolicyEvaluation {
  std::vector<ValueVec> V;      // V[t-1] = V^pi_t
  std::vector<ValueVec> sigma;  // sigma[t-1][s*A+a] = Var_{p(.|s,a)} V^pi_t
};

inline PolicyEvaluation policy_value_finite(const FiniteMdp& mdp, const Policy& pi, int H) {
  if (H < 1) throw InvalidInput("policy_value_finite: H must be >= 1");
  if (static_cast<int>(pi.size()) != H) throw InvalidInput("policy_value_finite: policy length differs from H");
  PolicyEvaluation ev;
  ev.V.assign(H, ValueVec(mdp.S, 0.0));
  ev.sigma.assign(H, ValueVec(static_cast<std::size_t>(mdp.S) * mdp.A, 0.0));
  ValueVec next(mdp.S, 0.0);
  for (int t = H; t >= 1; --t) {
    ev.V[t - 1] = bellman_apply(mdp, next, &pi[t - 1]).values;
    next = ev.V[t - 1];
  }
  for (int t = 1; t <= H; ++t)
    for (int s = 0; s < mdp.S; ++s)
      for (int a = 0; a < mdp.A; ++a) ev.sigma[t - 1][mdp.sa(s, a)] = variance(mdp, s, a, ev.V[t - 1]);
  return ev;
}

struct GainBias {
  ValueVec g;  // per state
  ValueVec h;  // normalized so that min(h) = 0
  double span_h = 0.0;

  double min_gain() const { return *std::min_element(g.begin(), g.end()); }
  double max_gain() const { return *std::max_element(g.begin(), g.end()); }
};

namespace detail {

inline Eigen::MatrixXd chain_matrix(const FiniteMdp& mdp, const DecisionRule& d) {
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(mdp.S, mdp.S);
  for (int s = 0; s < mdp.S; ++s)
    for (int a = 0; a < mdp.A; ++a) {
      double w = d.prob(s, a);
      if (w == 0.0) continue;
      for (int s2 = 0; s2 < mdp.S; ++s2) P(s, s2) += w * mdp.p(s, a, s2);
    }
  return P;
}

inline Eigen::VectorXd chain_reward(const FiniteMdp& mdp, const DecisionRule& d) {
  Eigen::VectorXd r = Eigen::VectorXd::Zero(mdp.S);
  for (int s = 0; s < mdp.S; ++s)
    for (int a = 0; a < mdp.A; ++a) r(s) += d.prob(s, a) * mdp.r(s, a);
  return r;
}

// Cesaro limit of P. The lazy chain 0.5(I+P) shares it and is aperiodic, so
// its powers converge; repeated squaring reaches them quickly.
inline Eigen::MatrixXd limiting_matrix(const Eigen::MatrixXd& P, int max_squarings = 400) {
  const int n = static_cast<int>(P.rows());
  Eigen::MatrixXd Q = 0.5 * (Eigen::MatrixXd::Identity(n, n) + P);
  for (int i = 0; i < max_squarings; ++i) {
    Eigen::MatrixXd next = Q * Q;
    double change = (next - Q).cwiseAbs().maxCoeff();
    Q = std::move(next);
    if (change < 1e-13) return Q;
  }
  throw ConvergenceFailure("limiting_matrix: powers of the lazy chain did not converge");
}

}  // namespace detail

inline GainBias gain_bias_of_stationary(const FiniteMdp& mdp, const DecisionRule& d) {
  d.validate(mdp.S, mdp.A);
  const int n = mdp.S;
  Eigen::MatrixXd P = detail::chain_matrix(mdp, d);
  Eigen::VectorXd r = detail::chain_reward(mdp, d);
  Eigen::MatrixXd Pstar = detail::limiting_matrix(P);
  Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd g = Pstar * r;
  // Deviation-matrix form of the bias: (I - P + P*) h = (I - P*) r.
  Eigen::VectorXd h = (I - P + Pstar).fullPivLu().solve((I - Pstar) * r);
  Eigen::VectorXd resid = h + g - r - P * h;
  if (resid.cwiseAbs().maxCoeff() > 1e-9)
    throw ConvergenceFailure("gain_bias_of_stationary: evaluation equations not met");
  GainBias out;
  out.g.assign(g.data(), g.data() + n);
  double lo = h.minCoeff();
  out.h.resize(n);
  for (int s = 0; s < n; ++s) out.h[s] = h(s) - lo;
  out.span_h = span(out.h);
  return out;
}

struct OptimalGainBias {
  double g = 0.0;
  ValueVec h;
  double span_h = 0.0;  // Lambda
  DecisionRule rule;
  long long sweeps = 0;
};

// Relative value iteration on the lazy operator (1-lambda) u + lambda L u.
inline OptimalGainBias exact_gain_bias_optimal(const FiniteMdp& mdp, double tol = 1e-9,
                                               long long max_sweeps = 1000000) {
  constexpr double lambda = 0.5;
  const int n = mdp.S;
  ValueVec w(n, 0.0), next(n);
  double gt = 0.0;
  long long it = 0;
  for (; it < max_sweeps; ++it) {
    auto b = bellman_apply(mdp, w);
    for (int s = 0; s < n; ++s) next[s] = (1.0 - lambda) * w[s] + lambda * b.values[s];
    ValueVec delta = difference(next, w);
    double lo = *std::min_element(delta.begin(), delta.end());
    double hi = *std::max_element(delta.begin(), delta.end());
    gt = 0.5 * (lo + hi);
    double ref = next[0];
    for (int s = 0; s < n; ++s) w[s] = next[s] - ref;
    if (hi - lo < tol * 1e-3) break;
  }
  if (it >= max_sweeps) throw ConvergenceFailure("exact_gain_bias_optimal: relative VI hit the sweep cap");
  OptimalGainBias out;
  out.g = gt / lambda;
  out.sweeps = it + 1;
  // The fixed point of the lazy operator solves L h - h = g e directly.
  auto b = bellman_apply(mdp, w);
  double resid = 0.0;
  for (int s = 0; s < n; ++s) resid = std::max(resid, std::abs(b.values[s] - w[s] - out.g));
  if (resid > tol) throw ConvergenceFailure("exact_gain_bias_optimal: optimality equation residual too large");
  double lo = *std::min_element(w.begin(), w.end());
  out.h.resize(n);
  for (int s = 0; s < n; ++s) out.h[s] = w[s] - lo;
  out.span_h = span(out.h);
  // Greedy rule with a tolerance so that floating-point ties still go to the lowest index.
  std::vector<int> rule(n, 0);
  std::vector<double> q(mdp.A);
  for (int s = 0; s < n; ++s) {
    for (int a = 0; a < mdp.A; ++a) q[a] = mdp.r(s, a) + expectation(mdp, s, a, out.h);
    double best = *std::max_element(q.begin(), q.end());
    for (int a = 0; a < mdp.A; ++a)
      if (q[a] >= best - 1e-10) {
        rule[s] = a;
        break;
      }
  }
  out.rule = DecisionRule::deterministic(std::move(rule));
  // Replace the iterate's gain by the linear-solve gain of the greedy rule so
  // that regret sums over long horizons do not accumulate iteration error.
  GainBias gb = gain_bias_of_stationary(mdp, out.rule);
  if (std::abs(gb.max_gain() - out.g) <= tol && gb.max_gain() - gb.min_gain() <= tol) out.g = gb.max_gain();
  return out;
}

struct ContractionInfo {
  double nu = 0.0;
};

// One minus the smallest overlap between any two kernel rows.
inline ContractionInfo ergodicity_coefficient(const FiniteMdp& mdp) {
  const int rows = mdp.S * mdp.A;
  double min_overlap = 1.0;
  for (int i = 0; i < rows; ++i) {
    const double* p = mdp.kernel.data() + static_cast<std::size_t>(i) * mdp.S;
    for (int j = i + 1; j < rows; ++j) {
      const double* q = mdp.kernel.data() + static_cast<std::size_t>(j) * mdp.S;
      double ov = 0.0;
      for (int s = 0; s < mdp.S; ++s) ov += std::min(p[s], q[s]);
      min_overlap = std::min(min_overlap, ov);
    }
  }
  return ContractionInfo{std::clamp(1.0 - min_overlap, 0.0, 1.0)};
}

}  // namespace gmdp
