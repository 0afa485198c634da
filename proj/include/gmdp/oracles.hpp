#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "gmdp/discretization.hpp"
#include "gmdp/mdp_core.hpp"
#include "gmdp/rng.hpp"

namespace gmdp {

enum class OracleKind { classical_sample, q_mean, q_mean_multi, q_max_inner };

inline const char* to_string(OracleKind k) {
  switch (k) {
    case OracleKind::classical_sample: return "classical_sample";
    case OracleKind::q_mean: return "q_mean";
    case OracleKind::q_mean_multi: return "q_mean_multi";
    case OracleKind::q_max_inner: return "q_max_inner";
  }
  return "unknown";
}

// Kinds that are queries to the transition oracle itself. q_max_inner counts
// invocations of the mean-estimation unitary, whose own queries are already
// charged as q_mean, so it is excluded from budget totals.
inline bool counts_toward_budget(OracleKind k) { return k != OracleKind::q_max_inner; }

class BudgetOverflow : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class HypothesisViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Query accounting per (phase, oracle kind). Phase 0 is the unbudgeted default.
class QueryLedger {
 public:
  struct Record {
    int phase;
    OracleKind kind;
    unsigned long long count;
    std::optional<double> budget;
    bool overflow;
  };

  explicit QueryLedger(bool strict = false) : strict_(strict) {}

  int begin_phase(std::optional<double> budget) {
    phases_.push_back(PhaseInfo{budget, 0, false});
    current_ = static_cast<int>(phases_.size()) - 1;
    return current_;
  }
  void end_phase() { current_ = 0; }
  int current_phase() const { return current_; }
  bool strict() const { return strict_; }

  void charge(OracleKind kind, unsigned long long n) {
    counts_[{current_, kind}] += n;
    totals_[static_cast<int>(kind)] += n;
    auto& ph = phases_[current_];
    if (counts_toward_budget(kind)) ph.used += n;
    if (ph.budget && static_cast<double>(ph.used) > *ph.budget && !ph.overflow) {
      ph.overflow = true;
      if (strict_) throw BudgetOverflow("generative phase exceeded its query budget");
    }
  }

  unsigned long long total(OracleKind kind) const { return totals_[static_cast<int>(kind)]; }
  unsigned long long count(int phase, OracleKind kind) const {
    auto it = counts_.find({phase, kind});
    return it == counts_.end() ? 0ULL : it->second;
  }
  unsigned long long phase_used(int phase) const { return phases_[phase].used; }
  std::optional<double> phase_budget(int phase) const { return phases_[phase].budget; }
  double remaining(int phase) const {
    const auto& ph = phases_[phase];
    if (!ph.budget) return std::numeric_limits<double>::infinity();
    return *ph.budget - static_cast<double>(ph.used);
  }
  bool overflow(int phase) const { return phases_[phase].overflow; }
  int num_phases() const { return static_cast<int>(phases_.size()); }
  int overflow_count() const {
    int c = 0;
    for (const auto& ph : phases_) c += ph.overflow ? 1 : 0;
    return c;
  }

  std::vector<Record> records() const {
    std::vector<Record> out;
    for (const auto& [key, c] : counts_)
      out.push_back(Record{key.first, key.second, c, phases_[key.first].budget, phases_[key.first].overflow});
    return out;
  }

 private:
  struct PhaseInfo {
    std::optional<double> budget;
    unsigned long long used;
    bool overflow;
  };
  bool strict_;
  int current_ = 0;
  std::vector<PhaseInfo> phases_{PhaseInfo{std::nullopt, 0, false}};
  std::map<std::pair<int, OracleKind>, unsigned long long> counts_;
  unsigned long long totals_[4] = {0, 0, 0, 0};
};

// Generative access to a finite MDP. Net states are the MDP's states.
class FiniteEnv {
 public:
  explicit FiniteEnv(const FiniteMdp& mdp) : mdp_(&mdp) {}

  int num_states() const { return mdp_->S; }
  int num_actions() const { return mdp_->A; }
  double reward(int s, int a) const { return mdp_->r(s, a); }
  const double* distribution(int s, int a) const { return mdp_->row(s, a); }
  double holder_term() const { return 0.0; }
  const FiniteMdp& model() const { return *mdp_; }

  int sample(int s, int a, Stream& rng) const {
    return static_cast<int>(rng.categorical(mdp_->row(s, a), mdp_->S));
  }
  void sample_counts(int s, int a, long long m, Stream& rng, std::vector<long long>& counts) const {
    rng.multinomial(m, mdp_->row(s, a), mdp_->S, counts);
  }

  // Exploration uses the same state space.
  using State = int;
  State initial_state(Stream& rng) const { return static_cast<int>(rng.uniform_index(mdp_->S)); }
  int cell(State x) const { return x; }
  double true_reward(State x, int a) const { return mdp_->r(x, a); }
  State step(State x, int a, Stream& rng) const { return sample(x, a, rng); }

 private:
  const FiniteMdp* mdp_;
};

// Generative access to a compact-state family through a net. The planner sees
// net points and quantized successors; exploration runs on the continuous state.
class CompactEnv {
 public:
  CompactEnv(const CompactMdpSpec& spec, const Net& net)
      : spec_(&spec), net_(&net), disc_(discretize(spec, net)), holder_(spec.cert.term(net.n)) {
    mode_cell_.resize(spec.A);
    for (int a = 0; a < spec.A; ++a) mode_cell_[a] = static_cast<int>(quantize(net, spec.kernel[a].mode));
    uniform_.assign(net.k, 1.0 / static_cast<double>(net.k));
  }

  int num_states() const { return disc_.S; }
  int num_actions() const { return disc_.A; }
  double reward(int s, int a) const { return disc_.r(s, a); }
  const double* distribution(int s, int a) const { return disc_.row(s, a); }
  double holder_term() const { return holder_; }
  const FiniteMdp& model() const { return disc_; }
  const Net& net() const { return *net_; }
  const CompactMdpSpec& spec() const { return *spec_; }

  int sample(int s, int a, Stream& rng) const {
    return static_cast<int>(quantize(*net_, sample_compact(*spec_, net_->point(s), a, rng)));
  }

  // Same law as quantizing m continuous draws: Binomial(m, w) land in the mode
  // cell, the rest are uniform over the cube and hence uniform over cells.
  void sample_counts(int s, int a, long long m, Stream& rng, std::vector<long long>& counts) const {
    double w = spec_->weight(net_->point(s), a);
    long long to_mode = rng.binomial(m, w);
    rng.multinomial(m - to_mode, uniform_.data(), net_->k, counts);
    counts[mode_cell_[a]] += to_mode;
  }

  using State = std::vector<double>;
  State initial_state(Stream& rng) const {
    State x(spec_->D);
    for (auto& v : x) v = rng.uniform();
    return x;
  }
  int cell(const State& x) const { return static_cast<int>(quantize(*net_, x)); }
  double true_reward(const State& x, int a) const { return spec_->reward(x, a); }
  State step(const State& x, int a, Stream& rng) const { return sample_compact(*spec_, x, a, rng); }

 private:
  const CompactMdpSpec* spec_;
  const Net* net_;
  FiniteMdp disc_;
  double holder_;
  std::vector<int> mode_cell_;
  std::vector<double> uniform_;
};

// One classical draw, charged to the ledger.
template <class Env>
int sample_next(const Env& env, int s, int a, QueryLedger& ledger, Stream& rng) {
  ledger.charge(OracleKind::classical_sample, 1);
  return env.sample(s, a, rng);
}

// Batch of m classical draws returned as successor counts, charged m.
template <class Env>
void sample_batch(const Env& env, int s, int a, long long m, QueryLedger& ledger, Stream& rng,
                  std::vector<long long>& counts) {
  ledger.charge(OracleKind::classical_sample, static_cast<unsigned long long>(m));
  env.sample_counts(s, a, m, rng, counts);
}

struct MeanVar {
  double mean;
  double var;
};

// Sample mean and biased variance (mean of squares minus squared mean).
inline MeanVar empirical_mean_var(const std::vector<double>& samples) {
  if (samples.empty()) throw InvalidInput("empirical_mean_var: empty input");
  double m = 0.0, m2 = 0.0;
  for (double x : samples) {
    m += x;
    m2 += x * x;
  }
  m /= static_cast<double>(samples.size());
  m2 /= static_cast<double>(samples.size());
  return {m, std::max(0.0, m2 - m * m)};
}

// Same estimator over successor counts: samples are u[s'] repeated counts[s'] times.
inline MeanVar empirical_mean_var(const ValueVec& u, const std::vector<long long>& counts) {
  long long m = 0;
  double s1 = 0.0, s2 = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] == 0) continue;
    m += counts[i];
    s1 += static_cast<double>(counts[i]) * u[i];
    s2 += static_cast<double>(counts[i]) * u[i] * u[i];
  }
  if (m == 0) throw InvalidInput("empirical_mean_var: empty input");
  double mean = s1 / static_cast<double>(m);
  return {mean, std::max(0.0, s2 / static_cast<double>(m) - mean * mean)};
}

enum class NoiseMode { exact, uniform, signed_worst };

inline const char* to_string(NoiseMode m) {
  switch (m) {
    case NoiseMode::exact: return "exact";
    case NoiseMode::uniform: return "uniform";
    case NoiseMode::signed_worst: return "signed_worst";
  }
  return "unknown";
}

inline NoiseMode parse_noise_mode(const std::string& s) {
  if (s == "exact") return NoiseMode::exact;
  if (s == "uniform") return NoiseMode::uniform;
  if (s == "signed_worst") return NoiseMode::signed_worst;
  throw InvalidInput("unknown noise mode: " + s);
}

struct QuantumEmulationConfig {
  NoiseMode noise = NoiseMode::exact;
  double c_mean = 1.0;
  double c_multi = 1.0;
  double c_max = 1.0;

  void validate() const {
    if (!(c_mean > 0.0 && c_multi > 0.0 && c_max > 0.0))
      throw InvalidInput("QuantumEmulationConfig: constants must be positive");
  }
};

namespace detail {

inline void check_eps_delta(double eps, double delta) {
  if (!(eps > 0.0)) throw InvalidInput("emulated oracle: eps must be positive");
  if (!(delta > 0.0 && delta < 1.0)) throw InvalidInput("emulated oracle: delta must be in (0,1)");
}

inline double noise(NoiseMode mode, double bound, Stream& rng) {
  if (bound <= 0.0) return 0.0;
  switch (mode) {
    case NoiseMode::exact: return 0.0;
    case NoiseMode::uniform: return bound * (2.0 * rng.uniform() - 1.0);
    case NoiseMode::signed_worst: return rng.uniform() < 0.5 ? -bound : bound;
  }
  return 0.0;
}

inline double dist_mean(const double* p, const ValueVec& u) {
  double acc = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) acc += p[i] * u[i];
  return acc;
}

inline double dist_var(const double* p, const ValueVec& u) {
  double m = dist_mean(p, u);
  double acc = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) acc += p[i] * (u[i] - m) * (u[i] - m);
  return acc;
}

// Exact mean plus noise inside the span(u) * eps contract, with no charge.
inline double noisy_mean(const ValueVec& u, const double* p, double eps, NoiseMode mode, Stream& rng) {
  return dist_mean(p, u) + noise(mode, span(u) * eps, rng);
}

}  // namespace detail

inline unsigned long long q_mean_charge(double eps, double delta, const QuantumEmulationConfig& cfg) {
  return static_cast<unsigned long long>(std::ceil(cfg.c_mean / eps * std::log(1.0 / delta)));
}
inline unsigned long long q_mean_multi_charge(std::size_t m, double eps, double delta,
                                              const QuantumEmulationConfig& cfg) {
  return static_cast<unsigned long long>(std::ceil(cfg.c_multi / eps * std::log(static_cast<double>(m) / delta)));
}
inline unsigned long long q_max_charge(int A, double delta, const QuantumEmulationConfig& cfg) {
  return static_cast<unsigned long long>(std::ceil(cfg.c_max * std::sqrt(static_cast<double>(A)) * std::log(1.0 / delta)));
}

// Mean of u under p, within span(u) * eps of the exact value.
inline double emulated_q_mean(const ValueVec& u, const double* p, double eps, double delta, QueryLedger& ledger,
                              const QuantumEmulationConfig& cfg, Stream& rng) {
  detail::check_eps_delta(eps, delta);
  ledger.charge(OracleKind::q_mean, q_mean_charge(eps, delta, cfg));
  return detail::noisy_mean(u, p, eps, cfg.noise, rng);
}

// Means of u_1..u_m under p, each within sqrt(sum_i Var(u_i)) * eps.
inline std::vector<double> emulated_q_mean_multi(const std::vector<ValueVec>& us, const double* p, double eps,
                                                 double delta, QueryLedger& ledger, const QuantumEmulationConfig& cfg,
                                                 Stream& rng) {
  detail::check_eps_delta(eps, delta);
  if (us.empty()) throw InvalidInput("emulated_q_mean_multi: no functions");
  ledger.charge(OracleKind::q_mean_multi, q_mean_multi_charge(us.size(), eps, delta, cfg));
  double total_var = 0.0;
  std::vector<double> out(us.size());
  for (std::size_t i = 0; i < us.size(); ++i) {
    total_var += detail::dist_var(p, us[i]);
    out[i] = detail::dist_mean(p, us[i]);
  }
  double bound = std::sqrt(total_var) * eps;
  for (auto& v : out) v += detail::noise(cfg.noise, bound, rng);
  return out;
}

struct MaxResult {
  int index;
  double value;
};

// Exact argmax (lowest index on ties). Each of the ceil(c_max sqrt(A) ln(1/delta))
// inner queries also pays `inner_charge` queries of kind `inner_kind`.
inline MaxResult emulated_q_max(const std::vector<double>& values, double delta, QueryLedger& ledger,
                                const QuantumEmulationConfig& cfg, unsigned long long inner_charge = 0,
                                OracleKind inner_kind = OracleKind::q_mean) {
  if (values.empty()) throw InvalidInput("emulated_q_max: empty candidate set");
  if (!(delta > 0.0 && delta < 1.0)) throw InvalidInput("emulated_q_max: delta must be in (0,1)");
  const int A = static_cast<int>(values.size());
  unsigned long long outer = q_max_charge(A, delta, cfg);
  ledger.charge(OracleKind::q_max_inner, outer);
  if (inner_charge > 0) ledger.charge(inner_kind, outer * inner_charge);
  int best = argmax_lowest(values.data(), A);
  return {best, values[best]};
}

}  // namespace gmdp
