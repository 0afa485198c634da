#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>

#include "json.hpp"

#include "gmdp/discretization.hpp"
#include "gmdp/mdp_core.hpp"
#include "gmdp/online.hpp"
#include "gmdp/oracles.hpp"
#include "gmdp/plan_finite.hpp"
#include "gmdp/plan_infinite.hpp"

namespace gmdp {

using json = nlohmann::json;

inline json to_json(const FiniteMdp& m) {
  return json{{"S", m.S}, {"A", m.A}, {"kernel", m.kernel}, {"rewards", m.rewards}};
}

inline FiniteMdp finite_mdp_from_json(const json& j) {
  for (auto it = j.begin(); it != j.end(); ++it)
    if (it.key() != "S" && it.key() != "A" && it.key() != "kernel" && it.key() != "rewards")
      throw InvalidInput("FiniteMdp JSON: unknown key " + it.key());
  FiniteMdp m;
  m.S = j.at("S").get<int>();
  m.A = j.at("A").get<int>();
  m.kernel = j.at("kernel").get<std::vector<double>>();
  m.rewards = j.at("rewards").get<std::vector<double>>();
  m.validate(1e-9);
  return m;
}

inline json to_json(const Net& n) { return json{{"D", n.D}, {"n", n.n}, {"k", n.k}, {"points", n.points}}; }

inline json to_json(const CompactMdpSpec& s) {
  json kern = json::array(), rew = json::array();
  for (const auto& k : s.kernel)
    kern.push_back({{"w0", k.w0}, {"amp", k.amp}, {"freq", k.freq}, {"phase", k.phase}, {"mode", k.mode}});
  for (const auto& r : s.reward_parts)
    rew.push_back({{"base", r.base}, {"height", r.height}, {"center", r.center}, {"width", r.width}});
  return json{{"D", s.D},         {"A", s.A},
              {"beta", s.beta},   {"seed", s.seed},
              {"kernel", kern},   {"reward", rew},
              {"L_kernel", s.L_kernel}, {"L_reward", s.L_reward},
              {"holder", {{"L", s.cert.L}, {"alpha", s.cert.alpha}}}};
}

inline json to_json(const QueryLedger& ledger) {
  json out = json::array();
  for (const auto& r : ledger.records()) {
    json rec{{"phase", r.phase}, {"kind", to_string(r.kind)}, {"count", r.count}, {"overflow", r.overflow}};
    rec["budget"] = r.budget ? json(*r.budget) : json(nullptr);
    out.push_back(std::move(rec));
  }
  return out;
}

inline json to_json(const DecisionRule& d) {
  if (d.is_randomized()) return json(d.probs);
  return json(d.actions);
}

inline json to_json(const PlannerOutput& p) {
  json pol = json::array();
  for (const auto& d : p.policy) pol.push_back(to_json(d));
  return json{{"policy", pol},
              {"values", p.u},
              {"guarantee", {{"bound", p.guarantee.bound}, {"delta", p.guarantee.delta}}},
              {"epochs", p.epochs.size()},
              {"queries",
               {{"classical_sample", p.classical_samples},
                {"q_mean", p.q_mean},
                {"q_mean_multi", p.q_mean_multi},
                {"q_max_inner", p.q_max_inner}}},
              {"contract_misses", p.contract_misses}};
}

inline json to_json(const VIOutput& v) {
  return json{{"rule", to_json(v.rule)},
              {"gain", v.gain},
              {"span_history", v.span_history},
              {"iterate_span", v.iterate_span},
              {"backup_error", v.backup_error},
              {"sweeps", v.sweeps},
              {"cap", v.cap},
              {"threshold", v.threshold},
              {"truncated", v.truncated},
              {"queries",
               {{"classical_sample", v.classical_samples}, {"q_mean", v.q_mean}, {"q_max_inner", v.q_max_inner}}},
              {"contract_misses", v.contract_misses}};
}

inline json to_json(const EpisodeLog& e) {
  auto num = [](double x) { return std::isnan(x) ? json(nullptr) : json(x); };
  return json{{"k", e.k},
              {"t_start", e.t_start},
              {"length", e.length},
              {"attempted", e.attempted},
              {"refreshed", e.refreshed},
              {"flagged", e.flagged},
              {"note", e.note},
              {"eps_target", e.eps_target},
              {"delta_share", e.delta_share},
              {"budget", e.budget},
              {"queries", e.queries},
              {"policy_id", e.policy_id},
              {"rule_gain", num(e.rule_gain)},
              {"initial_gap", num(e.initial_gap)}};
}

namespace detail {
inline void csv_num(std::ostream& os, double x) {
  if (!std::isnan(x)) os << std::setprecision(17) << x;
}
}  // namespace detail

// Columns: t, episode, state, action, reward, cum_inpath, cum_expected, cum_finiteH.
inline void write_trace_csv(std::ostream& os, const RegretTrace& tr) {
  os << "t,episode,state,action,reward,cum_inpath,cum_expected,cum_finiteH\n";
  for (std::size_t i = 0; i < tr.steps.size(); ++i) {
    const auto& s = tr.steps[i];
    os << s.t << ',' << s.episode << ',' << s.state << ',' << s.action << ',' << std::setprecision(17) << s.reward
       << ',';
    detail::csv_num(os, tr.cum_inpath[i]);
    os << ',';
    detail::csv_num(os, tr.cum_expected[i]);
    os << ',';
    detail::csv_num(os, tr.cum_finiteH[i]);
    os << '\n';
  }
}

inline json trace_sidecar(const OnlineResult& r) {
  json eps = json::array();
  for (const auto& e : r.episodes) eps.push_back(to_json(e));
  json out{{"episodes", eps},
           {"refreshes", r.refreshes},
           {"overflows", r.overflows},
           {"ledger", to_json(r.ledger)},
           {"totals",
            {{"classical_sample", r.ledger.total(OracleKind::classical_sample)},
             {"q_mean", r.ledger.total(OracleKind::q_mean)},
             {"q_mean_multi", r.ledger.total(OracleKind::q_mean_multi)},
             {"q_max_inner", r.ledger.total(OracleKind::q_max_inner)}}}};
  out["g_star"] = std::isnan(r.g_star) ? json(nullptr) : json(r.g_star);
  return out;
}

// FNV-1a over the canonical dump; stable across platforms and runs.
inline std::string config_hash(const json& config) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : config.dump()) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace gmdp
