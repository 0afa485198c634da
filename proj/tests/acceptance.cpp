// Acceptance harness: one PASS/FAIL line per criterion. Pass criterion numbers
// as arguments to run a subset, e.g. `acceptance 3 6`.
#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "gmdp/bench.hpp"
#include "gmdp/discretization.hpp"
#include "gmdp/online.hpp"
#include "gmdp/plan_finite.hpp"
#include "gmdp/plan_infinite.hpp"

using namespace gmdp;

namespace {

constexpr double kDelta = 0.1;
constexpr double kPassRate = 0.9;
constexpr double kValueTol = 1e-9;

// Criteria 1-3 and the online runs use the desk-scale multiplier on classical
// sample counts; criterion 4 keeps the proof constants.
constexpr double kScale = 1.0 / 64.0;

constexpr double kFiniteEps = 0.05;
constexpr int kFiniteSeeds = 200;
constexpr double kInstanceSeconds = 300.0;

constexpr double kRatioTol = 0.15;

constexpr double kAvgEps = 0.05;
constexpr int kAvgSeeds = 100;

constexpr int kOnlineSeeds = 30;
constexpr int kOnlineH = 2;
constexpr long long kOnlineK = 1LL << 14;
constexpr long long kOnlineT = 1LL << 17;
constexpr int kSkipRefreshes = 8;
constexpr double kSqrtLo = 0.35, kSqrtHi = 0.65, kPolylogHi = 0.15;
constexpr double kOnlineSeconds = 3600.0;
constexpr double kInf = std::numeric_limits<double>::infinity();

std::string fmt(const char* f, ...) {
  va_list ap;
  va_start(ap, f);
  char buf[1024];
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void parallel_for(int n, const std::function<void(int)>& body) {
  unsigned workers = std::min<unsigned>(std::max(1u, std::thread::hardware_concurrency()), std::max(1, n));
  std::atomic<int> next{0};
  auto run = [&] {
    for (int i; (i = next++) < n;) body(i);
  };
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(run);
  run();
  for (auto& th : pool) th.join();
}

struct Verdict {
  bool pass = true;
  std::vector<std::string> lines;

  void check(bool ok, const std::string& what) {
    pass = pass && ok;
    lines.push_back(std::string(ok ? "ok   " : "MISS ") + what);
  }
  void note(const std::string& what) { lines.push_back("     " + what); }
};

void report(int id, const char* title, const Verdict& v, double secs) {
  std::printf("CRITERION %d %s  %s  (%.1fs)\n", id, v.pass ? "PASS" : "FAIL", title, secs);
  for (const auto& l : v.lines) std::printf("    %s\n", l.c_str());
  std::fflush(stdout);
}

// ---------------------------------------------------------------------------
// Finite-horizon planners (criteria 1-3)

struct FiniteInstance {
  std::string name;
  FiniteMdp mdp;
  int H;
};

std::vector<FiniteInstance> finite_battery() {
  std::vector<FiniteInstance> out;
  out.push_back({"M2", fixture_m2(), 4});
  for (int i = 0; i < 20; ++i) {
    const int S = 2 + i % 5, A = 2 + i % 2, H = 2 + i % 4;
    const double lambda = 0.2 + 0.1 * (i % 4);
    out.push_back({fmt("rand%02d", i), generate_random_mdp(S, A, lambda, 100 + i), H});
  }
  return out;
}

enum class FinitePlanner { classical, modern, simple };

const char* name_of(FinitePlanner p) {
  switch (p) {
    case FinitePlanner::classical: return "classical";
    case FinitePlanner::modern: return "quantum_modern";
    case FinitePlanner::simple: return "quantum_simple";
  }
  return "?";
}

PlannerOutput run_planner(FinitePlanner p, const FiniteEnv& env, const FinitePlanConfig& cfg, QueryLedger& ledger,
                          Stream& rng) {
  switch (p) {
    case FinitePlanner::classical: return classical_backward_induction(env, cfg, ledger, rng);
    case FinitePlanner::modern: return quantum_modern_backward_induction(env, cfg, ledger, rng);
    case FinitePlanner::simple: return quantum_simple_backward_induction(env, cfg, ledger, rng);
  }
  throw InvalidInput("unknown planner");
}

// Entries (t, s) with u_t(s) > V^pi_t(s) or V^pi_t(s) > V*_t(s).
int sandwich_breaches(const FiniteMdp& m, int H, const std::vector<ValueVec>& u, const Policy& pi,
                      const FiniteSolution& opt) {
  auto ev = policy_value_finite(m, pi, H);
  int breaches = 0;
  for (int t = 0; t < H; ++t)
    for (int s = 0; s < m.S; ++s) {
      if (u[t][s] > ev.V[t][s] + kValueTol) ++breaches;
      if (ev.V[t][s] > opt.V[t][s] + kValueTol) ++breaches;
    }
  return breaches;
}

struct BatteryRow {
  std::string name;
  int good = 0;
  int failed = 0;
  int breaches_all = 0;        // sandwich breaches on any seed
  int breaches_nonfailed = 0;  // sandwich breaches on seeds meeting the guarantee
  int errors = 0;
  double seconds = 0.0;
};

BatteryRow run_battery_instance(const FiniteInstance& inst, FinitePlanner planner, NoiseMode noise) {
  BatteryRow row;
  row.name = inst.name;
  const auto t0 = std::chrono::steady_clock::now();
  const FiniteSolution opt = exact_backward_induction(inst.mdp, inst.H);
  FiniteEnv env(inst.mdp);
  std::mutex mu;
  parallel_for(kFiniteSeeds, [&](int seed) {
    FinitePlanConfig cfg;
    cfg.H = inst.H;
    cfg.eps = kFiniteEps;
    cfg.delta = kDelta;
    cfg.scale = kScale;
    cfg.qcfg.noise = noise;
    cfg.record_epochs = true;
    QueryLedger ledger;
    Stream rng(seed, stream_id::planner);
    try {
      PlannerOutput out = run_planner(planner, env, cfg, ledger, rng);
      auto ev = policy_value_finite(inst.mdp, out.policy, inst.H);
      double subopt = 0.0;
      for (int s = 0; s < inst.mdp.S; ++s) subopt = std::max(subopt, opt.V[0][s] - ev.V[0][s]);
      int br = sandwich_breaches(inst.mdp, inst.H, out.u, out.policy, opt);
      for (const auto& ep : out.epochs) br += sandwich_breaches(inst.mdp, inst.H, ep.u, ep.pi, opt);
      const bool good = subopt <= kFiniteEps + kValueTol;
      std::lock_guard lock(mu);
      row.good += good;
      row.failed += !good;
      row.breaches_all += br;
      if (good) row.breaches_nonfailed += br;
    } catch (const std::exception&) {
      std::lock_guard lock(mu);
      ++row.errors;
      ++row.failed;
    }
  });
  row.seconds = seconds_since(t0);
  return row;
}

// Shared battery check for criteria 1 and 2.
void battery_verdict(Verdict& v, FinitePlanner planner, NoiseMode noise, bool require_zero_breaches) {
  const auto battery = finite_battery();
  const int need = static_cast<int>(std::ceil(kPassRate * kFiniteSeeds));
  int worst_good = kFiniteSeeds + 1, breaches_nf = 0, breaches_all = 0, errors = 0, failed = 0;
  double worst_secs = 0.0;
  std::string worst_name;
  for (const auto& inst : battery) {
    BatteryRow r = run_battery_instance(inst, planner, noise);
    if (r.good < worst_good) {
      worst_good = r.good;
      worst_name = r.name;
    }
    breaches_nf += r.breaches_nonfailed;
    breaches_all += r.breaches_all;
    errors += r.errors;
    failed += r.failed;
    worst_secs = std::max(worst_secs, r.seconds);
  }
  const std::string tag = fmt("%s/%s", name_of(planner), to_string(noise));
  v.check(worst_good >= need, fmt("%s: worst instance %s has %d/%d seeds with sup suboptimality <= %.2f (need %d)",
                                  tag.c_str(), worst_name.c_str(), worst_good, kFiniteSeeds, kFiniteEps, need));
  v.note(fmt("%s: %d of %zu runs missed the suboptimality target", tag.c_str(), failed, battery.size() * kFiniteSeeds));
  v.check(breaches_nf == 0, fmt("%s: %d sandwich breaches on non-failed seeds", tag.c_str(), breaches_nf));
  if (require_zero_breaches)
    v.check(breaches_all == 0, fmt("%s: %d sandwich breaches on all seeds", tag.c_str(), breaches_all));
  v.check(errors == 0, fmt("%s: %d planner exceptions", tag.c_str(), errors));
  v.check(worst_secs <= kInstanceSeconds,
          fmt("%s: slowest instance %.1fs (limit %.0fs)", tag.c_str(), worst_secs, kInstanceSeconds));
}

Verdict criterion1() {
  Verdict v;
  v.note(fmt("21 instances (M2 and 20 random, S<=6 A<=3 H<=5), %d seeds, eps %.2f, delta %.1f, scale 1/64",
             kFiniteSeeds, kFiniteEps, kDelta));
  battery_verdict(v, FinitePlanner::classical, NoiseMode::exact, false);
  return v;
}

Verdict criterion2() {
  Verdict v;
  for (FinitePlanner p : {FinitePlanner::modern, FinitePlanner::simple})
    for (NoiseMode noise : {NoiseMode::uniform, NoiseMode::signed_worst})
      battery_verdict(v, p, noise, noise == NoiseMode::signed_worst);
  return v;
}

// ---------------------------------------------------------------------------
// Query scaling (criterion 3)

bool within(double ratio, double target) { return std::abs(ratio / target - 1.0) <= kRatioTol; }

Verdict criterion3() {
  Verdict v;
  const FiniteMdp m = generate_random_mdp(4, 3, 0.4, 31);
  const int H = 3;
  FiniteEnv env(m);
  auto plan = [&](FinitePlanner p, const FiniteEnv& e, double eps, QueryLedger& ledger) {
    FinitePlanConfig cfg;
    cfg.H = H;
    cfg.eps = eps;
    cfg.delta = kDelta;
    cfg.scale = kScale;
    cfg.qcfg.noise = NoiseMode::uniform;
    cfg.record_epochs = false;
    Stream rng(7, stream_id::planner);
    return run_planner(p, e, cfg, ledger, rng);
  };

  // Classical finite planner: totals x4 per halving of eps.
  {
    QueryLedger a, b;
    plan(FinitePlanner::classical, env, 0.1, a);
    plan(FinitePlanner::classical, env, 0.05, b);
    double r = static_cast<double>(b.total(OracleKind::classical_sample)) / a.total(OracleKind::classical_sample);
    v.check(within(r, 4.0), fmt("classical finite: total ratio %.3f for eps 0.1 -> 0.05 (target 4 +/- 15%%)", r));
    auto sc = classical_schedule(H, 4, 3, 0.05, kDelta, kScale);
    v.check(b.total(OracleKind::classical_sample) == classical_total_samples(sc, H, 4, 3),
            fmt("classical finite: ledger %llu == sum_k (m_k + (H-1) l_k) S A = %llu",
                b.total(OracleKind::classical_sample), classical_total_samples(sc, H, 4, 3)));
  }
  // Quantum modern planner: totals x2 per halving.
  {
    QueryLedger a, b;
    plan(FinitePlanner::modern, env, 0.1, a);
    plan(FinitePlanner::modern, env, 0.05, b);
    auto qa = a.total(OracleKind::q_mean) + a.total(OracleKind::q_mean_multi);
    auto qb = b.total(OracleKind::q_mean) + b.total(OracleKind::q_mean_multi);
    double r = static_cast<double>(qb) / qa;
    v.check(within(r, 2.0), fmt("quantum_modern: total ratio %.3f for eps 0.1 -> 0.05 (target 2 +/- 15%%)", r));
    FinitePlanConfig cfg;
    auto tot = modern_totals(modern_schedule(H, 4, 3, 0.05, kDelta, 0.0), H, 4, 3, cfg.qcfg);
    v.check(b.total(OracleKind::q_mean) == tot.q_mean && b.total(OracleKind::q_mean_multi) == tot.q_mean_multi,
            fmt("quantum_modern: ledger (%llu, %llu) == schedule (%llu, %llu)", b.total(OracleKind::q_mean),
                b.total(OracleKind::q_mean_multi), tot.q_mean, tot.q_mean_multi));
  }
  // Quantum simple planner: totals scale with sqrt(A) at fixed S, H, eps.
  {
    const FiniteMdp m4 = generate_random_mdp(4, 4, 0.4, 32), m16 = generate_random_mdp(4, 16, 0.4, 32);
    FiniteEnv e4(m4), e16(m16);
    QueryLedger a, b;
    plan(FinitePlanner::simple, e4, 0.05, a);
    plan(FinitePlanner::simple, e16, 0.05, b);
    double r = static_cast<double>(b.total(OracleKind::q_mean)) / a.total(OracleKind::q_mean);
    v.check(within(r, 2.0), fmt("quantum_simple: total ratio %.3f for A 4 -> 16 (target sqrt(4) = 2 +/- 15%%)", r));
    FinitePlanConfig cfg;
    auto tot = simple_totals(simple_schedule(H, 4, 16, 0.05, kDelta, cfg.qcfg), H, 4);
    v.check(b.total(OracleKind::q_mean) == tot.q_mean && b.total(OracleKind::q_max_inner) == tot.q_max_inner,
            fmt("quantum_simple: ledger (%llu, %llu) == (H-1) S outer inner, (H-1) S outer = (%llu, %llu)",
                b.total(OracleKind::q_mean), b.total(OracleKind::q_max_inner), tot.q_mean, tot.q_max_inner));
  }
  // Quantum VI: totals x2 per halving, averaged over seeds since sweep counts vary.
  {
    const FiniteMdp m2 = fixture_m2();
    FiniteEnv e2(m2);
    VIConfig base;
    base.nu = ergodicity_coefficient(m2).nu;
    base.Lambda = exact_gain_bias_optimal(m2).span_h;
    base.delta = kDelta;
    base.qcfg.noise = NoiseMode::uniform;
    double sum_a = 0.0, sum_b = 0.0;
    bool exact = true;
    for (int seed = 0; seed < 20; ++seed) {
      for (double eps : {0.05, 0.025}) {
        VIConfig c = base;
        c.eps = eps;
        QueryLedger ledger;
        Stream rng(seed, stream_id::planner);
        auto out = quantum_value_iteration(e2, c, ledger, rng);
        (eps == 0.05 ? sum_a : sum_b) += static_cast<double>(ledger.total(OracleKind::q_mean));
        unsigned long long expect = 0;
        for (long long t = 1; t <= out.sweeps; ++t) {
          auto ch = quantum_vi_charge(c, t, 2, 2, out.iterate_span[t - 1]);
          expect += 2ULL * ch.outer * ch.inner;
        }
        exact = exact && expect == ledger.total(OracleKind::q_mean);
      }
    }
    double r = sum_b / sum_a;
    v.check(within(r, 2.0), fmt("quantum VI (M2, 20 seeds): mean total ratio %.3f for eps 0.05 -> 0.025 (target 2 "
                                "+/- 15%%)", r));
    v.check(exact, "quantum VI: ledger == sum_t S outer_t inner_t on every run");
  }
  // Classical VI identity.
  {
    VIConfig c;
    c.eps = 0.1;
    c.nu = ergodicity_coefficient(m).nu;
    c.Lambda = exact_gain_bias_optimal(m).span_h;
    c.scale = kScale;
    QueryLedger ledger;
    Stream rng(3, stream_id::planner);
    auto out = classical_value_iteration(env, c, ledger, rng);
    unsigned long long expect = 0;
    for (long long t = 1; t <= out.sweeps; ++t) expect += classical_vi_samples(c, t, 4, 3) * 12ULL;
    v.check(expect == ledger.total(OracleKind::classical_sample),
            fmt("classical VI: ledger %llu == sum_t m_t S A = %llu", ledger.total(OracleKind::classical_sample),
                expect));
  }
  return v;
}

// ---------------------------------------------------------------------------
// Average-reward planners (criteria 4 and the span part of 6)

struct AvgRow {
  int gain_ok = 0, policy_ok = 0, cap_miss = 0, errors = 0;
  int sweeps = 0;  // total sweeps checked by the certificate
  int cert_fail = 0;
};

AvgRow run_avg(const FiniteMdp& m, bool quantum) {
  AvgRow row;
  FiniteEnv env(m);
  const auto opt = exact_gain_bias_optimal(m);
  VIConfig cfg;
  cfg.eps = kAvgEps;
  cfg.delta = kDelta;
  cfg.nu = ergodicity_coefficient(m).nu;
  cfg.Lambda = opt.span_h;
  cfg.qcfg.noise = NoiseMode::uniform;
  std::mutex mu;
  std::map<std::vector<int>, double> gains;
  parallel_for(kAvgSeeds, [&](int seed) {
    QueryLedger ledger;
    Stream rng(seed, stream_id::planner);
    try {
      VIOutput out = quantum ? quantum_value_iteration(env, cfg, ledger, rng) : classical_value_iteration(env, cfg, ledger, rng);
      const double eff =
          out.backup_error.empty() ? 0.0 : *std::max_element(out.backup_error.begin(), out.backup_error.end());
      auto cert = robust_vi_span_certificate(out.span_history, eff, cfg.nu, out.initial_residual_span);
      std::lock_guard lock(mu);
      auto [it, fresh] = gains.try_emplace(out.rule.actions, 0.0);
      if (fresh) it->second = gain_bias_of_stationary(m, out.rule).min_gain();
      row.gain_ok += std::abs(out.gain - opt.g) <= kAvgEps;
      row.policy_ok += it->second >= opt.g - 2.0 * kAvgEps;
      row.cap_miss += out.sweeps > out.cap;
      row.sweeps += static_cast<int>(out.span_history.size());
      row.cert_fail += !cert.holds;
    } catch (const std::exception&) {
      std::lock_guard lock(mu);
      ++row.errors;
    }
  });
  return row;
}

std::vector<std::pair<std::string, AvgRow>> g_avg_rows;  // reused by criterion 6

Verdict criterion4() {
  Verdict v;
  v.note("eps 0.05, delta 0.1, 100 seeds, proof constants (scale 1), uniform emulation noise");
  const int need = static_cast<int>(std::ceil(kPassRate * kAvgSeeds));
  g_avg_rows.clear();
  for (const char* fx : {"M2", "riverswim6"}) {
    const FiniteMdp m = std::get<FiniteMdp>(fixture(fx));
    for (bool quantum : {false, true}) {
      AvgRow r = run_avg(m, quantum);
      const std::string tag = fmt("%s %s VI", fx, quantum ? "quantum" : "classical");
      g_avg_rows.emplace_back(tag, r);
      v.check(r.gain_ok >= need, fmt("%s: |g_eps - g*| <= eps on %d/%d", tag.c_str(), r.gain_ok, kAvgSeeds));
      v.check(r.policy_ok >= need, fmt("%s: policy gain >= g* - 2 eps on %d/%d", tag.c_str(), r.policy_ok, kAvgSeeds));
      v.check(r.cap_miss == 0 && r.errors == 0,
              fmt("%s: %d runs over the sweep cap, %d exceptions", tag.c_str(), r.cap_miss, r.errors));
    }
  }
  return v;
}

// ---------------------------------------------------------------------------
// Online regret (criteria 5 and 7)

struct SeriesSet {
  std::vector<long long> grid;
  std::vector<std::vector<double>> inpath, expected, finite;  // [seed][grid point]
  std::vector<std::vector<double>> lengths;                   // doubling lengths per seed
  long long t_lo = 1, t_hi = 1;
  std::vector<long long> first_plan;  // per seed, start of the first episode with a fresh plan (-1 if none)
  int overflows = 0, flagged = 0, errors = 0;
  double seconds = 0.0;
};

// Start of the first episode after `kSkipRefreshes` generative phases.
long long window_start(const std::vector<EpisodeLog>& episodes) {
  int seen = 0;
  for (const auto& e : episodes)
    if (e.attempted && ++seen == kSkipRefreshes + 1) return e.t_start;
  return -1;
}

void sample_into(const RegretTrace& tr, const std::vector<long long>& grid, std::vector<double>& in,
                 std::vector<double>& ex, std::vector<double>& fin) {
  for (long long t : grid) {
    in.push_back(tr.cum_inpath[t - 1]);
    ex.push_back(tr.cum_expected[t - 1]);
    fin.push_back(tr.cum_finiteH[t - 1]);
  }
}

template <class Run>
SeriesSet run_seeds(long long T, Run&& run) {
  SeriesSet set;
  set.grid = log_grid(T, 40);
  set.t_hi = T;
  set.inpath.resize(kOnlineSeeds);
  set.expected.resize(kOnlineSeeds);
  set.finite.resize(kOnlineSeeds);
  set.lengths.resize(kOnlineSeeds);
  const auto t0 = std::chrono::steady_clock::now();
  std::mutex mu;
  parallel_for(kOnlineSeeds, [&](int seed) {
    try {
      OnlineResult res = run(static_cast<std::uint64_t>(seed));
      int flagged = 0;
      for (const auto& e : res.episodes) flagged += e.flagged;
      std::vector<double> in, ex, fin;
      sample_into(res.trace, set.grid, in, ex, fin);
      std::lock_guard lock(mu);
      set.inpath[seed] = std::move(in);
      set.expected[seed] = std::move(ex);
      set.finite[seed] = std::move(fin);
      set.lengths[seed] = doubling_lengths(res.episodes);
      long long first = -1;
      for (const auto& e : res.episodes)
        if (e.refreshed) {
          first = e.t_start;
          break;
        }
      set.first_plan.push_back(first);
      set.overflows += res.overflows;
      set.flagged += flagged;
      if (seed == 0) set.t_lo = window_start(res.episodes);
    } catch (const std::exception& e) {
      std::lock_guard lock(mu);
      ++set.errors;
      std::fprintf(stderr, "online run seed %d: %s\n", seed, e.what());
    }
  });
  set.seconds = seconds_since(t0);
  return set;
}

enum class Agg { median, rms };

std::vector<double> aggregate(const std::vector<std::vector<double>>& runs, Agg how) {
  std::vector<double> out;
  if (runs.empty() || runs[0].empty()) return out;
  for (std::size_t i = 0; i < runs[0].size(); ++i) {
    std::vector<double> col;
    for (const auto& r : runs)
      if (i < r.size()) col.push_back(r[i]);
    if (how == Agg::median) {
      std::sort(col.begin(), col.end());
      std::size_t n = col.size();
      out.push_back(n % 2 ? col[n / 2] : 0.5 * (col[n / 2 - 1] + col[n / 2]));
    } else {
      double s = 0.0;
      for (double x : col) s += x * x;
      out.push_back(std::sqrt(s / static_cast<double>(col.size())));
    }
  }
  return out;
}

struct WindowSlope {
  double slope = 0.0;
  bool identically_zero = false;
  long long fitted_from = 0;
};

// Slope over [t_lo, t_hi]. A series that is zero throughout the window has
// slope 0; otherwise the fit starts at the first point from which every value
// is positive (cumulative regrets that start exactly at zero).
WindowSlope window_slope(const std::vector<long long>& grid, const std::vector<double>& vals, long long t_lo,
                         long long t_hi) {
  WindowSlope w;
  std::vector<double> t, v;
  for (std::size_t i = 0; i < grid.size(); ++i)
    if (grid[i] >= t_lo && grid[i] <= t_hi) {
      t.push_back(static_cast<double>(grid[i]));
      v.push_back(vals[i]);
    }
  std::size_t first = v.size();
  while (first > 0 && v[first - 1] > 0.0) --first;
  if (first + 2 > v.size()) {
    w.identically_zero = std::all_of(v.begin(), v.end(), [](double x) { return std::abs(x) <= 1e-12; });
    w.slope = w.identically_zero ? 0.0 : std::numeric_limits<double>::quiet_NaN();
    return w;
  }
  w.fitted_from = static_cast<long long>(t[first]);
  w.slope = fit_loglog_slope(t, v, t[first], t.back()).slope;
  return w;
}

std::string describe(const char* label, const WindowSlope& w) {
  if (w.identically_zero) return fmt("%s identically zero on the window (slope 0)", label);
  return fmt("%s slope %.3f (fit from t=%lld)", label, w.slope, w.fitted_from);
}

void slope_check(Verdict& v, const std::string& tag, const char* label, const SeriesSet& s,
                 const std::vector<std::vector<double>>& runs, Agg how, double lo, double hi) {
  WindowSlope w = window_slope(s.grid, aggregate(runs, how), s.t_lo, s.t_hi);
  bool ok = !std::isnan(w.slope) && w.slope >= lo && w.slope <= hi;
  const std::string want = std::isinf(lo) ? fmt("<= %.2f", hi) : fmt("in [%.2f, %.2f]", lo, hi);
  v.check(ok, fmt("%s: %s, want %s", tag.c_str(), describe(label, w).c_str(), want.c_str()));
}

void run_health(Verdict& v, const std::string& tag, const SeriesSet& s) {
  v.check(s.errors == 0 && s.overflows == 0 && s.t_lo > 0,
          fmt("%s: %d seeds, %d exceptions, %d budget overflows, %d flagged episodes, window [%lld, %lld], %.1fs",
              tag.c_str(), kOnlineSeeds, s.errors, s.overflows, s.flagged, s.t_lo, s.t_hi, s.seconds));
  std::vector<long long> f = s.first_plan;
  std::sort(f.begin(), f.end());
  if (!f.empty()) {
    const long long med = f[f.size() / 2];
    v.note(med < 0 ? fmt("%s: most seeds never afford a plan", tag.c_str())
                   : fmt("%s: median first affordable plan at t=%lld", tag.c_str(), med));
  }
}

OnlineConfig online_config(std::uint64_t seed, const FiniteMdp& model) {
  OnlineConfig cfg;
  cfg.seed = seed;
  cfg.delta = kDelta;
  cfg.scale = kScale;
  cfg.qcfg.noise = NoiseMode::uniform;
  cfg.record_steps = false;
  cfg.nu = ergodicity_coefficient(model).nu;
  cfg.Lambda = exact_gain_bias_optimal(model).span_h;
  return cfg;
}

std::vector<std::vector<double>> g_doubling_lengths;  // reused by criterion 6

// The criterion-5 battery. `make_env(T, quantum)` builds the environment for a
// run of T exploration steps.
template <class MakeEnv>
void online_battery(Verdict& v, const std::string& label, MakeEnv&& make_env, double& seconds) {
  const long long Tfin = kOnlineH * kOnlineK;
  for (FiniteMode mode : {FiniteMode::classical, FiniteMode::quantum_modern, FiniteMode::quantum_simple}) {
    const bool quantum = mode != FiniteMode::classical;
    auto holder = make_env(Tfin, quantum);
    const auto& env = *holder;
    OnlineConfig base = online_config(0, env.model());
    SeriesSet s = run_seeds(Tfin, [&](std::uint64_t seed) {
      OnlineConfig cfg = base;
      cfg.seed = seed;
      return run_online_finite(env, kOnlineH, kOnlineK, mode, cfg);
    });
    seconds += s.seconds;
    const std::string tag = fmt("%s finite %s (S=%d)", label.c_str(), to_string(mode), env.num_states());
    run_health(v, tag, s);
    if (quantum)
      slope_check(v, tag, "median Regret_H", s, s.finite, Agg::median, -kInf, kPolylogHi);
    else
      slope_check(v, tag, "median Regret_H", s, s.finite, Agg::median, kSqrtLo, kSqrtHi);
  }
  for (InfiniteMode mode : {InfiniteMode::classical, InfiniteMode::quantum}) {
    const bool quantum = mode == InfiniteMode::quantum;
    auto holder = make_env(kOnlineT, quantum);
    const auto& env = *holder;
    OnlineConfig base = online_config(0, env.model());
    SeriesSet s = run_seeds(kOnlineT, [&](std::uint64_t seed) {
      OnlineConfig cfg = base;
      cfg.seed = seed;
      return run_online_infinite(env, kOnlineT, mode, cfg);
    });
    seconds += s.seconds;
    for (auto& l : s.lengths) g_doubling_lengths.push_back(l);
    const std::string tag = fmt("%s infinite %s (S=%d)", label.c_str(), to_string(mode), env.num_states());
    run_health(v, tag, s);
    slope_check(v, tag, "RMS in-path regret", s, s.inpath, Agg::rms, kSqrtLo, kSqrtHi);
    if (quantum) slope_check(v, tag, "median expected regret", s, s.expected, Agg::median, -kInf, kPolylogHi);
  }
}

Verdict criterion5() {
  Verdict v;
  v.note(fmt("M2, %d seeds, H=%d K=2^14 and T=2^17, c_budget 8, scale 1/64, windows skip %d refreshes",
             kOnlineSeeds, kOnlineH, kSkipRefreshes));
  const FiniteMdp m = fixture_m2();
  double seconds = 0.0;
  online_battery(v, "M2", [&](long long, bool) { return std::make_unique<FiniteEnv>(m); }, seconds);
  v.check(seconds <= kOnlineSeconds, fmt("online runtime %.0fs (limit %.0fs)", seconds, kOnlineSeconds));
  return v;
}

// Smallest n with n^p >= T, i.e. ceil(T^(1/p)) without rounding trouble at exact powers.
int ceil_root(long long T, double p) {
  int n = std::max(1, static_cast<int>(std::floor(std::pow(static_cast<double>(T), 1.0 / p))) - 1);
  while (std::pow(static_cast<double>(n), p) < static_cast<double>(T) * (1.0 - 1e-12)) ++n;
  return n;
}

// Quantize every net point and a lattice four times finer than the net; each
// result must be a nearest net point within the covering radius.
bool exhaustive_net_check(int D, int n, std::string& why) {
  Net net = build_uniform_net(D, n);
  for (std::size_t i = 0; i < net.k; ++i)
    if (quantize(net, net.point(i)) != i) {
      why = fmt("D=%d n=%d: point %zu does not quantize to itself", D, n, i);
      return false;
    }
  const int fine = 4 * n;
  long long probes = 1;
  for (int d = 0; d < D; ++d) probes *= fine + 1;
  std::vector<double> x(D);
  for (long long p = 0; p < probes; ++p) {
    long long rem = p;
    for (int d = 0; d < D; ++d) {
      x[d] = static_cast<double>(rem % (fine + 1)) / fine;
      rem /= fine + 1;
    }
    std::size_t c = quantize(net, x);
    auto dist = [&](std::size_t i) {
      double s = 0.0;
      for (int d = 0; d < D; ++d) s += (x[d] - net.point(i)[d]) * (x[d] - net.point(i)[d]);
      return std::sqrt(s);
    };
    double dc = dist(c), best = dc;
    for (std::size_t i = 0; i < net.k; ++i) best = std::min(best, dist(i));
    if (dc > net.covering_radius() + 1e-12 || dc > best + 1e-12) {
      why = fmt("D=%d n=%d: probe %lld maps to a cell at distance %.3g (nearest %.3g)", D, n, p, dc, best);
      return false;
    }
  }
  return true;
}

Verdict criterion7() {
  Verdict v;
  const CompactMdpSpec spec = fixture_compact_d1();
  const double alpha = spec.cert.alpha;
  v.note(fmt("compactD1 (D=1, alpha=%.0f, L=%.3f); n = ceil(T^(1/3)) classical, ceil(T^(1/2)) quantum; oracles from "
             "the discretized model", alpha, spec.cert.L));
  // Nets are kept alive for the environments that point into them.
  std::vector<std::unique_ptr<Net>> nets;
  double seconds = 0.0;
  online_battery(
      v, "compactD1",
      [&](long long T, bool quantum) {
        int n = ceil_root(T, quantum ? spec.D + alpha : spec.D + 2.0 * alpha);
        nets.push_back(std::make_unique<Net>(build_uniform_net(1, n)));
        return std::make_unique<CompactEnv>(spec, *nets.back());
      },
      seconds);
  v.check(seconds <= kOnlineSeconds, fmt("online runtime %.0fs (limit %.0fs)", seconds, kOnlineSeconds));

  std::string why;
  bool ok = true;
  int nets_checked = 0;
  std::set<std::pair<int, int>> sizes;
  for (int n = 1; n <= 400; ++n) sizes.insert({1, n});
  for (int n = 1; n <= 40; ++n) sizes.insert({2, n});
  for (int n = 1; n <= 8; ++n) sizes.insert({3, n});
  for (const auto& net : nets) sizes.insert({net->D, net->n});
  for (auto [D, n] : sizes) {
    ++nets_checked;
    if (!exhaustive_net_check(D, n, why)) {
      ok = false;
      break;
    }
  }
  v.check(ok, ok ? fmt("covering and quantizer invariants on %d nets (D<=3), every net point and a 4x finer lattice",
                       nets_checked)
                 : why);
  return v;
}

// ---------------------------------------------------------------------------
// Doubling-sum, variance and span-certificate bounds (criterion 6)

// Forward state-action distribution of a deterministic policy started at x at
// step t0; occ[t] is empty for t < t0.
std::vector<std::vector<double>> occupancy(const FiniteMdp& m, const Policy& pi, int t0, int x) {
  const int H = static_cast<int>(pi.size());
  std::vector<std::vector<double>> occ(H);
  std::vector<double> d(m.S, 0.0);
  d[x] = 1.0;
  for (int t = t0; t < H; ++t) {
    occ[t].assign(static_cast<std::size_t>(m.S) * m.A, 0.0);
    std::vector<double> nd(m.S, 0.0);
    for (int s = 0; s < m.S; ++s) {
      int a = pi[t].actions[s];
      occ[t][m.sa(s, a)] += d[s];
      for (int s2 = 0; s2 < m.S; ++s2) nd[s2] += d[s] * m.p(s, a, s2);
    }
    d = nd;
  }
  return occ;
}

Verdict criterion6(bool have_avg, bool have_online) {
  Verdict v;
  // Summation bounds on random admissible sequences.
  {
    std::mt19937_64 g(2024);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    int bad = 0, inadmissible = 0;
    for (int trial = 0; trial < 1000; ++trial) {
      int n = 1 + static_cast<int>(g() % 60);
      std::vector<double> z;
      double acc = 0.0;
      for (int k = 0; k < n; ++k) {
        double Z = std::max(1.0, acc), r = U(g);
        double zk = r < 0.2 ? Z : r < 0.3 ? 0.0 : U(g) * Z;
        z.push_back(zk);
        acc += zk;
      }
      auto c = doubling_bound_check(z);
      inadmissible += !c.admissible;
      bad += !c.ok;
    }
    v.check(bad == 0 && inadmissible == 0,
            fmt("doubling sums: %d violations on 1000 random admissible sequences", bad));
    if (have_online) {
      int bad_runs = 0;
      for (const auto& l : g_doubling_lengths) bad_runs += !doubling_bound_check(l).ok;
      v.check(bad_runs == 0, fmt("doubling sums: %d violations on the %zu episode-length sequences of the online runs",
                                 bad_runs, g_doubling_lengths.size()));
    }
  }
  // Total standard deviation <= H^{3/2} and summed variances <= 4 H^3.
  {
    int bad_std = 0, bad_var = 0;
    double worst_std = 0.0, worst_var = 0.0;
    for (int inst = 0; inst < 50; ++inst) {
      const int S = 1 + inst % 4, A = 1 + (inst / 4) % 4, H = 1 + inst % 6;
      FiniteMdp m = generate_random_mdp(S, A, 0.3 * (inst % 3), 500 + inst);
      std::mt19937_64 g(inst);
      Policy pi;
      for (int t = 0; t < H; ++t) {
        std::vector<int> a(S);
        for (auto& x : a) x = std::uniform_int_distribution<int>(0, A - 1)(g);
        pi.push_back(DecisionRule::deterministic(a));
      }
      auto ev = policy_value_finite(m, pi, H);
      for (int t0 = 0; t0 < H; ++t0)
        for (int x = 0; x < S; ++x) {
          auto occ = occupancy(m, pi, t0, x);
          double std_sum = 0.0, var_sum = 0.0;
          for (int t = t0; t + 1 < H; ++t)
            for (std::size_t i = 0; i < occ[t].size(); ++i) {
              std_sum += occ[t][i] * std::sqrt(ev.sigma[t + 1][i]);
              for (int k = 0; k < H; ++k) var_sum += occ[t][i] * ev.sigma[k][i];
            }
          worst_std = std::max(worst_std, std_sum / std::pow(H, 1.5));
          worst_var = std::max(worst_var, var_sum / (4.0 * H * H * H));
          bad_std += std_sum > std::pow(H, 1.5) + 1e-12;
          bad_var += var_sum > 4.0 * H * H * H + 1e-12;
        }
    }
    v.check(bad_std == 0, fmt("total std <= H^1.5: %d violations on 50 tiny MDPs (worst ratio %.3f)", bad_std, worst_std));
    v.check(bad_var == 0, fmt("summed variance <= 4H^3: %d violations (worst ratio %.3f)", bad_var, worst_var));
  }
  if (have_avg) {
    int sweeps = 0, fails = 0;
    for (const auto& [tag, r] : g_avg_rows) {
      sweeps += r.sweeps;
      fails += r.cert_fail;
    }
    v.check(fails == 0, fmt("span certificate: %d failing runs over %d recorded sweeps of criterion 4", fails, sweeps));
  } else {
    v.check(false, "span certificate needs criterion 4 in the same invocation");
  }
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> want;
  for (int i = 1; i < argc; ++i) want.insert(std::atoi(argv[i]));
  if (want.empty()) want = {1, 2, 3, 4, 5, 6, 7};
  // Criterion 6 consumes the runs of criteria 4 and 5.
  if (want.count(6)) want.insert(4);

  bool all = true;
  auto run = [&](int id, const char* title, const std::function<Verdict()>& f) {
    if (!want.count(id)) return;
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v = f();
    report(id, title, v, seconds_since(t0));
    all = all && v.pass;
  };
  run(1, "classical finite-horizon planner correctness", criterion1);
  run(2, "quantum-emulated finite-horizon planner correctness", criterion2);
  run(3, "query scaling and ledger identities", criterion3);
  run(4, "average-reward planners", criterion4);
  run(5, "regret scaling on M2", criterion5);
  run(7, "discretized compact-state online runs", criterion7);
  run(6, "doubling, variance and span bounds", [&] { return criterion6(want.count(4) > 0, want.count(5) || want.count(7)); });
  std::printf("ACCEPTANCE %s\n", all ? "PASS" : "FAIL");
  return all ? 0 : 1;
}
