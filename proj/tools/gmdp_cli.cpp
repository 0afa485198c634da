// Command-line driver: instance generation, planners, online runs, exact
// oracles and slope fits. Every run writes manifest.json next to its outputs.
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "gmdp/bench.hpp"
#include "gmdp/io.hpp"
#include "gmdp/online.hpp"
#include "gmdp/plan_finite.hpp"
#include "gmdp/plan_infinite.hpp"

#ifndef GMDP_GIT_DESCRIBE
#define GMDP_GIT_DESCRIBE "unknown"
#endif

namespace fs = std::filesystem;
using namespace gmdp;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitHypothesis = 2;
constexpr int kExitOverflow = 3;

struct RandomSpec {
  int S = 2, A = 2;
  double lambda = 0.5;
  std::uint64_t seed = 0;
};

struct CompactSpec {
  int D = 1, A = 2;
  double beta = 1.0;
  std::uint64_t seed = 0;
};

struct InstanceSpec {
  std::string fixture;
  std::optional<RandomSpec> random;
  std::optional<CompactSpec> compact;
  std::string mdp_file;
  int net_n = 0;
};

struct ExperimentConfig {
  InstanceSpec instance;
  std::string mode;
  int H = 2;
  long long K = 1024;
  long long T = 4096;
  double eps = 0.1;
  double delta = 0.1;
  std::vector<std::uint64_t> seeds{0};
  std::string noise = "uniform";
  double scale = 1.0;
  double c_budget = 8.0;
  std::string out = ".";
  bool strict = false;
  std::optional<double> Lambda, nu, budget;
};

void reject_unknown(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw InvalidInput(where + ": expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || it.key() == a;
    if (!ok) throw InvalidInput(where + ": unknown key '" + it.key() + "'");
  }
}

template <class T>
void read(const json& j, const char* key, T& dst) {
  if (j.contains(key)) dst = j.at(key).get<T>();
}

template <class T>
void read(const json& j, const char* key, std::optional<T>& dst) {
  if (j.contains(key)) dst = j.at(key).get<T>();
}

ExperimentConfig config_from_json(const json& j) {
  reject_unknown(j,
                 {"instance", "mode", "H", "K", "T", "eps", "delta", "seeds", "noise", "scale", "c_budget", "out",
                  "strict", "Lambda", "nu", "budget"},
                 "config");
  ExperimentConfig c;
  if (j.contains("instance")) {
    const json& i = j.at("instance");
    reject_unknown(i, {"fixture", "random", "compact", "mdp_file", "net_n"}, "config.instance");
    read(i, "fixture", c.instance.fixture);
    read(i, "mdp_file", c.instance.mdp_file);
    read(i, "net_n", c.instance.net_n);
    if (i.contains("random")) {
      const json& r = i.at("random");
      reject_unknown(r, {"S", "A", "lambda", "seed"}, "config.instance.random");
      RandomSpec rs;
      read(r, "S", rs.S);
      read(r, "A", rs.A);
      read(r, "lambda", rs.lambda);
      read(r, "seed", rs.seed);
      c.instance.random = rs;
    }
    if (i.contains("compact")) {
      const json& r = i.at("compact");
      reject_unknown(r, {"D", "A", "beta", "seed"}, "config.instance.compact");
      CompactSpec cs;
      read(r, "D", cs.D);
      read(r, "A", cs.A);
      read(r, "beta", cs.beta);
      read(r, "seed", cs.seed);
      c.instance.compact = cs;
    }
  }
  read(j, "mode", c.mode);
  read(j, "H", c.H);
  read(j, "K", c.K);
  read(j, "T", c.T);
  read(j, "eps", c.eps);
  read(j, "delta", c.delta);
  read(j, "seeds", c.seeds);
  read(j, "noise", c.noise);
  read(j, "scale", c.scale);
  read(j, "c_budget", c.c_budget);
  read(j, "out", c.out);
  read(j, "strict", c.strict);
  read(j, "Lambda", c.Lambda);
  read(j, "nu", c.nu);
  read(j, "budget", c.budget);
  return c;
}

json to_json(const ExperimentConfig& c) {
  json inst = json::object();
  if (!c.instance.fixture.empty()) inst["fixture"] = c.instance.fixture;
  if (!c.instance.mdp_file.empty()) inst["mdp_file"] = c.instance.mdp_file;
  if (c.instance.net_n > 0) inst["net_n"] = c.instance.net_n;
  if (c.instance.random) {
    const auto& r = *c.instance.random;
    inst["random"] = {{"S", r.S}, {"A", r.A}, {"lambda", r.lambda}, {"seed", r.seed}};
  }
  if (c.instance.compact) {
    const auto& r = *c.instance.compact;
    inst["compact"] = {{"D", r.D}, {"A", r.A}, {"beta", r.beta}, {"seed", r.seed}};
  }
  json j{{"instance", inst}, {"mode", c.mode},   {"H", c.H},          {"K", c.K},         {"T", c.T},
         {"eps", c.eps},     {"delta", c.delta}, {"seeds", c.seeds},  {"noise", c.noise}, {"scale", c.scale},
         {"c_budget", c.c_budget}, {"out", c.out}, {"strict", c.strict}};
  if (c.Lambda) j["Lambda"] = *c.Lambda;
  if (c.nu) j["nu"] = *c.nu;
  if (c.budget) j["budget"] = *c.budget;
  return j;
}

std::string file_hash(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return config_hash(json(ss.str()));
}

// Owns whichever model the instance spec describes and the environment over it.
struct Problem {
  FiniteMdp mdp;
  std::optional<CompactMdpSpec> spec;
  std::optional<Net> net;
  std::unique_ptr<FiniteEnv> finite_env;
  std::unique_ptr<CompactEnv> compact_env;

  const FiniteMdp& model() const { return compact_env ? compact_env->model() : mdp; }

  template <class F>
  auto visit(F&& f) const {
    return compact_env ? f(*compact_env) : f(*finite_env);
  }
};

std::unique_ptr<Problem> load_problem(const InstanceSpec& in) {
  auto p = std::make_unique<Problem>();
  int sources = !in.fixture.empty() + in.random.has_value() + in.compact.has_value() + !in.mdp_file.empty();
  if (sources != 1) throw InvalidInput("give exactly one instance: --fixture, --random, --compact or --mdp");
  if (!in.fixture.empty()) {
    auto f = fixture(in.fixture);
    if (auto* m = std::get_if<FiniteMdp>(&f))
      p->mdp = *m;
    else
      p->spec = std::get<CompactMdpSpec>(f);
  } else if (in.random) {
    p->mdp = generate_random_mdp(in.random->S, in.random->A, in.random->lambda, in.random->seed);
  } else if (in.compact) {
    p->spec = make_holder_family(in.compact->D, in.compact->A, in.compact->beta, in.compact->seed);
  } else {
    std::ifstream f(in.mdp_file);
    if (!f) throw InvalidInput("cannot open " + in.mdp_file);
    p->mdp = finite_mdp_from_json(json::parse(f));
  }
  if (p->spec) {
    if (in.net_n < 1) throw InvalidInput("compact instances need --net n");
    p->net = build_uniform_net(p->spec->D, in.net_n);
    p->compact_env = std::make_unique<CompactEnv>(*p->spec, *p->net);
  } else {
    p->finite_env = std::make_unique<FiniteEnv>(p->mdp);
  }
  return p;
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream f(path);
  if (!f) throw InvalidInput("cannot write " + path.string());
  f << j.dump(2) << '\n';
}

struct RunContext {
  std::string command;
  ExperimentConfig cfg;
  fs::path out;
  json outputs = json::array();
  json derived = json::object();  // values computed rather than configured

  void emit(const std::string& name, const json& j) {
    write_json(out / name, j);
    outputs.push_back(name);
  }

  void write_manifest() const {
    json cj = to_json(cfg);
    json m{{"command", command},        {"config", cj},           {"config_hash", config_hash(cj)},
           {"seeds", cfg.seeds},        {"git_describe", GMDP_GIT_DESCRIBE},
           {"derived", derived},        {"outputs", outputs}};
    if (!cfg.instance.mdp_file.empty()) m["inputs"] = {{cfg.instance.mdp_file, file_hash(cfg.instance.mdp_file)}};
    write_json(out / "manifest.json", m);
  }
};

QuantumEmulationConfig qcfg_of(const ExperimentConfig& c) {
  QuantumEmulationConfig q;
  q.noise = parse_noise_mode(c.noise);
  return q;
}

// ---------------------------------------------------------------------------

void cmd_gen_mdp(RunContext& ctx) {
  auto p = load_problem(ctx.cfg.instance);
  ctx.emit("mdp.json", to_json(p->model()));
  if (p->spec) ctx.emit("compact_spec.json", to_json(*p->spec));
}

void cmd_oracle(RunContext& ctx) {
  auto p = load_problem(ctx.cfg.instance);
  const FiniteMdp& m = p->model();
  auto opt = exact_gain_bias_optimal(m);
  auto fin = exact_backward_induction(m, ctx.cfg.H);
  json pol = json::array();
  for (const auto& d : fin.pi) pol.push_back(to_json(d));
  ctx.emit("oracle.json", json{{"S", m.S},
                               {"A", m.A},
                               {"nu", ergodicity_coefficient(m).nu},
                               {"average_reward", {{"g_star", opt.g}, {"bias", opt.h}, {"span_h", opt.span_h},
                                                   {"rule", to_json(opt.rule)}}},
                               {"finite_horizon", {{"H", ctx.cfg.H}, {"V", fin.V}, {"policy", pol}}}});
}

void cmd_plan_finite(RunContext& ctx) {
  const auto& c = ctx.cfg;
  auto p = load_problem(c.instance);
  const std::string mode = c.mode.empty() ? "classical" : c.mode;
  if (mode != "classical" && mode != "quantum_modern" && mode != "quantum_simple")
    throw InvalidInput("plan-finite --mode must be classical, quantum_modern or quantum_simple");
  json runs = json::array();
  for (std::uint64_t seed : c.seeds) {
    FinitePlanConfig pc;
    pc.H = c.H;
    pc.eps = c.eps;
    pc.delta = c.delta;
    pc.scale = c.scale;
    pc.qcfg = qcfg_of(c);
    pc.record_epochs = false;
    QueryLedger ledger(c.strict);
    ledger.begin_phase(c.budget);
    Stream rng(seed, stream_id::planner);
    PlannerOutput out = p->visit([&](const auto& env) {
      if (mode == "classical") return classical_backward_induction(env, pc, ledger, rng);
      if (mode == "quantum_modern") return quantum_modern_backward_induction(env, pc, ledger, rng);
      return quantum_simple_backward_induction(env, pc, ledger, rng);
    });
    ledger.end_phase();
    runs.push_back({{"seed", seed}, {"output", to_json(out)}, {"ledger", to_json(ledger)},
                    {"overflow", ledger.overflow_count() > 0}});
  }
  ctx.emit("plan_finite.json", runs);
}

VIConfig vi_config(RunContext& ctx, const FiniteMdp& m) {
  const auto& c = ctx.cfg;
  VIConfig vc;
  vc.eps = c.eps;
  vc.delta = c.delta;
  vc.scale = c.scale;
  vc.qcfg = qcfg_of(c);
  vc.budget = c.budget;
  vc.nu = c.nu ? *c.nu : ergodicity_coefficient(m).nu;
  vc.Lambda = c.Lambda ? *c.Lambda : exact_gain_bias_optimal(m).span_h;
  if (!c.nu) ctx.derived["nu"] = vc.nu;
  if (!c.Lambda) ctx.derived["Lambda"] = vc.Lambda;
  return vc;
}

void cmd_plan_infinite(RunContext& ctx) {
  const auto& c = ctx.cfg;
  auto p = load_problem(c.instance);
  const std::string mode = c.mode.empty() ? "classical" : c.mode;
  if (mode != "classical" && mode != "quantum") throw InvalidInput("plan-infinite --mode must be classical or quantum");
  VIConfig vc = vi_config(ctx, p->model());
  json runs = json::array();
  for (std::uint64_t seed : c.seeds) {
    QueryLedger ledger(c.strict);
    ledger.begin_phase(c.budget);
    Stream rng(seed, stream_id::planner);
    VIOutput out = p->visit([&](const auto& env) {
      return mode == "classical" ? classical_value_iteration(env, vc, ledger, rng)
                                 : quantum_value_iteration(env, vc, ledger, rng);
    });
    ledger.end_phase();
    runs.push_back({{"seed", seed}, {"output", to_json(out)}, {"ledger", to_json(ledger)}});
  }
  ctx.emit("plan_infinite.json", runs);
}

template <class Mode>
Mode parse_mode(const std::string& s, std::initializer_list<Mode> modes, const char* what) {
  for (Mode m : modes)
    if (s == to_string(m)) return m;
  throw InvalidInput(std::string("unknown ") + what + " mode '" + s + "'");
}

OnlineConfig online_config(const ExperimentConfig& c, std::uint64_t seed) {
  OnlineConfig oc;
  oc.delta = c.delta;
  oc.c_budget = c.c_budget;
  oc.scale = c.scale;
  oc.qcfg = qcfg_of(c);
  oc.seed = seed;
  oc.strict = c.strict;
  return oc;
}

void emit_trace(RunContext& ctx, std::uint64_t seed, const OnlineResult& r, json& summary) {
  const std::string stem = "trace_seed" + std::to_string(seed);
  {
    std::ofstream f(ctx.out / (stem + ".csv"));
    if (!f) throw InvalidInput("cannot write trace CSV");
    write_trace_csv(f, r.trace);
    ctx.outputs.push_back(stem + ".csv");
  }
  ctx.emit(stem + ".json", trace_sidecar(r));
  auto last = [](const std::vector<double>& v) { return v.empty() || std::isnan(v.back()) ? json(nullptr) : json(v.back()); };
  summary.push_back({{"seed", seed},
                     {"steps", r.trace.size()},
                     {"refreshes", r.refreshes},
                     {"overflows", r.overflows},
                     {"cum_inpath", last(r.trace.cum_inpath)},
                     {"cum_expected", last(r.trace.cum_expected)},
                     {"cum_finiteH", last(r.trace.cum_finiteH)}});
}

int cmd_online_finite(RunContext& ctx) {
  const auto& c = ctx.cfg;
  auto p = load_problem(c.instance);
  FiniteMode mode = parse_mode(c.mode.empty() ? "classical" : c.mode,
                               {FiniteMode::classical, FiniteMode::quantum_modern, FiniteMode::quantum_simple,
                                FiniteMode::oracle_exact},
                               "online-finite");
  json summary = json::array();
  int overflows = 0;
  for (std::uint64_t seed : c.seeds) {
    OnlineResult r = p->visit([&](const auto& env) { return run_online_finite(env, c.H, c.K, mode, online_config(c, seed)); });
    overflows += r.overflows;
    emit_trace(ctx, seed, r, summary);
  }
  ctx.emit("summary.json", summary);
  return c.strict && overflows > 0 ? kExitOverflow : 0;
}

int cmd_online_infinite(RunContext& ctx) {
  const auto& c = ctx.cfg;
  auto p = load_problem(c.instance);
  InfiniteMode mode = parse_mode(c.mode.empty() ? "classical" : c.mode,
                                 {InfiniteMode::classical, InfiniteMode::quantum, InfiniteMode::oracle_exact},
                                 "online-infinite");
  VIConfig vc = vi_config(ctx, p->model());
  json summary = json::array();
  int overflows = 0;
  for (std::uint64_t seed : c.seeds) {
    OnlineConfig oc = online_config(c, seed);
    oc.nu = vc.nu;
    oc.Lambda = vc.Lambda;
    OnlineResult r = p->visit([&](const auto& env) { return run_online_infinite(env, c.T, mode, oc); });
    overflows += r.overflows;
    emit_trace(ctx, seed, r, summary);
  }
  ctx.emit("summary.json", summary);
  return c.strict && overflows > 0 ? kExitOverflow : 0;
}

struct FitArgs {
  std::string trace;
  std::string column = "cum_inpath";
  std::optional<double> lo, hi;
};

void cmd_fit(RunContext& ctx, const FitArgs& a) {
  std::ifstream f(a.trace);
  if (!f) throw InvalidInput("cannot open trace " + a.trace);
  std::string line;
  std::getline(f, line);
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) header.push_back(cell);
  }
  auto col = std::find(header.begin(), header.end(), a.column);
  if (header.empty() || header[0] != "t" || col == header.end())
    throw InvalidInput("trace lacks a t column or the column '" + a.column + "'");
  const std::size_t idx = static_cast<std::size_t>(col - header.begin());
  std::vector<double> t, v;
  while (std::getline(f, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
    if (cells.size() <= idx || cells[idx].empty()) continue;
    t.push_back(std::stod(cells[0]));
    v.push_back(std::stod(cells[idx]));
  }
  if (t.empty()) throw InvalidInput("no values in column '" + a.column + "'");
  SlopeFit fit = fit_loglog_slope(t, v, a.lo.value_or(t.front()), a.hi.value_or(t.back()));
  json j{{"trace", a.trace}, {"column", a.column},     {"slope", fit.slope},   {"intercept", fit.intercept},
         {"t_lo", fit.t_lo}, {"t_hi", fit.t_hi},       {"residual", fit.residual}, {"points", fit.points}};
  std::cout << j.dump(2) << '\n';
  ctx.emit("fit.json", j);
}

// Flags shared by every subcommand; each overrides the config file when given.
struct CommonFlags {
  std::string config_file;
  ExperimentConfig flags;
  std::vector<double> random, compact;
  std::uint64_t seed = 0;
  int seeds = 1;
  CLI::App* app = nullptr;

  void attach(CLI::App* sub) {
    app = sub;
    sub->add_option("--config", config_file, "ExperimentConfig JSON; flags override its fields")->check(CLI::ExistingFile);
    sub->add_option("--fixture", flags.instance.fixture, "M2, riverswim6 or compactD1");
    sub->add_option("--random", random, "random MDP: S,A,lambda,seed")->expected(4)->delimiter(',');
    sub->add_option("--compact", compact, "Holder family: D,A,beta,seed")->expected(4)->delimiter(',');
    sub->add_option("--mdp", flags.instance.mdp_file, "FiniteMdp JSON file")->check(CLI::ExistingFile);
    sub->add_option("--net", flags.instance.net_n, "net resolution n for compact instances");
    sub->add_option("--mode", flags.mode, "algorithm mode");
    sub->add_option("--H", flags.H, "horizon");
    sub->add_option("--K", flags.K, "episodes (online-finite)");
    sub->add_option("--T", flags.T, "steps (online-infinite)");
    sub->add_option("--eps", flags.eps, "accuracy");
    sub->add_option("--delta", flags.delta, "failure probability");
    sub->add_option("--seed", seed, "first seed");
    sub->add_option("--seeds", seeds, "number of consecutive seeds");
    sub->add_option("--noise", flags.noise, "exact, uniform or signed_worst");
    sub->add_option("--scale", flags.scale, "multiplier on classical sample counts");
    sub->add_option("--budget-const", flags.c_budget, "c_budget of the online generative phases");
    sub->add_option("--budget", flags.budget, "query budget of a single planner run");
    sub->add_option("--Lambda", flags.Lambda, "bias-span bound (default: exact)");
    sub->add_option("--nu", flags.nu, "span contraction coefficient (default: exact)");
    sub->add_flag("--strict", flags.strict, "abort on budget overflow (exit 3)");
    sub->add_option("--out", flags.out, "output directory");
  }

  bool given(const char* name) const { return app->count(name) > 0; }

  ExperimentConfig resolve() const {
    ExperimentConfig c;
    if (!config_file.empty()) {
      std::ifstream f(config_file);
      c = config_from_json(json::parse(f));
    }
    const bool instance_flag = given("--fixture") || given("--random") || given("--compact") || given("--mdp");
    if (instance_flag) c.instance = InstanceSpec{};
    if (given("--fixture")) c.instance.fixture = flags.instance.fixture;
    if (given("--mdp")) c.instance.mdp_file = flags.instance.mdp_file;
    if (given("--random"))
      c.instance.random = RandomSpec{static_cast<int>(random[0]), static_cast<int>(random[1]), random[2],
                                     static_cast<std::uint64_t>(random[3])};
    if (given("--compact"))
      c.instance.compact = CompactSpec{static_cast<int>(compact[0]), static_cast<int>(compact[1]), compact[2],
                                       static_cast<std::uint64_t>(compact[3])};
    if (given("--net")) c.instance.net_n = flags.instance.net_n;
    if (given("--mode")) c.mode = flags.mode;
    if (given("--H")) c.H = flags.H;
    if (given("--K")) c.K = flags.K;
    if (given("--T")) c.T = flags.T;
    if (given("--eps")) c.eps = flags.eps;
    if (given("--delta")) c.delta = flags.delta;
    if (given("--noise")) c.noise = flags.noise;
    if (given("--scale")) c.scale = flags.scale;
    if (given("--budget-const")) c.c_budget = flags.c_budget;
    if (given("--budget")) c.budget = flags.budget;
    if (given("--Lambda")) c.Lambda = flags.Lambda;
    if (given("--nu")) c.nu = flags.nu;
    if (given("--strict")) c.strict = flags.strict;
    if (given("--out")) c.out = flags.out;
    if (given("--seed") || given("--seeds")) {
      if (seeds < 1) throw InvalidInput("--seeds must be at least 1");
      c.seeds.clear();
      for (int i = 0; i < seeds; ++i) c.seeds.push_back(seed + static_cast<std::uint64_t>(i));
    }
    if (c.seeds.empty()) throw InvalidInput("no seeds given");
    return c;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Planning and online learning for MDPs with classical and emulated quantum generative access"};
  app.require_subcommand(1);

  const char* names[] = {"gen-mdp", "plan-finite", "plan-infinite", "online-finite", "online-infinite", "oracle", "fit"};
  const char* help[] = {"write the resolved instance as FiniteMdp JSON",
                        "finite-horizon planners (classical, quantum_modern, quantum_simple)",
                        "average-reward value iteration (classical, quantum)",
                        "episodic online learning with policy refreshes at powers of two",
                        "average-reward online learning with doubling episodes",
                        "exact solvers: optimal values, gain and bias, contraction coefficient",
                        "log-log slope of a trace column"};
  std::vector<CommonFlags> common(std::size(names));
  std::vector<CLI::App*> subs;
  FitArgs fit;
  for (std::size_t i = 0; i < std::size(names); ++i) {
    CLI::App* sub = app.add_subcommand(names[i], help[i]);
    common[i].attach(sub);
    subs.push_back(sub);
  }
  CLI::App* fit_sub = subs.back();
  fit_sub->add_option("--trace", fit.trace, "trace CSV")->required()->check(CLI::ExistingFile);
  fit_sub->add_option("--column", fit.column, "cum_inpath, cum_expected or cum_finiteH");
  fit_sub->add_option("--lo", fit.lo, "window start");
  fit_sub->add_option("--hi", fit.hi, "window end");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    for (std::size_t i = 0; i < subs.size(); ++i) {
      if (!subs[i]->parsed()) continue;
      RunContext ctx;
      ctx.command = names[i];
      ctx.cfg = common[i].resolve();
      ctx.out = ctx.cfg.out;
      fs::create_directories(ctx.out);
      int rc = 0;
      const std::string cmd = names[i];
      if (cmd == "gen-mdp") cmd_gen_mdp(ctx);
      else if (cmd == "oracle") cmd_oracle(ctx);
      else if (cmd == "plan-finite") cmd_plan_finite(ctx);
      else if (cmd == "plan-infinite") cmd_plan_infinite(ctx);
      else if (cmd == "online-finite") rc = cmd_online_finite(ctx);
      else if (cmd == "online-infinite") rc = cmd_online_infinite(ctx);
      else cmd_fit(ctx, fit);
      ctx.write_manifest();
      return rc;
    }
  } catch (const HypothesisViolation& e) {
    std::cerr << "hypothesis violation: " << e.what() << '\n';
    return kExitHypothesis;
  } catch (const BudgetOverflow& e) {
    std::cerr << "budget overflow: " << e.what() << '\n';
    return kExitOverflow;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}
