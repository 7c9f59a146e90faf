#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "goldsci/cli.hpp"
#include "goldsci/design.hpp"
#include "goldsci/error.hpp"
#include "goldsci/report.hpp"
#include "goldsci/simulate.hpp"

namespace goldsci::cli {

namespace {

constexpr std::uint64_t kDefaultSeed = 20240101;

const std::map<std::string, std::string>& key_help() {
  static const std::map<std::string, std::string> help = {
      {"alpha", "one-sided significance level (default 0.025)"},
      {"delta0", "non-inferiority margin"},
      {"delta1", "relevance margin for E versus P"},
      {"r", "fraction of the historical reference effect used as margin"},
      {"mu_r_hist", "historical reference effect"},
      {"q", "decay base of the informative bounds (default 0.01)"},
      {"single_step_rho", "single-step correlation convention: exact|squared"},
      {"sigma", "known common standard deviation"},
      {"sd_e", "observed SD in E (pooled-variance analysis)"},
      {"sd_r", "observed SD in R"},
      {"sd_p", "observed SD in P"},
      {"n_e", "sample size of E"},
      {"n_r", "sample size of R"},
      {"n_p", "sample size of P"},
      {"mean_e", "observed mean of E"},
      {"mean_r", "observed mean of R"},
      {"mean_p", "observed mean of P"},
      {"c_r", "fixed ratio n_R / n_E (design without optimization)"},
      {"c_p", "fixed ratio n_P / n_E"},
      {"method", "iu, informative, single-step, baseline, all, or a comma list"},
      {"effect_ep", "assumed mu_E - mu_P"},
      {"effect_rp", "assumed mu_R - mu_P"},
      {"v_list", "comma list of reference effect ratios v"},
      {"weights", "comma list of weights for v_list"},
      {"target_power", "target success probability (default 0.9)"},
      {"mode", "success probability evaluation: analytic|quadrature|mc"},
      {"reps", "Monte Carlo replications (default 100000)"},
      {"seed", "random seed"},
      {"threads", "worker threads (0 = all cores)"},
      {"output_format", "text|csv|json"},
  };
  return help;
}

struct CommandOptions {
  std::string config_path;
  std::string out_path;
  std::string mixture;
  bool dump = false;
  std::map<std::string, std::string> raw;
  std::map<std::string, CLI::Option*> opts;
  CLI::Option* mixture_opt = nullptr;
};

void add_common(CLI::App* sub, CommandOptions& o) {
  sub->add_option("--config", o.config_path, "key = value settings file; flags override it");
  sub->add_option("--out", o.out_path, "write the report to this file instead of stdout");
  sub->add_flag("--dump-config", o.dump, "print the merged settings as a config file and exit");
  for (const auto& key : RunConfig::known_keys()) {
    std::string names = RunConfig::flag_name(key);
    if (key == "output_format") names += ",--format";
    o.opts[key] = sub->add_option(names, o.raw[key], key_help().at(key));
  }
}

// --mixture "v:w,v:w" is shorthand for v_list + weights.
void apply_mixture(const std::string& spec, RunConfig& cfg) {
  std::string vs, ws;
  std::string_view rest = spec;
  while (!rest.empty()) {
    const auto comma = rest.find(',');
    const std::string_view item = rest.substr(0, comma);
    const auto colon = item.find(':');
    if (colon == std::string_view::npos) throw DomainError("--mixture expects v:weight pairs");
    if (!vs.empty()) {
      vs += ',';
      ws += ',';
    }
    vs += item.substr(0, colon);
    ws += item.substr(colon + 1);
    if (comma == std::string_view::npos) break;
    rest = rest.substr(comma + 1);
  }
  if (vs.empty()) throw DomainError("--mixture is empty");
  cfg.set("v_list", vs);
  cfg.set("weights", ws);
}

RunConfig resolve(const CommandOptions& o) {
  RunConfig cfg;
  if (!o.config_path.empty()) cfg.load(o.config_path);
  for (const auto& [key, opt] : o.opts) {
    if (opt->count() > 0) cfg.set(key, o.raw.at(key));
  }
  if (o.mixture_opt != nullptr && o.mixture_opt->count() > 0) apply_mixture(o.mixture, cfg);
  return cfg;
}

std::vector<Method> methods_from(const RunConfig& cfg) {
  const std::string spec = cfg.get("method").value_or("all");
  if (spec == "all") {
    return {Method::IU, Method::Informative, Method::SingleStep, Method::BaselineNoSci};
  }
  std::vector<Method> out;
  std::string_view rest = spec;
  while (true) {
    const auto comma = rest.find(',');
    out.push_back(parse_method(rest.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    rest = rest.substr(comma + 1);
  }
  return out;
}

DesignParams params_from(const RunConfig& cfg) {
  DesignParams p;
  const double alpha = cfg.get_double("alpha", 0.025);
  const double q = cfg.get_double("q", 0.01);
  const bool historical = cfg.has("r") && cfg.has("mu_r_hist");
  if (historical && !cfg.has("delta0") && !cfg.has("delta1")) {
    p = DesignParams::from_historical(alpha, cfg.require_double("r"), cfg.require_double("mu_r_hist"), q);
  } else {
    p.alpha = alpha;
    p.q = q;
    p.delta0 = cfg.require_double("delta0");
    p.delta1 = cfg.require_double("delta1");
  }
  if (const auto rho = cfg.get("single_step_rho")) p.single_step_rho = parse_single_step_rho(*rho);
  p.validate();
  return p;
}

TrialData trial_from(const RunConfig& cfg) {
  TrialData t;
  t.arm_E.mean = cfg.require_double("mean_e");
  t.arm_R.mean = cfg.require_double("mean_r");
  t.arm_P.mean = cfg.require_double("mean_p");
  t.arm_E.n = cfg.require_int("n_e");
  t.arm_R.n = cfg.require_int("n_r");
  t.arm_P.n = cfg.require_int("n_p");
  const bool any_sd = cfg.has("sd_e") || cfg.has("sd_r") || cfg.has("sd_p");
  if (any_sd) {
    if (cfg.has("sigma")) throw DomainError("give either --sigma or --sd-e/--sd-r/--sd-p, not both");
    t.arm_E.sd = cfg.require_double("sd_e");
    t.arm_R.sd = cfg.require_double("sd_r");
    t.arm_P.sd = cfg.require_double("sd_p");
    t.variance = PooledPerComparison{};
  } else {
    t.variance = KnownSigma{cfg.require_double("sigma")};
  }
  t.validate();
  return t;
}

unsigned workers_from(const RunConfig& cfg) {
  const std::uint64_t w = cfg.get_u64("threads", 0);
  if (w > 1024) throw DomainError("--threads must be at most 1024");
  return static_cast<unsigned>(w);
}

EvalOptions eval_from(const RunConfig& cfg, Method method) {
  EvalOptions e = default_eval(method);
  if (const auto mode = cfg.get("mode")) {
    if (*mode == "analytic") {
      e.mode = EvalMode::Analytic;
    } else if (*mode == "quadrature") {
      e.mode = EvalMode::Quadrature;
    } else if (*mode == "mc") {
      e.mode = EvalMode::MonteCarlo;
    } else {
      throw DomainError("unknown mode '" + *mode + "' (expected analytic, quadrature or mc)");
    }
  }
  e.reps = cfg.get_u64("reps", e.reps);
  e.seed = cfg.get_u64("seed", e.seed);
  e.workers = workers_from(cfg);
  return e;
}

report::Format format_from(const RunConfig& cfg) {
  return report::parse_format(cfg.get("output_format").value_or("text"));
}

struct DesignInput {
  MixtureScenario mixture;
  std::string label;
};

DesignInput design_input_from(const RunConfig& cfg) {
  DesignInput in;
  const double effect_ep = cfg.require_double("effect_ep");
  const double sigma = cfg.require_double("sigma");
  if (cfg.has("v_list")) {
    const double mu = cfg.require_double("mu_r_hist");
    const std::vector<double> vs = cfg.get_double_list("v_list");
    std::vector<double> ws = cfg.get_double_list("weights");
    if (ws.empty() && vs.size() == 1) ws = {1.0};
    if (ws.size() != vs.size()) throw DomainError("--v-list and --weights must have the same length");
    for (std::size_t i = 0; i < vs.size(); ++i) {
      in.mixture.components.push_back({EffectScenario::from_ratio(effect_ep, vs[i], mu, sigma), ws[i]});
      if (i > 0) in.label += ';';
      in.label += "v=" + report::format_number(vs[i]) + ":" + report::format_number(ws[i]);
    }
    in.mixture.validate();
  } else {
    const double effect_rp = cfg.require_double("effect_rp");
    in.mixture = MixtureScenario::single({effect_ep, effect_rp, sigma, {}});
    in.label = "effect_rp=" + report::format_number(effect_rp);
    in.mixture.validate();
  }
  return in;
}

void emit(const CommandOptions& o, std::ostream& out, const std::function<void(std::ostream&)>& write) {
  if (o.out_path.empty()) {
    write(out);
    return;
  }
  std::ofstream file(o.out_path);
  if (!file) throw DomainError("cannot write '" + o.out_path + "'");
  write(file);
  if (!file) throw DomainError("failed writing '" + o.out_path + "'");
}

int cmd_analyze(const RunConfig& cfg, const CommandOptions& o, std::ostream& out) {
  const TrialData trial = trial_from(cfg);
  const DesignParams params = params_from(cfg);
  const std::vector<Method> methods = methods_from(cfg);
  const report::Format f = format_from(cfg);
  const report::Analysis a = report::analyze_trial(trial, params, methods);
  emit(o, out, [&](std::ostream& os) { report::write_analysis(os, a, f); });
  return 0;
}

int cmd_design(const RunConfig& cfg, const CommandOptions& o, std::ostream& out) {
  const DesignInput in = design_input_from(cfg);
  const DesignParams params = params_from(cfg);
  const std::vector<Method> methods = methods_from(cfg);
  const double target = cfg.get_double("target_power", 0.9);
  const report::Format f = format_from(cfg);
  const std::optional<double> c_R = cfg.find_double("c_r");
  const std::optional<double> c_P = cfg.find_double("c_p");
  if (c_R.has_value() != c_P.has_value()) throw DomainError("--c-r and --c-p must be given together");

  std::vector<report::DesignRow> rows;
  for (Method m : methods) {
    OptimizeOptions opt = default_optimize(m);
    opt.sizing.eval = eval_from(cfg, m);
    opt.workers = opt.sizing.eval.workers;
    const OptimizationResult res =
        c_R ? required_total_n(in.mixture, *c_R, *c_P, params, m, target, opt.sizing)
            : optimize_allocation(in.mixture, params, m, target, opt);
    rows.push_back({in.label, res});
  }
  emit(o, out, [&](std::ostream& os) { report::write_design(os, rows, f); });
  return 0;
}

int cmd_simulate(const RunConfig& cfg, const CommandOptions& o, std::ostream& out) {
  SimulationConfig sc;
  sc.alloc = Allocation::from_counts(cfg.require_int("n_e"), cfg.require_int("n_r"), cfg.require_int("n_p"));
  sc.params = params_from(cfg);
  sc.methods = methods_from(cfg);
  sc.reps = cfg.get_u64("reps", 100000);
  sc.seed = cfg.get_u64("seed", kDefaultSeed);
  sc.workers = workers_from(cfg);
  const report::Format f = format_from(cfg);
  const double effect_ep = cfg.require_double("effect_ep");
  const double sigma = cfg.require_double("sigma");

  std::vector<SimulationSummary> rows;
  if (cfg.has("v_list")) {
    sc.scenario = {effect_ep, 0.0, sigma, {}};
    sc.validate();
    const std::vector<double> vs = cfg.get_double_list("v_list");
    rows = sweep_v(sc, vs, cfg.require_double("mu_r_hist"));
  } else {
    sc.scenario = {effect_ep, cfg.require_double("effect_rp"), sigma, {}};
    rows.push_back(run_simulation(sc));
  }
  emit(o, out, [&](std::ostream& os) { report::write_simulation(os, rows, f); });
  return 0;
}

// Fixed configurations behind the reproducible tables.
struct ReferenceDesign {
  int scenario;
  Method method;
  int n_E, n_R, n_P, N;
};

const std::vector<ReferenceDesign>& reference_designs() {
  static const std::vector<ReferenceDesign> rows = {
      {1, Method::BaselineNoSci, 345, 350, 102, 797}, {1, Method::IU, 356, 348, 145, 849},
      {1, Method::Informative, 349, 348, 104, 801},   {1, Method::SingleStep, 402, 406, 100, 908},
      {2, Method::BaselineNoSci, 185, 182, 303, 670}, {2, Method::IU, 227, 75, 285, 587},
      {2, Method::Informative, 159, 216, 313, 688},   {2, Method::SingleStep, 134, 253, 323, 710},
      {3, Method::BaselineNoSci, 341, 44, 339, 724},  {3, Method::IU, 306, 33, 325, 661},
      {3, Method::Informative, 348, 52, 346, 746},    {3, Method::SingleStep, 397, 44, 399, 840},
  };
  return rows;
}

DesignParams example_params() { return DesignParams::from_historical(0.025, 0.5, 1.0, 0.01); }

EffectScenario table_scenario(int scenario) {
  const double effect_rp = scenario == 1 ? 1.0 : scenario == 2 ? 0.5 : 0.0;
  return {1.0, effect_rp, 2.0, effect_rp};
}

class Reproducer {
 public:
  Reproducer(std::filesystem::path dir, unsigned workers, std::uint64_t reps, std::uint64_t seed,
             std::ostream& out)
      : dir_(std::move(dir)), workers_(workers), reps_(reps), seed_(seed), out_(out) {
    std::filesystem::create_directories(dir_);
  }

  void table1() {
    const DesignParams params = example_params();
    std::vector<report::DesignRow> optimized;
    std::vector<report::DesignRow> at_reference;
    std::ostringstream cmp;
    cmp << "method,scenario,reference_N,N_at_reference_ratios,optimized_N,deviation_at_reference,"
           "deviation_optimized\n";
    for (const auto& ref : reference_designs()) {
      const MixtureScenario mix = MixtureScenario::single(table_scenario(ref.scenario));
      OptimizeOptions opt = default_optimize(ref.method);
      opt.workers = workers_;
      opt.sizing.eval.workers = workers_;
      const double c_R = static_cast<double>(ref.n_R) / ref.n_E;
      const double c_P = static_cast<double>(ref.n_P) / ref.n_E;
      opt.sizing.n_E_hint = ref.n_E;
      const OptimizationResult fixed = required_total_n(mix, c_R, c_P, params, ref.method, 0.9, opt.sizing);
      const OptimizationResult best = optimize_allocation(mix, params, ref.method, 0.9, opt);
      const std::string label = "scenario" + std::to_string(ref.scenario);
      at_reference.push_back({label, fixed});
      optimized.push_back({label, best});
      cmp << to_string(ref.method) << ',' << label << ',' << ref.N << ',' << fixed.N << ',' << best.N << ','
          << report::format_number(static_cast<double>(fixed.N - ref.N) / ref.N) << ','
          << report::format_number(static_cast<double>(best.N - ref.N) / ref.N) << '\n';
    }
    write("table1.csv", [&](std::ostream& os) { report::write_design(os, optimized, report::Format::Csv); });
    write("table1_reference_ratios.csv",
          [&](std::ostream& os) { report::write_design(os, at_reference, report::Format::Csv); });
    write("table1_comparison.csv", [&](std::ostream& os) { os << cmp.str(); });
    manifest_ << "table1.csv: optimal allocations for target 0.90 (effect_EP = 1, effect_RP = 1, 0.5, 0; sigma = 2;"
                 " alpha = 0.025; delta0 = delta1 = 0.5); tolerance 2% on N (informative 3%)\n"
              << "table1_reference_ratios.csv: required N at the reference allocation ratios\n"
              << "table1_comparison.csv: reference N against both computations\n"
              << "  note: the reference IU allocations reach success probability 0.895 / 0.884 / 0.896, below"
                 " 0.90, so the reference IU sizes 849 / 587 / 661 are not attained\n"
              << "  note: the reference scenario-3 IU arm sizes 306 + 33 + 325 sum to 664, not 661\n";
  }

  void table2() {
    const DesignParams params = example_params();
    DesignParams squared = params;
    squared.single_step_rho = SingleStepRho::Squared;
    const std::vector<std::pair<double, double>> rows = {{1.0, 1.0}, {1.0, 0.5}, {1.0, 0.3}, {0.8, 0.3}};
    auto table = [&](const std::string& name, Method m, const DesignParams& p) {
      write(name, [&](std::ostream& os) {
        os << "X_E,X_R,filter,filter_holds,ell_EP,ell_ER,L_EP,L_ER,success_EP,success_ER\n";
        for (const auto& [x_E, x_R] : rows) {
          const TrialData t{{x_E, {}, 356}, {x_R, {}, 348}, {0.0, {}, 145}, KnownSigma{2.0}};
          const SciResult s = compute_sci(m, t, p);
          const SuccessOutcome v = adjudicate_success(s, p);
          os << report::format_number(x_E) << ',' << report::format_number(x_R) << ','
             << to_string(s.filter_used) << ',' << (s.filter_holds ? 1 : 0) << ','
             << report::format_number(s.ell_EP) << ',' << report::format_number(s.ell_ER) << ','
             << report::format_number(s.L_EP) << ',' << report::format_number(s.L_ER) << ','
             << (v.verdict == Verdict::SuccessEP ? 1 : 0) << ',' << (v.verdict == Verdict::SuccessER ? 1 : 0)
             << '\n';
        }
      });
    };
    table("table2a.csv", Method::IU, params);
    table("table2b.csv", Method::Informative, params);
    table("table2c.csv", Method::SingleStep, squared);
    table("table2c_exact_rho.csv", Method::SingleStep, params);
    manifest_ << "table2a.csv, table2b.csv, table2c.csv: bounds at n = 356/348/145, sigma = 2, alpha = 0.025,"
                 " delta0 = delta1 = 0.5, q = 0.01; tolerance 0.001, verdicts exact\n"
              << "  note: table2c.csv evaluates the equicoordinate quantile at rho^2 (single_step_rho = squared),"
                 " the convention that reproduces the reference single-step values;"
                 " table2c_exact_rho.csv uses rho itself and differs by about 0.002\n";
  }

  void table4() {
    const DesignParams params = example_params();
    const std::vector<double> grid = {1.0, 0.75, 0.5, 0.25, 0.0};
    const std::vector<Method> methods = {Method::BaselineNoSci, Method::IU, Method::Informative,
                                         Method::SingleStep};
    auto sweep = [&](const std::string& name, int n_E, int n_R, int n_P) {
      SimulationConfig sc{{1.0, 0.0, 2.0, {}}, Allocation::from_counts(n_E, n_R, n_P), params, methods,
                          reps_, seed_, workers_};
      const auto rows = sweep_v(sc, grid, 1.0);
      write(name, [&](std::ostream& os) { report::write_simulation(os, rows, report::Format::Csv); });
    };
    sweep("table4a.csv", 356, 348, 145);
    sweep("table4b.csv", 227, 75, 285);
    manifest_ << "table4a.csv, table4b.csv: operating characteristics at n = 356/348/145 and 227/75/285,"
              << " reps = " << reps_ << ", seed = " << seed_ << "; tolerance 1 percentage point\n";
  }

  void example() {
    DesignParams params;
    params.alpha = 0.025;
    params.delta0 = 2.5;
    params.delta1 = 2.5;
    const std::vector<Method> methods = {Method::BaselineNoSci, Method::IU, Method::Informative,
                                         Method::SingleStep};
    auto analysis = [&](const std::string& name, double mean_E) {
      const TrialData t{{mean_E, 6.1, 147}, {9.4, 6.9, 148}, {8.3, 5.8, 145}, PooledPerComparison{}};
      const report::Analysis a = report::analyze_trial(t, params, methods);
      write(name, [&](std::ostream& os) { report::write_analysis(os, a, report::Format::Csv); });
    };
    analysis("example_original.csv", 10.2);
    analysis("example_variant.csv", 12.2);
    manifest_ << "example_original.csv, example_variant.csv: pooled-variance analysis, means 10.2 (or 12.2) /"
                 " 9.4 / 8.3, SDs 6.1 / 6.9 / 5.8, n = 147/148/145, delta0 = delta1 = 2.5; tolerance 0.01\n"
              << "  note: for the 12.2 variant the unadjusted E-R bound is 1.313; a value of -0.69 quoted"
                 " alongside it belongs to the original data\n";
  }

  void finish(const std::string& target) {
    write("manifest_" + target + ".txt", [&](std::ostream& os) { os << manifest_.str(); });
  }

 private:
  void write(const std::string& name, const std::function<void(std::ostream&)>& body) {
    const std::filesystem::path path = dir_ / name;
    std::ofstream file(path);
    if (!file) throw DomainError("cannot write '" + path.string() + "'");
    body(file);
    if (!file) throw DomainError("failed writing '" + path.string() + "'");
    out_ << path.string() << '\n';
  }

  std::filesystem::path dir_;
  unsigned workers_;
  std::uint64_t reps_;
  std::uint64_t seed_;
  std::ostream& out_;
  std::ostringstream manifest_;
};

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Simultaneous confidence intervals, success verdicts and design calculations for"
               " three-arm non-inferiority trials"};
  app.name("goldsci");
  app.require_subcommand(1);

  CommandOptions analyze_opts, design_opts, simulate_opts;
  CLI::App* analyze = app.add_subcommand("analyze", "confidence bounds and verdicts for observed data");
  add_common(analyze, analyze_opts);
  CLI::App* design = app.add_subcommand("design", "required or optimal sample sizes");
  add_common(design, design_opts);
  design_opts.mixture_opt =
      design->add_option("--mixture", design_opts.mixture, "weighted scenarios as v:weight,v:weight");
  CLI::App* simulate = app.add_subcommand("simulate", "Monte Carlo operating characteristics");
  add_common(simulate, simulate_opts);

  std::string target;
  std::string out_dir = ".";
  std::uint64_t repro_reps = 100000;
  std::uint64_t repro_seed = kDefaultSeed;
  unsigned repro_threads = 0;
  CLI::App* reproduce = app.add_subcommand("reproduce", "regenerate the reference tables as CSV files");
  reproduce->add_option("target", target, "table1, table2, table4, example or all")->required();
  reproduce->add_option("--out-dir", out_dir, "output directory (default .)");
  reproduce->add_option("--reps", repro_reps, "replications for table4");
  reproduce->add_option("--seed", repro_seed, "seed for table4");
  reproduce->add_option("--threads", repro_threads, "worker threads (0 = all cores)");

  try {
    try {
      app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
      if (e.get_exit_code() == 0) return app.exit(e, out, err);
      err << "error: " << e.what() << '\n';
      return 2;
    }

    if (reproduce->parsed()) {
      const std::vector<std::string> all = {"table1", "table2", "table4", "example"};
      if (target != "all" && std::find(all.begin(), all.end(), target) == all.end()) {
        throw DomainError("unknown reproduce target '" + target + "'");
      }
      if (repro_reps < 1) throw DomainError("--reps must be at least 1");
      Reproducer r(out_dir, repro_threads, repro_reps, repro_seed, out);
      if (target == "table2" || target == "all") r.table2();
      if (target == "example" || target == "all") r.example();
      if (target == "table4" || target == "all") r.table4();
      if (target == "table1" || target == "all") r.table1();
      r.finish(target);
      return 0;
    }

    const std::pair<CLI::App*, CommandOptions*> subs[] = {
        {analyze, &analyze_opts}, {design, &design_opts}, {simulate, &simulate_opts}};
    for (const auto& [sub, opts] : subs) {
      if (!sub->parsed()) continue;
      const RunConfig cfg = resolve(*opts);
      if (opts->dump) {
        emit(*opts, out, [&](std::ostream& os) { os << cfg.dump(); });
        return 0;
      }
      if (sub == analyze) return cmd_analyze(cfg, *opts, out);
      if (sub == design) return cmd_design(cfg, *opts, out);
      return cmd_simulate(cfg, *opts, out);
    }
    return 2;
  } catch (const NumericalError& e) {
    err << "error: " << e.what() << '\n';
    return 3;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 3;
  }
}

}  // namespace goldsci::cli
