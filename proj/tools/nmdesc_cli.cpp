#include "nmdesc/harness.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace nmdesc;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitSolver = 3;
constexpr int kExitIo = 4;

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::ofstream open_output(const fs::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

void close_output(std::ofstream& out, const fs::path& path) {
  out.flush();
  if (!out) throw IoError("error writing " + path.string());
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

struct GenOptions {
  std::string kind;
  std::int64_t n = 200, p = 2000, s = 20;
  std::int64_t n1 = 200, n2 = 200, rstar = 5, r = 10, samples = 8000;
  double sigma = 0.1, lambda = 1.0, mu = 1e-10;
  std::uint64_t seed = 1;
  std::string output;
};

int cmd_gen(const GenOptions& o) {
  Instance inst;
  try {
    if (o.kind == "logreg")
      inst = gen_logreg(o.n, o.p, o.s, o.seed, o.lambda, o.mu);
    else
      inst = gen_mc(o.n1, o.n2, o.rstar, o.samples, o.sigma, o.seed, o.r, o.lambda, o.mu);
  } catch (const std::invalid_argument& e) {
    std::cerr << "gen: " << e.what() << '\n';
    return kExitUsage;
  }
  const fs::path path = o.output.empty() ? fs::path(o.kind + "_seed" + std::to_string(o.seed) + ".txt") : fs::path(o.output);
  auto out = open_output(path);
  write_instance(out, inst);
  close_output(out, path);
  std::cout << instance_digest(inst) << '\n' << "wrote " << path.string() << '\n';
  return kExitOk;
}

void print_summary(const SolverOutcome& o, const Workload& w) {
  std::cout << "solver:          " << o.label << '\n';
  std::cout << "iterations:      " << o.iterations << '\n';
  std::cout << "final objective: " << num(o.final_objective) << '\n';
  if (w.kind == "mc")
    std::cout << "factor columns:  U=" << o.rank.u_columns << " V=" << o.rank.v_columns << '\n';
  else if (o.sparsity >= 0)
    std::cout << "sparsity:        " << o.sparsity << '\n';
  std::cout << "stop reason:     " << to_string(o.stop) << '\n';
  std::cout << "wall time (s):   " << num(o.wall_time) << '\n';
  if (w.kind == "logreg")
    std::cout << "L_f:             " << num(w.logreg->lipschitz()) << " (" << to_string(w.logreg->lipschitz_rule())
              << ")\n";
  for (const std::string& warn : o.warnings) std::cout << "warning:         " << warn << '\n';
  if (!o.error.empty()) std::cout << "error:           " << o.error << '\n';
}

int cmd_run(const std::string& config_path, const std::string& output_override, bool replay_flag) {
  RunConfig cfg;
  try {
    cfg = parse_run_config(IniFile::load(config_path));
    cfg.seed = seed_from_environment(cfg.seed);
  } catch (const ConfigError& e) {
    std::cerr << "run: " << e.what() << '\n';
    return kExitUsage;
  }
  if (!output_override.empty()) cfg.output_dir = output_override;
  if (replay_flag) cfg.replay = true;

  Workload work;
  SolverOutcome outcome;
  try {
    work = make_workload(cfg.problem, cfg.seed);
    outcome = run_solver(work, cfg.solver, cfg.limits);
  } catch (const std::invalid_argument& e) {
    std::cerr << "run: " << e.what() << '\n';
    return kExitUsage;
  }
  if (outcome.line_search) {
    const KsetReport rep = classify_ksets(outcome.trace, outcome.h1_a, 0.5);
    annotate_ksets(outcome.trace, rep);
  }
  const fs::path path = fs::path(cfg.output_dir) / "trace.csv";
  auto out = open_output(path);
  write_trace_csv(out, outcome.trace, cfg.replay);
  close_output(out, path);
  print_summary(outcome, work);
  std::cout << "trace:           " << path.string() << '\n';
  return outcome.stop == StopReason::backtrack_limit ? kExitSolver : kExitOk;
}

int cmd_bench(const std::string& config_path, const std::string& output_override, int jobs, bool replay_flag) {
  BenchConfig cfg;
  try {
    cfg = parse_bench_config(IniFile::load(config_path));
    cfg.seed = seed_from_environment(cfg.seed);
  } catch (const ConfigError& e) {
    std::cerr << "bench: " << e.what() << '\n';
    return kExitUsage;
  }
  if (!output_override.empty()) cfg.output_dir = output_override;
  if (replay_flag) {
    cfg.replay = true;
    cfg.clock = BenchClock::iterations;
  }
  const BenchResult res = run_bench(cfg, jobs);
  const fs::path dir(cfg.output_dir);
  {
    auto out = open_output(dir / "bench.csv");
    write_bench_csv(out, res);
    close_output(out, dir / "bench.csv");
  }
  {
    auto out = open_output(dir / "bench_summary.csv");
    write_bench_summary_csv(out, res);
    close_output(out, dir / "bench_summary.csv");
  }
  {
    auto out = open_output(dir / "bench.svg");
    write_svg(out, bench_panels(res));
    close_output(out, dir / "bench.svg");
  }
  bool any_ok = false;
  for (const BenchPanel& p : res.panels) {
    std::cout << "lambda=" << num(p.lambda) << '\n';
    for (const auto& s : p.solvers) {
      double mean = 0.0;
      int count = 0;
      for (double e : s.terminal)
        if (!std::isnan(e)) mean += e, ++count;
      std::cout << "  " << s.label << ": terminal E "
                << (count ? num(mean / count) : std::string("n/a")) << " over " << count << " trials\n";
      for (const std::string& f : s.failures) std::cout << "    failed " << f << '\n';
      any_ok = any_ok || count > 0;
    }
  }
  for (const std::string& note : res.notes) std::cout << "note: " << note << '\n';
  std::cout << "wrote " << (dir / "bench.csv").string() << ", " << (dir / "bench_summary.csv").string() << ", "
            << (dir / "bench.svg").string() << '\n';
  return any_ok ? kExitOk : kExitSolver;
}

std::vector<TraceRecord> load_trace(const std::string& path, TraceColumns* cols) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open trace " + path);
  return read_trace_csv(in, cols);
}

int cmd_diag(const std::string& trace_path, const DiagParams& params, const std::string& output_dir) {
  TraceColumns cols;
  std::vector<TraceRecord> trace = load_trace(trace_path, &cols);
  DiagReport rep = run_diag(trace, cols, params);
  for (const std::string& w : rep.warnings) std::cerr << "warning: " << w << '\n';

  const fs::path dir(output_dir);
  {
    auto out = open_output(dir / "ksets.csv");
    write_kset_csv(out, rep.ksets, rep.sums);
    close_output(out, dir / "ksets.csv");
  }
  {
    auto out = open_output(dir / "partial_sums.svg");
    write_svg(out, {partial_sum_panel(rep.sums, "K1 partial sums")}, 1);
    close_output(out, dir / "partial_sums.svg");
  }
  std::cout << "H1 (a=" << num(params.alpha / 2) << ", m=" << params.memory << "): "
            << (rep.h1.pass ? "pass" : "FAIL at k=" + std::to_string(rep.h1.first_violation)) << " over "
            << rep.h1.checked << " steps\n";
  if (rep.h2)
    std::cout << "H2 (b=" << num(*params.b) << "): " << (rep.h2->pass ? "pass" : "FAIL") << ", max ratio "
              << num(rep.h2->max_ratio) << (rep.h2->zero_step_violation ? " (nonzero witness at zero step)" : "")
              << '\n';
  std::size_t n1 = 0, n2 = 0, n31 = 0, n32 = 0;
  for (std::size_t i = 0; i < rep.ksets.k.size(); ++i) {
    n1 += rep.ksets.k1[i];
    n2 += rep.ksets.k2[i];
    n31 += rep.ksets.k31[i];
    n32 += rep.ksets.k32[i];
  }
  std::cout << "K-sets (theta=" << num(params.theta) << ", Phi* estimated as " << num(rep.ksets.omega_star)
            << "): |K1|=" << n1 << " |K2|=" << n2 << " |K31|=" << n31 << " |K32|=" << n32 << '\n';
  if (!rep.sums.k1.empty())
    std::cout << "sum over K1 of sqrt(gap): " << num(rep.sums.k1.back()) << '\n';
  std::cout << "wrote " << (dir / "ksets.csv").string() << ", " << (dir / "partial_sums.svg").string() << '\n';
  return kExitOk;
}

void print_fit(const char* name, const std::optional<RateFit>& fit) {
  if (!fit) return;
  std::cout << name << ": slope " << num(fit->slope) << ", R^2 " << num(fit->r2) << ", points " << fit->points;
  if (fit->mode == RateMode::linear)
    std::cout << ", rho " << num(fit->rho);
  else
    std::cout << ", theta " << num(fit->theta);
  std::cout << '\n';
  for (const std::string& w : fit->warnings) std::cout << "  warning: " << w << '\n';
}

int cmd_rates(const std::string& trace_path) {
  const std::vector<TraceRecord> trace = load_trace(trace_path, nullptr);
  const RateReport rep = rate_report(trace);
  print_fit("linear", rep.linear);
  print_fit("sublinear", rep.sublinear);
  for (const std::string& e : rep.errors) std::cout << "no fit (" << e << ")\n";
  return rep.linear || rep.sublinear ? kExitOk : kExitSolver;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Nonmonotone line-search descent methods: instances, runs, benchmarks and diagnostics"};
  app.require_subcommand(1);

  GenOptions gen;
  auto* gen_cmd = app.add_subcommand("gen", "generate a problem instance");
  gen_cmd->add_option("kind", gen.kind, "logreg or mc")->required()->check(CLI::IsMember({"logreg", "mc"}));
  gen_cmd->add_option("--n", gen.n, "logreg: samples");
  gen_cmd->add_option("--p", gen.p, "logreg: features");
  gen_cmd->add_option("--s", gen.s, "logreg: planted support size");
  gen_cmd->add_option("--n1", gen.n1, "mc: rows");
  gen_cmd->add_option("--n2", gen.n2, "mc: columns");
  gen_cmd->add_option("--rstar", gen.rstar, "mc: true rank");
  gen_cmd->add_option("--r", gen.r, "mc: factor width");
  gen_cmd->add_option("--samples", gen.samples, "mc: number of sampled entries before duplicate removal");
  gen_cmd->add_option("--sigma", gen.sigma, "mc: noise level");
  gen_cmd->add_option("--lambda", gen.lambda, "regularization weight");
  gen_cmd->add_option("--mu", gen.mu, "ridge weight");
  gen_cmd->add_option("--seed", gen.seed, "generator seed");
  gen_cmd->add_option("-o,--output", gen.output, "output file");

  std::string config_path, output_dir;
  bool replay = false;
  int jobs = 1;
  auto* run_cmd = app.add_subcommand("run", "run one solver from a config file");
  run_cmd->add_option("config", config_path, "config file")->required();
  run_cmd->add_option("-o,--output", output_dir, "output directory (overrides the config)");
  run_cmd->add_flag("--replay", replay, "write zero wall times for byte-stable output");

  auto* bench_cmd = app.add_subcommand("bench", "compare solvers by averaged E(t)");
  bench_cmd->add_option("config", config_path, "config file")->required();
  bench_cmd->add_option("-o,--output", output_dir, "output directory (overrides the config)");
  bench_cmd->add_option("-j,--jobs", jobs, "trials run in parallel")->check(CLI::PositiveNumber);
  bench_cmd->add_flag("--replay", replay, "iteration clock, byte-stable output");

  std::string trace_path;
  DiagParams diag;
  double b = 0.0;
  std::string diag_out = ".";
  auto* diag_cmd = app.add_subcommand("diag", "check H1/H2 and classify K-sets on a trace");
  diag_cmd->add_option("trace", trace_path, "trace CSV")->required();
  diag_cmd->add_option("--memory", diag.memory, "window memory m");
  diag_cmd->add_option("--alpha", diag.alpha, "line-search alpha (a = alpha/2)");
  diag_cmd->add_option("--theta", diag.theta, "KL exponent for K2/K31")->check(CLI::Range(0.0, 1.0));
  auto* b_opt = diag_cmd->add_option("--b", b, "H2 constant");
  diag_cmd->add_option("-o,--output", diag_out, "output directory");

  auto* rates_cmd = app.add_subcommand("rates", "fit linear and sublinear rates to a trace tail");
  rates_cmd->add_option("trace", trace_path, "trace CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*gen_cmd) return cmd_gen(gen);
    if (*run_cmd) return cmd_run(config_path, output_dir, replay);
    if (*bench_cmd) return cmd_bench(config_path, output_dir, jobs, replay);
    if (*diag_cmd) {
      if (b_opt->count()) diag.b = b;
      return cmd_diag(trace_path, diag, diag_out);
    }
    if (*rates_cmd) return cmd_rates(trace_path);
  } catch (const TraceParseError& e) {
    std::cerr << "trace parse error: " << e.what() << '\n';
    return kExitIo;
  } catch (const IoError& e) {
    std::cerr << e.what() << '\n';
    return kExitIo;
  } catch (const std::ios_base::failure& e) {
    std::cerr << e.what() << '\n';
    return kExitIo;
  } catch (const InstanceFormatError& e) {
    std::cerr << "instance format error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::invalid_argument& e) {
    std::cerr << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitSolver;
  }
  return kExitUsage;
}
