// erm: experiment runner for the composite ERM solvers.
//
//   erm run  --data PATH|--synthetic SPEC --loss L --l1 F --l2 F --algo A --budget E --trace OUT.csv ...
//   erm ref  --data PATH|--synthetic SPEC --loss L --l1 F --l2 F --tol 1e-12 --out REF.json
//   erm info --data PATH|--synthetic SPEC [--loss L]
//
// Exit codes: 0 success, 2 configuration error, 3 reference stage budget exhausted.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <string>

#include "erm/erm.hpp"

namespace {

constexpr int kConfigExit = 2;
constexpr int kBudgetExit = 3;

struct SourceFlags {
  std::string data;
  std::string synthetic;
  std::string loss = "logistic";
  double l1 = 0.0;
  double l2 = 0.0;
  std::size_t dim = 0;
  bool normalize = false;

  void add(CLI::App* app, bool loss_required) {
    auto* d = app->add_option("--data", data, "libsvm file (plain or .gz)");
    auto* s = app->add_option("--synthetic", synthetic,
                              "synthetic spec, e.g. kind=lasso,n=200,d=50,density=0.1,noise=0.01,seed=1");
    d->excludes(s);
    s->excludes(d);
    auto* l = app->add_option("--loss", loss, "squared | logistic | smoothed-hinge:NU");
    if (loss_required) l->required();
    app->add_option("--l1", l1, "l1 weight")->check(CLI::NonNegativeNumber);
    app->add_option("--l2", l2, "squared-l2 weight")->check(CLI::NonNegativeNumber);
    app->add_option("--dim", dim, "feature dimension override");
    app->add_flag("--normalize", normalize, "scale rows to unit l2 norm");
  }

  void apply(erm::RunConfig& cfg) const {
    cfg.source.data_path = data;
    if (data.empty() == synthetic.empty()) throw erm::ConfigError("exactly one of --data and --synthetic is required");
    if (!synthetic.empty()) {
      try {
        cfg.source.synthetic = erm::parse_synthetic(synthetic);
      } catch (const erm::Error& e) {
        throw erm::ConfigError(e.what());
      }
    }
    cfg.source.dim = dim;
    cfg.source.normalize = normalize;
    cfg.loss = erm::parse_loss(loss);
    cfg.l1 = l1;
    cfg.l2 = l2;
  }
};

void print_warnings(const std::vector<std::string>& warnings) {
  for (const std::string& w : warnings) std::cerr << "warning: " << w << "\n";
}

int reference_status(const erm::Reference& r) {
  if (r.converged) return 0;
  std::cerr << "warning: reference stage budget exhausted after " << r.stages
            << " stages; best objective found is used\n";
  return kBudgetExit;
}

struct RunFlags {
  SourceFlags source;
  std::string algo;
  std::size_t batch = 0;
  std::size_t epoch_len = 0;
  double gamma = 0.0;
  double eta = 0.0;
  double eta_scale = 1.0;
  std::size_t stages = 0;
  std::size_t restarts = 0;
  std::string sampling = "uniform";
  std::string lazy = "auto";
  std::uint64_t seed = 1;
  std::uint64_t budget = 0;
  std::string trace;
  std::string ref;
  double ref_tol = 1e-12;
  std::size_t ref_max_stages = 100000;
  double target_gap = 0.0;
  std::size_t warm_m0 = 0;
  std::size_t warm_rounds = 0;
  bool warm_rounds_set = false;
  bool grid = false;
  std::size_t parallel = 1;
};

int cmd_run(const RunFlags& f) {
  erm::RunConfig cfg;
  f.source.apply(cfg);
  cfg.algo = erm::parse_algo(f.algo);
  cfg.batch = f.batch;
  cfg.epoch_len = f.epoch_len;
  cfg.gamma = f.gamma;
  cfg.eta = f.eta;
  cfg.eta_scale = f.eta_scale;
  cfg.stages = f.stages;
  cfg.restarts = f.restarts;
  cfg.sampling = erm::parse_sampling(f.sampling);
  cfg.lazy = erm::parse_lazy(f.lazy);
  cfg.seed = f.seed;
  cfg.budget = f.budget;
  cfg.trace_path = f.trace;
  cfg.ref_path = f.ref;
  cfg.ref_tol = f.ref_tol;
  cfg.target_gap = f.target_gap;
  cfg.warm_m0 = f.warm_m0;
  if (f.warm_rounds_set) cfg.warm_rounds = f.warm_rounds;
  cfg.validate();

  const erm::Problem p = erm::build_problem(cfg);
  int status = 0;
  std::optional<erm::Reference> ref;
  if (!cfg.ref_path.empty()) {
    bool hit = false;
    ref = erm::cached_reference(p, cfg.ref_tol, cfg.ref_path, &hit, f.ref_max_stages);
    std::cerr << "reference: P* = " << std::to_string(ref->objective) << (hit ? " (cached)" : " (computed)")
              << "\n";
    status = reference_status(*ref);
  }
  const erm::Reference* rp = ref ? &*ref : nullptr;

  if (!f.grid) {
    const erm::RunResult r = erm::run_experiment(cfg, p, rp);
    print_warnings(r.warnings);
    erm::write_trace(cfg.trace_path, r.header, r.records);
    const erm::TraceRecord& last = r.records.back();
    std::printf("%s: stages %zu, evals/n %.4g, objective %.12g, gap %.4g%s\n", f.algo.c_str(), last.stage,
                last.evals_over_n, last.objective, last.gap, r.budget_exhausted ? " (budget exhausted)" : "");
    return status;
  }

  std::vector<erm::GridCell> cells = erm::make_grid(cfg);
  // Validate every cell before spending compute on any of them.
  for (const erm::GridCell& c : cells) c.config.validate();
  erm::run_grid(cells, p, rp, f.parallel);
  const bool sc = cfg.algo == erm::Algo::DasvrdaSc;
  std::printf("%-10s %-6s %-14s %-14s %s\n", "eta_scale", "S", "evals/n@target", "final_gap", "status");
  for (const erm::GridCell& c : cells) {
    const std::string path = erm::cell_trace_path(cfg.trace_path, c.config, sc);
    if (c.error.empty()) {
      erm::write_trace(path, c.result.header, c.result.records);
      std::printf("%-10g %-6zu %-14.6g %-14.6g %s\n", c.config.eta_scale, c.config.stages,
                  c.result.evals_over_n_to(cfg.target_gap), c.result.final_gap(), path.c_str());
    } else {
      std::printf("%-10g %-6zu %-14s %-14s failed: %s\n", c.config.eta_scale, c.config.stages, "-", "-",
                  c.error.c_str());
    }
  }
  const std::size_t best = erm::best_cell(cells, cfg.target_gap);
  if (best == cells.size()) {
    std::cerr << "every grid cell failed\n";
    return 1;
  }
  std::printf("best: eta_scale %g, S %zu, evals/n@target %.6g\n", cells[best].config.eta_scale,
              cells[best].config.stages, cells[best].result.evals_over_n_to(cfg.target_gap));
  return status;
}

int cmd_ref(const SourceFlags& source, double tol, const std::string& out, std::size_t max_stages) {
  erm::RunConfig cfg;
  source.apply(cfg);
  if (!(tol > 0.0)) throw erm::ConfigError("tolerance must be positive");
  const erm::Problem p = erm::build_problem(cfg);
  bool hit = false;
  const erm::Reference r = erm::cached_reference(p, tol, out, &hit, max_stages);
  std::printf("objective %.17g\nstages %zu\nconverged %s\nhash %s\ncache %s\n", r.objective, r.stages,
              r.converged ? "yes" : "no", r.hash.c_str(), hit ? "hit" : "miss");
  return reference_status(r);
}

int cmd_info(const SourceFlags& source) {
  erm::RunConfig cfg;
  source.apply(cfg);
  const erm::Problem p = erm::build_problem(cfg);
  const erm::DatasetSummary s = erm::summarize(p.data(), p.loss());
  std::printf("n %zu\nd %zu\nnnz %zu\ndensity %.6g\nmean_row_nnz %.6g\nmax_row_nnz %zu\nempty_rows %zu\n", s.n,
              s.d, s.nnz, s.density, s.mean_row_nnz, s.max_row_nnz, s.empty_rows);
  std::printf("positive %zu\nnegative %zu\nmean_L %.6g\nmax_L %.6g\nhash %s\n", s.positive, s.negative,
              s.mean_smoothness, s.max_smoothness, erm::problem_hash(p).c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"composite ERM experiment runner"};
  app.require_subcommand(1);

  RunFlags run;
  CLI::App* run_cmd = app.add_subcommand("run", "run one solver (or a grid) and write a convergence trace");
  run.source.add(run_cmd, true);
  run_cmd->add_option("--algo", run.algo,
                      "pg | apg | svrg | dasvrda-ns | dasvrda-sc | dasvrda-ar-f | dasvrda-ar-g | dasvrda-warm | dasvrg")
      ->required();
  run_cmd->add_option("--batch", run.batch, "mini-batch size (default round(sqrt(n)))");
  run_cmd->add_option("--epoch-len", run.epoch_len, "inner iterations m (default n/b, 2n/b for svrg)");
  run_cmd->add_option("--gamma", run.gamma, "outer momentum parameter (default gamma*)");
  run_cmd->add_option("--eta", run.eta, "step size (default from the method's formula)");
  run_cmd->add_option("--eta-scale", run.eta_scale, "multiplier on the step size");
  run_cmd->add_option("--stages", run.stages, "S (restart interval for dasvrda-sc); default until budget");
  run_cmd->add_option("--restarts", run.restarts, "T for dasvrda-sc; default until budget");
  run_cmd->add_option("--sampling", run.sampling, "uniform | weighted | partition");
  run_cmd->add_option("--lazy", run.lazy, "auto | on | off");
  run_cmd->add_option("--seed", run.seed, "RNG seed");
  run_cmd->add_option("--budget", run.budget, "max component-gradient evaluations")->required();
  run_cmd->add_option("--trace", run.trace, "output CSV (grid cells get suffixed names)")->required();
  run_cmd->add_option("--ref", run.ref, "reference solution cache (JSON); enables the gap column");
  run_cmd->add_option("--ref-tol", run.ref_tol, "tolerance when the reference must be computed");
  run_cmd->add_option("--ref-max-stages", run.ref_max_stages, "stage budget for computing the reference");
  run_cmd->add_option("--target-gap", run.target_gap, "stop once the gap falls to this value");
  run_cmd->add_option("--warm-m0", run.warm_m0, "initial inner length for dasvrda-warm");
  run_cmd->add_option("--warm-rounds", run.warm_rounds, "warm-up rounds U for dasvrda-warm")
      ->each([&](const std::string&) { run.warm_rounds_set = true; });
  run_cmd->add_flag("--grid", run.grid, "sweep step multipliers (and restart intervals for dasvrda-sc)");
  run_cmd->add_option("--parallel-runs", run.parallel, "worker threads for --grid")->check(CLI::PositiveNumber);

  SourceFlags ref_source;
  double tol = 1e-12;
  std::string out;
  std::size_t max_stages = 100000;
  CLI::App* ref_cmd = app.add_subcommand("ref", "compute (or reuse) a cached reference solution");
  ref_source.add(ref_cmd, true);
  ref_cmd->add_option("--tol", tol, "relative objective change over 100 stages");
  ref_cmd->add_option("--out", out, "reference JSON path")->required();
  ref_cmd->add_option("--max-stages", max_stages, "stage budget");

  SourceFlags info_source;
  CLI::App* info_cmd = app.add_subcommand("info", "print dataset statistics");
  info_source.add(info_cmd, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigExit;
  }

  try {
    if (run_cmd->parsed()) return cmd_run(run);
    if (ref_cmd->parsed()) return cmd_ref(ref_source, tol, out, max_stages);
    return cmd_info(info_source);
  } catch (const erm::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigExit;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
