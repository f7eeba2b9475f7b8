#pragma once

// Experiment harness: problem construction, reference solutions with an
// on-disk cache, per-stage convergence traces, and learning-rate / restart
// interval grid sweeps.

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "erm/baselines.hpp"
#include "erm/dasvrda.hpp"
#include "erm/data_io.hpp"
#include "erm/problem.hpp"
#include "erm/sampling.hpp"
#include "erm/schedule.hpp"

namespace erm {

/// Invalid user configuration (CLI exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

enum class Algo { Pg, Apg, Svrg, DasvrdaNs, DasvrdaSc, DasvrdaArF, DasvrdaArG, DasvrdaWarm, Dasvrg };
enum class SamplingKind { Uniform, Weighted, Partition };
enum class LazyMode { Auto, On, Off };

inline const std::vector<std::pair<std::string, Algo>>& algo_names() {
  static const std::vector<std::pair<std::string, Algo>> names{
      {"pg", Algo::Pg},
      {"apg", Algo::Apg},
      {"svrg", Algo::Svrg},
      {"dasvrda-ns", Algo::DasvrdaNs},
      {"dasvrda-sc", Algo::DasvrdaSc},
      {"dasvrda-ar-f", Algo::DasvrdaArF},
      {"dasvrda-ar-g", Algo::DasvrdaArG},
      {"dasvrda-warm", Algo::DasvrdaWarm},
      {"dasvrg", Algo::Dasvrg}};
  return names;
}

inline Algo parse_algo(const std::string& s) {
  for (const auto& [name, a] : algo_names())
    if (name == s) return a;
  throw ConfigError("unknown algorithm: " + s);
}

inline std::string to_string(Algo a) {
  for (const auto& [name, v] : algo_names())
    if (v == a) return name;
  return "?";
}

inline SamplingKind parse_sampling(const std::string& s) {
  if (s == "uniform") return SamplingKind::Uniform;
  if (s == "weighted") return SamplingKind::Weighted;
  if (s == "partition") return SamplingKind::Partition;
  throw ConfigError("unknown sampling scheme: " + s);
}

inline std::string to_string(SamplingKind k) {
  switch (k) {
    case SamplingKind::Uniform: return "uniform";
    case SamplingKind::Weighted: return "weighted";
    case SamplingKind::Partition: return "partition";
  }
  return "?";
}

inline LazyMode parse_lazy(const std::string& s) {
  if (s == "auto") return LazyMode::Auto;
  if (s == "on") return LazyMode::On;
  if (s == "off") return LazyMode::Off;
  throw ConfigError("unknown lazy mode: " + s);
}

inline std::string to_string(LazyMode m) {
  return m == LazyMode::Auto ? "auto" : m == LazyMode::On ? "on" : "off";
}

/// "squared", "logistic" or "smoothed-hinge:NU".
inline Loss parse_loss(const std::string& s) {
  if (s == "squared") return Loss::squared();
  if (s == "logistic") return Loss::logistic();
  const std::string prefix = "smoothed-hinge";
  if (s.rfind(prefix, 0) == 0) {
    double nu = 1.0;
    if (s.size() > prefix.size()) {
      if (s[prefix.size()] != ':') throw ConfigError("unknown loss: " + s);
      char* end = nullptr;
      const std::string v = s.substr(prefix.size() + 1);
      nu = std::strtod(v.c_str(), &end);
      if (v.empty() || *end != '\0' || !(nu > 0.0)) throw ConfigError("bad smoothed-hinge width: " + v);
    }
    return Loss::smoothed_hinge(nu);
  }
  throw ConfigError("unknown loss: " + s);
}

struct ProblemSource {
  std::string data_path;                 // libsvm file (optionally .gz)
  std::optional<SyntheticSpec> synthetic;
  std::size_t dim = 0;
  bool normalize = false;
};

inline constexpr std::size_t kUnbounded = std::size_t{1} << 40;

struct RunConfig {
  ProblemSource source;
  Loss loss = Loss::logistic();
  double l1 = 0.0;
  double l2 = 0.0;
  Algo algo = Algo::DasvrdaNs;
  std::size_t batch = 0;      // 0: round(sqrt(n))
  std::size_t epoch_len = 0;  // 0: n/b (2n/b for SVRG)
  double gamma = 0.0;         // 0: gamma_star
  double eta = 0.0;           // 0: method default
  double eta_scale = 1.0;     // multiplier on the (default or given) step
  std::size_t stages = 0;     // S; 0: until the budget runs out (10 for dasvrda-sc)
  std::size_t restarts = 0;   // T for dasvrda-sc; 0: until the budget runs out
  SamplingKind sampling = SamplingKind::Uniform;
  std::uint64_t seed = 1;
  std::uint64_t budget = 0;   // max component-gradient evaluations
  LazyMode lazy = LazyMode::Auto;
  std::size_t warm_m0 = 0;    // 0: derived
  std::optional<std::size_t> warm_rounds;
  double target_gap = 0.0;    // stop once gap <= target (0: off)
  std::string trace_path;
  std::string ref_path;
  double ref_tol = 1e-12;

  void validate() const {
    if (source.data_path.empty() == !source.synthetic.has_value())
      throw ConfigError("exactly one of --data and --synthetic is required");
    if (!(l1 >= 0.0) || !(l2 >= 0.0) || !std::isfinite(l1) || !std::isfinite(l2))
      throw ConfigError("regularization weights must be nonnegative");
    if (budget == 0) throw ConfigError("budget must be positive");
    if (eta < 0.0 || !(eta_scale > 0.0)) throw ConfigError("step size must be positive");
    if (gamma != 0.0 && !(gamma > 1.0)) throw ConfigError("gamma must exceed 1");
    if (!(ref_tol > 0.0)) throw ConfigError("reference tolerance must be positive");
    if (lazy == LazyMode::On && algo == Algo::Dasvrg)
      throw ConfigError("lazy updates are not available for DASVRG");
  }
};

/// Loads or generates the data and builds the problem.
inline Problem build_problem(const RunConfig& cfg) try {
  Dataset data = [&] {
    if (cfg.source.synthetic) {
      Dataset d = generate_synthetic(*cfg.source.synthetic).data;
      if (cfg.source.dim) {
        if (cfg.source.dim < d.cols()) throw ConfigError("dimension override below data dimension");
        d = d.with_cols(cfg.source.dim);
      }
      return d;
    }
    LoadOptions opts;
    opts.dim = cfg.source.dim;
    opts.classification = cfg.loss.is_classification();
    return load_libsvm(cfg.source.data_path, opts);
  }();
  if (cfg.source.normalize) data = data.normalized_rows();
  return Problem(std::move(data), cfg.loss, ElasticNet(cfg.l1, cfg.l2));
} catch (const ConfigError&) {
  throw;
} catch (const Error& e) {
  throw ConfigError(e.what());
}

// ---------------------------------------------------------------------------
// Problem hashing and reference solutions

namespace detail {

struct Fnv1a {
  std::uint64_t h = 0xcbf29ce484222325ull;
  void bytes(const void* p, std::size_t n) {
    const auto* c = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= c[i];
      h *= 0x100000001b3ull;
    }
  }
  template <class T>
  void value(const T& v) {
    bytes(&v, sizeof v);
  }
  template <class T>
  void range(const std::vector<T>& v) {
    value(static_cast<std::uint64_t>(v.size()));
    bytes(v.data(), v.size() * sizeof(T));
  }
};

}  // namespace detail

/// FNV-1a over the data, loss and regularizer, as 16 hex digits.
inline std::string problem_hash(const Problem& p) {
  detail::Fnv1a f;
  const Dataset& a = p.data();
  f.value(static_cast<std::uint64_t>(a.rows()));
  f.value(static_cast<std::uint64_t>(a.cols()));
  std::vector<std::uint64_t> ptr(a.row_ptr().begin(), a.row_ptr().end());
  f.range(ptr);
  f.range(a.col_idx());
  f.range(a.values());
  f.range(a.labels());
  f.value(static_cast<int>(p.loss().kind));
  f.value(p.loss().nu);
  const ElasticNet* reg = p.elastic_net();
  f.value(reg ? reg->l1 : -1.0);
  f.value(reg ? reg->l2 : -1.0);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(f.h));
  return buf;
}

struct Reference {
  Vector x;
  double objective = 0.0;
  bool converged = false;
  std::size_t stages = 0;
  double tol = 0.0;
  std::string hash;
};

/// APG (step 1/mean L_i, gradient-scheme adaptive restart) until the relative
/// objective change over 100 stages falls below `tol`, then proximal-gradient
/// polishing while it still decreases. Returns the best iterate seen;
/// `converged` is false if `max_stages` ran out first.
inline Reference compute_reference(const Problem& p, double tol, std::size_t max_stages = 100000,
                                   std::span<const double> x0 = {}) {
  detail::require(tol > 0.0, "reference tolerance must be positive");
  const std::size_t d = p.d();
  const double eta = 1.0 / p.mean_smoothness();
  Vector x = x0.empty() ? Vector(d, 0.0) : Vector(x0.begin(), x0.end());
  Vector x_prev = x, y(d), g(d), x_new(d);
  double t = 1.0;
  Reference ref;
  ref.tol = tol;
  ref.hash = problem_hash(p);
  ref.x = x;
  ref.objective = objective(p, x);
  std::deque<double> history{ref.objective};
  std::size_t s = 0;
  for (; s < max_stages; ++s) {
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    const double beta = (t - 1.0) / t_next;
    for (std::size_t j = 0; j < d; ++j) y[j] = x[j] + beta * (x[j] - x_prev[j]);
    full_gradient(p, y, g);
    for (std::size_t j = 0; j < d; ++j) g[j] = y[j] - eta * g[j];
    p.prox(g, eta, x_new);
    double dot = 0.0;
    for (std::size_t j = 0; j < d; ++j) dot += (y[j] - x_new[j]) * (x_new[j] - x[j]);
    x_prev.swap(x);
    x.swap(x_new);
    t = t_next;
    if (dot > 0.0) {
      t = 1.0;
      x_prev = x;
    }
    const double f = objective(p, x);
    if (f < ref.objective) {
      ref.objective = f;
      ref.x = x;
    }
    history.push_back(f);
    if (history.size() > 101) history.pop_front();
    if (history.size() == 101) {
      const double change = std::abs(history.front() - history.back());
      if (change <= tol * std::abs(history.back())) {
        ref.converged = true;
        ++s;
        break;
      }
    }
  }
  Vector z = ref.x;
  for (int polish = 0; polish < 1000; ++polish) {
    z = one_stage_pg(p, z, eta);
    const double f = objective(p, z);
    if (!(f < ref.objective)) break;
    ref.objective = f;
    ref.x = z;
  }
  ref.stages = s;
  return ref;
}

inline nlohmann::ordered_json to_json(const Reference& r) {
  nlohmann::ordered_json j;
  j["hash"] = r.hash;
  j["objective"] = r.objective;
  j["converged"] = r.converged;
  if (!r.converged) j["warning"] = "stage budget exhausted before the tolerance was met";
  j["stages"] = r.stages;
  j["tol"] = r.tol;
  j["x"] = r.x;
  return j;
}

inline Reference reference_from_json(const nlohmann::json& j) {
  Reference r;
  r.hash = j.at("hash").get<std::string>();
  r.objective = j.at("objective").get<double>();
  r.converged = j.at("converged").get<bool>();
  r.stages = j.at("stages").get<std::size_t>();
  r.tol = j.at("tol").get<double>();
  r.x = j.at("x").get<Vector>();
  return r;
}

inline void save_reference(const Reference& r, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << to_json(r).dump(1) << "\n";
  if (!out) throw Error("write error on " + path);
}

inline std::optional<Reference> load_reference(const std::string& path) {
  std::ifstream in(path);
  if (!in) return std::nullopt;
  try {
    return reference_from_json(nlohmann::json::parse(in));
  } catch (const std::exception& e) {
    throw Error("bad reference file " + path + ": " + e.what());
  }
}

/// Cached reference: reused when `path` holds a solution for the same problem
/// hash computed with a tolerance at least as tight; otherwise recomputed and
/// written. `hit` reports whether the cache was used.
inline Reference cached_reference(const Problem& p, double tol, const std::string& path,
                                  bool* hit = nullptr, std::size_t max_stages = 100000) {
  const std::string hash = problem_hash(p);
  if (auto r = load_reference(path); r && r->hash == hash && r->tol <= tol && r->x.size() == p.d()) {
    if (hit) *hit = true;
    return *r;
  }
  if (hit) *hit = false;
  Reference r = compute_reference(p, tol, max_stages);
  save_reference(r, path);
  return r;
}

// ---------------------------------------------------------------------------
// Traces

struct TraceRecord {
  std::size_t stage = 0;
  std::uint64_t evals = 0;
  double evals_over_n = 0.0;
  double objective = 0.0;
  double gap = std::numeric_limits<double>::quiet_NaN();
  double seconds = 0.0;
  bool restarted = false;
};

inline constexpr const char* kTraceColumns = "stage,evals,evals_over_n,objective,gap,seconds,restarted";

inline std::string format_record(const TraceRecord& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%zu,%llu,%.17g,%.17g,%.17g,%.6f,%d", r.stage,
                static_cast<unsigned long long>(r.evals), r.evals_over_n, r.objective, r.gap,
                r.seconds, r.restarted ? 1 : 0);
  return buf;
}

inline void write_trace(const std::string& path, const nlohmann::ordered_json& header,
                        const std::vector<TraceRecord>& records) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << "# " << header.dump() << "\n" << kTraceColumns << "\n";
  for (const TraceRecord& r : records) out << format_record(r) << "\n";
  if (!out) throw Error("write error on " + path);
}

struct RunResult {
  std::vector<TraceRecord> records;
  nlohmann::ordered_json header;
  Vector x;
  std::vector<std::string> warnings;
  bool budget_exhausted = false;
  bool reached_target = false;

  /// First evals/n at which gap <= target, or +inf.
  double evals_over_n_to(double target) const {
    for (const TraceRecord& r : records)
      if (r.gap <= target) return r.evals_over_n;
    return std::numeric_limits<double>::infinity();
  }
  double final_gap() const {
    return records.empty() ? std::numeric_limits<double>::quiet_NaN() : records.back().gap;
  }
};

inline SamplingScheme make_scheme(SamplingKind kind, const Problem& p, std::size_t b) {
  switch (kind) {
    case SamplingKind::Uniform: return SamplingScheme::iid_uniform(p.n());
    case SamplingKind::Weighted: return SamplingScheme::iid_weighted(p.smoothness());
    case SamplingKind::Partition:
      if (p.n() % b != 0)
        throw ConfigError("partition sampling requires the batch size to divide n (n = " +
                          std::to_string(p.n()) + ", b = " + std::to_string(b) + ")");
      return SamplingScheme::partition(p.n(), b);
  }
  throw ConfigError("unknown sampling scheme");
}

inline std::size_t default_batch(std::size_t n) {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(n)))));
}

/// Runs one configured experiment on `p`. `cell` selects the RNG substream
/// (grid cells use distinct cells; a single run is cell 0).
inline RunResult run_experiment(const RunConfig& cfg, const Problem& p, const Reference* ref = nullptr,
                                std::uint64_t cell = 0) {
  cfg.validate();
  const std::size_t n = p.n();
  const std::size_t b = cfg.batch ? cfg.batch : default_batch(n);
  if (b > n) throw ConfigError("batch size exceeds n");
  if (ref && ref->x.size() != p.d()) throw ConfigError("reference dimension does not match the problem");
  const SamplingScheme scheme = make_scheme(cfg.sampling, p, b);
  RngStream rng = RngStream::substream(cfg.seed, cell, 0);
  const Vector x0(p.d(), 0.0);

  RunResult res;
  auto& h = res.header;
  h["algo"] = to_string(cfg.algo);
  if (cfg.source.synthetic) {
    const SyntheticSpec& s = *cfg.source.synthetic;
    h["data"] = {{"synthetic", to_string(s.kind)}, {"n", s.n},         {"d", s.d},
                 {"density", s.density},           {"noise", s.noise}, {"sparsity", s.support()},
                 {"seed", s.seed}};
  } else {
    h["data"] = cfg.source.data_path;
  }
  h["normalize"] = cfg.source.normalize;
  h["n"] = n;
  h["d"] = p.d();
  h["nnz"] = p.data().nnz();
  h["problem_hash"] = problem_hash(p);
  h["loss"] = to_string(cfg.loss);
  h["l1"] = cfg.l1;
  h["l2"] = cfg.l2;
  h["batch"] = b;
  h["sampling"] = to_string(cfg.sampling);
  h["seed"] = cfg.seed;
  h["cell"] = cell;
  h["rng"] = std::string(RngStream::kGenerator);
  h["budget"] = cfg.budget;
  if (cfg.target_gap > 0.0) h["target_gap"] = cfg.target_gap;
  h["eta_scale"] = cfg.eta_scale;
  if (ref) h["ref_objective"] = ref->objective;

  const auto start = std::chrono::steady_clock::now();
  auto seconds = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };
  std::uint64_t cumulative = 0;
  auto push = [&](std::size_t stage, std::span<const double> x, bool restarted) {
    TraceRecord r;
    r.stage = stage;
    r.evals = cumulative;
    r.evals_over_n = static_cast<double>(cumulative) / static_cast<double>(n);
    r.objective = objective(p, x);
    if (!std::isfinite(r.objective)) throw Error("objective diverged at stage " + std::to_string(stage));
    if (ref) r.gap = r.objective - ref->objective;
    r.seconds = seconds();
    r.restarted = restarted;
    res.records.push_back(r);
    if (cfg.target_gap > 0.0 && r.gap <= cfg.target_gap) res.reached_target = true;
  };
  push(0, x0, false);
  const StageObserver observer = [&](const StageReport& s) {
    cumulative += s.evals;
    push(s.stage, s.x, s.restarted);
    if (cumulative >= cfg.budget) {
      res.budget_exhausted = true;
      return false;
    }
    return !res.reached_target;
  };

  const std::size_t S = cfg.stages ? cfg.stages : kUnbounded;
  auto finish = [&](Vector x) {
    res.x = std::move(x);
    return res;
  };
  try {
    switch (cfg.algo) {
      case Algo::Pg:
      case Algo::Apg: {
        const double eta = (cfg.eta ? cfg.eta : 1.0 / p.mean_smoothness()) * cfg.eta_scale;
        h["eta"] = eta;
        h["stages"] = cfg.stages;
        const SolverResult r = cfg.algo == Algo::Pg ? run_pg(p, x0, eta, S, observer)
                                                    : run_apg(p, x0, eta, S, observer);
        return finish(r.last);
      }
      case Algo::Svrg: {
        const std::size_t m = cfg.epoch_len ? cfg.epoch_len : std::max<std::size_t>(1, 2 * n / b);
        const double eta = (cfg.eta ? cfg.eta : 1.0 / step_smoothness(p, scheme)) * cfg.eta_scale;
        h["m"] = m;
        h["eta"] = eta;
        h["stages"] = cfg.stages;
        const SolverResult r = run_svrg(p, x0, eta, m, b, scheme, rng, S, observer);
        return finish(r.last);
      }
      default:
        break;
    }

    DasvrdaParams dp;
    dp.b = b;
    dp.m = cfg.epoch_len;
    dp.gamma = cfg.gamma;
    dp.S = S;
    dp.T = 1;
    dp.variant = cfg.algo == Algo::Dasvrg ? InnerVariant::Dasvrg : InnerVariant::AccSvrda;
    dp.engine = cfg.lazy == LazyMode::On ? Engine::Lazy : cfg.lazy == LazyMode::Off ? Engine::Dense : Engine::Auto;
    if (dp.variant == InnerVariant::Dasvrg && dp.engine == Engine::Auto) dp.engine = Engine::Dense;

    if (cfg.algo == Algo::DasvrdaWarm) {
      const std::size_t m_target = dp.m ? dp.m : default_epoch_length(n, b);
      const double gamma = dp.gamma ? dp.gamma : gamma_star(m_target, b);
      std::size_t m0 = cfg.warm_m0;
      if (m0 == 0) {
        const double gap = ref ? objective(p, x0) - ref->objective : objective(p, x0);
        double dist = 0.0;
        if (ref)
          for (std::size_t j = 0; j < p.d(); ++j) dist += (x0[j] - ref->x[j]) * (x0[j] - ref->x[j]);
        m0 = warm_initial_length(gamma, m_target, b, p.mean_smoothness(), dist, gap);
      }
      const std::size_t U = cfg.warm_rounds ? *cfg.warm_rounds : warm_default_rounds(gamma, m_target, m0);
      const auto ms = warm_schedule(gamma, m0, U);
      DasvrdaParams tail = dp;
      tail.gamma = gamma;
      tail.m = warm_final_length(gamma, ms.back());
      ResolvedParams r = resolve(tail, p, scheme);
      dp.gamma = gamma;
      dp.eta = (cfg.eta ? cfg.eta : r.eta) * cfg.eta_scale;
      h["gamma"] = gamma;
      h["eta"] = dp.eta;
      h["m0"] = m0;
      h["U"] = U;
      h["m_final"] = tail.m;
      h["stages"] = cfg.stages;
      h["lazy"] = r.lazy;
      res.warnings = r.warnings;
      const DasvrdaResult out = run_dasvrda_warm(p, x0, m0, U, dp, scheme, rng, observer);
      return finish(out.x);
    }

    const ResolvedParams r0 = resolve(dp, p, scheme);
    dp.gamma = r0.gamma;
    dp.m = r0.m;
    dp.eta = (cfg.eta ? cfg.eta : r0.eta) * cfg.eta_scale;
    h["gamma"] = dp.gamma;
    h["m"] = dp.m;
    h["eta"] = dp.eta;
    h["lazy"] = r0.lazy;
    res.warnings = r0.warnings;
    switch (cfg.algo) {
      case Algo::DasvrdaNs:
      case Algo::Dasvrg: {
        h["stages"] = cfg.stages;
        return finish(run_dasvrda_ns(p, x0, x0, dp, scheme, rng, observer).x);
      }
      case Algo::DasvrdaSc: {
        dp.S = cfg.stages ? cfg.stages : 10;
        dp.T = cfg.restarts ? cfg.restarts : kUnbounded;
        h["stages"] = dp.S;
        h["restarts"] = cfg.restarts;
        return finish(run_dasvrda_sc(p, x0, dp, scheme, rng, observer).x);
      }
      case Algo::DasvrdaArF:
      case Algo::DasvrdaArG: {
        h["stages"] = cfg.stages;
        const RestartKind kind = cfg.algo == Algo::DasvrdaArF ? RestartKind::Function : RestartKind::Gradient;
        return finish(run_dasvrda_adaptive(p, x0, dp, kind, scheme, rng, observer).x);
      }
      default:
        throw ConfigError("unknown algorithm");
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    // Parameter validation inside the solvers happens before any stage runs.
    if (res.records.size() <= 1) throw ConfigError(e.what());
    throw;
  }
}

// ---------------------------------------------------------------------------
// Grid sweeps

/// {1, 2, 5} x 10^p for p in [lo, hi].
inline std::vector<double> one_two_five(int lo, int hi) {
  std::vector<double> out;
  for (int p = lo; p <= hi; ++p)
    for (double c : {1.0, 2.0, 5.0}) out.push_back(c * std::pow(10.0, p));
  return out;
}

inline std::vector<double> grid_step_multipliers() { return one_two_five(-2, 2); }

inline std::vector<std::size_t> grid_restart_intervals() {
  std::vector<std::size_t> out;
  for (double v : one_two_five(0, 2)) out.push_back(static_cast<std::size_t>(std::llround(v)));
  return out;
}

struct GridCell {
  RunConfig config;
  std::uint64_t cell = 0;
  RunResult result;
  std::string error;
};

/// Grid of step multipliers (and restart intervals for dasvrda-sc) around `base`.
inline std::vector<GridCell> make_grid(const RunConfig& base) {
  std::vector<GridCell> cells;
  std::vector<std::size_t> intervals{base.stages};
  if (base.algo == Algo::DasvrdaSc) intervals = grid_restart_intervals();
  for (double mult : grid_step_multipliers())
    for (std::size_t S : intervals) {
      GridCell c;
      c.config = base;
      c.config.eta_scale = base.eta_scale * mult;
      c.config.stages = S;
      c.cell = cells.size();
      cells.push_back(std::move(c));
    }
  return cells;
}

/// Suffix a trace path with the cell's step multiplier and restart interval.
inline std::string cell_trace_path(const std::string& path, const RunConfig& c, bool with_interval) {
  if (path.empty()) return path;
  std::filesystem::path p(path);
  char tag[64];
  std::snprintf(tag, sizeof tag, ".eta%g", c.eta_scale);
  std::string suffix = tag;
  if (with_interval) suffix += ".S" + std::to_string(c.stages);
  return (p.parent_path() / (p.stem().string() + suffix + p.extension().string())).string();
}

/// Runs every cell on `workers` threads. A cell whose run throws records the
/// message in `error` (e.g. divergence at large steps).
inline void run_grid(std::vector<GridCell>& cells, const Problem& p, const Reference* ref,
                     std::size_t workers = 1) {
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      try {
        cells[i].result = run_experiment(cells[i].config, p, ref, cells[i].cell);
      } catch (const std::exception& e) {
        cells[i].error = e.what();
      }
    }
  };
  workers = std::max<std::size_t>(1, std::min(workers, cells.size()));
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
}

/// Best cell: fewest evals/n to reach `target` (when given and reached), then
/// lowest final objective. Returns cells.size() if every cell failed.
inline std::size_t best_cell(const std::vector<GridCell>& cells, double target) {
  std::size_t best = cells.size();
  auto key = [&](const GridCell& c) {
    const double hit = target > 0.0 ? c.result.evals_over_n_to(target) : std::numeric_limits<double>::infinity();
    const double fin = c.result.records.empty() ? std::numeric_limits<double>::infinity()
                                                : c.result.records.back().objective;
    return std::make_pair(hit, fin);
  };
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (!cells[i].error.empty() || cells[i].result.records.empty()) continue;
    if (best == cells.size() || key(cells[i]) < key(cells[best])) best = i;
  }
  return best;
}

}  // namespace erm
