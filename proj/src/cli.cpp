#include "smoa/cli.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "smoa/adapters.hpp"
#include "smoa/capacity.hpp"
#include "smoa/diagnostics.hpp"
#include "smoa/errors.hpp"
#include "smoa/matrix_io.hpp"
#include "smoa/preprocess.hpp"
#include "smoa/random.hpp"
#include "smoa/serialize.hpp"
#include "smoa/spectrum.hpp"
#include "smoa/trainer.hpp"

namespace smoa::cli {

namespace fs = std::filesystem;
using io::json;

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const DimensionError*>(&e) || dynamic_cast<const RangeError*>(&e) ||
      dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const ArgumentError*>(&e)) {
    return kValidation;
  }
  if (dynamic_cast<const IoError*>(&e) || dynamic_cast<const fs::filesystem_error*>(&e)) return kIo;
  if (dynamic_cast<const NumericalError*>(&e)) return kNumerical;
  return kUsage;
}

namespace {

struct RunConfig {
  std::uint64_t seed = 0;
  std::optional<double> epsilon;
  std::string output_dir;
  std::string format = "json";
  bool quiet = false;
};

class Session {
 public:
  Session(const RunConfig& config, std::ostream& out) : config_(config), out_(out) {}

  const RunConfig& config() const { return config_; }
  double epsilon() const { return config_.epsilon.value_or(-1.0); }

  fs::path artifact(const std::string& name) const {
    const fs::path dir = config_.output_dir.empty() ? fs::path(".") : fs::path(config_.output_dir);
    fs::create_directories(dir);
    return dir / name;
  }

  void emit(const json& j) const {
    if (config_.quiet) return;
    if (config_.format == "csv") {
      std::string header;
      std::string row;
      for (const auto& [key, value] : j.items()) {
        if (value.is_structured()) continue;
        header += (header.empty() ? "" : ",") + key;
        row += (row.empty() ? "" : ",") + (value.is_string() ? value.get<std::string>() : value.dump());
      }
      out_ << header << "\n" << row << "\n";
    } else {
      out_ << j.dump() << "\n";
    }
  }

 private:
  const RunConfig& config_;
  std::ostream& out_;
};

json shape_json(const Matrix& m) { return json::array({m.rows(), m.cols()}); }

void write_json(const fs::path& path, const json& j) { io::write_file_atomic(path, j.dump(2) + "\n"); }

OrderingRule parse_rule(const std::string& name) {
  if (name == "centroid") return OrderingRule::SpectralCentroid;
  if (name == "dominant") return OrderingRule::DominantDirection;
  throw ArgumentError("unknown ordering rule '" + name + "' (expected centroid or dominant)");
}

// ---- gen ------------------------------------------------------------------

struct GenArgs {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::string kind;
  std::vector<double> values;
  std::size_t spikes = 1;
  double strength = 10.0;
  std::size_t rank = 1;
  double noise = 1.0;
  std::string name = "matrix.smat";
};

// Rank-`count` signal with every singular value strength * sqrt(max(rows, cols)),
// plus i.i.d. Gaussian noise of standard deviation `noise`.
Matrix planted(std::size_t rows, std::size_t cols, std::size_t count, double strength, double noise, Rng& rng) {
  if (count > std::min(rows, cols)) {
    throw RangeError("cannot plant " + std::to_string(count) + " directions in a " + shape_string(rows, cols) +
                     " matrix");
  }
  if (!(noise >= 0.0) || !(strength >= 0.0)) throw ArgumentError("noise and strength must be non-negative");
  Matrix w = noise > 0.0 ? gaussian_matrix(rows, cols, rng, noise) : Matrix(rows, cols);
  if (count == 0) return w;
  const Matrix u = random_orthonormal(rows, count, rng);
  const Matrix v = random_orthonormal(cols, count, rng);
  const double c = strength * std::sqrt(static_cast<double>(std::max(rows, cols)));
  w += (c * u) * v.transpose();
  return w;
}

int cmd_gen(const Session& s, const GenArgs& a) {
  if (a.rows == 0 || a.cols == 0) throw DimensionError("gen: rows and cols must be positive");
  Rng rng(s.config().seed);
  std::optional<Matrix> w;
  if (a.kind == "gaussian") {
    w = gaussian_matrix(a.rows, a.cols, rng, a.noise);
  } else if (a.kind == "diagonal") {
    if (a.values.size() > std::min(a.rows, a.cols)) {
      throw RangeError("gen: " + std::to_string(a.values.size()) + " diagonal values for a " +
                       shape_string(a.rows, a.cols) + " matrix");
    }
    w = Matrix::diagonal(a.rows, a.cols, a.values);
  } else if (a.kind == "spiked") {
    w = planted(a.rows, a.cols, a.spikes, a.strength, a.noise, rng);
  } else if (a.kind == "low-rank-plus-noise") {
    w = planted(a.rows, a.cols, a.rank, a.strength, a.noise, rng);
  } else {
    throw ArgumentError("gen: unknown kind '" + a.kind + "'");
  }
  const fs::path path = s.artifact(a.name);
  io::write_matrix(path, *w);
  s.emit({{"matrix", path.string()}, {"kind", a.kind}, {"shape", shape_json(*w)}, {"seed", s.config().seed},
          {"hash", io::sha256_hex(io::read_file(path))}});
  return kOk;
}

// ---- plan / adapter / update ----------------------------------------------

struct PlanArgs {
  std::string w0;
  std::size_t k = 1;
  std::string rule = "centroid";
  std::string name = "plan.json";
};

int cmd_plan(const Session& s, const PlanArgs& a) {
  const Matrix w0 = io::read_matrix(a.w0);
  const BlockPlan plan = build_plan(w0, a.k, parse_rule(a.rule));
  const fs::path path = s.artifact(a.name);
  const std::string hash = io::write_plan(path, plan);
  s.emit({{"plan", path.string()}, {"k", plan.k()}, {"d_out", plan.d_out()}, {"d_in", plan.d_in()},
          {"plan_hash", hash}, {"source_hash", plan.source_hash()}});
  return kOk;
}

struct AdapterArgs {
  std::string plan;
  std::size_t r = 0;
  std::string kind = "smoa";
  std::string init = "zero-update";
  std::optional<double> scale;
  std::string target;
  std::string name = "adapter.json";
};

int cmd_adapter(const Session& s, const AdapterArgs& a) {
  auto plan = std::make_shared<const BlockPlan>(io::read_plan(a.plan));
  const AdapterKind kind = parse_adapter_kind(a.kind);
  const AdapterInit init{parse_init_scheme(a.init), s.config().seed, a.scale};
  std::optional<Adapter> adapter;
  if (init.scheme == InitScheme::Spectral) {
    if (a.target.empty()) throw ConfigError("adapter: spectral init needs --target");
    const Matrix target = io::read_matrix(a.target);
    if (kind == AdapterKind::Lora) {
      adapter = make_lora_spectral(target, a.r, a.scale.value_or(1.0));
    } else {
      adapter = make_smoa_spectral(plan, target, a.r, a.scale.value_or(1.0));
    }
  } else if (kind == AdapterKind::Lora) {
    adapter = make_lora(plan->d_out(), plan->d_in(), a.r, init);
  } else {
    adapter = make_smoa(plan, a.r, init);
  }
  const fs::path path = s.artifact(a.name);
  const bool smoa = kind == AdapterKind::Smoa;
  io::write_adapter(path, *adapter, init, smoa ? std::optional<fs::path>(a.plan) : std::nullopt);
  s.emit({{"adapter", path.string()},
          {"kind", a.kind},
          {"r", a.r},
          {"k", smoa ? plan->k() : 1},
          {"rho", smoa ? a.r / plan->k() : a.r},
          {"params", param_count(*adapter)},
          {"seed", s.config().seed}});
  return kOk;
}

struct UpdateArgs {
  std::string adapter;
  std::string name = "update.smat";
};

int cmd_update(const Session& s, const UpdateArgs& a) {
  const auto loaded = io::read_adapter(a.adapter);
  const Matrix delta = update(loaded.adapter);
  const fs::path path = s.artifact(a.name);
  io::write_matrix(path, delta);
  s.emit({{"matrix", path.string()}, {"shape", shape_json(delta)}, {"hash", io::sha256_hex(io::read_file(path))}});
  return kOk;
}

// ---- rank / ceiling --------------------------------------------------------

struct RankArgs {
  std::string matrix;
  std::string adapter;
  std::string name = "rank.json";
};

int cmd_rank(const Session& s, const RankArgs& a) {
  if (a.matrix.empty() == a.adapter.empty()) throw ArgumentError("rank: give exactly one of --matrix or --adapter");
  std::optional<Matrix> w;
  json j;
  if (!a.matrix.empty()) {
    w = io::read_matrix(a.matrix);
    j["source"] = a.matrix;
  } else {
    const auto loaded = io::read_adapter(a.adapter);
    w = update(loaded.adapter);
    j["source"] = a.adapter;
    if (const auto* sm = std::get_if<SmoaAdapter>(&loaded.adapter)) {
      const auto c = rank_ceiling(sm->plan(), sm->rank_budget());
      j["total_ceiling"] = c.total_ceiling;
      j["lora_ceiling"] = c.lora_ceiling;
    } else {
      j["total_ceiling"] = std::get<LoraAdapter>(loaded.adapter).rank();
    }
  }
  const auto sv = singular_values(*w);
  const double eps = s.config().epsilon ? *s.config().epsilon : default_rank_tolerance(w->rows(), w->cols(), sv.front());
  if (eps < 0.0) throw RangeError("rank: epsilon must be non-negative");
  j["shape"] = shape_json(*w);
  j["epsilon"] = eps;
  j["rank"] = count_above(sv, eps);
  j["singular_values"] = sv;
  write_json(s.artifact(a.name), j);
  s.emit(j);
  return kOk;
}

struct CeilingArgs {
  std::string plan;
  std::size_t r = 0;
  std::string name = "ceiling.json";
};

int cmd_ceiling(const Session& s, const CeilingArgs& a) {
  const BlockPlan plan = io::read_plan(a.plan);
  const auto report = rank_ceiling(plan, a.r);
  write_json(s.artifact(a.name), io::ceiling_to_json(report));
  s.emit({{"total_ceiling", report.total_ceiling},
          {"lora_ceiling", report.lora_ceiling},
          {"separated", report.separated}});
  return kOk;
}

// ---- witness / gap ----------------------------------------------------------

struct WitnessArgs {
  std::string plan;
  std::size_t rho = 1;
  std::string name = "witness";
};

int cmd_witness(const Session& s, const WitnessArgs& a) {
  auto plan = std::make_shared<const BlockPlan>(io::read_plan(a.plan));
  const auto w = make_witness(plan, a.rho, s.config().seed);
  const fs::path dir = s.artifact(a.name);
  io::write_witness(dir, w);
  s.emit({{"witness", dir.string()},
          {"k", plan->k()},
          {"rho", w.rho},
          {"seed", w.seed},
          {"reordered_target_rank", w.reordered_target_rank},
          {"target_energy", w.target.squared_norm()}});
  return kOk;
}

struct GapArgs {
  std::string witness;
  std::size_t r = 0;
  std::string name = "gap.json";
};

int cmd_gap(const Session& s, const GapArgs& a) {
  const auto w = io::read_witness(a.witness);
  const std::size_t m = std::min(w.target.rows(), w.target.cols());
  if (a.r > m) throw RangeError("gap: r=" + std::to_string(a.r) + " exceeds min dimension " + std::to_string(m));
  const json j = {{"r", a.r},
                  {"gap", lora_gap(w, a.r)},
                  {"tail_energy", tail_energy(w.target, a.r)},
                  {"reordered_target_rank", w.reordered_target_rank},
                  {"target_energy", w.target.squared_norm()}};
  write_json(s.artifact(a.name), j);
  s.emit(j);
  return kOk;
}

// ---- fit ---------------------------------------------------------------------

struct FitArgs {
  std::string target;
  std::string witness;
  std::string plan;
  std::string kind = "smoa";
  std::size_t r = 0;
  std::string init = "spectral";
  std::optional<double> scale = 0.1;
  FitConfig config;
};

int cmd_fit(const Session& s, const FitArgs& a) {
  if (a.target.empty() == a.witness.empty()) throw ArgumentError("fit: give exactly one of --target or --witness");
  const AdapterKind kind = parse_adapter_kind(a.kind);
  std::optional<Matrix> target;
  std::shared_ptr<const BlockPlan> plan;
  std::optional<fs::path> plan_path;
  if (!a.witness.empty()) {
    auto w = io::read_witness(a.witness);
    target = std::move(w.target);
    plan = w.plan;
    plan_path = fs::path(a.witness) / "plan.json";
  } else {
    target = io::read_matrix(a.target);
    if (!a.plan.empty()) {
      plan = std::make_shared<const BlockPlan>(io::read_plan(a.plan));
      plan_path = a.plan;
    }
  }
  if (kind == AdapterKind::Smoa && !plan) throw ConfigError("fit: smoa fits need --plan or --witness");
  const FitProblem problem(*target, plan);
  const AdapterInit init{parse_init_scheme(a.init), s.config().seed, a.scale};
  const FitTrace trace = fit(problem, kind, a.r, init, a.config);

  io::write_file_atomic(s.artifact("trace.csv"), io::trace_csv(trace));
  json summary = io::trace_summary(trace);
  write_json(s.artifact("summary.json"), summary);
  io::write_adapter(s.artifact("adapter.json"), trace.adapter, init,
                    kind == AdapterKind::Smoa ? plan_path : std::nullopt);
  s.emit(summary);
  return kOk;
}

// ---- diagnose ------------------------------------------------------------------

struct DiagnoseArgs {
  std::string matrix;
  std::string activations;
  std::optional<double> noise_scale;
  std::size_t bins = 40;
  std::size_t baseline_samples = 200;
};

int cmd_diagnose(const Session& s, const DiagnoseArgs& a) {
  const Matrix w = io::read_matrix(a.matrix);
  std::optional<ActivationSample> acts;
  if (!a.activations.empty()) acts.emplace(io::read_matrix(a.activations));
  ReportOptions opts;
  opts.epsilon = s.epsilon();
  opts.noise_scale = a.noise_scale;
  opts.seed = s.config().seed;
  opts.baseline_samples = a.baseline_samples;
  const SpectralReport report = full_report(w, acts ? &*acts : nullptr, opts);

  json j = io::report_to_json(report);
  write_json(s.artifact("report.json"), j);
  io::write_file_atomic(s.artifact("nu_histogram.csv"), io::histogram_csv(report, a.bins));
  if (acts) io::write_file_atomic(s.artifact("overlaps.csv"), io::overlaps_csv(report));
  s.emit(j);
  return kOk;
}

// ---- sweep -----------------------------------------------------------------------

struct SweepArgs {
  std::string spec;
  std::string name = "sweep.csv";
};

struct SweepCell {
  std::size_t d;
  std::size_t k;
  std::size_t r;
};

std::vector<std::size_t> grid_axis(const json& grid, const char* key) {
  if (!grid.contains(key)) throw ConfigError(std::string("sweep grid is missing '") + key + "'");
  const auto& v = grid.at(key);
  if (v.is_number_unsigned()) return {v.get<std::size_t>()};
  try {
    auto out = v.get<std::vector<std::size_t>>();
    if (out.empty()) throw ConfigError(std::string("sweep grid axis '") + key + "' is empty");
    return out;
  } catch (const json::exception&) {
    throw ConfigError(std::string("sweep grid axis '") + key + "' must be a list of positive integers");
  }
}

int cmd_sweep(const Session& s, const SweepArgs& a) {
  json spec;
  try {
    spec = json::parse(io::read_file(a.spec));
  } catch (const json::exception& e) {
    throw IoError(a.spec + ": " + e.what());
  }
  if (!spec.contains("grid")) throw ConfigError("sweep spec needs a 'grid' object");
  const std::uint64_t master = spec.value("seed", s.config().seed);
  const auto trials = spec.value("trials", std::size_t{1});
  if (trials == 0) throw ConfigError("sweep trials must be positive");
  std::vector<AdapterKind> methods;
  for (const auto& m : spec.value("methods", std::vector<std::string>{"lora", "smoa"})) {
    methods.push_back(parse_adapter_kind(m));
  }
  std::vector<SweepCell> cells;
  for (auto d : grid_axis(spec.at("grid"), "d"))
    for (auto k : grid_axis(spec.at("grid"), "K"))
      for (auto r : grid_axis(spec.at("grid"), "r")) cells.push_back({d, k, r});

  const double eps = s.epsilon();
  std::string csv = "method,d,K,r,params,achieved_rank,ceiling,gap\n";
  std::size_t rows = 0;
  for (std::size_t g = 0; g < cells.size(); ++g) {
    const auto [d, k, r] = cells[g];
    if (d == 0 || r == 0 || r % k != 0) {
      throw ConfigError("sweep cell d=" + std::to_string(d) + " K=" + std::to_string(k) + " r=" + std::to_string(r) +
                        " needs K | r");
    }
    for (std::size_t t = 0; t < trials; ++t) {
      const std::uint64_t seed = derive_seed(master, g * trials + t);
      Rng rng(derive_seed(seed, 0));
      const Matrix w0 = gaussian_matrix(d, d, rng);
      auto plan = std::make_shared<const BlockPlan>(build_plan(w0, k));
      const auto witness = make_witness(plan, r / k, derive_seed(seed, 2));
      const AdapterInit init{InitScheme::Gaussian, derive_seed(seed, 1), std::nullopt};
      for (AdapterKind kind : methods) {
        std::optional<Adapter> adapter;
        std::size_t ceiling = 0;
        double gap = 0.0;
        if (kind == AdapterKind::Lora) {
          adapter = make_lora(d, d, r, init);
          ceiling = std::min(r, d);
          gap = lora_gap(witness, r);
        } else {
          adapter = make_smoa(plan, r, init);
          ceiling = rank_ceiling(*plan, r).total_ceiling;
          gap = (smoa_update(smoa_exact_fit(witness)) - witness.target).squared_norm();
        }
        csv += to_string(kind) + "," + std::to_string(d) + "," + std::to_string(k) + "," + std::to_string(r) + "," +
               std::to_string(param_count(*adapter)) + "," + std::to_string(achieved_rank(update(*adapter), eps)) +
               "," + std::to_string(ceiling) + "," + io::format_double(gap) + "\n";
        ++rows;
      }
    }
  }
  const fs::path path = s.artifact(a.name);
  io::write_file_atomic(path, csv);
  s.emit({{"sweep", path.string()}, {"rows", rows}, {"seed", master}, {"hash", io::sha256_hex(csv)}});
  return kOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Spectrum modulation adapter toolkit"};
  app.require_subcommand(1);
  app.fallthrough();

  RunConfig cfg;
  if (const char* env = std::getenv("SMOA_OUT")) cfg.output_dir = env;
  double epsilon = -1.0;
  app.add_option("--seed", cfg.seed, "Master seed");
  auto* eps_opt = app.add_option("--epsilon", epsilon, "Rank tolerance (default: max(m,n) * sigma_1 * machine epsilon)");
  app.add_option("--out", cfg.output_dir, "Output directory (default $SMOA_OUT or .)");
  app.add_option("--format", cfg.format, "Stdout format")->check(CLI::IsMember({"json", "csv"}));
  app.add_flag("--quiet", cfg.quiet, "Suppress stdout on success");

  std::function<int(const Session&)> action;

  GenArgs gen;
  auto* g = app.add_subcommand("gen", "Generate a test matrix");
  g->add_option("rows", gen.rows)->required();
  g->add_option("cols", gen.cols)->required();
  g->add_option("kind", gen.kind)->required()->check(
      CLI::IsMember({"gaussian", "diagonal", "spiked", "low-rank-plus-noise"}));
  g->add_option("--values", gen.values, "Diagonal entries")->delimiter(',');
  g->add_option("--spikes", gen.spikes, "Number of planted spikes");
  g->add_option("--strength", gen.strength, "Spike strength in units of sqrt(max dim)");
  g->add_option("--rank", gen.rank, "Signal rank for low-rank-plus-noise");
  g->add_option("--noise", gen.noise, "Noise standard deviation");
  g->add_option("--name", gen.name, "Output file name (.csv selects CSV)");
  g->callback([&] { action = [&](const Session& s) { return cmd_gen(s, gen); }; });

  PlanArgs plan;
  auto* p = app.add_subcommand("plan", "Build a block plan from a base weight");
  p->add_option("--w0", plan.w0)->required();
  p->add_option("--k", plan.k)->required();
  p->add_option("--rule", plan.rule)->check(CLI::IsMember({"centroid", "dominant"}));
  p->add_option("--name", plan.name);
  p->callback([&] { action = [&](const Session& s) { return cmd_plan(s, plan); }; });

  AdapterArgs adapter;
  auto* ad = app.add_subcommand("adapter", "Construct an adapter");
  ad->add_option("--plan", adapter.plan)->required();
  ad->add_option("--r", adapter.r)->required();
  ad->add_option("--kind", adapter.kind)->check(CLI::IsMember({"lora", "smoa"}));
  ad->add_option("--init", adapter.init);
  ad->add_option("--scale", adapter.scale);
  ad->add_option("--target", adapter.target, "Target update for spectral init");
  ad->add_option("--name", adapter.name);
  ad->callback([&] { action = [&](const Session& s) { return cmd_adapter(s, adapter); }; });

  UpdateArgs upd;
  auto* u = app.add_subcommand("update", "Materialize an adapter's weight update");
  u->add_option("--adapter", upd.adapter)->required();
  u->add_option("--name", upd.name);
  u->callback([&] { action = [&](const Session& s) { return cmd_update(s, upd); }; });

  RankArgs rank;
  auto* rk = app.add_subcommand("rank", "Numerical rank of a matrix or adapter update");
  rk->add_option("--matrix", rank.matrix);
  rk->add_option("--adapter", rank.adapter);
  rk->add_option("--name", rank.name);
  rk->callback([&] { action = [&](const Session& s) { return cmd_rank(s, rank); }; });

  CeilingArgs ceiling;
  auto* c = app.add_subcommand("ceiling", "Analytic rank ceiling of a plan at budget r");
  c->add_option("--plan", ceiling.plan)->required();
  c->add_option("--r", ceiling.r)->required();
  c->add_option("--name", ceiling.name);
  c->callback([&] { action = [&](const Session& s) { return cmd_ceiling(s, ceiling); }; });

  WitnessArgs witness;
  auto* w = app.add_subcommand("witness", "Build a block-aligned witness bundle");
  w->add_option("--plan", witness.plan)->required();
  w->add_option("--rho", witness.rho)->required();
  w->add_option("--name", witness.name);
  w->callback([&] { action = [&](const Session& s) { return cmd_witness(s, witness); }; });

  GapArgs gap;
  auto* ga = app.add_subcommand("gap", "Best rank-r LoRA error on a witness");
  ga->add_option("--witness", gap.witness)->required();
  ga->add_option("--r", gap.r)->required();
  ga->add_option("--name", gap.name);
  ga->callback([&] { action = [&](const Session& s) { return cmd_gap(s, gap); }; });

  FitArgs fitargs;
  auto* f = app.add_subcommand("fit", "Fit an adapter to a target by gradient descent");
  f->add_option("--target", fitargs.target);
  f->add_option("--witness", fitargs.witness);
  f->add_option("--plan", fitargs.plan);
  f->add_option("--kind", fitargs.kind)->check(CLI::IsMember({"lora", "smoa"}));
  f->add_option("--r", fitargs.r)->required();
  f->add_option("--init", fitargs.init);
  f->add_option("--scale", fitargs.scale);
  f->add_option("--step-size", fitargs.config.step_size);
  f->add_option("--max-steps", fitargs.config.max_steps);
  f->add_option("--grad-tol", fitargs.config.grad_tol);
  f->add_option("--loss-floor-tol", fitargs.config.loss_floor_tol);
  f->add_option("--max-halvings", fitargs.config.max_halvings);
  f->add_option("--step-growth", fitargs.config.step_growth);
  f->callback([&] { action = [&](const Session& s) { return cmd_fit(s, fitargs); }; });

  DiagnoseArgs diag;
  auto* dg = app.add_subcommand("diagnose", "Spectral diagnostics report");
  dg->add_option("--matrix", diag.matrix)->required();
  dg->add_option("--activations", diag.activations, "d_in x n activation samples");
  dg->add_option("--noise-scale", diag.noise_scale);
  dg->add_option("--bins", diag.bins);
  dg->add_option("--baseline-samples", diag.baseline_samples);
  dg->callback([&] { action = [&](const Session& s) { return cmd_diagnose(s, diag); }; });

  SweepArgs sweep;
  auto* sw = app.add_subcommand("sweep", "Run a seeded (d, K, r) grid");
  sw->add_option("--spec", sweep.spec)->required();
  sw->add_option("--name", sweep.name);
  sw->callback([&] { action = [&](const Session& s) { return cmd_sweep(s, sweep); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kUsage;
  }
  try {
    if (eps_opt->count() > 0) {
      if (!(epsilon >= 0.0)) throw RangeError("--epsilon must be non-negative");
      cfg.epsilon = epsilon;
    }
    Session session(cfg, out);
    return action(session);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
}

}  // namespace smoa::cli
