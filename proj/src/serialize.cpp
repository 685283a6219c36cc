#include "smoa/serialize.hpp"

#include <sstream>

#include "smoa/errors.hpp"
#include "smoa/matrix_io.hpp"

namespace smoa::io {

namespace fs = std::filesystem;

namespace {

json parse_json(const fs::path& path) {
  const std::string text = read_file(path);
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

void expect_format(const json& j, const char* format) {
  if (!j.is_object() || j.value("format", "") != format || j.value("version", 0) != 1) {
    throw IoError(std::string("expected ") + format + " v1 document");
  }
}

template <typename T>
T field(const json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw IoError(std::string("field '") + key + "': " + e.what());
  }
}

json intervals_json(const std::vector<Interval>& iv) {
  json out = json::array();
  for (const auto& i : iv) out.push_back({i.begin + 1, i.end});
  return out;
}

fs::path resolve(const fs::path& base_dir, const fs::path& p) {
  return p.is_absolute() || base_dir.empty() ? p : base_dir / p;
}

std::string relative_to(const fs::path& target, const fs::path& dir) {
  std::error_code ec;
  auto rel = fs::relative(fs::absolute(target), fs::absolute(dir.empty() ? fs::path(".") : dir), ec);
  return ec || rel.empty() ? fs::absolute(target).string() : rel.generic_string();
}

}  // namespace

json plan_to_json(const BlockPlan& plan) {
  json anchors = json::array();
  for (const auto& a : plan.anchors()) anchors.push_back({{"csv", encode_csv(a)}});
  return {
      {"format", "SMOA-PLAN"},
      {"version", 1},
      {"k", plan.k()},
      {"d_out", plan.d_out()},
      {"d_in", plan.d_in()},
      {"p_out", plan.p_out().one_based()},
      {"p_in", plan.p_in().one_based()},
      {"row_intervals", intervals_json(plan.row_intervals())},
      {"col_intervals", intervals_json(plan.col_intervals())},
      {"anchors", anchors},
      {"source_hash", plan.source_hash()},
  };
}

BlockPlan plan_from_json(const json& j, const fs::path& base_dir) {
  expect_format(j, "SMOA-PLAN");
  const auto k = field<std::size_t>(j, "k");
  const auto p_out = field<std::vector<std::size_t>>(j, "p_out");
  const auto p_in = field<std::vector<std::size_t>>(j, "p_in");
  std::vector<Matrix> anchors;
  for (const auto& a : j.at("anchors")) {
    if (a.is_object()) {
      anchors.push_back(decode_csv(field<std::string>(a, "csv")));
    } else if (a.is_string()) {
      anchors.push_back(read_matrix(resolve(base_dir, a.get<std::string>())));
    } else {
      throw IoError("plan anchors must be inline csv objects or file paths");
    }
  }
  BlockPlan plan(k, Permutation::from_one_based(p_out), Permutation::from_one_based(p_in), std::move(anchors),
                 j.value("source_hash", ""));
  if (j.contains("row_intervals") && j.at("row_intervals") != intervals_json(plan.row_intervals())) {
    throw ConfigError("plan row_intervals are not the equal-length partition for k=" + std::to_string(k));
  }
  if (j.contains("col_intervals") && j.at("col_intervals") != intervals_json(plan.col_intervals())) {
    throw ConfigError("plan col_intervals are not the equal-length partition for k=" + std::to_string(k));
  }
  return plan;
}

std::string write_plan(const fs::path& path, const BlockPlan& plan) {
  const std::string text = plan_to_json(plan).dump(2) + "\n";
  write_file_atomic(path, text);
  return sha256_hex(text);
}

BlockPlan read_plan(const fs::path& path) { return plan_from_json(parse_json(path), path.parent_path()); }

void write_adapter(const fs::path& path, const Adapter& adapter, const AdapterInit& init,
                   const std::optional<fs::path>& plan_path) {
  const fs::path dir = path.parent_path();
  const std::string stem = path.stem().string();
  json factor_files = json::array();
  json factor_hashes = json::array();
  const auto pairs = std::visit(
      [](const auto& a) -> std::vector<FactorPair> {
        if constexpr (std::is_same_v<std::decay_t<decltype(a)>, LoraAdapter>) {
          return {FactorPair{a.a, a.b}};
        } else {
          return a.factors();
        }
      },
      adapter);
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    for (const auto& [tag, m] : {std::pair<const char*, const Matrix*>{"A", &pairs[k].a}, {"B", &pairs[k].b}}) {
      const std::string name = stem + "." + tag + std::to_string(k + 1) + ".smat";
      const std::string bytes = encode_binary(*m);
      write_file_atomic(dir / name, bytes);
      factor_files.push_back(name);
      factor_hashes.push_back(sha256_hex(bytes));
    }
  }
  json init_j = {{"scheme", to_string(init.scheme)}, {"seed", init.seed}};
  init_j["scale"] = init.scale ? json(*init.scale) : json(nullptr);

  json j = {{"format", "SMOA-ADPT"}, {"version", 1}, {"factors", factor_files}, {"factor_hashes", factor_hashes},
            {"init", init_j}, {"seed", init.seed}};
  if (const auto* l = std::get_if<LoraAdapter>(&adapter)) {
    j["kind"] = "lora";
    j["r"] = l->rank();
    j["k"] = 1;
    j["rho"] = l->rank();
    j["d_out"] = l->d_out();
    j["d_in"] = l->d_in();
    j["plan_path"] = nullptr;
    j["plan_hash"] = nullptr;
  } else {
    const auto& s = std::get<SmoaAdapter>(adapter);
    if (!plan_path) throw ConfigError("smoa adapter serialization needs the plan file path");
    j["kind"] = "smoa";
    j["r"] = s.rank_budget();
    j["k"] = s.k();
    j["rho"] = s.rho();
    j["d_out"] = s.plan().d_out();
    j["d_in"] = s.plan().d_in();
    j["plan_path"] = relative_to(*plan_path, dir);
    j["plan_hash"] = sha256_hex(read_file(*plan_path));
  }
  write_file_atomic(path, j.dump(2) + "\n");
}

LoadedAdapter read_adapter(const fs::path& path) {
  const json j = parse_json(path);
  expect_format(j, "SMOA-ADPT");
  const fs::path dir = path.parent_path();
  const auto files = field<std::vector<std::string>>(j, "factors");
  const auto hashes = j.value("factor_hashes", std::vector<std::string>{});
  std::vector<Matrix> mats;
  for (std::size_t i = 0; i < files.size(); ++i) {
    const std::string bytes = read_file(resolve(dir, files[i]));
    if (!hashes.empty() && (hashes.size() != files.size() || sha256_hex(bytes) != hashes[i])) {
      throw ConfigError("adapter factor " + files[i] + " does not match its recorded hash");
    }
    mats.push_back(decode_binary(bytes));
  }
  if (mats.empty() || mats.size() % 2 != 0) throw IoError("adapter factor list must hold A/B pairs");

  AdapterInit init;
  if (j.contains("init")) {
    const auto& ij = j.at("init");
    init.scheme = parse_init_scheme(ij.value("scheme", "zero-update"));
    init.seed = ij.value("seed", std::uint64_t{0});
    if (ij.contains("scale") && !ij.at("scale").is_null()) init.scale = ij.at("scale").get<double>();
  }

  const std::string kind = field<std::string>(j, "kind");
  if (kind == "lora") {
    return {LoraAdapter(std::move(mats[0]), std::move(mats[1])), init, std::nullopt};
  }
  if (kind != "smoa") throw IoError("unknown adapter kind '" + kind + "'");
  const fs::path plan_path = resolve(dir, field<std::string>(j, "plan_path"));
  const std::string plan_text = read_file(plan_path);
  if (sha256_hex(plan_text) != field<std::string>(j, "plan_hash")) {
    throw ConfigError("adapter " + path.string() + " was built against a different plan than " + plan_path.string());
  }
  auto plan = std::make_shared<const BlockPlan>(plan_from_json(json::parse(plan_text), plan_path.parent_path()));
  std::vector<FactorPair> pairs;
  for (std::size_t i = 0; i < mats.size(); i += 2) pairs.push_back({std::move(mats[i]), std::move(mats[i + 1])});
  const auto rho = field<std::size_t>(j, "rho");
  return {SmoaAdapter(std::move(plan), rho, std::move(pairs)), init, plan_path};
}

void write_witness(const fs::path& dir, const WitnessInstance& witness) {
  fs::create_directories(dir);
  const std::string plan_hash = write_plan(dir / "plan.json", *witness.plan);
  const std::string target_bytes = encode_binary(witness.target);
  write_file_atomic(dir / "target.smat", target_bytes);
  json coeffs = json::array();
  for (std::size_t k = 0; k < witness.coefficients.size(); ++k) {
    const std::string name = "coeff_" + std::to_string(k + 1) + ".smat";
    write_matrix(dir / name, witness.coefficients[k]);
    coeffs.push_back(name);
  }
  json gaps = json::array();
  const std::size_t m = std::min(witness.target.rows(), witness.target.cols());
  for (std::size_t r = 1; r <= m; ++r) gaps.push_back({{"r", r}, {"gap", lora_gap(witness, r)}});
  const json j = {{"format", "SMOA-WITNESS"},
                  {"version", 1},
                  {"seed", witness.seed},
                  {"rho", witness.rho},
                  {"k", witness.plan->k()},
                  {"plan", "plan.json"},
                  {"plan_hash", plan_hash},
                  {"target", "target.smat"},
                  {"target_hash", sha256_hex(target_bytes)},
                  {"coefficients", coeffs},
                  {"reordered_target_rank", witness.reordered_target_rank},
                  {"gaps", gaps}};
  write_file_atomic(dir / "witness.json", j.dump(2) + "\n");
}

WitnessInstance read_witness(const fs::path& dir) {
  const json j = parse_json(dir / "witness.json");
  expect_format(j, "SMOA-WITNESS");
  const fs::path plan_path = dir / field<std::string>(j, "plan");
  const std::string plan_text = read_file(plan_path);
  if (j.contains("plan_hash") && sha256_hex(plan_text) != j.at("plan_hash").get<std::string>()) {
    throw ConfigError("witness plan " + plan_path.string() + " does not match its recorded hash");
  }
  const std::string target_bytes = read_file(dir / field<std::string>(j, "target"));
  if (j.contains("target_hash") && sha256_hex(target_bytes) != j.at("target_hash").get<std::string>()) {
    throw ConfigError("witness target does not match its recorded hash");
  }
  WitnessInstance w{std::make_shared<const BlockPlan>(plan_from_json(json::parse(plan_text), dir)),
                    field<std::size_t>(j, "rho"),
                    field<std::uint64_t>(j, "seed"),
                    {},
                    decode_binary(target_bytes),
                    field<std::size_t>(j, "reordered_target_rank")};
  for (const auto& name : field<std::vector<std::string>>(j, "coefficients")) {
    w.coefficients.push_back(read_matrix(dir / name));
  }
  if (w.coefficients.size() != w.plan->k()) throw IoError("witness coefficient count does not match k");
  return w;
}

std::string trace_csv(const FitTrace& trace) {
  std::string out = "step,loss,grad_norm\n";
  for (const auto& s : trace.steps) {
    out += std::to_string(s.step) + "," + format_double(s.loss) + "," + format_double(s.gradient_norm) + "\n";
  }
  return out;
}

json trace_summary(const FitTrace& trace) {
  const bool lora = std::holds_alternative<LoraAdapter>(trace.adapter);
  json j = {{"kind", lora ? "lora" : "smoa"},
            {"final_loss", trace.final_loss},
            {"relative_loss", trace.relative_loss},
            {"converged", trace.converged},
            {"stop_reason", trace.stop_reason},
            {"steps", trace.steps.empty() ? 0 : trace.steps.back().step},
            {"seed", trace.seed},
            {"floor_respected", trace.floor_respected},
            {"config",
             {{"step_size", trace.config.step_size},
              {"max_steps", trace.config.max_steps},
              {"grad_tol", trace.config.grad_tol},
              {"loss_floor_tol", trace.config.loss_floor_tol},
              {"max_halvings", trace.config.max_halvings},
              {"step_growth", trace.config.step_growth}}}};
  j["floor"] = trace.floor ? json(*trace.floor) : json(nullptr);
  return j;
}

json report_to_json(const SpectralReport& r) {
  json curve = json::array();
  for (const auto& [rank, e] : r.tail_energy_curve) curve.push_back({{"r", rank}, {"tail_energy", e}});
  json overlaps = json::array();
  for (const auto& o : r.overlaps) overlaps.push_back({{"k", o.index}, {"score", o.score}});
  return {{"shape", {r.rows, r.cols}},
          {"epsilon", r.epsilon},
          {"noise_scale", r.noise_scale},
          {"noise_scale_estimated", r.noise_scale_estimated},
          {"seed", r.seed},
          {"singular_values", r.singular_values},
          {"normalized_values", r.normalized_values},
          {"bulk_edge", r.bulk_edge},
          {"outlier_count", r.outlier_count},
          {"numerical_rank", r.numerical_rank},
          {"tail_energy_curve", curve},
          {"overlaps", overlaps},
          {"bulk_overlap_mean", r.bulk_overlap_mean},
          {"bulk_overlap_sigma", r.bulk_overlap_sigma}};
}

std::string histogram_csv(const SpectralReport& report, std::size_t bins) {
  std::string out = "bin_left,bin_right,count,mp_density\n";
  for (const auto& b : nu_histogram(report, bins)) {
    out += format_double(b.left) + "," + format_double(b.right) + "," + std::to_string(b.count) + "," +
           format_double(b.mp_density) + "\n";
  }
  return out;
}

std::string overlaps_csv(const SpectralReport& report) {
  std::string out = "k,nu_k,score,bulk_mean,bulk_lo,bulk_hi\n";
  const double lo = report.bulk_overlap_mean - 3.0 * report.bulk_overlap_sigma;
  const double hi = report.bulk_overlap_mean + 3.0 * report.bulk_overlap_sigma;
  for (const auto& o : report.overlaps) {
    out += std::to_string(o.index) + "," + format_double(report.normalized_values.at(o.index - 1)) + "," +
           format_double(o.score) + "," + format_double(report.bulk_overlap_mean) + "," + format_double(lo) + "," +
           format_double(hi) + "\n";
  }
  return out;
}

json ceiling_to_json(const RankCeilingReport& report) {
  json blocks = json::array();
  for (const auto& b : report.per_block) {
    blocks.push_back({{"s_k", b.block_bound},
                      {"anchor_rank", b.anchor_rank},
                      {"anchor_epsilon", b.anchor_epsilon},
                      {"block_ceiling", b.block_ceiling}});
  }
  return {{"total_ceiling", report.total_ceiling},
          {"lora_ceiling", report.lora_ceiling},
          {"separated", report.separated},
          {"per_block", blocks}};
}

}  // namespace smoa::io
