#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "support.hpp"

#include "smoa/errors.hpp"
#include "smoa/matrix_io.hpp"
#include "smoa/serialize.hpp"

using namespace smoa;
using smoa::testing::random_matrix;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("smoa_test_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::shared_ptr<const BlockPlan> random_plan(std::size_t d, std::size_t k, std::uint64_t seed) {
  return std::make_shared<const BlockPlan>(build_plan(random_matrix(d, d, seed), k));
}

}  // namespace

TEST_CASE("plan json roundtrip is exact") {
  const auto plan = random_plan(12, 3, 1);
  const auto j = io::plan_to_json(*plan);
  CHECK(j.at("format") == "SMOA-PLAN");
  CHECK(j.at("k") == 3);
  CHECK(j.at("row_intervals")[0] == std::vector<std::size_t>{1, 4});
  const auto back = io::plan_from_json(j);
  CHECK(back.k() == plan->k());
  CHECK(back.p_out() == plan->p_out());
  CHECK(back.p_in() == plan->p_in());
  for (std::size_t b = 0; b < 3; ++b) CHECK(back.anchor(b) == plan->anchor(b));
  CHECK(io::plan_to_json(back).dump() == j.dump());
}

TEST_CASE("plan loading rejects inconsistent intervals") {
  auto j = io::plan_to_json(*random_plan(8, 2, 2));
  j["row_intervals"][0] = std::vector<std::size_t>{1, 3};
  CHECK_THROWS_AS(io::plan_from_json(j), ConfigError);
  auto f = io::plan_to_json(*random_plan(8, 2, 2));
  f["format"] = "SOMETHING";
  CHECK_THROWS_AS(io::plan_from_json(f), IoError);
}

TEST_CASE("plan anchors may reference matrix files") {
  TempDir tmp("plan_paths");
  const auto plan = random_plan(8, 2, 3);
  auto j = io::plan_to_json(*plan);
  io::write_matrix(tmp.path / "a0.smat", plan->anchor(0));
  io::write_matrix(tmp.path / "a1.csv", plan->anchor(1));
  j["anchors"] = {"a0.smat", "a1.csv"};
  std::ofstream(tmp.path / "plan.json") << j.dump(2);
  const auto back = io::read_plan(tmp.path / "plan.json");
  CHECK(back.anchor(0) == plan->anchor(0));
  CHECK(back.anchor(1) == plan->anchor(1));
}

TEST_CASE("write_plan returns the digest of the file it wrote") {
  TempDir tmp("plan_hash");
  const auto plan = random_plan(8, 2, 4);
  const auto digest = io::write_plan(tmp.path / "plan.json", *plan);
  CHECK(digest == io::sha256_hex(io::read_file(tmp.path / "plan.json")));
  CHECK(digest.size() == 64);
}

TEST_CASE("adapter roundtrips") {
  TempDir tmp("adapters");
  const AdapterInit init{InitScheme::Gaussian, 17, std::nullopt};

  const auto lora = make_lora(6, 5, 2, init);
  io::write_adapter(tmp.path / "lora.json", lora, init, std::nullopt);
  const auto l = io::read_adapter(tmp.path / "lora.json");
  CHECK(update(l.adapter) == lora_update(lora));
  CHECK(l.init.seed == 17);
  CHECK_FALSE(l.plan_path.has_value());

  const auto plan = random_plan(8, 2, 5);
  io::write_plan(tmp.path / "plan.json", *plan);
  const auto smoa_adapter = make_smoa(plan, 4, init);
  CHECK_THROWS_AS(io::write_adapter(tmp.path / "bad.json", smoa_adapter, init, std::nullopt), ConfigError);
  io::write_adapter(tmp.path / "smoa.json", smoa_adapter, init, tmp.path / "plan.json");
  const auto s = io::read_adapter(tmp.path / "smoa.json");
  CHECK(update(s.adapter) == smoa_update(smoa_adapter));
  REQUIRE(s.plan_path.has_value());

  io::write_plan(tmp.path / "plan.json", *random_plan(8, 2, 6));
  CHECK_THROWS_AS(io::read_adapter(tmp.path / "smoa.json"), ConfigError);
}

TEST_CASE("tampered factor files are rejected") {
  TempDir tmp("tamper");
  const AdapterInit init{InitScheme::Gaussian, 1, std::nullopt};
  const auto lora = make_lora(4, 4, 2, init);
  io::write_adapter(tmp.path / "a.json", lora, init, std::nullopt);
  io::write_matrix(tmp.path / "a.A1.smat", random_matrix(2, 4, 9));
  CHECK_THROWS_AS(io::read_adapter(tmp.path / "a.json"), ConfigError);
}

TEST_CASE("witness bundles roundtrip") {
  TempDir tmp("witness");
  const auto plan = random_plan(8, 2, 7);
  const auto w = make_witness(plan, 2, 8);
  io::write_witness(tmp.path / "w", w);
  for (const char* f : {"plan.json", "target.smat", "coeff_1.smat", "coeff_2.smat", "witness.json"}) {
    CHECK(fs::exists(tmp.path / "w" / f));
  }
  const auto back = io::read_witness(tmp.path / "w");
  CHECK(back.target == w.target);
  CHECK(back.rho == 2);
  CHECK(back.seed == 8);
  CHECK(back.reordered_target_rank == w.reordered_target_rank);
  for (std::size_t b = 0; b < 2; ++b) CHECK(back.coefficients[b] == w.coefficients[b]);
  CHECK(lora_gap(back, 4) == lora_gap(w, 4));

  io::write_plan(tmp.path / "w" / "plan.json", *random_plan(8, 2, 9));
  CHECK_THROWS_AS(io::read_witness(tmp.path / "w"), ConfigError);
}

TEST_CASE("trace outputs") {
  const FitProblem problem(random_matrix(4, 4, 10));
  FitConfig cfg;
  cfg.max_steps = 5;
  const auto trace = fit(problem, AdapterKind::Lora, 2, AdapterInit{InitScheme::Gaussian, 2, std::nullopt}, cfg);
  const auto csv = io::trace_csv(trace);
  CHECK(csv.rfind("step,loss,grad_norm\n", 0) == 0);
  CHECK(static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')) == trace.steps.size() + 1);
  const auto summary = io::trace_summary(trace);
  CHECK(summary.at("kind") == "lora");
  CHECK(summary.at("steps") == trace.steps.size() - 1);
  CHECK(summary.at("stop_reason") == trace.stop_reason);
  CHECK(summary.at("config").at("max_steps") == 5);
}

TEST_CASE("report and ceiling outputs") {
  ReportOptions opts;
  opts.noise_scale = 1.0;
  const ActivationSample acts(random_matrix(6, 40, 11));
  const auto rep = full_report(random_matrix(6, 6, 12), &acts, opts);
  const auto j = io::report_to_json(rep);
  CHECK(j.at("numerical_rank") == rep.numerical_rank);
  CHECK(j.at("outlier_count") == rep.outlier_count);
  CHECK(io::histogram_csv(rep, 4).rfind("bin_left,bin_right,count,mp_density\n", 0) == 0);
  const auto ov = io::overlaps_csv(rep);
  CHECK(std::count(ov.begin(), ov.end(), '\n') == 7);

  const auto c = io::ceiling_to_json(rank_ceiling(*random_plan(8, 2, 13), 2));
  CHECK(c.at("total_ceiling") == 8);
  CHECK(c.at("lora_ceiling") == 2);
  CHECK(c.at("separated") == true);
  CHECK(c.at("per_block").size() == 2);
}
