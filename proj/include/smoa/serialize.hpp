#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "json.hpp"

#include "smoa/adapters.hpp"
#include "smoa/capacity.hpp"
#include "smoa/diagnostics.hpp"
#include "smoa/preprocess.hpp"
#include "smoa/trainer.hpp"

namespace smoa::io {

using nlohmann::json;

// SMOA-PLAN v1. Anchors are written inline as CSV ({"csv": "..."}); on read a
// plain string is taken as a matrix path relative to the plan file.
json plan_to_json(const BlockPlan& plan);
BlockPlan plan_from_json(const json& j, const std::filesystem::path& base_dir = {});
/// Writes the plan and returns the SHA-256 of the written bytes.
std::string write_plan(const std::filesystem::path& path, const BlockPlan& plan);
BlockPlan read_plan(const std::filesystem::path& path);

struct LoadedAdapter {
  Adapter adapter;
  AdapterInit init;
  std::optional<std::filesystem::path> plan_path;
};

// SMOA-ADPT v1: JSON envelope plus one SMOA-MAT file per factor, written
// next to it as <stem>.A<k>.smat / <stem>.B<k>.smat (k from 1). SMoA envelopes record
// the plan path and its digest; a digest mismatch on load is a ConfigError.
void write_adapter(const std::filesystem::path& path, const Adapter& adapter, const AdapterInit& init,
                   const std::optional<std::filesystem::path>& plan_path);
LoadedAdapter read_adapter(const std::filesystem::path& path);

// Witness bundle directory: plan.json, target.smat, coeff_<k>.smat (k from 1), witness.json.
void write_witness(const std::filesystem::path& dir, const WitnessInstance& witness);
WitnessInstance read_witness(const std::filesystem::path& dir);

std::string trace_csv(const FitTrace& trace);
json trace_summary(const FitTrace& trace);

json report_to_json(const SpectralReport& report);
std::string histogram_csv(const SpectralReport& report, std::size_t bins = 40);
std::string overlaps_csv(const SpectralReport& report);

json ceiling_to_json(const RankCeilingReport& report);

}  // namespace smoa::io
