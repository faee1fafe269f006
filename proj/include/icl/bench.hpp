#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "icl/datagen.hpp"
#include "icl/direction.hpp"
#include "icl/imputer.hpp"
#include "icl/missingness.hpp"
#include "icl/skeleton_learner.hpp"

namespace icl {

enum class Pipeline { icl, listwise_deletion, impute_then_discover };

std::string to_string(Pipeline p);
Pipeline parse_pipeline(const std::string& s);

struct ExperimentConfig {
  SemSpec sem;
  MissingSpec missing;
  Pipeline pipeline = Pipeline::icl;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  GanConfig imputer;
  StructureConfig structure;
  DirectionConfig direction;
  // Per-run artifacts go here when set.
  std::string output_dir;
  // Sweep axes used by `bench`.
  std::vector<double> missing_rates{0.1, 0.3, 0.5};
  std::vector<Pipeline> pipelines{Pipeline::icl, Pipeline::impute_then_discover, Pipeline::listwise_deletion};

  void validate() const;
};

nlohmann::json to_json(const ExperimentConfig& config);
// Keys not present keep their defaults; unknown keys are rejected.
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

// Everything a seed fixes before any pipeline runs. Pipelines sharing a seed
// see the same truth, data and mask.
struct Scenario {
  std::uint64_t seed = 0;
  GroundTruth truth{WeightedDigraph(1), {0}};
  Matrix data;
  MaskedDataset observed;
  MissingSpec missing;
  double achieved_rate = 0.0;
  std::uint64_t data_checksum = 0;
  std::uint64_t mask_checksum = 0;
  std::uint64_t train_seed = 0;
  std::uint64_t orient_seed = 0;
};

Scenario make_scenario(const ExperimentConfig& config, std::uint64_t seed);

// Intermediate products of one pipeline run.
struct PipelineOutput {
  JointTrainResult trained;
  Orientation oriented;
  Digraph dag{1};
  std::size_t rows_used = 0;
};

// Deletes incomplete rows; throws InfeasibleError below two survivors.
MaskedDataset listwise_delete(const MaskedDataset& data);

PipelineOutput run_pipeline_stages(const ExperimentConfig& config, const MaskedDataset& observed, Pipeline pipeline,
                                   std::uint64_t train_seed, std::uint64_t orient_seed);

struct RunResult {
  std::uint64_t seed = 0;
  Pipeline pipeline = Pipeline::icl;
  double missing_rate = 0.0;
  bool success = false;
  std::string error;
  std::string error_kind;  // "training" or "infeasible"
  std::optional<std::size_t> shd;
  std::optional<std::size_t> skeleton_shd;
  // Wall-clock time; reported on the console, never serialized.
  double runtime_seconds = 0.0;
  double achieved_rate = 0.0;
  bool converged = false;
  double final_h = 0.0;
  std::size_t rows_used = 0;
  std::size_t undetermined = 0;
  std::uint64_t data_checksum = 0;
  std::uint64_t mask_checksum = 0;

  bool operator==(const RunResult& o) const;
};

// Runs one pipeline on a scenario; training and infeasibility failures come
// back as a failed RunResult. Artifacts are written under `artifacts` if set.
RunResult run_pipeline(const ExperimentConfig& config, const Scenario& scenario, Pipeline pipeline,
                       const std::optional<std::filesystem::path>& artifacts = std::nullopt);

RunResult run_icl(const ExperimentConfig& config, std::uint64_t seed);
RunResult run_baseline_listwise(const ExperimentConfig& config, std::uint64_t seed);
RunResult run_baseline_impute_then_discover(const ExperimentConfig& config, std::uint64_t seed);

void write_artifacts(const std::filesystem::path& dir, const PipelineOutput& out);
void write_history(std::ostream& os, const std::vector<HistoryEntry>& history);

struct ShdSummary {
  Pipeline pipeline = Pipeline::icl;
  double missing_rate = 0.0;
  std::size_t successes = 0;
  std::size_t failures = 0;
  std::optional<double> mean;
  std::optional<double> std;

  bool operator==(const ShdSummary&) const = default;
};

// Mean and sample standard deviation of SHD over the successful runs; throws
// DomainError when none succeeded.
ShdSummary summarize(const std::vector<RunResult>& results);

struct Report {
  std::vector<ShdSummary> summaries;
  std::vector<RunResult> runs;
  nlohmann::json metadata = nlohmann::json::object();

  bool operator==(const Report&) const = default;
};

// Groups by (pipeline, missing rate) in first-seen order.
Report aggregate(const std::vector<RunResult>& results, nlohmann::json metadata = nlohmann::json::object());

enum class ReportFormat { json, markdown, csv };
ReportFormat parse_report_format(const std::string& s);
std::string extension(ReportFormat f);

std::string render_report(const Report& report, ReportFormat format);
void emit_report(const Report& report, ReportFormat format, const std::filesystem::path& path);
Report report_from_json(const nlohmann::json& j);
Report load_report(const std::filesystem::path& path);

// Every (missing rate, seed, pipeline) combination of the config, sequentially.
Report run_bench(const ExperimentConfig& config, std::ostream* progress = nullptr);

}  // namespace icl
