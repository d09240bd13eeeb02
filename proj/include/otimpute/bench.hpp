#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "otimpute/data.hpp"
#include "otimpute/imputers.hpp"
#include "otimpute/masking.hpp"
#include "otimpute/metrics.hpp"

namespace otimpute {

inline constexpr int kConfigSchemaVersion = 1;

// ---------------------------------------------------------------------------
// Datasets
// ---------------------------------------------------------------------------

struct DatasetInfo {
  std::string_view name;
  Index n;
  Index d;
};

/// Shapes of the 23 UCI benchmark datasets.
const std::vector<DatasetInfo>& dataset_registry();
const DatasetInfo* find_registered(std::string_view name);

struct LoadedDataset {
  std::string name;
  IncompleteMatrix raw;
  StandardizeResult standardized;
};

/// Reads a numeric CSV with a header row. When `registry_name` is not empty
/// the shape is checked against the registry (RegistryMismatch otherwise).
LoadedDataset load_dataset(const std::string& path, const std::string& registry_name = "");

/// Where a benchmark gets its complete ground-truth matrix from: a CSV file
/// or a named synthetic generator.
struct DatasetSpec {
  std::string name;
  std::string path;
  std::string synthetic;
  Index n = 500;
  Index d = 10;
  std::uint64_t seed = 0;
};

/// Complete ground truth in original units.
Matrix materialize(const DatasetSpec& spec);

// ---------------------------------------------------------------------------
// Methods
// ---------------------------------------------------------------------------

/// mean, ice, softimpute, sinkhorn_direct, linear_rr, mlp_rr.
const std::vector<std::string>& method_names();
/// Methods that can be fitted on one split and applied to another.
bool supports_oos(std::string_view method);

struct MethodSpec {
  std::string name;
  /// Method hyperparameters; unknown keys are rejected.
  nlohmann::json params = nlohmann::json::object();
};

struct MethodOutput {
  Matrix imputed;
  double epsilon = 0.0;
  int nonconverged_steps = 0;
  double final_loss = 0.0;
};

/// Runs one method on standardized data. Round robin uses stratified batches
/// when params set `stratify` to true, or to "auto" and `mechanism` is MCAR.
MethodOutput run_method(const MethodSpec& method, const IncompleteMatrix& data,
                        std::uint64_t seed, Mechanism mechanism = Mechanism::MarLogistic);

struct ModelFit {
  MethodOutput train;
  RoundRobinModel model;
};

/// Fits a model-based method (ice, linear_rr, mlp_rr) and keeps the model.
ModelFit fit_model(const MethodSpec& method, const IncompleteMatrix& data,
                   std::uint64_t seed, Mechanism mechanism = Mechanism::MarLogistic);

struct OosOutput {
  MethodOutput train;
  Matrix test_imputed;
};

/// Fits on `train`, then imputes `test` with frozen parameters.
OosOutput run_method_oos(const MethodSpec& method, const IncompleteMatrix& train,
                         const IncompleteMatrix& test, std::uint64_t seed,
                         Mechanism mechanism = Mechanism::MarLogistic);

// ---------------------------------------------------------------------------
// Experiments
// ---------------------------------------------------------------------------

struct ExperimentConfig {
  int schema_version = kConfigSchemaVersion;
  DatasetSpec dataset;
  std::vector<MaskSpec> masks{MaskSpec{}};
  std::vector<MethodSpec> methods;
  int n_draws = 30;
  std::uint64_t seed = 0;
  double train_fraction = 0.7;
  std::string output_dir = "results";
  Index w2_cap = 4096;

  /// Throws InvalidConfig. `oos` additionally requires OOS-capable methods
  /// and a train fraction strictly inside (0, 1).
  void validate(bool oos = false) const;
};

nlohmann::json config_to_json(const ExperimentConfig& cfg);
ExperimentConfig config_from_json(const nlohmann::json& doc);
ExperimentConfig load_config(const std::string& path);

/// Stable hash of (base, dataset, mechanism, draw, method) into a seed.
std::uint64_t child_seed(std::uint64_t base, std::string_view dataset,
                         std::string_view mechanism, int draw, std::string_view method);

struct RunResult {
  std::string dataset;
  std::string method;
  std::string mechanism;
  /// "all" for in-sample runs, "train" / "test" for the split protocol.
  std::string split = "all";
  int draw = 0;
  std::uint64_t seed = 0;
  MetricReport metrics;
  double seconds = 0.0;
  bool ok = true;
  std::string error;
  double epsilon = 0.0;
  int nonconverged_steps = 0;
  double final_loss = 0.0;
  /// Filled by `scale_w2`.
  double w2_scaled = 0.0;
};

/// Appends result rows to a CSV as they arrive so partial runs survive.
class ResultAppender {
 public:
  explicit ResultAppender(const std::string& path);
  void append(const RunResult& r);

 private:
  std::ofstream out_;
};

std::vector<RunResult> run_experiment(const ExperimentConfig& cfg,
                                      ResultAppender* sink = nullptr);
std::vector<RunResult> run_oos_experiment(const ExperimentConfig& cfg,
                                          ResultAppender* sink = nullptr);

/// Divides W2 by the largest mean W2 among methods of the same
/// (dataset, mechanism, split) group.
void scale_w2(std::vector<RunResult>& results);

struct SummaryRow {
  std::string dataset;
  std::string mechanism;
  std::string split;
  std::string method;
  int runs = 0;
  int failed = 0;
  double mae_mean = 0.0, mae_std = 0.0;
  double rmse_mean = 0.0, rmse_std = 0.0;
  double w2_mean = 0.0, w2_std = 0.0;
  double w2_scaled_mean = 0.0, w2_scaled_std = 0.0;
};

/// Per-group means and population standard deviations over successful runs.
std::vector<SummaryRow> summarize(const std::vector<RunResult>& results);

void write_results_csv(const std::string& path, const std::vector<RunResult>& results);
std::vector<RunResult> read_results_csv(const std::string& path);
void write_summary_csv(const std::string& path, const std::vector<SummaryRow>& rows);

/// Writes results.csv and summary.csv into `dir` (created if needed).
void export_results(std::vector<RunResult> results, const std::string& dir);

}  // namespace otimpute
