#pragma once

#include "mint/baselines.hpp"
#include "mint/dataset.hpp"
#include "mint/dgp.hpp"
#include "mint/features.hpp"
#include "mint/kernel.hpp"
#include "mint/mint.hpp"
#include "mint/random.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace mint {

// ---------------------------------------------------------------------------
// Dataset files
// ---------------------------------------------------------------------------

/// Column roles in a dataset CSV. Empty covariate_columns means "every column
/// that is not env, treatment or outcome", in header order.
struct CsvSchema {
  std::string env_column = "env";
  std::string treatment_column = "a";
  std::string outcome_column = "y";
  std::vector<std::string> covariate_columns;
};

/// Parses a header-first CSV and groups rows by the env column, keeping file
/// order inside each environment. Missing or non-numeric cells are errors
/// naming the offending line and column.
MultiEnvDataset read_csv_dataset(std::istream& in, const CsvSchema& schema = {});
MultiEnvDataset load_csv_dataset(const std::filesystem::path& path, const CsvSchema& schema = {});

/// Writes env,a,y,x1..xd with 17 significant digits, which round-trips.
void write_csv_dataset(std::ostream& out, const MultiEnvDataset& dataset);
void save_csv_dataset(const std::filesystem::path& path, const MultiEnvDataset& dataset);

CovariateDataset read_covariate_csv(std::istream& in, const std::string& env_column,
                                    const std::vector<std::string>& covariate_columns = {});
CovariateDataset load_covariate_csv(const std::filesystem::path& path, const std::string& env_column,
                                    const std::vector<std::string>& covariate_columns = {});

/// Pooled (across environments) z-scoring of each covariate column with the
/// population variance. A and Y are left untouched.
MultiEnvDataset standardize_covariates(const MultiEnvDataset& dataset);
CovariateDataset standardize_covariates(const CovariateDataset& covariates);

// ---------------------------------------------------------------------------
// Semi-synthetic construction from real covariates
// ---------------------------------------------------------------------------

struct SemiSyntheticConfig {
  int n_confounders = 5;
  int degree = 2;
  int observed_subset_size = 5;
  bool confounded = true;
  bool resample_beta_intercept = true;
  double noise_std = 0.5;
};

/// Standardizes the covariates, samples n_confounders columns without
/// replacement, generates (A, Y) with the polynomial mechanism and exposes the
/// first observed_subset_size sampled columns. With confounded = false the
/// hidden columns are left out of the generating equations as well.
GeneratedData semi_synthetic_generate(const CovariateDataset& covariates, const SemiSyntheticConfig& config, Rng& rng);

// ---------------------------------------------------------------------------
// Experiment configuration
// ---------------------------------------------------------------------------

inline constexpr int kSchemaVersion = 1;

enum class GeneratorKind { linear_example, polynomial, semi_synthetic };

struct SemiSyntheticSource {
  std::string covariate_csv;
  std::string env_column = "env";
  std::vector<std::string> covariate_columns;
  SemiSyntheticConfig config;
};

struct GeneratorConfig {
  GeneratorKind kind = GeneratorKind::polynomial;
  LinearExampleConfig linear;
  PolynomialConfig polynomial;
  SemiSyntheticSource semi_synthetic;
};

struct MethodConfig {
  TestMethod method = TestMethod::mint;
  double alpha = 0.05;
  int resamples = 1000;
  FeatureSpec psi = FeatureSpec::treatment(1);
  FeatureSpec phi = FeatureSpec::outcome(1);
  double ridge_jitter = 1e-8;
  TransportabilityVariant variant = TransportabilityVariant::full_interaction;
  KernelSpec k_kernel;
  KernelSpec h_kernel;
};

struct SweepAxis {
  std::string axis;                 // K | N | d | degree | varied
  std::vector<std::string> values;  // textual, parsed per axis
};

struct ExperimentConfig {
  GeneratorConfig generator;
  MethodConfig method;
  SweepAxis sweep;
  int repetitions = 1;
  std::uint64_t seed = 0;
};

/// Strict parsing: unknown keys, wrong types and a missing or unsupported
/// schema_version are ValidationErrors.
ExperimentConfig parse_experiment_config(const nlohmann::json& j);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
nlohmann::json to_json(const ExperimentConfig& config);

/// {"schema_version": 1, "generator": {...}} as used by `simulate`.
GeneratorConfig parse_generator_document(const nlohmann::json& j);

GeneratorConfig parse_generator_config(const nlohmann::json& j);
nlohmann::json to_json(const GeneratorConfig& config);
MethodConfig parse_method_config(const nlohmann::json& j, const GeneratorConfig& generator);
nlohmann::json to_json(const MethodConfig& config);

/// Working-model defaults matched to a generator: [1, X] and
/// [1, X, A, AX, A^2] for the linear example, degree-p polynomials otherwise.
std::pair<FeatureSpec, FeatureSpec> default_feature_specs(const GeneratorConfig& generator);

// ---------------------------------------------------------------------------
// Running
// ---------------------------------------------------------------------------

/// Draws one dataset. Semi-synthetic sources must be passed pre-loaded.
GeneratedData generate(const GeneratorConfig& config, Rng& rng, const CovariateDataset* covariates = nullptr);

TestResult run_method(const MultiEnvDataset& dataset, const MethodConfig& config, std::uint64_t seed,
                      int threads = 1);

struct BenchmarkRow {
  std::string axis;
  std::string value;
  double falsification_rate = 0.0;
  double standard_error = 0.0;
  int repetitions = 0;
  double wall_time_seconds = 0.0;
};

/// Applies one sweep value to a copy of the config.
ExperimentConfig apply_axis_value(const ExperimentConfig& config, const std::string& value);

/// Seed of repetition r at sweep position v.
std::uint64_t repetition_seed(std::uint64_t seed, std::size_t axis_index, std::size_t repetition);

/// Runs every generate-then-test cycle; rows come back in axis order and do
/// not depend on `threads`. A failing repetition aborts the sweep with the
/// axis value, repetition index and seed in the message.
std::vector<BenchmarkRow> run_benchmark(const ExperimentConfig& config, int threads = 1);

/// Columns axis,value,rate,se,reps,seconds. Without timing the seconds column
/// holds NA so that reruns are byte-identical.
void write_benchmark_csv(std::ostream& out, const std::vector<BenchmarkRow>& rows, bool include_timing = false);

/// All TestResult fields; numbers with 17 significant digits.
std::string test_result_json(const TestResult& result);

}  // namespace mint
