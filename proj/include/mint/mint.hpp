#pragma once

#include "mint/dataset.hpp"
#include "mint/estimation.hpp"
#include "mint/features.hpp"
#include "mint/random.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mint {

enum class TestMethod { mint, mint_no_bootstrap, transportability, kernel_mint };

std::string_view to_string(TestMethod method);
TestMethod parse_test_method(std::string_view name);

/// Outcome of one falsification test. `reject` is true exactly when
/// statistic > threshold. For resampling tests the p-value is the add-one
/// Monte-Carlo estimate; analytic tests report resamples = 0.
struct TestResult {
  double statistic = 0.0;
  double threshold = 0.0;
  double p_value = 1.0;
  bool reject = false;
  double alpha = 0.05;
  int resamples = 0;
  std::uint64_t seed = 0;
  TestMethod method = TestMethod::mint;
  std::optional<std::vector<double>> null_samples;
  std::vector<std::string> warnings;
  bool experimental = false;
};

/// (1/K) * Frobenius norm of the across-environment cross-covariance
/// sum_s (omega_s - mean omega)(gamma_s - mean gamma)^T. Rows are environments.
double frobenius_statistic(const Eigen::Ref<const Eigen::MatrixXd>& omegas,
                           const Eigen::Ref<const Eigen::MatrixXd>& gammas);

/// Smallest observed value t with #{T_m > t} / M <= alpha, i.e. the
/// ceil((1 - alpha) M)-th order statistic.
double calibrate_threshold(std::span<const double> null_samples, double alpha);

/// (1 + #{T_m >= statistic}) / (M + 1).
double monte_carlo_p_value(std::span<const double> null_samples, double statistic);

/// Draws n_s rows with replacement inside every environment and refits both
/// working models. Rank-deficient resamples are solved with a trace-scaled
/// ridge of size ridge_jitter * mean(diag(D^T D)).
MechanismEstimates bootstrap_refit(const MultiEnvDataset& dataset, const FeatureSpec& psi_spec,
                                   const FeatureSpec& phi_spec, double ridge_jitter, Rng& rng);

MechanismEstimates bootstrap_refit(const MultiEnvDataset& dataset, std::span<const EnvironmentDesign> designs,
                                   double ridge_jitter, Rng& rng);

struct MintOptions {
  double alpha = 0.05;
  int resamples = 1000;
  std::uint64_t seed = 0;
  bool use_bootstrap = true;
  double ridge_jitter = 1e-8;
  bool keep_null_samples = true;
  /// Workers for the resampling loop. Results do not depend on this value.
  int threads = 1;
};

/// Mechanism independence test: fits both working models per environment,
/// computes the Frobenius statistic and calibrates it against M statistics
/// obtained from bootstrap refits with the environment order of the
/// treatment-model parameters randomly permuted.
TestResult mint_test(const MultiEnvDataset& dataset, const FeatureSpec& psi_spec, const FeatureSpec& phi_spec,
                     const MintOptions& options = {});

/// Permutation-only independence test on given parameter matrices (rows are
/// environments). This is what mint_test reduces to without bootstrapping.
TestResult permutation_test(const Eigen::Ref<const Eigen::MatrixXd>& omegas,
                            const Eigen::Ref<const Eigen::MatrixXd>& gammas, const MintOptions& options = {});

/// Fills null statistics, threshold, p-value and the reject flag.
void finalize_resampling_result(TestResult& result, std::vector<double> null_samples, bool keep_null_samples);

/// Stream identifiers used with derive_seed for the resampling loop.
inline constexpr std::uint64_t kBootstrapStream = 1;
inline constexpr std::uint64_t kPermutationStream = 2;

}  // namespace mint
