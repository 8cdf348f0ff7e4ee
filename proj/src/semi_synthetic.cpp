#include "mint/error.hpp"
#include "mint/harness.hpp"

#include <algorithm>
#include <numeric>

namespace mint {

GeneratedData semi_synthetic_generate(const CovariateDataset& covariates, const SemiSyntheticConfig& config, Rng& rng) {
  const auto available = static_cast<int>(covariates.covariate_dim());
  if (config.n_confounders < 1 || config.observed_subset_size < 1 || config.degree < 1)
    throw ValidationError("semi-synthetic sizes and degree must be positive");
  if (available < config.n_confounders)
    throw ValidationError("covariate table has " + std::to_string(available) + " columns but " +
                          std::to_string(config.n_confounders) + " confounders were requested");
  if (config.observed_subset_size > config.n_confounders)
    throw ValidationError("observed subset cannot exceed the number of confounders");

  const CovariateDataset standardized = standardize_covariates(covariates);

  std::vector<int> columns(static_cast<std::size_t>(available));
  std::iota(columns.begin(), columns.end(), 0);
  std::shuffle(columns.begin(), columns.end(), rng);
  columns.resize(static_cast<std::size_t>(config.n_confounders));
  const std::vector<int> observed(columns.begin(), columns.begin() + config.observed_subset_size);
  const std::vector<int>& generating = config.confounded ? columns : observed;

  const auto gen_dim = static_cast<Eigen::Index>(generating.size());
  const Eigen::VectorXd slopes = draw_fixed_alpha_slopes(gen_dim, config.degree, rng);
  const PolynomialMechanism mechanism{config.degree, config.resample_beta_intercept, config.noise_std};

  std::vector<EnvironmentBlock> blocks;
  for (const auto& b : standardized.blocks()) {
    const Eigen::MatrixXd x_gen = b.X(Eigen::all, generating);
    auto ay = polynomial_treatment_outcome(x_gen, slopes, mechanism, nullptr, rng);
    blocks.push_back({b.env_id, b.X(Eigen::all, observed), std::move(ay.A), std::move(ay.Y)});
  }

  GroundTruth truth;
  truth.unmeasured_confounders = config.confounded ? config.n_confounders - config.observed_subset_size : 0;
  truth.confounded = truth.unmeasured_confounders > 0;
  truth.confounder_columns = columns;
  truth.observed_columns = observed;
  truth.varied.emplace_back("alpha0");
  if (config.resample_beta_intercept) truth.varied.emplace_back("beta0");
  return {MultiEnvDataset(std::move(blocks)), std::move(truth)};
}

}  // namespace mint
