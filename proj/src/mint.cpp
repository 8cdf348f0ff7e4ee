#include "mint/mint.hpp"

#include "mint/error.hpp"
#include "mint/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mint {

std::string_view to_string(TestMethod method) {
  switch (method) {
    case TestMethod::mint: return "mint";
    case TestMethod::mint_no_bootstrap: return "mint_no_bootstrap";
    case TestMethod::transportability: return "transportability";
    case TestMethod::kernel_mint: return "kernel_mint";
  }
  return "unknown";
}

TestMethod parse_test_method(std::string_view name) {
  for (auto m : {TestMethod::mint, TestMethod::mint_no_bootstrap, TestMethod::transportability,
                 TestMethod::kernel_mint})
    if (to_string(m) == name) return m;
  throw ValidationError("unknown method '" + std::string(name) + "'");
}

namespace {

Eigen::MatrixXd centered(const Eigen::Ref<const Eigen::MatrixXd>& m) {
  return m.rowwise() - m.colwise().mean();
}

double centered_statistic(const Eigen::Ref<const Eigen::MatrixXd>& omega_c,
                          const Eigen::Ref<const Eigen::MatrixXd>& gamma_c) {
  return (omega_c.transpose() * gamma_c).norm() / static_cast<double>(omega_c.rows());
}

void check_pair(const Eigen::Ref<const Eigen::MatrixXd>& omegas, const Eigen::Ref<const Eigen::MatrixXd>& gammas) {
  if (omegas.rows() < 2) throw ValidationError("the statistic needs at least 2 environments");
  if (omegas.rows() != gammas.rows())
    throw ValidationError("parameter matrices disagree on the number of environments");
  if (omegas.cols() == 0 || gammas.cols() == 0) throw ValidationError("parameter matrices have no columns");
}

std::vector<Eigen::Index> random_permutation(Eigen::Index K, Rng& rng) {
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(K));
  std::iota(perm.begin(), perm.end(), Eigen::Index{0});
  std::shuffle(perm.begin(), perm.end(), rng);
  return perm;
}

double permuted_statistic(const Eigen::MatrixXd& omega_c, const Eigen::MatrixXd& gamma_c,
                          const std::vector<Eigen::Index>& perm) {
  return centered_statistic(omega_c(perm, Eigen::all), gamma_c);
}

void check_options(const MintOptions& options) {
  if (!(options.alpha > 0.0 && options.alpha < 1.0)) throw ValidationError("alpha must lie in (0, 1)");
  if (options.resamples < 1) throw ValidationError("the number of resamples must be >= 1");
}

void small_k_warning(TestResult& result, Eigen::Index K) {
  if (K == 2)
    result.warnings.emplace_back("only 2 environments: the permutation null has 2 distinct values and the test has no power");
}

}  // namespace

double frobenius_statistic(const Eigen::Ref<const Eigen::MatrixXd>& omegas,
                           const Eigen::Ref<const Eigen::MatrixXd>& gammas) {
  check_pair(omegas, gammas);
  return centered_statistic(centered(omegas), centered(gammas));
}

double calibrate_threshold(std::span<const double> null_samples, double alpha) {
  if (null_samples.empty()) throw ValidationError("cannot calibrate a threshold from zero null samples");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("alpha must lie in (0, 1)");
  const auto M = static_cast<double>(null_samples.size());
  // Guard against (1 - alpha) * M landing a hair above an integer.
  auto k = static_cast<std::size_t>(std::ceil((1.0 - alpha) * M - 1e-9));
  k = std::clamp<std::size_t>(k, 1, null_samples.size());
  std::vector<double> sorted(null_samples.begin(), null_samples.end());
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(k - 1), sorted.end());
  return sorted[k - 1];
}

double monte_carlo_p_value(std::span<const double> null_samples, double statistic) {
  const auto at_least = std::count_if(null_samples.begin(), null_samples.end(),
                                      [statistic](double t) { return t >= statistic; });
  return (1.0 + static_cast<double>(at_least)) / (static_cast<double>(null_samples.size()) + 1.0);
}

void finalize_resampling_result(TestResult& result, std::vector<double> null_samples, bool keep_null_samples) {
  result.resamples = static_cast<int>(null_samples.size());
  result.threshold = calibrate_threshold(null_samples, result.alpha);
  result.p_value = monte_carlo_p_value(null_samples, result.statistic);
  result.reject = result.statistic > result.threshold;
  if (keep_null_samples) result.null_samples = std::move(null_samples);
}

MechanismEstimates bootstrap_refit(const MultiEnvDataset& dataset, std::span<const EnvironmentDesign> designs,
                                   double ridge_jitter, Rng& rng) {
  const auto K = static_cast<Eigen::Index>(dataset.num_environments());
  MechanismEstimates est;
  est.omegas.resize(K, designs.front().treatment.cols());
  est.gammas.resize(K, designs.front().outcome.cols());
  est.diagnostics.resize(K);
  std::vector<Eigen::Index> rows;
  for (Eigen::Index s = 0; s < K; ++s) {
    const auto& block = dataset.block(s);
    const auto& design = designs[s];
    const Eigen::Index n = block.size();
    std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
    rows.resize(static_cast<std::size_t>(n));
    for (auto& r : rows) r = pick(rng);

    const Eigen::MatrixXd treat_design = design.treatment(rows, Eigen::all);
    const Eigen::MatrixXd outc_design = design.outcome(rows, Eigen::all);
    const Eigen::VectorXd a = block.A(rows);
    const Eigen::VectorXd y = block.Y(rows);
    const LinearFit treat = fit_linear_with_jitter(treat_design, a, ridge_jitter);
    const LinearFit outc = fit_linear_with_jitter(outc_design, y, ridge_jitter);
    est.omegas.row(s) = treat.coefficients.transpose();
    est.gammas.row(s) = outc.coefficients.transpose();
    const auto nd = static_cast<double>(n);
    est.diagnostics[s].treatment = {treat.rss / (nd - static_cast<double>(treat_design.cols())), treat.condition};
    est.diagnostics[s].outcome = {outc.rss / (nd - static_cast<double>(outc_design.cols())), outc.condition};
  }
  return est;
}

MechanismEstimates bootstrap_refit(const MultiEnvDataset& dataset, const FeatureSpec& psi_spec,
                                   const FeatureSpec& phi_spec, double ridge_jitter, Rng& rng) {
  const auto designs = build_designs(dataset, psi_spec, phi_spec);
  return bootstrap_refit(dataset, designs, ridge_jitter, rng);
}

TestResult permutation_test(const Eigen::Ref<const Eigen::MatrixXd>& omegas,
                            const Eigen::Ref<const Eigen::MatrixXd>& gammas, const MintOptions& options) {
  check_options(options);
  check_pair(omegas, gammas);
  TestResult result;
  result.alpha = options.alpha;
  result.seed = options.seed;
  result.method = TestMethod::mint_no_bootstrap;
  small_k_warning(result, omegas.rows());

  const Eigen::MatrixXd omega_c = centered(omegas);
  const Eigen::MatrixXd gamma_c = centered(gammas);
  result.statistic = centered_statistic(omega_c, gamma_c);

  std::vector<double> nulls(static_cast<std::size_t>(options.resamples));
  parallel_for(nulls.size(), options.threads, [&](std::size_t m) {
    Rng rng = make_stream(options.seed, {kPermutationStream, m});
    nulls[m] = permuted_statistic(omega_c, gamma_c, random_permutation(omegas.rows(), rng));
  });
  finalize_resampling_result(result, std::move(nulls), options.keep_null_samples);
  return result;
}

TestResult mint_test(const MultiEnvDataset& dataset, const FeatureSpec& psi_spec, const FeatureSpec& phi_spec,
                     const MintOptions& options) {
  check_options(options);
  const auto designs = build_designs(dataset, psi_spec, phi_spec);
  const MechanismEstimates full = fit_mechanisms(dataset, designs);
  if (!options.use_bootstrap) return permutation_test(full.omegas, full.gammas, options);

  TestResult result;
  result.alpha = options.alpha;
  result.seed = options.seed;
  result.method = TestMethod::mint;
  const auto K = static_cast<Eigen::Index>(dataset.num_environments());
  small_k_warning(result, K);
  result.statistic = frobenius_statistic(full.omegas, full.gammas);

  std::vector<double> nulls(static_cast<std::size_t>(options.resamples));
  parallel_for(nulls.size(), options.threads, [&](std::size_t m) {
    Rng boot_rng = make_stream(options.seed, {kBootstrapStream, m});
    Rng perm_rng = make_stream(options.seed, {kPermutationStream, m});
    const MechanismEstimates refit = bootstrap_refit(dataset, designs, options.ridge_jitter, boot_rng);
    nulls[m] = permuted_statistic(centered(refit.omegas), centered(refit.gammas), random_permutation(K, perm_rng));
  });
  finalize_resampling_result(result, std::move(nulls), options.keep_null_samples);
  return result;
}

}  // namespace mint
