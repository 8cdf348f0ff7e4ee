#include "mint/kernel.hpp"

#include "mint/error.hpp"
#include "mint/parallel.hpp"
#include "mint/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace mint {

namespace {

constexpr double kPsdTolerance = 1e-10;
constexpr Eigen::Index kMedianSubsample = 1000;

void check_spec(const KernelSpec& spec) {
  if (!(spec.ridge_lambda > 0.0)) throw ValidationError("kernel ridge penalty must be positive");
  if (spec.bandwidth && !(*spec.bandwidth > 0.0)) throw ValidationError("rbf bandwidth must be positive");
}

Eigen::MatrixXd centering(Eigen::Index K) {
  return Eigen::MatrixXd::Identity(K, K) - Eigen::MatrixXd::Constant(K, K, 1.0 / static_cast<double>(K));
}

Eigen::MatrixXd outcome_inputs(const EnvironmentBlock& b) {
  Eigen::MatrixXd xa(b.size(), b.X.cols() + 1);
  xa.leftCols(b.X.cols()) = b.X;
  xa.col(b.X.cols()) = b.A;
  return xa;
}

// Dual coefficients restricted to eigen-directions of G that are not
// numerically null. Throws on a clearly indefinite G.
Eigen::VectorXd spectral_dual(const Eigen::MatrixXd& G, const Eigen::VectorXd& target, double lambda) {
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(G);
  if (eig.info() != Eigen::Success) throw NumericalError("Gram eigendecomposition failed");
  const Eigen::VectorXd& values = eig.eigenvalues();
  const double top = std::max(values.maxCoeff(), 0.0);
  if (values.minCoeff() < -kPsdTolerance * std::max(1.0, top))
    throw NumericalError("Gram matrix is not positive semi-definite (eigenvalue " +
                         std::to_string(values.minCoeff()) + ")");
  const auto n = static_cast<double>(G.rows());
  const double null_tol = n * std::numeric_limits<double>::epsilon() * top;
  Eigen::VectorXd proj = eig.eigenvectors().transpose() * target;
  for (Eigen::Index i = 0; i < proj.size(); ++i)
    proj(i) = values(i) > null_tol ? proj(i) / (values(i) + n * lambda) : 0.0;
  return eig.eigenvectors() * proj;
}

Eigen::MatrixXd inner_products(const std::vector<Eigen::MatrixXd>& inputs, const std::vector<Eigen::VectorXd>& duals,
                               const std::vector<Eigen::MatrixXd>& self_grams, const KernelSpec& spec) {
  const auto K = static_cast<Eigen::Index>(inputs.size());
  Eigen::MatrixXd out(K, K);
  for (Eigen::Index s = 0; s < K; ++s) {
    out(s, s) = duals[s].dot(self_grams[s] * duals[s]);
    for (Eigen::Index t = s + 1; t < K; ++t) {
      out(s, t) = duals[s].dot(gram(inputs[s], inputs[t], spec) * duals[t]);
      out(t, s) = out(s, t);
    }
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(out, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() < -kPsdTolerance * std::max(1.0, eig.eigenvalues().maxCoeff()))
    throw NumericalError("mechanism inner-product matrix is not positive semi-definite");
  return out;
}

double centered_trace_statistic(const Eigen::MatrixXd& a_centered, const Eigen::MatrixXd& b_centered) {
  const double tr = a_centered.cwiseProduct(b_centered).sum();
  return std::sqrt(std::max(tr, 0.0)) / static_cast<double>(a_centered.rows());
}

}  // namespace

Eigen::MatrixXd gram(const Eigen::Ref<const Eigen::MatrixXd>& Xa, const Eigen::Ref<const Eigen::MatrixXd>& Xb,
                     const KernelSpec& spec) {
  if (Xa.cols() != Xb.cols())
    throw ValidationError("kernel inputs have " + std::to_string(Xa.cols()) + " and " + std::to_string(Xb.cols()) +
                          " columns");
  check_spec(spec);
  if (spec.kind == KernelKind::linear) return Xa * Xb.transpose();
  if (!spec.bandwidth) throw ValidationError("rbf kernel bandwidth is unresolved; call resolve_bandwidth first");
  const double scale = -0.5 / (*spec.bandwidth * *spec.bandwidth);
  Eigen::MatrixXd out(Xa.rows(), Xb.rows());
  for (Eigen::Index j = 0; j < Xb.rows(); ++j)
    for (Eigen::Index i = 0; i < Xa.rows(); ++i) out(i, j) = std::exp(scale * (Xa.row(i) - Xb.row(j)).squaredNorm());
  return out;
}

double median_heuristic_bandwidth(const Eigen::Ref<const Eigen::MatrixXd>& rows, std::uint64_t seed) {
  if (rows.rows() < 2) throw ValidationError("median heuristic needs at least 2 rows");
  std::vector<Eigen::Index> pick(static_cast<std::size_t>(rows.rows()));
  std::iota(pick.begin(), pick.end(), Eigen::Index{0});
  if (rows.rows() > kMedianSubsample) {
    Rng rng(derive_seed(seed, {0}));
    std::shuffle(pick.begin(), pick.end(), rng);
    pick.resize(kMedianSubsample);
    std::sort(pick.begin(), pick.end());
  }
  std::vector<double> dist;
  dist.reserve(pick.size() * (pick.size() - 1) / 2);
  for (std::size_t i = 0; i < pick.size(); ++i)
    for (std::size_t j = i + 1; j < pick.size(); ++j) dist.push_back((rows.row(pick[i]) - rows.row(pick[j])).norm());
  auto mid = dist.begin() + static_cast<std::ptrdiff_t>(dist.size() / 2);
  std::nth_element(dist.begin(), mid, dist.end());
  double median = *mid;
  if (dist.size() % 2 == 0) median = 0.5 * (median + *std::max_element(dist.begin(), mid));
  if (!(median > 0.0)) throw NumericalError("median pairwise distance is zero; cannot choose an rbf bandwidth");
  return median;
}

KernelSpec resolve_bandwidth(const KernelSpec& spec, const Eigen::Ref<const Eigen::MatrixXd>& pooled_inputs) {
  KernelSpec out = spec;
  if (spec.kind == KernelKind::rbf && !spec.bandwidth)
    out.bandwidth = median_heuristic_bandwidth(pooled_inputs, spec.subsample_seed);
  return out;
}

Eigen::VectorXd kernel_dual(const Eigen::Ref<const Eigen::MatrixXd>& G, const Eigen::Ref<const Eigen::VectorXd>& target,
                            double lambda) {
  if (G.rows() != G.cols()) throw ValidationError("Gram matrix must be square");
  if (G.rows() != target.size()) throw ValidationError("Gram matrix and target differ in size");
  if (!(lambda > 0.0)) throw ValidationError("kernel ridge penalty must be positive");
  const double scale = std::max(1.0, G.cwiseAbs().maxCoeff());
  if ((G - G.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) throw ValidationError("Gram matrix is not symmetric");
  const auto n = static_cast<double>(G.rows());
  Eigen::MatrixXd system = G;
  system.diagonal().array() += n * lambda;
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(system);
  if (ldlt.info() != Eigen::Success) throw NumericalError("kernel ridge system could not be factorized");
  return ldlt.solve(target);
}

MechanismGrams mechanism_grams(const MultiEnvDataset& dataset, const KernelSpec& k_spec, const KernelSpec& h_spec) {
  check_spec(k_spec);
  check_spec(h_spec);
  if (!dataset.equal_sizes()) throw ValidationError("the kernel statistic needs equal environment sizes");
  const auto K = dataset.num_environments();
  const Eigen::Index n = dataset.block(0).size();

  std::vector<Eigen::MatrixXd> x_inputs, xa_inputs;
  for (const auto& b : dataset.blocks()) {
    x_inputs.push_back(b.X);
    xa_inputs.push_back(outcome_inputs(b));
  }
  KernelSpec k = k_spec;
  KernelSpec h = h_spec;
  if (k.kind == KernelKind::rbf && !k.bandwidth) {
    Eigen::MatrixXd pooled(n * static_cast<Eigen::Index>(K), dataset.covariate_dim());
    for (std::size_t s = 0; s < K; ++s) pooled.middleRows(static_cast<Eigen::Index>(s) * n, n) = x_inputs[s];
    k = resolve_bandwidth(k, pooled);
  }
  if (h.kind == KernelKind::rbf && !h.bandwidth) {
    Eigen::MatrixXd pooled(n * static_cast<Eigen::Index>(K), dataset.covariate_dim() + 1);
    for (std::size_t s = 0; s < K; ++s) pooled.middleRows(static_cast<Eigen::Index>(s) * n, n) = xa_inputs[s];
    h = resolve_bandwidth(h, pooled);
  }

  std::vector<Eigen::MatrixXd> k_self, h_self;
  std::vector<Eigen::VectorXd> c, d;
  for (std::size_t s = 0; s < K; ++s) {
    k_self.push_back(gram(x_inputs[s], x_inputs[s], k));
    h_self.push_back(gram(xa_inputs[s], xa_inputs[s], h));
    c.push_back(spectral_dual(k_self.back(), dataset.block(s).A, k.ridge_lambda));
    d.push_back(spectral_dual(h_self.back(), dataset.block(s).Y, h.ridge_lambda));
  }
  return {inner_products(x_inputs, c, k_self, k), inner_products(xa_inputs, d, h_self, h)};
}

double gram_trace_statistic(const Eigen::Ref<const Eigen::MatrixXd>& treatment_gram,
                            const Eigen::Ref<const Eigen::MatrixXd>& outcome_gram) {
  const Eigen::Index K = treatment_gram.rows();
  if (K < 2) throw ValidationError("the statistic needs at least 2 environments");
  if (treatment_gram.cols() != K || outcome_gram.rows() != K || outcome_gram.cols() != K)
    throw ValidationError("inner-product matrices must both be K x K");
  const Eigen::MatrixXd H = centering(K);
  return centered_trace_statistic(H * treatment_gram * H, H * outcome_gram * H);
}

double kernel_statistic(const MultiEnvDataset& dataset, const KernelSpec& k_spec, const KernelSpec& h_spec) {
  const auto grams = mechanism_grams(dataset, k_spec, h_spec);
  return gram_trace_statistic(grams.treatment, grams.outcome);
}

TestResult kernel_mint_test(const MultiEnvDataset& dataset, const KernelSpec& k_spec, const KernelSpec& h_spec,
                            double alpha, int resamples, std::uint64_t seed, int threads) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("alpha must lie in (0, 1)");
  if (resamples < 1) throw ValidationError("the number of resamples must be >= 1");
  const auto grams = mechanism_grams(dataset, k_spec, h_spec);
  const auto K = static_cast<Eigen::Index>(dataset.num_environments());
  const Eigen::MatrixXd H = centering(K);
  const Eigen::MatrixXd treat_c = H * grams.treatment * H;
  const Eigen::MatrixXd outc_c = H * grams.outcome * H;

  TestResult result;
  result.method = TestMethod::kernel_mint;
  result.alpha = alpha;
  result.seed = seed;
  result.experimental = true;
  result.warnings.emplace_back("kernel calibration is permutation-only and experimental");
  if (K == 2)
    result.warnings.emplace_back("only 2 environments: the permutation null has 2 distinct values and the test has no power");
  result.statistic = centered_trace_statistic(treat_c, outc_c);

  std::vector<double> nulls(static_cast<std::size_t>(resamples));
  parallel_for(nulls.size(), threads, [&](std::size_t m) {
    Rng rng = make_stream(seed, {kPermutationStream, m});
    std::vector<Eigen::Index> perm(static_cast<std::size_t>(K));
    std::iota(perm.begin(), perm.end(), Eigen::Index{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    nulls[m] = centered_trace_statistic(treat_c(perm, perm), outc_c);
  });
  finalize_resampling_result(result, std::move(nulls), true);
  return result;
}

}  // namespace mint
