#pragma once

#include "mint/dataset.hpp"
#include "mint/mint.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>

namespace mint {

enum class KernelKind { linear, rbf };

/// A positive-definite kernel plus the ridge penalty of the kernel ridge
/// regression fitted with it. An empty bandwidth on an rbf kernel selects the
/// median heuristic (median pairwise distance over at most 1000 pooled rows,
/// subsampled with `subsample_seed`).
struct KernelSpec {
  KernelKind kind = KernelKind::linear;
  std::optional<double> bandwidth;
  double ridge_lambda = 1e-3;
  std::uint64_t subsample_seed = 0;
};

/// k(row i of Xa, row j of Xb). linear: u.v; rbf: exp(-|u - v|^2 / (2 b^2)).
/// An rbf spec must carry an explicit bandwidth here.
Eigen::MatrixXd gram(const Eigen::Ref<const Eigen::MatrixXd>& Xa, const Eigen::Ref<const Eigen::MatrixXd>& Xb,
                     const KernelSpec& spec);

/// Median pairwise Euclidean distance between rows (subsampled to 1000 rows).
double median_heuristic_bandwidth(const Eigen::Ref<const Eigen::MatrixXd>& rows, std::uint64_t seed);

/// Returns a copy with the bandwidth resolved from `pooled_inputs` when needed.
KernelSpec resolve_bandwidth(const KernelSpec& spec, const Eigen::Ref<const Eigen::MatrixXd>& pooled_inputs);

/// Kernel ridge dual coefficients: solves (G + n lambda I) c = target with n
/// the number of rows of G.
Eigen::VectorXd kernel_dual(const Eigen::Ref<const Eigen::MatrixXd>& G, const Eigen::Ref<const Eigen::VectorXd>& target,
                            double lambda);

/// K x K matrices of inner products between the per-environment mechanism
/// parameters, omega_s . omega_s' and gamma_s . gamma_s'.
struct MechanismGrams {
  Eigen::MatrixXd treatment;
  Eigen::MatrixXd outcome;
};

/// omega_s . omega_s' = c_s^T k(X_s, X_s') c_s' with c_s the dual coefficients
/// of environment s (and likewise for gamma with h over (X, A)). The duals
/// are taken on the numerically non-null spectrum of each Gram matrix, which
/// leaves the primal coefficients unchanged and keeps near-zero ridge
/// penalties stable.
MechanismGrams mechanism_grams(const MultiEnvDataset& dataset, const KernelSpec& k_spec, const KernelSpec& h_spec);

/// (1/K) sqrt(tr((H G_w H)(H G_g H))), H = I - (1/K) 11^T. Equals
/// frobenius_statistic(w, g) when G_w = w w^T and G_g = g g^T.
double gram_trace_statistic(const Eigen::Ref<const Eigen::MatrixXd>& treatment_gram,
                            const Eigen::Ref<const Eigen::MatrixXd>& outcome_gram);

/// Requires equal environment sizes and K >= 2.
double kernel_statistic(const MultiEnvDataset& dataset, const KernelSpec& k_spec, const KernelSpec& h_spec);

/// Permutation-only calibration: the null statistics permute the environment
/// order of the treatment Gram (rows and columns together). Marked
/// experimental in the result.
TestResult kernel_mint_test(const MultiEnvDataset& dataset, const KernelSpec& k_spec, const KernelSpec& h_spec,
                            double alpha = 0.05, int resamples = 1000, std::uint64_t seed = 0, int threads = 1);

}  // namespace mint
