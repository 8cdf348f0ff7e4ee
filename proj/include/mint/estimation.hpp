#pragma once

#include "mint/dataset.hpp"
#include "mint/features.hpp"

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace mint {

/// Coefficients of a linear least-squares or ridge fit plus diagnostics.
struct LinearFit {
  Eigen::VectorXd coefficients;
  double rss = 0.0;
  /// sigma_max / sigma_min of the factorized design (the augmented design
  /// when ridge > 0).
  double condition = 1.0;
};

/// Least squares through a column-pivoted Householder QR.
///
/// ridge == 0: requires n > m and full column rank, where a singular value
/// counts as zero when it is <= max(n, m) * eps * sigma_max. A rank-deficient
/// design throws RankDeficientError naming the dependent columns.
///
/// ridge == lambda > 0: solves (D^T D + lambda I) beta = D^T t by factorizing
/// the augmented system [D; sqrt(lambda) I]. Lambda is used as given, with no
/// sample-size scaling (the kernel module applies n * lambda itself).
LinearFit fit_linear(const Eigen::Ref<const Eigen::MatrixXd>& design,
                     const Eigen::Ref<const Eigen::VectorXd>& target, double ridge = 0.0);

Eigen::VectorXd least_squares_fit(const Eigen::Ref<const Eigen::MatrixXd>& design,
                                  const Eigen::Ref<const Eigen::VectorXd>& target, double ridge = 0.0);

/// Plain least squares, falling back to ridge = jitter * mean(diag(D^T D))
/// when the design is rank deficient. Used on bootstrap resamples, which can
/// lose rank through duplicated rows.
LinearFit fit_linear_with_jitter(const Eigen::Ref<const Eigen::MatrixXd>& design,
                                 const Eigen::Ref<const Eigen::VectorXd>& target, double jitter);

struct FitDiagnostics {
  double residual_variance = 0.0;  // RSS / (n_s - m)
  double design_condition_estimate = 1.0;
};

struct EnvironmentDiagnostics {
  FitDiagnostics treatment;
  FitDiagnostics outcome;
};

/// Per-environment observable mechanism parameters. Row s of `omegas` is the
/// treatment-model coefficient vector of environment s, row s of `gammas` the
/// outcome-model one.
struct MechanismEstimates {
  Eigen::MatrixXd omegas;
  Eigen::MatrixXd gammas;
  std::vector<EnvironmentDiagnostics> diagnostics;
};

/// Design matrices of both working models for one environment.
struct EnvironmentDesign {
  Eigen::MatrixXd treatment;
  Eigen::MatrixXd outcome;
};

/// Builds the per-environment designs and checks that both feature
/// dimensions are strictly below the smallest environment size.
std::vector<EnvironmentDesign> build_designs(const MultiEnvDataset& dataset, const FeatureSpec& psi_spec,
                                             const FeatureSpec& phi_spec);

MechanismEstimates fit_mechanisms(const MultiEnvDataset& dataset, const FeatureSpec& psi_spec,
                                  const FeatureSpec& phi_spec, double ridge = 0.0);

MechanismEstimates fit_mechanisms(const MultiEnvDataset& dataset, std::span<const EnvironmentDesign> designs,
                                  double ridge = 0.0);

}  // namespace mint
