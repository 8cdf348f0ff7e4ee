#pragma once

#include <Eigen/Dense>

namespace mint {

enum class FeatureKind { treatment, outcome };

/// Declarative polynomial feature map.
///
/// Treatment features (over X only):
///   [1 | X_1..X_d | X_1^2..X_d^2 | ... | X_1^p..X_d^p]
/// Outcome features (over X and A):
///   [treatment columns | A | A*X_1..A*X_d (interactions) | A^2 (square)]
///
/// Powers are per coordinate; there are no cross-covariate products. The
/// column order is fixed so coefficient indices are stable everywhere.
struct FeatureSpec {
  FeatureKind kind = FeatureKind::treatment;
  int degree = 1;
  bool include_intercept = true;
  bool include_treatment_interactions = false;
  bool include_treatment_square = false;

  static FeatureSpec treatment(int degree = 1) { return {FeatureKind::treatment, degree, true, false, false}; }
  static FeatureSpec outcome(int degree = 1, bool interactions = false, bool square = false) {
    return {FeatureKind::outcome, degree, true, interactions, square};
  }

  friend bool operator==(const FeatureSpec&, const FeatureSpec&) = default;
};

/// Number of columns produced for `d` covariates. Throws ValidationError on
/// an invalid spec.
Eigen::Index feature_dimension(Eigen::Index d, const FeatureSpec& spec);

void validate(const FeatureSpec& spec);

Eigen::MatrixXd build_treatment_features(const Eigen::Ref<const Eigen::MatrixXd>& X, const FeatureSpec& spec);

Eigen::MatrixXd build_outcome_features(const Eigen::Ref<const Eigen::MatrixXd>& X,
                                       const Eigen::Ref<const Eigen::VectorXd>& A, const FeatureSpec& spec);

}  // namespace mint
