#include "mint/features.hpp"

#include "mint/error.hpp"

#include <string>

namespace mint {

void validate(const FeatureSpec& spec) {
  if (spec.degree < 1) throw ValidationError("feature degree must be >= 1, got " + std::to_string(spec.degree));
  if (spec.kind == FeatureKind::treatment &&
      (spec.include_treatment_interactions || spec.include_treatment_square))
    throw ValidationError("treatment features cannot reference the treatment");
}

Eigen::Index feature_dimension(Eigen::Index d, const FeatureSpec& spec) {
  validate(spec);
  Eigen::Index z = (spec.include_intercept ? 1 : 0) + d * spec.degree;
  if (spec.kind == FeatureKind::outcome) {
    z += 1;
    if (spec.include_treatment_interactions) z += d;
    if (spec.include_treatment_square) z += 1;
  }
  return z;
}

namespace {

void check_input(const Eigen::Ref<const Eigen::MatrixXd>& X) {
  if (X.rows() == 0) throw ValidationError("cannot build features from an empty covariate matrix");
  if (!X.allFinite()) throw ValidationError("covariates contain non-finite values");
}

// Writes the covariate block of the feature map into `out` starting at col 0.
void fill_covariate_powers(const Eigen::Ref<const Eigen::MatrixXd>& X, const FeatureSpec& spec,
                           Eigen::MatrixXd& out) {
  const Eigen::Index d = X.cols();
  Eigen::Index col = 0;
  if (spec.include_intercept) out.col(col++).setOnes();
  if (d == 0) return;
  Eigen::MatrixXd power = X;
  for (int p = 1; p <= spec.degree; ++p) {
    if (p > 1) power = power.cwiseProduct(X);
    out.middleCols(col, d) = power;
    col += d;
  }
}

}  // namespace

Eigen::MatrixXd build_treatment_features(const Eigen::Ref<const Eigen::MatrixXd>& X, const FeatureSpec& spec) {
  if (spec.kind != FeatureKind::treatment) throw ValidationError("expected a treatment feature spec");
  check_input(X);
  Eigen::MatrixXd out(X.rows(), feature_dimension(X.cols(), spec));
  fill_covariate_powers(X, spec, out);
  return out;
}

Eigen::MatrixXd build_outcome_features(const Eigen::Ref<const Eigen::MatrixXd>& X,
                                       const Eigen::Ref<const Eigen::VectorXd>& A, const FeatureSpec& spec) {
  if (spec.kind != FeatureKind::outcome) throw ValidationError("expected an outcome feature spec");
  check_input(X);
  if (A.size() != X.rows())
    throw ValidationError("treatment length " + std::to_string(A.size()) + " does not match " +
                          std::to_string(X.rows()) + " covariate rows");
  if (!A.allFinite()) throw ValidationError("treatment contains non-finite values");

  const Eigen::Index d = X.cols();
  Eigen::MatrixXd out(X.rows(), feature_dimension(d, spec));
  fill_covariate_powers(X, spec, out);
  Eigen::Index col = (spec.include_intercept ? 1 : 0) + d * spec.degree;
  out.col(col++) = A;
  if (spec.include_treatment_interactions) {
    out.middleCols(col, d) = X.array().colwise() * A.array();
    col += d;
  }
  if (spec.include_treatment_square) out.col(col++) = A.array().square();
  return out;
}

}  // namespace mint
