#include "mint/error.hpp"
#include "mint/features.hpp"
#include "mint/random.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <numeric>

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using mint::FeatureSpec;

MatrixXd rows(std::initializer_list<std::initializer_list<double>> values) {
  MatrixXd m(values.size(), values.begin()->size());
  Eigen::Index i = 0;
  for (const auto& r : values) {
    Eigen::Index j = 0;
    for (double v : r) m(i, j++) = v;
    ++i;
  }
  return m;
}

TEST(TreatmentFeatures, SingleCovariateDegreeTwo) {
  EXPECT_EQ(mint::build_treatment_features(rows({{2}}), FeatureSpec::treatment(2)), rows({{1, 2, 4}}));
}

TEST(TreatmentFeatures, DegreeOneIsInterceptPlusIdentity) {
  EXPECT_EQ(mint::build_treatment_features(rows({{1, 3}}), FeatureSpec::treatment(1)), rows({{1, 1, 3}}));
}

TEST(TreatmentFeatures, MatchesPowerTable) {
  const MatrixXd X = rows({{2}, {-1}});
  const MatrixXd got = mint::build_treatment_features(X, FeatureSpec::treatment(3));
  MatrixXd expected(2, 4);
  for (int i = 0; i < 2; ++i)
    for (int k = 0; k <= 3; ++k) expected(i, k) = std::pow(X(i, 0), k);
  EXPECT_EQ(got, expected);
  EXPECT_EQ(got, rows({{1, 2, 4, 8}, {1, -1, 1, -1}}));
}

TEST(TreatmentFeatures, ColumnsAreGroupedByPower) {
  const MatrixXd got = mint::build_treatment_features(rows({{2, 3}}), FeatureSpec::treatment(2));
  EXPECT_EQ(got, rows({{1, 2, 3, 4, 9}}));
}

TEST(OutcomeFeatures, LinearWithInteractionAndSquare) {
  VectorXd A(1);
  A << 2;
  EXPECT_EQ(mint::build_outcome_features(rows({{3}}), A, FeatureSpec::outcome(1, true, true)),
            rows({{1, 3, 2, 6, 4}}));
}

TEST(OutcomeFeatures, ZeroInputs) {
  VectorXd A = VectorXd::Zero(1);
  EXPECT_EQ(mint::build_outcome_features(rows({{0}}), A, FeatureSpec::outcome(1, true, true)),
            rows({{1, 0, 0, 0, 0}}));
}

TEST(OutcomeFeatures, TwoCovariatesWithInteractions) {
  VectorXd A(1);
  A << 3;
  EXPECT_EQ(mint::build_outcome_features(rows({{1, 2}}), A, FeatureSpec::outcome(1, true, false)),
            rows({{1, 1, 2, 3, 3, 6}}));
}

TEST(OutcomeFeatures, WithoutIntercept) {
  FeatureSpec spec = FeatureSpec::outcome(2);
  spec.include_intercept = false;
  VectorXd A(1);
  A << 5;
  EXPECT_EQ(mint::build_outcome_features(rows({{2}}), A, spec), rows({{2, 4, 5}}));
}

TEST(FeatureSpecValidation, RejectsBadSpecs) {
  EXPECT_THROW(mint::validate(FeatureSpec::treatment(0)), mint::ValidationError);
  FeatureSpec t = FeatureSpec::treatment(1);
  t.include_treatment_square = true;
  EXPECT_THROW(mint::validate(t), mint::ValidationError);
  EXPECT_THROW(mint::build_treatment_features(rows({{1}}), FeatureSpec::outcome(1)), mint::ValidationError);
  VectorXd A = VectorXd::Zero(2);
  EXPECT_THROW(mint::build_outcome_features(rows({{1}}), A, FeatureSpec::outcome(1)), mint::ValidationError);
}

TEST(FeatureProperties, DimensionMatchesClosedForm) {
  for (int d = 1; d <= 20; ++d) {
    for (int p = 1; p <= 10; ++p) {
      const MatrixXd X = MatrixXd::Constant(2, d, 0.5);
      const VectorXd A = VectorXd::Constant(2, 0.5);
      for (bool icpt : {true, false}) {
        FeatureSpec t = FeatureSpec::treatment(p);
        t.include_intercept = icpt;
        EXPECT_EQ(mint::build_treatment_features(X, t).cols(), mint::feature_dimension(d, t));
        EXPECT_EQ(mint::feature_dimension(d, t), (icpt ? 1 : 0) + d * p);
        for (bool inter : {true, false}) {
          for (bool sq : {true, false}) {
            FeatureSpec o = FeatureSpec::outcome(p, inter, sq);
            o.include_intercept = icpt;
            EXPECT_EQ(mint::build_outcome_features(X, A, o).cols(), mint::feature_dimension(d, o));
            EXPECT_EQ(mint::feature_dimension(d, o), (icpt ? 1 : 0) + d * p + 1 + (inter ? d : 0) + (sq ? 1 : 0));
          }
        }
      }
    }
  }
}

TEST(FeatureProperties, RowPermutationCommutes) {
  auto rng = mint::make_stream(11, {});
  const MatrixXd X = mint::testing::gaussian_matrix(30, 3, rng);
  const VectorXd A = mint::testing::gaussian_vector(30, rng);
  std::vector<int> perm(30);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  const Eigen::PermutationMatrix<Eigen::Dynamic> P(Eigen::Map<Eigen::VectorXi>(perm.data(), 30));
  const FeatureSpec t = FeatureSpec::treatment(3);
  const FeatureSpec o = FeatureSpec::outcome(2, true, true);
  EXPECT_EQ(mint::build_treatment_features(P * X, t), P * mint::build_treatment_features(X, t));
  EXPECT_EQ(mint::build_outcome_features(P * X, P * A, o), P * mint::build_outcome_features(X, A, o));
}

TEST(FeatureProperties, ZeroTreatmentReducesToCovariateColumns) {
  auto rng = mint::make_stream(12, {});
  const MatrixXd X = mint::testing::gaussian_matrix(10, 2, rng);
  const VectorXd A = VectorXd::Zero(10);
  for (int p = 1; p <= 3; ++p) {
    const MatrixXd t = mint::build_treatment_features(X, FeatureSpec::treatment(p));
    const MatrixXd o = mint::build_outcome_features(X, A, FeatureSpec::outcome(p, true, true));
    EXPECT_EQ(o.leftCols(t.cols()), t);
    EXPECT_TRUE(o.rightCols(o.cols() - t.cols()).isZero(0.0));
  }
}

}  // namespace
