#include "mint/dgp.hpp"
#include "mint/error.hpp"
#include "mint/estimation.hpp"
#include "mint/features.hpp"
#include "mint/mint.hpp"

#include <gtest/gtest.h>

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using mint::OracleParams;
using mint::SpecialCase;

Eigen::Matrix<double, 5, 1> vec5(double a, double b, double c, double d, double e) {
  Eigen::Matrix<double, 5, 1> v;
  v << a, b, c, d, e;
  return v;
}

OracleParams confounded_defaults() {
  OracleParams p;
  p.alphaU = p.betaU = p.betaAU = 0.25;
  p.sigmaA = p.sigmaY = std::sqrt(0.125);
  return p;
}

TEST(ClosedForm, HandSubstitution) {
  OracleParams p;
  p.alpha0 = 0;
  p.alphaX = 1;
  p.alphaU = 1;
  p.muU = 0;
  p.sigmaU = p.sigmaA = 1;
  p.beta.setZero();
  p.betaU = 1;
  p.betaAU = 0;
  const auto out = mint::lemma1_closed_form(p);
  EXPECT_EQ(out.omega, Eigen::Vector2d(0, 1));
  EXPECT_NEAR((out.gamma - vec5(0, -0.5, 0.5, 0, 0)).norm(), 0.0, 1e-15);
}

TEST(ClosedForm, NoOutcomeConfoundingLeavesBetaUntouched) {
  OracleParams p = confounded_defaults();
  p.betaU = p.betaAU = 0;
  const auto out = mint::lemma1_closed_form(p);
  EXPECT_EQ(out.gamma.head<4>(), p.beta);
  EXPECT_EQ(out.gamma(4), 0.0);
  const auto special = mint::special_case_closed_form(p, SpecialCase::betaU_betaAU_zero);
  EXPECT_EQ(special.gamma, out.gamma);
  EXPECT_EQ(special.omega, out.omega);
}

TEST(ClosedForm, ConfoundedDefaultsByHand) {
  // (sigmaA / alphaU)^2 = 2, so delta = 1/3; shift = 0.5*4 - 2 = 0.
  const auto out = mint::lemma1_closed_form(confounded_defaults());
  EXPECT_NEAR(out.omega(0), 0.75, 1e-15);
  EXPECT_NEAR(out.omega(1), 1.0 / 3.0, 1e-15);
  const double d = 1.0 / 3.0;
  const auto expected = vec5(0.5, 1.0 / 3.0 - d * 0.25 * 4.0 / 3.0, 0.5 + d * 0.25 * 4.0,
                             1.0 / 3.0 - d * 0.25 * 4.0 / 3.0, d * 0.25 * 4.0);
  EXPECT_NEAR((out.gamma - expected).norm(), 0.0, 1e-14);
}

TEST(ClosedForm, RequiresConfounderInTreatment) {
  OracleParams p = confounded_defaults();
  p.alphaU = 0;
  EXPECT_THROW(mint::lemma1_closed_form(p), mint::ValidationError);
}

TEST(SpecialCases, AlphaUZeroSubstitution) {
  OracleParams p;
  p.alphaU = 0;
  p.beta << 1, 1, 1, 1;
  p.betaU = 2;
  p.muU = 3;
  p.betaAU = 0;
  const auto out = mint::special_case_closed_form(p, SpecialCase::alphaU_zero);
  EXPECT_EQ(out.gamma, vec5(7, 1, 1, 1, 0));
  EXPECT_EQ(out.omega, Eigen::Vector2d(p.alpha0, p.alphaX));
}

TEST(SpecialCases, BranchesAgreeWithoutConfounding) {
  OracleParams p;
  p.alpha0 = -0.7;
  p.alphaX = 2.0;
  p.beta << 0.1, 0.2, 0.3, 0.4;
  const auto a = mint::special_case_closed_form(p, SpecialCase::alphaU_zero);
  const auto b = mint::special_case_closed_form(p, SpecialCase::betaU_betaAU_zero);
  EXPECT_EQ(a.omega, b.omega);
  EXPECT_EQ(a.gamma, b.gamma);
  EXPECT_EQ(a.omega, Eigen::Vector2d(-0.7, 2.0));
  EXPECT_EQ(a.gamma, vec5(0.1, 0.2, 0.3, 0.4, 0));
  p.alphaU = 1;
  EXPECT_THROW(mint::special_case_closed_form(p, SpecialCase::alphaU_zero), mint::ValidationError);
}

TEST(ClosedFormProperties, LargeAlphaULimit) {
  OracleParams p = confounded_defaults();
  p.muU = 0.0;
  double previous_gap = 1e300;
  for (double aU = 1.0; aU <= 1e4; aU *= 10.0) {
    p.alphaU = aU;
    const auto out = mint::lemma1_closed_form(p);
    const double delta = 1.0 / (p.sigmaU * p.sigmaU + std::pow(p.sigmaA / aU, 2));
    const double gap = std::abs(delta - 1.0 / (p.sigmaU * p.sigmaU));
    EXPECT_LE(gap, previous_gap);
    previous_gap = gap;
    EXPECT_NEAR(out.gamma(4), delta * p.betaAU * p.sigmaU * p.sigmaU / aU, 1e-15);
  }
  EXPECT_LT(previous_gap, 1e-8);
  p.alphaU = 1e6;
  EXPECT_LT(std::abs(mint::lemma1_closed_form(p).gamma(4)), 1e-6);
}

std::vector<mint::ObservableParams> sampled_oracles(mint::LinearParam varied, int count) {
  auto rng = mint::make_stream(61, {static_cast<std::uint64_t>(varied)});
  auto config = mint::LinearExampleConfig::confounded();
  config.K = count;
  config.N = 1;
  config.varying = {varied};
  const auto data = mint::generate_linear_example(config, rng);
  std::vector<mint::ObservableParams> out;
  for (const auto& p : data.truth.environment_params) out.push_back(mint::lemma1_closed_form(p));
  return out;
}

double oracle_statistic(const std::vector<mint::ObservableParams>& params) {
  MatrixXd w(params.size(), 2), g(params.size(), 5);
  for (std::size_t s = 0; s < params.size(); ++s) {
    w.row(static_cast<Eigen::Index>(s)) = params[s].omega.transpose();
    g.row(static_cast<Eigen::Index>(s)) = params[s].gamma.transpose();
  }
  return mint::frobenius_statistic(w, g);
}

TEST(ClosedFormProperties, OutcomeSideVariationKeepsOmegaConstant) {
  using P = mint::LinearParam;
  for (auto varied : {P::beta0, P::betaX, P::betaA, P::betaAX, P::betaU, P::betaAU}) {
    const auto params = sampled_oracles(varied, 200);
    for (const auto& p : params) EXPECT_EQ(p.omega, params.front().omega);
    EXPECT_LT(oracle_statistic(params), 1e-15) << mint::to_string(varied);
  }
}

TEST(ClosedFormProperties, TreatmentSideVariationCouplesMechanisms) {
  using P = mint::LinearParam;
  for (auto varied : {P::alpha0, P::alphaX, P::alphaU, P::muU})
    EXPECT_GT(oracle_statistic(sampled_oracles(varied, 1000)), 1e-3) << mint::to_string(varied);
}

TEST(LinearExample, ShapesLabelsAndDeterminism) {
  mint::LinearExampleConfig c;
  c.K = 3;
  c.N = 10;
  auto rng = mint::make_stream(62, {});
  const auto data = mint::generate_linear_example(c, rng);
  ASSERT_EQ(data.dataset.num_environments(), 3u);
  for (const auto& b : data.dataset.blocks()) {
    EXPECT_EQ(b.X.rows(), 10);
    EXPECT_EQ(b.X.cols(), 1);
  }
  EXPECT_FALSE(data.truth.confounded);
  EXPECT_TRUE(data.truth.varied.empty());
  EXPECT_EQ(data.truth.environment_params.size(), 3u);

  auto again = mint::make_stream(62, {});
  const auto twin = mint::generate_linear_example(c, again);
  for (std::size_t s = 0; s < 3; ++s) {
    EXPECT_EQ(twin.dataset.block(s).X, data.dataset.block(s).X);
    EXPECT_EQ(twin.dataset.block(s).Y, data.dataset.block(s).Y);
  }

  auto cc = mint::LinearExampleConfig::confounded();
  cc.K = 2;
  cc.N = 5;
  cc.varying = {mint::LinearParam::alpha0, mint::LinearParam::muU};
  const auto conf = mint::generate_linear_example(cc, rng);
  EXPECT_TRUE(conf.truth.confounded);
  EXPECT_EQ(conf.truth.varied, (std::vector<std::string>{"alpha0", "muU"}));
  for (const auto& p : conf.truth.environment_params) {
    EXPECT_GE(p.alpha0, 0.1);
    EXPECT_LE(p.alpha0, 3.0);
  }
}

TEST(LinearExample, TreatmentMeanMatchesFirstMoment) {
  auto c = mint::LinearExampleConfig::confounded();
  c.K = 2;
  c.N = 500000;
  auto rng = mint::make_stream(63, {});
  const auto data = mint::generate_linear_example(c, rng);
  const double mean = (data.dataset.block(0).A.sum() + data.dataset.block(1).A.sum()) / 1e6;
  EXPECT_NEAR(mean, 0.5 + 1.0 / 3.0 + 0.25, 3e-3);
}

TEST(LinearExample, UnconfoundedRecoversStructuralCoefficients) {
  mint::LinearExampleConfig c;
  c.K = 2;
  c.N = 200000;
  auto rng = mint::make_stream(64, {});
  const auto data = mint::generate_linear_example(c, rng);
  EXPECT_FALSE(data.truth.confounded);
  const auto& b = data.dataset.block(0);
  MatrixXd D(b.size(), 4);
  D << VectorXd::Ones(b.size()), b.X.col(0), b.A, b.A.cwiseProduct(b.X.col(0));
  const VectorXd beta = mint::least_squares_fit(D, b.Y);
  EXPECT_NEAR((beta - Eigen::Vector4d(0.5, 1.0 / 3.0, 0.5, 1.0 / 3.0)).norm(), 0.0, 0.01);
  MatrixXd T(b.size(), 2);
  T << VectorXd::Ones(b.size()), b.X.col(0);
  const VectorXd ra = b.A - T * mint::least_squares_fit(T, b.A);
  const VectorXd ry = b.Y - D * beta;
  EXPECT_LT(std::abs(ra.dot(ry)) / static_cast<double>(b.size()), 1e-10);
}

// Regression of the generated data on the working models, one environment at
// a time, against the closed forms.
void expect_closed_form_fit(const mint::LinearExampleConfig& c, std::uint64_t seed, double tolerance,
                            bool special) {
  auto rng = mint::make_stream(seed, {});
  const auto data = mint::generate_linear_example(c, rng);
  const auto est = mint::fit_mechanisms(data.dataset, mint::FeatureSpec::treatment(1),
                                        mint::FeatureSpec::outcome(1, true, true));
  for (Eigen::Index s = 0; s < est.omegas.rows(); ++s) {
    const auto& p = data.truth.environment_params[static_cast<std::size_t>(s)];
    const auto truth = special ? mint::special_case_closed_form(p, SpecialCase::betaU_betaAU_zero)
                               : mint::lemma1_closed_form(p);
    EXPECT_LT((est.gammas.row(s).transpose() - truth.gamma).norm() / truth.gamma.norm(), tolerance);
    EXPECT_LT((est.omegas.row(s).transpose() - truth.omega).norm() / truth.omega.norm(), tolerance);
  }
}

TEST(ClosedFormOracle, MatchesLargeSampleRegression) {
  auto c = mint::LinearExampleConfig::confounded();
  c.K = 2;
  c.N = 500000;
  expect_closed_form_fit(c, 65, 0.02, false);
  c.varying = {mint::LinearParam::alphaX, mint::LinearParam::betaU, mint::LinearParam::betaAU};
  expect_closed_form_fit(c, 66, 0.05, false);
  // A far from zero makes [1, A, A^2] nearly collinear, so the relative error
  // is larger at the same sample size.
  c.varying = {mint::LinearParam::alpha0, mint::LinearParam::muU, mint::LinearParam::betaU};
  expect_closed_form_fit(c, 66, 0.15, false);
}

TEST(ClosedFormOracle, UnconfoundedOutcomeBranchMatchesRegression) {
  auto c = mint::LinearExampleConfig::confounded();
  c.betaU = c.betaAU = 0.0;
  c.K = 2;
  c.N = 500000;
  expect_closed_form_fit(c, 67, 0.02, true);
}

TEST(Polynomial, ShapesAndFeatureDimension) {
  mint::PolynomialConfig c;
  c.K = 4;
  c.N = 30;
  c.d = 2;
  c.degree = 2;
  auto rng = mint::make_stream(68, {});
  const auto data = mint::generate_polynomial(c, rng);
  EXPECT_EQ(data.dataset.num_environments(), 4u);
  EXPECT_EQ(data.dataset.covariate_dim(), 2);
  EXPECT_EQ(mint::feature_dimension(2, mint::FeatureSpec::treatment(2)), 5);
  EXPECT_FALSE(data.truth.confounded);
  EXPECT_EQ(data.truth.unmeasured_confounders, 0);
  c.confounded = true;
  const auto conf = mint::generate_polynomial(c, rng);
  EXPECT_TRUE(conf.truth.confounded);
  EXPECT_EQ(conf.truth.unmeasured_confounders, 1);
}

TEST(Polynomial, DeterministicGivenSeed) {
  mint::PolynomialConfig c;
  c.K = 3;
  c.N = 20;
  c.confounded = true;
  auto a = mint::make_stream(69, {});
  auto b = mint::make_stream(69, {});
  const auto da = mint::generate_polynomial(c, a);
  const auto db = mint::generate_polynomial(c, b);
  for (std::size_t s = 0; s < 3; ++s) {
    EXPECT_EQ(da.dataset.block(s).A, db.dataset.block(s).A);
    EXPECT_EQ(da.dataset.block(s).Y, db.dataset.block(s).Y);
  }
}

TEST(Polynomial, WellSpecifiedResidualsHaveNoiseScale) {
  mint::PolynomialConfig c;
  c.K = 3;
  c.N = 100000;
  c.d = 2;
  c.degree = 3;
  auto rng = mint::make_stream(70, {});
  const auto data = mint::generate_polynomial(c, rng);
  const auto est = mint::fit_mechanisms(data.dataset, mint::FeatureSpec::treatment(3), mint::FeatureSpec::outcome(3));
  for (const auto& d : est.diagnostics) {
    EXPECT_NEAR(std::sqrt(d.treatment.residual_variance), 0.5, 0.01);
    EXPECT_NEAR(std::sqrt(d.outcome.residual_variance), 0.5, 0.01);
  }
  // Slopes are +-1 and shared; beta is all ones.
  for (Eigen::Index s = 0; s < 3; ++s) {
    for (Eigen::Index j = 1; j < est.omegas.cols(); ++j)
      EXPECT_NEAR(std::abs(est.omegas(s, j)), 1.0, 0.05);
    EXPECT_NEAR(est.gammas(s, est.gammas.cols() - 1), 1.0, 0.02);
  }
}

TEST(ConfigValidation, RejectsBadGeneratorConfigs) {
  mint::LinearExampleConfig c;
  c.K = 1;
  EXPECT_THROW(mint::validate(c), mint::ValidationError);
  c.K = 3;
  c.varying_low = 2;
  c.varying_high = 1;
  EXPECT_THROW(mint::validate(c), mint::ValidationError);
  mint::PolynomialConfig p;
  p.degree = 0;
  EXPECT_THROW(mint::validate(p), mint::ValidationError);
  EXPECT_THROW(mint::parse_linear_param("gamma"), mint::ValidationError);
  EXPECT_EQ(mint::parse_linear_param("muU"), mint::LinearParam::muU);
}

}  // namespace
