#include "mint/baselines.hpp"

#include "mint/error.hpp"
#include "mint/estimation.hpp"
#include "mint/special_functions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace mint {

namespace {

void check_bundle(const PValueBundle& bundle) {
  if (bundle.values.empty()) throw ValidationError("cannot combine an empty set of p-values");
  for (double p : bundle.values)
    if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("p-values must lie in [0, 1]");
}

}  // namespace

PartialCorrelation partial_correlation(const Eigen::Ref<const Eigen::VectorXd>& x,
                                       const Eigen::Ref<const Eigen::VectorXd>& y,
                                       const Eigen::Ref<const Eigen::MatrixXd>& Z) {
  const Eigen::Index n = x.size();
  const Eigen::Index q = Z.cols();
  if (y.size() != n || Z.rows() != n) throw ValidationError("partial correlation inputs differ in length");
  if (n <= q + 2) throw ValidationError("partial correlation needs n > q + 2");

  Eigen::MatrixXd design(n, q + 1);
  design.col(0).setOnes();
  design.rightCols(q) = Z;
  const Eigen::VectorXd rx = x - design * least_squares_fit(design, x);
  const Eigen::VectorXd ry = y - design * least_squares_fit(design, y);
  const double nx = rx.norm();
  const double ny = ry.norm();
  const double scale_x = (x.array() - x.mean()).matrix().norm();
  const double scale_y = (y.array() - y.mean()).matrix().norm();
  constexpr double kDegenerate = 1e-12;
  if (nx <= kDegenerate * std::max(scale_x, 1.0) || ny <= kDegenerate * std::max(scale_y, 1.0))
    throw NumericalError("a residual has zero variance; partial correlation is undefined");

  PartialCorrelation out;
  out.r = std::clamp(rx.dot(ry) / (nx * ny), -1.0, 1.0);
  const double df = static_cast<double>(n - q - 2);
  const double denom = 1.0 - out.r * out.r;
  out.p_value = denom <= 0.0 ? 0.0 : student_t_two_sided(out.r * std::sqrt(df / denom), df);
  return out;
}

double combine_fisher(const PValueBundle& bundle) {
  check_bundle(bundle);
  double stat = 0.0;
  double product = 1.0;
  for (double p : bundle.values) {
    if (p == 0.0) throw NumericalError("Fisher combination underflow: a p-value is exactly 0");
    stat -= 2.0 * std::log(p);
    product *= p;
  }
  if (product < std::numeric_limits<double>::min())
    return chi2_survival(stat, 2.0 * static_cast<double>(bundle.values.size()));
  // Even degrees of freedom: P(chi2_2k > 2t) = e^-t sum_{j<k} t^j / j!, with e^-t = prod p.
  const double t = -std::log(product);
  double term = product, sum = product;
  for (std::size_t j = 1; j < bundle.values.size(); ++j) {
    term *= t / static_cast<double>(j);
    sum += term;
  }
  return std::min(sum, 1.0);
}

double combine_tippett(const PValueBundle& bundle) {
  check_bundle(bundle);
  const double pmin = *std::min_element(bundle.values.begin(), bundle.values.end());
  const auto k = static_cast<double>(bundle.values.size());
  if (bundle.values.size() == 1) return pmin;
  if (pmin == 1.0) return 0.0;
  return -std::expm1(k * std::log1p(-pmin));
}

double combine(const PValueBundle& bundle) {
  return bundle.method == Combiner::fisher ? combine_fisher(bundle) : combine_tippett(bundle);
}

TestResult transportability_test(const MultiEnvDataset& dataset, const FeatureSpec& phi_spec,
                                 TransportabilityVariant variant, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("alpha must lie in (0, 1)");
  if (phi_spec.kind != FeatureKind::outcome) throw ValidationError("transportability test needs an outcome spec");
  const auto K = static_cast<Eigen::Index>(dataset.num_environments());
  const Eigen::Index zp = feature_dimension(dataset.covariate_dim(), phi_spec);
  const Eigen::Index n = dataset.total_size();
  const Eigen::Index df_full = variant == TransportabilityVariant::full_interaction ? K * zp : zp + K - 1;
  if (n <= df_full + 1)
    throw ValidationError("pooled sample size " + std::to_string(n) + " is too small for a full model with " +
                          std::to_string(df_full) + " parameters");

  Eigen::MatrixXd pooled(n, zp);
  Eigen::VectorXd y(n);
  std::vector<Eigen::Index> offsets;
  Eigen::Index row = 0;
  for (const auto& b : dataset.blocks()) {
    offsets.push_back(row);
    pooled.middleRows(row, b.size()) = build_outcome_features(b.X, b.A, phi_spec);
    y.segment(row, b.size()) = b.Y;
    row += b.size();
  }

  const double rss_restricted = fit_linear(pooled, y).rss;
  double rss_full = 0.0;
  if (variant == TransportabilityVariant::full_interaction) {
    // Interacting every column with the environment indicators is the same
    // model as separate per-environment fits.
    for (Eigen::Index s = 0; s < K; ++s) {
      const auto& b = dataset.block(s);
      try {
        rss_full += fit_linear(pooled.middleRows(offsets[s], b.size()), b.Y).rss;
      } catch (const ValidationError&) {
        throw RankDeficientError("environment '" + b.env_id + "' has too few rows for its own outcome model", {});
      }
    }
  } else {
    Eigen::MatrixXd design = Eigen::MatrixXd::Zero(n, zp + K - 1);
    design.leftCols(zp) = pooled;
    for (Eigen::Index s = 1; s < K; ++s)
      design.block(offsets[s], zp + s - 1, dataset.block(s).size(), 1).setOnes();
    rss_full = fit_linear(design, y).rss;
  }

  const double df_delta = static_cast<double>(df_full - zp);
  const double df_resid = static_cast<double>(n - df_full);
  if (!(rss_full > 0.0)) throw NumericalError("full model interpolates the outcome; the F statistic is undefined");

  TestResult result;
  result.method = TestMethod::transportability;
  result.alpha = alpha;
  result.statistic = (std::max(rss_restricted - rss_full, 0.0) / df_delta) / (rss_full / df_resid);
  result.p_value = f_survival(result.statistic, df_delta, df_resid);
  result.threshold = f_upper_quantile(alpha, df_delta, df_resid);
  result.reject = result.statistic > result.threshold;
  return result;
}

}  // namespace mint
