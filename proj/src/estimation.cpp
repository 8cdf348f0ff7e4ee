#include "mint/estimation.hpp"

#include "mint/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace mint {

namespace {

struct QrOutcome {
  LinearFit fit;
  std::vector<long> deficient;  // empty when full rank
};

QrOutcome qr_solve(const Eigen::Ref<const Eigen::MatrixXd>& design, const Eigen::Ref<const Eigen::VectorXd>& target) {
  const Eigen::Index n = design.rows();
  const Eigen::Index m = design.cols();
  QrOutcome out;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  const Eigen::MatrixXd r = qr.matrixR().topLeftCorner(m, m).triangularView<Eigen::Upper>();
  const Eigen::VectorXd sv = Eigen::JacobiSVD<Eigen::MatrixXd>(r).singularValues();
  const double smax = sv.size() ? sv(0) : 0.0;
  const double tol = static_cast<double>(std::max(n, m)) * std::numeric_limits<double>::epsilon() * smax;
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > tol) ++rank;
  if (smax == 0.0) rank = 0;
  if (rank < m) {
    const auto& perm = qr.colsPermutation().indices();
    for (Eigen::Index i = rank; i < m; ++i) out.deficient.push_back(static_cast<long>(perm(i)));
    std::sort(out.deficient.begin(), out.deficient.end());
    return out;
  }
  out.fit.condition = smax / sv(m - 1);

  Eigen::VectorXd qt = target;
  qt.applyOnTheLeft(qr.householderQ().adjoint());
  const Eigen::VectorXd permuted = r.triangularView<Eigen::Upper>().solve(qt.head(m));
  out.fit.coefficients = qr.colsPermutation() * permuted;
  return out;
}

void check_inputs(const Eigen::Ref<const Eigen::MatrixXd>& design, const Eigen::Ref<const Eigen::VectorXd>& target,
                  double ridge) {
  if (design.rows() != target.size())
    throw ValidationError("design has " + std::to_string(design.rows()) + " rows but target has " +
                          std::to_string(target.size()) + " entries");
  if (design.cols() == 0) throw ValidationError("design has no columns");
  if (!target.allFinite() || !design.allFinite()) throw ValidationError("least-squares inputs must be finite");
  if (!(ridge >= 0.0) || !std::isfinite(ridge)) throw ValidationError("ridge penalty must be finite and >= 0");
}

LinearFit ridge_solve(const Eigen::Ref<const Eigen::MatrixXd>& design, const Eigen::Ref<const Eigen::VectorXd>& target,
                      double ridge) {
  const Eigen::Index n = design.rows();
  const Eigen::Index m = design.cols();
  Eigen::MatrixXd augmented(n + m, m);
  augmented.topRows(n) = design;
  augmented.bottomRows(m) = std::sqrt(ridge) * Eigen::MatrixXd::Identity(m, m);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + m);
  rhs.head(n) = target;
  auto outcome = qr_solve(augmented, rhs);
  if (!outcome.deficient.empty())
    throw NumericalError("ridge system is numerically singular (penalty too small relative to the design scale)");
  outcome.fit.rss = (target - design * outcome.fit.coefficients).squaredNorm();
  return outcome.fit;
}

}  // namespace

LinearFit fit_linear(const Eigen::Ref<const Eigen::MatrixXd>& design, const Eigen::Ref<const Eigen::VectorXd>& target,
                     double ridge) {
  check_inputs(design, target, ridge);
  if (ridge > 0.0) return ridge_solve(design, target, ridge);
  if (design.rows() <= design.cols())
    throw ValidationError("unpenalized least squares needs more rows (" + std::to_string(design.rows()) +
                          ") than columns (" + std::to_string(design.cols()) + ")");
  auto outcome = qr_solve(design, target);
  if (!outcome.deficient.empty()) {
    std::string cols;
    for (long c : outcome.deficient) cols += (cols.empty() ? "" : ", ") + std::to_string(c);
    throw RankDeficientError("design is rank deficient; dependent columns: {" + cols + "}", outcome.deficient);
  }
  outcome.fit.rss = (target - design * outcome.fit.coefficients).squaredNorm();
  return outcome.fit;
}

Eigen::VectorXd least_squares_fit(const Eigen::Ref<const Eigen::MatrixXd>& design,
                                  const Eigen::Ref<const Eigen::VectorXd>& target, double ridge) {
  return fit_linear(design, target, ridge).coefficients;
}

LinearFit fit_linear_with_jitter(const Eigen::Ref<const Eigen::MatrixXd>& design,
                                 const Eigen::Ref<const Eigen::VectorXd>& target, double jitter) {
  check_inputs(design, target, 0.0);
  if (design.rows() > design.cols()) {
    auto outcome = qr_solve(design, target);
    if (outcome.deficient.empty()) {
      outcome.fit.rss = (target - design * outcome.fit.coefficients).squaredNorm();
      return outcome.fit;
    }
  }
  const double scale = design.colwise().squaredNorm().mean();
  if (!(jitter > 0.0) || !(scale > 0.0))
    throw NumericalError("rank-deficient resample cannot be regularized (zero jitter or all-zero design)");
  return ridge_solve(design, target, jitter * scale);
}

std::vector<EnvironmentDesign> build_designs(const MultiEnvDataset& dataset, const FeatureSpec& psi_spec,
                                             const FeatureSpec& phi_spec) {
  if (psi_spec.kind != FeatureKind::treatment) throw ValidationError("psi spec must be a treatment feature spec");
  if (phi_spec.kind != FeatureKind::outcome) throw ValidationError("phi spec must be an outcome feature spec");
  const Eigen::Index d = dataset.covariate_dim();
  const Eigen::Index z = feature_dimension(d, psi_spec);
  const Eigen::Index zp = feature_dimension(d, phi_spec);
  const Eigen::Index nmin = dataset.min_size();
  if (z >= nmin || zp >= nmin)
    throw ValidationError("feature dimensions (z = " + std::to_string(z) + ", z' = " + std::to_string(zp) +
                          ") must be smaller than the smallest environment size " + std::to_string(nmin));
  std::vector<EnvironmentDesign> designs;
  designs.reserve(dataset.num_environments());
  for (const auto& b : dataset.blocks())
    designs.push_back({build_treatment_features(b.X, psi_spec), build_outcome_features(b.X, b.A, phi_spec)});
  return designs;
}

MechanismEstimates fit_mechanisms(const MultiEnvDataset& dataset, std::span<const EnvironmentDesign> designs,
                                  double ridge) {
  const auto K = static_cast<Eigen::Index>(dataset.num_environments());
  if (static_cast<Eigen::Index>(designs.size()) != K) throw ValidationError("one design per environment required");
  MechanismEstimates est;
  est.omegas.resize(K, designs.front().treatment.cols());
  est.gammas.resize(K, designs.front().outcome.cols());
  est.diagnostics.resize(K);
  for (Eigen::Index s = 0; s < K; ++s) {
    const auto& block = dataset.block(s);
    const auto& design = designs[s];
    const auto n = static_cast<double>(block.size());
    try {
      const LinearFit treat = fit_linear(design.treatment, block.A, ridge);
      const LinearFit outc = fit_linear(design.outcome, block.Y, ridge);
      est.omegas.row(s) = treat.coefficients.transpose();
      est.gammas.row(s) = outc.coefficients.transpose();
      est.diagnostics[s].treatment = {treat.rss / (n - static_cast<double>(design.treatment.cols())), treat.condition};
      est.diagnostics[s].outcome = {outc.rss / (n - static_cast<double>(design.outcome.cols())), outc.condition};
    } catch (const RankDeficientError& e) {
      throw RankDeficientError("environment '" + block.env_id + "': " + e.what(), e.columns());
    }
  }
  return est;
}

MechanismEstimates fit_mechanisms(const MultiEnvDataset& dataset, const FeatureSpec& psi_spec,
                                  const FeatureSpec& phi_spec, double ridge) {
  const auto designs = build_designs(dataset, psi_spec, phi_spec);
  return fit_mechanisms(dataset, designs, ridge);
}

}  // namespace mint
