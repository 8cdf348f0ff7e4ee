#include "mint/dgp.hpp"

#include "mint/error.hpp"
#include "mint/features.hpp"

#include <array>
#include <cmath>
#include <utility>

namespace mint {

ObservableParams lemma1_closed_form(const OracleParams& p) {
  if (p.alphaU == 0.0)
    throw ValidationError("closed form requires alphaU != 0; use special_case_closed_form(alphaU_zero)");
  if (!(p.sigmaU > 0.0 && p.sigmaA > 0.0)) throw ValidationError("sigmaU and sigmaA must be positive");

  const double su2 = p.sigmaU * p.sigmaU;
  const double ratio = (p.sigmaA / p.alphaU) * (p.sigmaA / p.alphaU);
  const double delta = 1.0 / (su2 + ratio);
  const double shift = p.alpha0 * su2 / p.alphaU - p.muU * ratio;
  const double slope_x = p.alphaX * su2 / p.alphaU;
  const double slope_a = su2 / p.alphaU;

  ObservableParams out;
  out.omega << p.alpha0 + p.alphaU * p.muU, p.alphaX;
  Eigen::Matrix<double, 5, 1> confounding;
  confounding << -p.betaU * shift, -p.betaU * slope_x, p.betaU * slope_a - p.betaAU * shift, -p.betaAU * slope_x,
      p.betaAU * slope_a;
  out.gamma << p.beta, 0.0;
  out.gamma += delta * confounding;
  return out;
}

ObservableParams special_case_closed_form(const OracleParams& p, SpecialCase which) {
  ObservableParams out;
  switch (which) {
    case SpecialCase::alphaU_zero:
      if (p.alphaU != 0.0) throw ValidationError("alphaU_zero branch requires alphaU == 0");
      out.omega << p.alpha0, p.alphaX;
      out.gamma << p.beta(0) + p.betaU * p.muU, p.beta(1), p.beta(2) + p.betaAU * p.muU, p.beta(3), 0.0;
      return out;
    case SpecialCase::betaU_betaAU_zero:
      if (p.betaU != 0.0 || p.betaAU != 0.0)
        throw ValidationError("betaU_betaAU_zero branch requires betaU == betaAU == 0");
      out.omega << p.alpha0 + p.alphaU * p.muU, p.alphaX;
      out.gamma << p.beta, 0.0;
      return out;
  }
  throw ValidationError("unknown special case");
}

namespace {

constexpr std::array<std::pair<LinearParam, std::string_view>, 13> kLinearParamNames{{
    {LinearParam::alpha0, "alpha0"},
    {LinearParam::alphaX, "alphaX"},
    {LinearParam::alphaU, "alphaU"},
    {LinearParam::beta0, "beta0"},
    {LinearParam::betaX, "betaX"},
    {LinearParam::betaA, "betaA"},
    {LinearParam::betaAX, "betaAX"},
    {LinearParam::betaU, "betaU"},
    {LinearParam::betaAU, "betaAU"},
    {LinearParam::muX, "muX"},
    {LinearParam::muU, "muU"},
    {LinearParam::sigmaX, "sigmaX"},
    {LinearParam::sigmaU, "sigmaU"},
}};

struct LinearEnvParams {
  double alpha0, alphaX, alphaU, beta0, betaX, betaA, betaAX, betaU, betaAU, muX, muU, sigmaX, sigmaU;

  double& operator[](LinearParam p) {
    switch (p) {
      case LinearParam::alpha0: return alpha0;
      case LinearParam::alphaX: return alphaX;
      case LinearParam::alphaU: return alphaU;
      case LinearParam::beta0: return beta0;
      case LinearParam::betaX: return betaX;
      case LinearParam::betaA: return betaA;
      case LinearParam::betaAX: return betaAX;
      case LinearParam::betaU: return betaU;
      case LinearParam::betaAU: return betaAU;
      case LinearParam::muX: return muX;
      case LinearParam::muU: return muU;
      case LinearParam::sigmaX: return sigmaX;
      case LinearParam::sigmaU: return sigmaU;
    }
    throw ValidationError("unknown linear-example parameter");
  }
};

std::string env_label(int s) { return "env" + std::to_string(s + 1); }

}  // namespace

std::string_view to_string(LinearParam p) {
  for (const auto& [param, name] : kLinearParamNames)
    if (param == p) return name;
  return "unknown";
}

LinearParam parse_linear_param(std::string_view name) {
  for (const auto& [param, n] : kLinearParamNames)
    if (n == name) return param;
  throw ValidationError("unknown linear-example parameter '" + std::string(name) + "'");
}

LinearExampleConfig LinearExampleConfig::confounded() {
  LinearExampleConfig c;
  c.alphaU = c.betaU = c.betaAU = 0.25;
  return c;
}

void validate(const LinearExampleConfig& c) {
  if (c.K < 2) throw ValidationError("linear example needs K >= 2");
  if (c.N < 1) throw ValidationError("linear example needs N >= 1");
  if (!(c.sigmaX > 0.0 && c.sigmaU > 0.0)) throw ValidationError("covariate standard deviations must be positive");
  if (!(c.noise_var_A > 0.0 && c.noise_var_Y > 0.0)) throw ValidationError("noise variances must be positive");
  if (!(c.varying_low <= c.varying_high)) throw ValidationError("varying range is empty");
  if ((c.varying.contains(LinearParam::sigmaX) || c.varying.contains(LinearParam::sigmaU)) && !(c.varying_low > 0.0))
    throw ValidationError("varying a standard deviation needs a positive range");
}

GeneratedData generate_linear_example(const LinearExampleConfig& c, Rng& rng) {
  validate(c);
  const LinearEnvParams base{c.alpha0, c.alphaX, c.alphaU, c.beta0, c.betaX, c.betaA, c.betaAX,
                             c.betaU,  c.betaAU, c.muX,    c.muU,   c.sigmaX, c.sigmaU};
  std::uniform_real_distribution<double> vary(c.varying_low, c.varying_high);
  std::normal_distribution<double> std_normal(0.0, 1.0);
  const double sd_a = std::sqrt(c.noise_var_A);
  const double sd_y = std::sqrt(c.noise_var_Y);

  GroundTruth truth;
  for (auto p : c.varying) truth.varied.emplace_back(to_string(p));
  std::vector<EnvironmentBlock> blocks;
  blocks.reserve(static_cast<std::size_t>(c.K));
  for (int s = 0; s < c.K; ++s) {
    LinearEnvParams e = base;
    for (auto p : c.varying) e[p] = vary(rng);

    EnvironmentBlock b{env_label(s), Eigen::MatrixXd(c.N, 1), Eigen::VectorXd(c.N), Eigen::VectorXd(c.N)};
    for (int i = 0; i < c.N; ++i) {
      const double x = e.muX + e.sigmaX * std_normal(rng);
      const double u = e.muU + e.sigmaU * std_normal(rng);
      const double a = e.alpha0 + e.alphaX * x + e.alphaU * u + sd_a * std_normal(rng);
      const double y = e.beta0 + e.betaX * x + e.betaA * a + e.betaAX * a * x + (e.betaU + a * e.betaAU) * u +
                       sd_y * std_normal(rng);
      b.X(i, 0) = x;
      b.A(i) = a;
      b.Y(i) = y;
    }
    blocks.push_back(std::move(b));

    OracleParams op;
    op.alpha0 = e.alpha0;
    op.alphaX = e.alphaX;
    op.alphaU = e.alphaU;
    op.muU = e.muU;
    op.sigmaU = e.sigmaU;
    op.sigmaA = sd_a;
    op.sigmaY = sd_y;
    op.beta << e.beta0, e.betaX, e.betaA, e.betaAX;
    op.betaU = e.betaU;
    op.betaAU = e.betaAU;
    if (e.alphaU != 0.0 && (e.betaU != 0.0 || e.betaAU != 0.0)) truth.confounded = true;
    truth.environment_params.push_back(op);
  }
  return {MultiEnvDataset(std::move(blocks)), std::move(truth)};
}

void validate(const PolynomialConfig& c) {
  if (c.K < 2) throw ValidationError("polynomial generator needs K >= 2");
  if (c.N < 1) throw ValidationError("polynomial generator needs N >= 1");
  if (c.d < 1) throw ValidationError("polynomial generator needs d >= 1");
  if (c.degree < 1) throw ValidationError("polynomial generator needs degree >= 1");
  if (!(c.noise_std > 0.0 && c.confounder_variance > 0.0 && c.env_mean_variance >= 0.0))
    throw ValidationError("polynomial generator variances must be positive");
}

Eigen::VectorXd draw_fixed_alpha_slopes(Eigen::Index d, int degree, Rng& rng) {
  std::bernoulli_distribution coin(0.5);
  Eigen::VectorXd slopes(d * degree);
  for (auto& v : slopes) v = coin(rng) ? 1.0 : -1.0;
  return slopes;
}

TreatmentOutcome polynomial_treatment_outcome(const Eigen::Ref<const Eigen::MatrixXd>& X,
                                              const Eigen::Ref<const Eigen::VectorXd>& alpha_slopes,
                                              const PolynomialMechanism& mechanism, const Eigen::VectorXd* confounder,
                                              Rng& rng) {
  std::normal_distribution<double> std_normal(0.0, 1.0);
  const double alpha_intercept = std_normal(rng);
  const double beta_intercept = mechanism.resample_beta_intercept ? std_normal(rng) : 1.0;

  // Slopes only; the intercept is added separately.
  FeatureSpec powers = FeatureSpec::treatment(mechanism.degree);
  powers.include_intercept = false;
  const Eigen::MatrixXd psi = build_treatment_features(X, powers);
  const Eigen::Index n = X.rows();

  TreatmentOutcome out{Eigen::VectorXd(n), Eigen::VectorXd(n)};
  out.A = (psi * alpha_slopes).array() + alpha_intercept;
  if (confounder) out.A += *confounder;
  for (Eigen::Index i = 0; i < n; ++i) out.A(i) += mechanism.noise_std * std_normal(rng);

  // beta = 1 on every covariate power and on A.
  out.Y = psi.rowwise().sum().array() + beta_intercept;
  out.Y += out.A;
  if (confounder) out.Y += *confounder;
  for (Eigen::Index i = 0; i < n; ++i) out.Y(i) += mechanism.noise_std * std_normal(rng);
  return out;
}

GeneratedData generate_polynomial(const PolynomialConfig& c, Rng& rng) {
  validate(c);
  std::normal_distribution<double> std_normal(0.0, 1.0);
  Eigen::MatrixXd cov = Eigen::MatrixXd::Constant(c.d, c.d, c.covariate_off_diagonal);
  cov.diagonal().setConstant(c.covariate_diagonal);
  cov /= std::sqrt(static_cast<double>(c.d));
  const Eigen::LLT<Eigen::MatrixXd> chol(cov);
  if (chol.info() != Eigen::Success) throw ValidationError("covariate covariance is not positive definite");
  const Eigen::MatrixXd L = chol.matrixL();
  const double mean_sd = std::sqrt(c.env_mean_variance);
  const double confounder_sd = std::sqrt(c.confounder_variance);

  const Eigen::VectorXd slopes = draw_fixed_alpha_slopes(c.d, c.degree, rng);
  const PolynomialMechanism mechanism{c.degree, c.resample_beta_intercept, c.noise_std};

  GroundTruth truth;
  truth.confounded = c.confounded;
  truth.unmeasured_confounders = c.confounded ? 1 : 0;
  truth.varied.emplace_back("alpha0");
  if (c.resample_beta_intercept) truth.varied.emplace_back("beta0");

  std::vector<EnvironmentBlock> blocks;
  blocks.reserve(static_cast<std::size_t>(c.K));
  for (int s = 0; s < c.K; ++s) {
    Eigen::VectorXd mu(c.d);
    for (auto& v : mu) v = mean_sd * std_normal(rng);
    Eigen::MatrixXd Z(c.N, c.d);
    for (auto& v : Z.reshaped()) v = std_normal(rng);
    Eigen::MatrixXd X = (Z * L.transpose()).rowwise() + mu.transpose();

    std::optional<Eigen::VectorXd> u;
    if (c.confounded) {
      const double mu_u = std_normal(rng);
      u.emplace(c.N);
      for (auto& v : *u) v = mu_u + confounder_sd * std_normal(rng);
    }
    auto ay = polynomial_treatment_outcome(X, slopes, mechanism, u ? &*u : nullptr, rng);
    blocks.push_back({env_label(s), std::move(X), std::move(ay.A), std::move(ay.Y)});
  }
  return {MultiEnvDataset(std::move(blocks)), std::move(truth)};
}

}  // namespace mint
