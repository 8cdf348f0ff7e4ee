#pragma once

#include "mint/dataset.hpp"
#include "mint/random.hpp"

#include <Eigen/Dense>

#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace mint {

/// Parameters of the linear confounded example
///   A = alpha0 + alphaX X + alphaU U + eps_A
///   Y = beta0 + betaX X + betaA A + betaAX A X + (betaU + A betaAU) U + eps_Y
/// with X ~ N(muX, sigmaX^2), U ~ N(muU, sigmaU^2) independent of X.
struct OracleParams {
  double alpha0 = 0.5;
  double alphaX = 1.0 / 3.0;
  double alphaU = 0.0;
  double muU = 1.0;
  double sigmaU = 1.0;
  double sigmaA = 0.0;  // noise standard deviation of A
  double sigmaY = 0.0;  // noise standard deviation of Y (does not enter the closed forms)
  Eigen::Vector4d beta = Eigen::Vector4d(0.5, 1.0 / 3.0, 0.5, 1.0 / 3.0);  // [beta0, betaX, betaA, betaAX]
  double betaU = 0.0;
  double betaAU = 0.0;
};

/// Population regression coefficients of the working models [1, X] (omega)
/// and [1, X, A, AX, A^2] (gamma).
struct ObservableParams {
  Eigen::Vector2d omega;
  Eigen::Matrix<double, 5, 1> gamma;
};

/// Observable parameters under a confounder with alphaU != 0.
ObservableParams lemma1_closed_form(const OracleParams& params);

enum class SpecialCase { alphaU_zero, betaU_betaAU_zero };

/// Observable parameters in the two unconfounded branches.
ObservableParams special_case_closed_form(const OracleParams& params, SpecialCase which);

/// Environment-varying parameters of the linear example.
enum class LinearParam { alpha0, alphaX, alphaU, beta0, betaX, betaA, betaAX, betaU, betaAU, muX, muU, sigmaX, sigmaU };

std::string_view to_string(LinearParam p);
LinearParam parse_linear_param(std::string_view name);

struct LinearExampleConfig {
  double alpha0 = 0.5, alphaX = 1.0 / 3.0;
  double beta0 = 0.5, betaX = 1.0 / 3.0, betaA = 0.5, betaAX = 1.0 / 3.0;
  double alphaU = 0.0, betaU = 0.0, betaAU = 0.0;
  double muX = 1.0, muU = 1.0;
  double sigmaX = 1.0, sigmaU = 1.0;
  double noise_var_A = 0.125, noise_var_Y = 0.125;
  std::set<LinearParam> varying;
  double varying_low = 0.1, varying_high = 3.0;
  int K = 250;
  int N = 1000;

  /// Defaults with alphaU = betaU = betaAU = 1/4.
  static LinearExampleConfig confounded();
};

void validate(const LinearExampleConfig& config);

struct PolynomialConfig {
  int K = 100;
  int N = 100;
  int d = 1;
  int degree = 1;
  bool confounded = false;
  /// Draws the outcome intercept from N(0, 1) per environment, which breaks
  /// transportability without introducing confounding.
  bool resample_beta_intercept = true;
  double covariate_diagonal = 2.0;
  double covariate_off_diagonal = 0.1;
  double env_mean_variance = 0.25;
  double noise_std = 0.5;
  double confounder_variance = 2.0;
};

void validate(const PolynomialConfig& config);

struct GroundTruth {
  bool confounded = false;
  std::vector<std::string> varied;
  /// Number of confounders hidden from the emitted covariates.
  int unmeasured_confounders = 0;
  /// Semi-synthetic only: source-table column indices used as confounders,
  /// and which of those are exposed as covariates.
  std::vector<int> confounder_columns;
  std::vector<int> observed_columns;
  /// Linear example only: the per-environment parameters actually used.
  std::vector<OracleParams> environment_params;
};

struct GeneratedData {
  MultiEnvDataset dataset;
  GroundTruth truth;
};

GeneratedData generate_linear_example(const LinearExampleConfig& config, Rng& rng);

GeneratedData generate_polynomial(const PolynomialConfig& config, Rng& rng);

/// Per-coordinate polynomial treatment/outcome mechanism shared by the
/// polynomial generator and the semi-synthetic pipeline. `confounder` holds
/// an optional additive per-row term added to both A and Y.
struct PolynomialMechanism {
  int degree = 1;
  bool resample_beta_intercept = true;
  double noise_std = 0.5;
};

struct TreatmentOutcome {
  Eigen::VectorXd A;
  Eigen::VectorXd Y;
};

/// Coefficients fixed across environments: slopes of alpha uniform on
/// {-1, 1}, all of beta equal to 1.
Eigen::VectorXd draw_fixed_alpha_slopes(Eigen::Index d, int degree, Rng& rng);

TreatmentOutcome polynomial_treatment_outcome(const Eigen::Ref<const Eigen::MatrixXd>& X,
                                              const Eigen::Ref<const Eigen::VectorXd>& alpha_slopes,
                                              const PolynomialMechanism& mechanism, const Eigen::VectorXd* confounder,
                                              Rng& rng);

}  // namespace mint
