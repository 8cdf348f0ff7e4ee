#pragma once

#include "mint/dataset.hpp"
#include "mint/features.hpp"
#include "mint/mint.hpp"

#include <Eigen/Dense>

#include <vector>

namespace mint {

struct PartialCorrelation {
  double r = 0.0;
  double p_value = 1.0;
};

/// Pearson correlation of x and y after residualizing both on [1, Z], with a
/// two-sided t-test on n - q - 2 degrees of freedom. Z may have zero columns.
PartialCorrelation partial_correlation(const Eigen::Ref<const Eigen::VectorXd>& x,
                                       const Eigen::Ref<const Eigen::VectorXd>& y,
                                       const Eigen::Ref<const Eigen::MatrixXd>& Z);

enum class Combiner { fisher, tippett };

struct PValueBundle {
  std::vector<double> values;
  Combiner method = Combiner::fisher;
};

/// chi2_survival(-2 sum log p_k, 2k).
double combine_fisher(const PValueBundle& bundle);

/// 1 - (1 - min_k p_k)^k.
double combine_tippett(const PValueBundle& bundle);

double combine(const PValueBundle& bundle);

enum class TransportabilityVariant { full_interaction, intercept_shift };

/// Nested-model F-test of Y independent of S given (X, A). The restricted
/// model regresses Y on the pooled outcome features. The full model either
/// gives every environment its own coefficient set (full_interaction) or adds
/// K - 1 environment indicators (intercept_shift).
TestResult transportability_test(const MultiEnvDataset& dataset, const FeatureSpec& phi_spec,
                                 TransportabilityVariant variant = TransportabilityVariant::full_interaction,
                                 double alpha = 0.05);

}  // namespace mint
