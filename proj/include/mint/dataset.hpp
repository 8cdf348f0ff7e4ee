#pragma once

#include <Eigen/Dense>

#include <span>
#include <string>
#include <vector>

namespace mint {

/// Observations from one environment: covariates X (n_s x d), a continuous
/// treatment A and a continuous outcome Y (both length n_s).
struct EnvironmentBlock {
  std::string env_id;
  Eigen::MatrixXd X;
  Eigen::VectorXd A;
  Eigen::VectorXd Y;

  Eigen::Index size() const noexcept { return X.rows(); }
};

/// Immutable, validated collection of K >= 2 environment blocks sharing the
/// covariate dimension d. Construction throws ValidationError when any block
/// is ragged, empty, non-finite, or when env ids repeat.
class MultiEnvDataset {
 public:
  explicit MultiEnvDataset(std::vector<EnvironmentBlock> blocks);

  std::size_t num_environments() const noexcept { return blocks_.size(); }
  Eigen::Index covariate_dim() const noexcept { return dim_; }
  const EnvironmentBlock& block(std::size_t s) const { return blocks_.at(s); }
  std::span<const EnvironmentBlock> blocks() const noexcept { return blocks_; }

  Eigen::Index min_size() const noexcept;
  Eigen::Index total_size() const noexcept;
  bool equal_sizes() const noexcept;

 private:
  std::vector<EnvironmentBlock> blocks_;
  Eigen::Index dim_ = 0;
};

/// Covariates only, grouped by environment. Input to the semi-synthetic
/// pipeline, where treatment and outcome are generated afterwards.
struct CovariateBlock {
  std::string env_id;
  Eigen::MatrixXd X;
};

class CovariateDataset {
 public:
  CovariateDataset(std::vector<CovariateBlock> blocks, std::vector<std::string> column_names);

  std::size_t num_environments() const noexcept { return blocks_.size(); }
  Eigen::Index covariate_dim() const noexcept { return static_cast<Eigen::Index>(names_.size()); }
  std::span<const CovariateBlock> blocks() const noexcept { return blocks_; }
  const std::vector<std::string>& column_names() const noexcept { return names_; }

 private:
  std::vector<CovariateBlock> blocks_;
  std::vector<std::string> names_;
};

}  // namespace mint
