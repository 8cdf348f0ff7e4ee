#include "mint/dataset.hpp"

#include "mint/error.hpp"

#include <set>

namespace mint {

namespace {

void require_finite(const Eigen::Ref<const Eigen::MatrixXd>& m, const std::string& what,
                    const std::string& env) {
  if (!m.allFinite())
    throw ValidationError("environment '" + env + "': " + what + " contains non-finite values");
}

}  // namespace

MultiEnvDataset::MultiEnvDataset(std::vector<EnvironmentBlock> blocks) : blocks_(std::move(blocks)) {
  if (blocks_.size() < 2)
    throw ValidationError("a multi-environment dataset needs at least 2 environments, got " +
                          std::to_string(blocks_.size()));
  dim_ = blocks_.front().X.cols();
  std::set<std::string> ids;
  for (const auto& b : blocks_) {
    if (!ids.insert(b.env_id).second)
      throw ValidationError("duplicate environment id '" + b.env_id + "'");
    if (b.X.rows() < 1)
      throw ValidationError("environment '" + b.env_id + "' has no observations");
    if (b.X.cols() != dim_)
      throw ValidationError("environment '" + b.env_id + "' has " + std::to_string(b.X.cols()) +
                            " covariates, expected " + std::to_string(dim_));
    if (b.A.size() != b.X.rows() || b.Y.size() != b.X.rows())
      throw ValidationError("environment '" + b.env_id + "': X, A and Y row counts differ");
    require_finite(b.X, "X", b.env_id);
    require_finite(b.A, "A", b.env_id);
    require_finite(b.Y, "Y", b.env_id);
  }
}

Eigen::Index MultiEnvDataset::min_size() const noexcept {
  Eigen::Index n = blocks_.front().size();
  for (const auto& b : blocks_) n = std::min(n, b.size());
  return n;
}

Eigen::Index MultiEnvDataset::total_size() const noexcept {
  Eigen::Index n = 0;
  for (const auto& b : blocks_) n += b.size();
  return n;
}

bool MultiEnvDataset::equal_sizes() const noexcept {
  for (const auto& b : blocks_)
    if (b.size() != blocks_.front().size()) return false;
  return true;
}

CovariateDataset::CovariateDataset(std::vector<CovariateBlock> blocks, std::vector<std::string> column_names)
    : blocks_(std::move(blocks)), names_(std::move(column_names)) {
  if (blocks_.size() < 2)
    throw ValidationError("a covariate table needs at least 2 environments, got " +
                          std::to_string(blocks_.size()));
  std::set<std::string> ids;
  for (const auto& b : blocks_) {
    if (!ids.insert(b.env_id).second)
      throw ValidationError("duplicate environment id '" + b.env_id + "'");
    if (b.X.rows() < 1)
      throw ValidationError("environment '" + b.env_id + "' has no observations");
    if (b.X.cols() != covariate_dim())
      throw ValidationError("environment '" + b.env_id + "' has the wrong number of covariates");
    require_finite(b.X, "X", b.env_id);
  }
}

}  // namespace mint
