#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace mint {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad input: malformed data, violated preconditions, invalid configuration.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// The numerics could not produce a trustworthy answer.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// A least-squares design lost rank. `columns` lists the column indices the
/// pivoted factorization found to be linearly dependent on the others.
class RankDeficientError : public NumericalError {
 public:
  RankDeficientError(const std::string& what, std::vector<long> columns)
      : NumericalError(what), columns_(std::move(columns)) {}

  const std::vector<long>& columns() const noexcept { return columns_; }

 private:
  std::vector<long> columns_;
};

}  // namespace mint
