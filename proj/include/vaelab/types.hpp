#pragma once

#include <Eigen/Core>

#include <stdexcept>
#include <string>

namespace vaelab {

using Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

// Error taxonomy. The CLI maps these onto exit codes, so library code
// should throw the most specific type that applies:
//   DimensionError / ConfigError / std::out_of_range / std::domain_error -> usage (2)
//   FormatError / GenerationError                                        -> data  (3)
//   TrainingError                                                        -> numeric divergence (4)

struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct GenerationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TrainingError : std::runtime_error {
  TrainingError(const std::string& msg, int last_good_epoch_)
      : std::runtime_error(msg), last_good_epoch(last_good_epoch_) {}
  // Last epoch that completed with a finite loss; -1 if none did.
  int last_good_epoch = -1;
};

inline std::string shape_str(const Eigen::Ref<const Matrix>& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

inline void require_cols(const Eigen::Ref<const Matrix>& x, Index expected,
                         const std::string& what) {
  if (x.cols() != expected) {
    throw DimensionError(what + ": expected " + std::to_string(expected) +
                         " columns, got " + shape_str(x));
  }
}

}  // namespace vaelab
