#ifndef EEQUAKE_COMMON_HPP
#define EEQUAKE_COMMON_HPP

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>

namespace eequake {

using Index = Eigen::Index;

template <typename Scalar>
using VectorX = Eigen::Vector<Scalar, Eigen::Dynamic>;

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Base error for all contract violations in the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Pipeline-stage failure; carries the name of the stage that raised it.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& msg)
      : Error("[" + stage + "] " + msg), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

/// Mean absolute percentage error, in percent. Actual values must be nonzero.
template <typename DerivedA, typename DerivedP>
typename DerivedA::Scalar mape(const Eigen::MatrixBase<DerivedA>& actual,
                               const Eigen::MatrixBase<DerivedP>& predicted) {
  using Scalar = typename DerivedA::Scalar;
  if (actual.size() == 0 || actual.size() != predicted.size())
    throw Error("mape: vectors must be nonempty and of equal length");
  Scalar sum = 0;
  for (Index i = 0; i < actual.size(); ++i) {
    if (actual(i) == Scalar(0))
      throw Error("mape: zero actual value at index " + std::to_string(i));
    sum += std::abs((actual(i) - predicted(i)) / actual(i));
  }
  return Scalar(100) * sum / Scalar(actual.size());
}

}  // namespace eequake

#endif  // EEQUAKE_COMMON_HPP
