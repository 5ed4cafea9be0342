#pragma once

#include <Eigen/Core>
#include <stdexcept>
#include <string>

namespace regulus {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Shape or dimension mismatch between operands.
struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// An option or scalar parameter is out of its admissible range.
struct ParameterError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// A mathematical precondition (rank, null-space intersection, ...) failed.
/// The message carries the offending check.
struct PreconditionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// A truncation index fell on a numerically zero singular value.
struct RankDeficiencyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// The discrepancy equation D(x) = eta*delta has no root on the requested side.
struct DpInfeasibleError : std::runtime_error {
  enum class Side { lower, upper };
  Side side;
  DpInfeasibleError(Side s, const std::string& what)
      : std::runtime_error(what), side(s) {}
};

inline void check_shape(bool ok, const std::string& msg) {
  if (!ok) throw ShapeError(msg);
}

inline void check_param(bool ok, const std::string& msg) {
  if (!ok) throw ParameterError(msg);
}

template <typename Derived>
void require_finite(const Eigen::DenseBase<Derived>& m,
                    const std::string& name) {
  if (!m.allFinite())
    throw ParameterError(name + " contains a non-finite entry");
}

}  // namespace regulus
