#pragma once

#include <Eigen/Dense>

#include <random>
#include <stdexcept>
#include <string>

namespace rotopt {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Rng = std::mt19937_64;

/// A computed quantity violated an internal consistency requirement,
/// e.g. the normalized force matrix came out non-symmetric.
class NumericalInconsistency : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The quadratic limit problem is unbounded below because the supplied
/// rotation is not optimal for the load.
class IllPosedLoad : public NumericalInconsistency {
 public:
  using NumericalInconsistency::NumericalInconsistency;
};

/// Nearest-point projection onto the optimal-rotation set was requested at a
/// cut-locus input where the minimizer is not unique.
class AmbiguousProjection : public NumericalInconsistency {
 public:
  using NumericalInconsistency::NumericalInconsistency;
};

/// Malformed configuration input; the message names the offending field.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require_dimension(int n) {
  if (n < 2 || n > 4) {
    throw std::invalid_argument("unsupported dimension " + std::to_string(n) +
                                " (supported: 2, 3, 4)");
  }
}

inline double square(double x) { return x * x; }

}  // namespace rotopt
