#pragma once

#include <Eigen/Core>

#include <stdexcept>
#include <string>
#include <vector>

namespace thermo {

using Index = Eigen::Index;
using Array = Eigen::ArrayXd;

// Whether a Fisher-information function describes a classical measurement
// distribution or the quantum (QFI) limit of a probe.
enum class ModelKind { Classical, Quantum };

enum class SpacingMode { UniformInTheta, UniformInLogTheta };

// The four precision bounds on the mean logarithmic error.
// COBB/QOBB: optimal-biased bounds (solve the bias BVP first).
// CCRLB/QCRLB: Cramer-Rao-like bounds (the b == 0 specialization).
enum class BoundKind { COBB, CCRLB, QOBB, QCRLB };

inline bool is_biased_kind(BoundKind k) {
  return k == BoundKind::COBB || k == BoundKind::QOBB;
}

inline ModelKind flavor_of(BoundKind k) {
  return (k == BoundKind::COBB || k == BoundKind::CCRLB) ? ModelKind::Classical
                                                         : ModelKind::Quantum;
}

inline const char* to_string(BoundKind k) {
  switch (k) {
    case BoundKind::COBB: return "COBB";
    case BoundKind::CCRLB: return "CCRLB";
    case BoundKind::QOBB: return "QOBB";
    case BoundKind::QCRLB: return "QCRLB";
  }
  return "?";
}

// Linear solve failed or produced non-finite values.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Grid refinement did not reach the requested tolerance; carries the
// sequence of computed values for diagnosis.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& msg, std::vector<double> seq)
      : std::runtime_error(msg), values(std::move(seq)) {}
  std::vector<double> values;
};

// Posterior vanished everywhere (all-underflow) or similar estimation failure.
class EstimationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid run configuration; carries the offending field paths.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg, std::vector<std::string> bad = {})
      : std::runtime_error(msg), fields(std::move(bad)) {}
  std::vector<std::string> fields;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace thermo
