#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace tadell {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Error taxonomy shared by all modules. Structural misuse (bad shapes,
// invalid parameters) throws; solvers that can return a best-effort
// iterate report convergence through result flags instead.
struct DimensionMismatch : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct NotPsd : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct SingularSystem : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ZeroColumn : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct BadRange : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct DivergedPolicy : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NonFinite : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw DimensionMismatch(msg);
}

inline bool all_finite(const Matrix& m) { return m.allFinite(); }
inline bool all_finite(const Vector& v) { return v.allFinite(); }

inline void require_finite(const Matrix& m, const std::string& what) {
  if (!m.allFinite()) throw NonFinite(what + " contains NaN/Inf");
}
inline void require_finite(const Vector& v, const std::string& what) {
  if (!v.allFinite()) throw NonFinite(what + " contains NaN/Inf");
}

}  // namespace tadell
