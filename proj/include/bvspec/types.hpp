#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace bvspec {

using Complex = std::complex<double>;
using Vec2 = Eigen::Vector2cd;
using Mat2 = Eigen::Matrix2cd;
using MatrixXc = Eigen::MatrixXcd;
using VectorXc = Eigen::VectorXcd;

inline constexpr Complex kI{0.0, 1.0};

/// Base error for all domain failures; `code()` is a stable machine-readable tag.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}
  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

struct DimensionError : Error {
  explicit DimensionError(const std::string& m) : Error("dimension", m) {}
};
struct ValidationError : Error {
  explicit ValidationError(const std::string& m) : Error("validation", m) {}
};
struct TrustRegionError : Error {
  explicit TrustRegionError(const std::string& m) : Error("trust_region", m) {}
};
struct StiffnessError : Error {
  explicit StiffnessError(const std::string& m) : Error("stiffness_overflow", m) {}
};
struct NotInResolventSet : Error {
  explicit NotInResolventSet(const std::string& m) : Error("not_in_resolvent_set", m) {}
};
struct BoundaryTooClose : Error {
  explicit BoundaryTooClose(const std::string& m) : Error("boundary_too_close", m) {}
};
struct RepresentationUnavailable : Error {
  explicit RepresentationUnavailable(const std::string& m)
      : Error("representation_unavailable", m) {}
};
struct IdenticalOperators : Error {
  explicit IdenticalOperators(const std::string& m) : Error("identical_operators", m) {}
};

inline bool is_finite(Complex z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

/// Hadamard bound of a square matrix (product of row norms); natural scale for |det|.
inline double hadamard_scale(const MatrixXc& m) {
  double s = 1.0;
  for (Eigen::Index r = 0; r < m.rows(); ++r) s *= m.row(r).norm();
  return s;
}

}  // namespace bvspec
