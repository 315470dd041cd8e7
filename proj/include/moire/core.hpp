#pragma once

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <string>

namespace moire {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;
using Index2 = Eigen::Matrix<long, 2, 1>;
using Complex = std::complex<double>;
using Vec3c = Eigen::Vector3cd;

inline constexpr double pi = 3.14159265358979323846;

/// Rotation by phi (counterclockwise).
inline Mat2 rotation(double phi) {
  const double c = std::cos(phi), s = std::sin(phi);
  Mat2 r;
  r << c, -s, s, c;
  return r;
}

/// Spectral (operator 2-) norm of a 2x2 matrix.
inline double spectral_norm(const Mat2& m) {
  return m.jacobiSvd().singularValues()(0);
}

/// Embed an in-plane vector into R^3 with zero height.
inline Vec3 embed(const Vec2& v, double z = 0.0) { return Vec3(v.x(), v.y(), z); }

// Configuration errors map to CLI exit code 2, numerical errors to 3.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ParseError : ConfigError {
  using ConfigError::ConfigError;
};
struct ValidationError : ConfigError {
  using ConfigError::ConfigError;
};

struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct SingularBasis : NumericalError {
  using NumericalError::NumericalError;
};
struct DegenerateScale : NumericalError {
  using NumericalError::NumericalError;
};
struct DivergentTail : NumericalError {
  using NumericalError::NumericalError;
};
struct NotDiophantine : NumericalError {
  using NumericalError::NumericalError;
};
struct NoDecay : NumericalError {
  using NumericalError::NumericalError;
};
struct QuadratureNotConverged : NumericalError {
  using NumericalError::NumericalError;
};
struct LineSearchStalled : NumericalError {
  using NumericalError::NumericalError;
};

}  // namespace moire
