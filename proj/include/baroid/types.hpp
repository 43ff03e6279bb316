#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace baroid {

using Scalar = double;
using Index = Eigen::Index;

using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
using RowVec = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;
using Vec3 = Eigen::Matrix<Scalar, 3, 1>;
using Mat3 = Eigen::Matrix<Scalar, 3, 3>;
using Vec6 = Eigen::Matrix<Scalar, 6, 1>;
using Vec7 = Eigen::Matrix<Scalar, 7, 1>;

// Degeneracy threshold for stress / stretching norms.
inline constexpr Scalar kNormEps = 1e-12;

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NormTooSmall : Error {
  using Error::Error;
};

struct InvalidParams : Error {
  using Error::Error;
};

struct Diverged : Error {
  explicit Diverged(const std::string& msg, Index at_step = -1)
      : Error(msg), step(at_step) {}
  Index step;
};

struct DimensionMismatch : Error {
  using Error::Error;
};

struct ZeroTarget : Error {
  using Error::Error;
};

struct EmptyBatch : Error {
  using Error::Error;
};

struct NonFiniteLoss : Error {
  explicit NonFiniteLoss(const std::string& msg, Index at_epoch = -1)
      : Error(msg), epoch(at_epoch) {}
  Index epoch;
};

struct TooManyRejections : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

struct FormatError : Error {
  using Error::Error;
};

struct UsageError : Error {
  using Error::Error;
};

}  // namespace baroid
