#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace curtain {

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using Vector = VectorX<double>;
using Matrix = MatrixX<double>;

enum class ErrorCode {
  DegenerateSimplex,
  OffCenter,
  DegenerateCone,
  DimensionTooLarge,
  NotRegular,
  PointOutside,
  TrivialPartition,
  InvalidBarycentric,
  EmptyMeasure,
  InversionBudgetExceeded,
  NotPrimePower,
  UnsupportedVariant,
  DegenerateProjection,
  InvalidArgument,
  InvalidScene,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DegenerateSimplex: return "DegenerateSimplex";
    case ErrorCode::OffCenter: return "OffCenter";
    case ErrorCode::DegenerateCone: return "DegenerateCone";
    case ErrorCode::DimensionTooLarge: return "DimensionTooLarge";
    case ErrorCode::NotRegular: return "NotRegular";
    case ErrorCode::PointOutside: return "PointOutside";
    case ErrorCode::TrivialPartition: return "TrivialPartition";
    case ErrorCode::InvalidBarycentric: return "InvalidBarycentric";
    case ErrorCode::EmptyMeasure: return "EmptyMeasure";
    case ErrorCode::InversionBudgetExceeded: return "InversionBudgetExceeded";
    case ErrorCode::NotPrimePower: return "NotPrimePower";
    case ErrorCode::UnsupportedVariant: return "UnsupportedVariant";
    case ErrorCode::DegenerateProjection: return "DegenerateProjection";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvalidScene: return "InvalidScene";
  }
  return "Unknown";
}

// Counter-based generator: sample k of stream `seed` depends only on (seed, k),
// so sampled estimates are bit-reproducible regardless of evaluation order.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t counter = 0)
      : seed_(splitmix64(seed)), counter_(counter) {}

  std::uint64_t next_u64() { return splitmix64(seed_ ^ splitmix64(counter_++)); }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_;
};

}  // namespace curtain
