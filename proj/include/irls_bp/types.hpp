#pragma once

#include <Eigen/Core>

#include <stdexcept>
#include <string>

namespace irls {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using VectorXd = Vector<double>;
using MatrixXd = Matrix<double>;
using Index = Eigen::Index;

enum class ErrorCode {
  InvalidArgument,
  NotPositiveDefinite,
  RankDeficient,
  Breakdown,
  EmptyActiveSet,
  Unbounded,
  TooLarge,
  HypothesisUnmet,
  MissingGroundTruth,
  ResultNotLessThanN,
  InnerSolveFailed,
  Parse,
  Io,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::Breakdown: return "Breakdown";
    case ErrorCode::EmptyActiveSet: return "EmptyActiveSet";
    case ErrorCode::Unbounded: return "Unbounded";
    case ErrorCode::TooLarge: return "TooLarge";
    case ErrorCode::HypothesisUnmet: return "HypothesisUnmet";
    case ErrorCode::MissingGroundTruth: return "MissingGroundTruth";
    case ErrorCode::ResultNotLessThanN: return "ResultNotLessThanN";
    case ErrorCode::InnerSolveFailed: return "InnerSolveFailed";
    case ErrorCode::Parse: return "Parse";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

/// Library error; `code()` identifies the failure class.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace irls
