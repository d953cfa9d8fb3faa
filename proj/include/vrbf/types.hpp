// Copyright 2026 The vrbf Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace vrbf {

using Vec2 = Eigen::Vector2d;
using Vec5 = Eigen::Matrix<double, 5, 1>;
using Mat2 = Eigen::Matrix2d;
using Mat25 = Eigen::Matrix<double, 2, 5, Eigen::RowMajor>;
using Mat52 = Eigen::Matrix<double, 5, 2, Eigen::RowMajor>;

enum class ErrorCode {
  kInvalidParams,
  kConfigurationInvalid,
  kDegenerateJacobian,
  kDomain,
  kDegeneratePair,
  kInvalidCovariance,
  kNoRealRoot,
  kDegenerateLinearization,
  kUndefinedNormal,
  kSolverStall,
  kStaleSnapshot,
  kInsideInflatedObstacle,
  kScenarioInfeasible,
  kScenarioParse,
  kSimulationDiverged,
  kProtocol,
  kIo,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidParams: return "invalid-params";
    case ErrorCode::kConfigurationInvalid: return "configuration-invalid";
    case ErrorCode::kDegenerateJacobian: return "degenerate-jacobian";
    case ErrorCode::kDomain: return "domain";
    case ErrorCode::kDegeneratePair: return "degenerate-pair";
    case ErrorCode::kInvalidCovariance: return "invalid-covariance";
    case ErrorCode::kNoRealRoot: return "no-real-root";
    case ErrorCode::kDegenerateLinearization: return "degenerate-linearization";
    case ErrorCode::kUndefinedNormal: return "undefined-normal";
    case ErrorCode::kSolverStall: return "solver-stall";
    case ErrorCode::kStaleSnapshot: return "stale-snapshot";
    case ErrorCode::kInsideInflatedObstacle: return "inside-inflated-obstacle";
    case ErrorCode::kScenarioInfeasible: return "scenario-infeasible";
    case ErrorCode::kScenarioParse: return "scenario-parse";
    case ErrorCode::kSimulationDiverged: return "simulation-diverged";
    case ErrorCode::kProtocol: return "protocol";
    case ErrorCode::kIo: return "io";
  }
  return "unknown";
}

/// Every failure raised by the library carries one of the codes above so
/// callers can branch on the kind of failure without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code),
        detail_(what) {}

  ErrorCode code() const noexcept { return code_; }
  /// Message without the code prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace vrbf
