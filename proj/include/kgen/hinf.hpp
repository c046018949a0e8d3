#pragma once

// Discrete-time frequency responses and H∞ norms on the unit circle.

#include <cmath>
#include <complex>
#include <variant>

#include <Eigen/Dense>
#include "json.hpp"

namespace kgen {

inline constexpr int kDefaultGridPoints = 4096;
inline constexpr double kDefaultRefinementTol = 1e-10;
/// Minimum distance between e^{jω} and an eigenvalue for the resolvent to be evaluated.
inline constexpr double kPoleProximity = 1e-12;
/// Spectral radii in [1 - kIllConditionedBand, 1) yield finite but flagged reports.
inline constexpr double kIllConditionedBand = 1e-6;

/// Either the resolvent (zI - K)⁻¹ of a square K or a constant (frequency-independent) matrix.
class TransferFunction {
 public:
  struct Resolvent {
    Eigen::MatrixXd k;
  };
  struct Constant {
    Eigen::MatrixXd m;
  };

  static TransferFunction resolvent(Eigen::MatrixXd k);
  static TransferFunction constant(Eigen::MatrixXd m);

  bool is_resolvent() const { return std::holds_alternative<Resolvent>(kind_); }
  const Eigen::MatrixXd& matrix() const;

 private:
  explicit TransferFunction(std::variant<Resolvent, Constant> kind) : kind_(std::move(kind)) {}
  std::variant<Resolvent, Constant> kind_;
};

struct FrequencyResponse {
  Eigen::MatrixXcd value;
  double sigma_max = 0.0;
};

double spectral_radius(const Eigen::MatrixXd& k);

FrequencyResponse frequency_response(const TransferFunction& tf, double omega);

struct HinfReport {
  bool resolvent = true;
  double value = 0.0;  // +inf when the resolvent has a pole on or outside the unit circle
  double omega_star = 0.0;
  double spectral_radius = 0.0;
  int grid_points = 0;
  double refinement_tol = 0.0;
  bool converged = false;
  bool ill_conditioned = false;

  bool infinite() const { return !std::isfinite(value); }
};

/// Sweeps σ_max over a uniform grid on [0, π] (both ends included), then refines
/// each promising bracket by golden-section search until it is narrower than
/// refinement_tol. Brackets are seeded by the best grid local maxima and by the
/// angles of the eigenvalues of K, where resolvent peaks sit.
HinfReport hinf_norm(const TransferFunction& tf, int grid_points = kDefaultGridPoints,
                     double refinement_tol = kDefaultRefinementTol);

void to_json(nlohmann::json& j, const HinfReport& report);
void from_json(const nlohmann::json& j, HinfReport& report);

}  // namespace kgen
