#pragma once

// Stochastic (perturbed-observation) ensemble Kalman filter analysis.
//
// For an ensemble X (n x m) with predicted observations Y = H(X) (p x m),
// observations y and diagonal error covariance R, every member j is updated as
//
//   x_a^j = x_f^j + K (y + e^j - y_f^j),   e^j ~ N(0, R),
//   K     = P_xy (P_yy + R)^-1,
//
// with P_xy, P_yy the unbiased sample covariances of the forecast ensemble.
// An optional n x p localization matrix multiplies P_xy element-wise.

#include <cstdint>

#include <Eigen/Dense>

namespace floodchain::enkf {

struct AnalysisResult {
  Eigen::MatrixXd analysis;         // n x m
  Eigen::MatrixXd gain;             // n x p
  Eigen::VectorXd mean_innovation;  // mean over members of (y + e^j - y_f^j)
  Eigen::VectorXd mean_increment;   // mean(x_a) - mean(x_f)
  double jitter = 0.0;              // diagonal regularization added to P_yy + R
};

// Throws DomainError on inconsistent dimensions (including the localization), fewer than two members,
// no observations, or non-positive error std.
AnalysisResult stochastic_analysis(const Eigen::MatrixXd& forecast, const Eigen::MatrixXd& predicted,
                                   const Eigen::VectorXd& observations, const Eigen::VectorXd& obs_std,
                                   std::uint64_t seed, const Eigen::MatrixXd* localization = nullptr);

// Unbiased sample covariance between the rows of a and the rows of b.
Eigen::MatrixXd sample_cross_covariance(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

}  // namespace floodchain::enkf
