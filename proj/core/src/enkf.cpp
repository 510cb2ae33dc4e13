#include "floodchain/enkf.hpp"

#include <cmath>
#include <random>

#include <spdlog/spdlog.h>

#include "floodchain/error.hpp"

namespace floodchain::enkf {

Eigen::MatrixXd sample_cross_covariance(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.cols() != b.cols() || a.cols() < 2) throw DomainError("covariance: need matching ensembles of size >= 2");
  const Eigen::MatrixXd da = a.colwise() - a.rowwise().mean();
  const Eigen::MatrixXd db = b.colwise() - b.rowwise().mean();
  return da * db.transpose() / static_cast<double>(a.cols() - 1);
}

AnalysisResult stochastic_analysis(const Eigen::MatrixXd& forecast, const Eigen::MatrixXd& predicted,
                                   const Eigen::VectorXd& observations, const Eigen::VectorXd& obs_std,
                                   std::uint64_t seed, const Eigen::MatrixXd* localization) {
  const auto m = forecast.cols();
  const auto p = observations.size();
  if (m < 2) throw DomainError("enkf: at least two members are required");
  if (p == 0) throw DomainError("enkf: no observations");
  if (predicted.cols() != m || predicted.rows() != p || obs_std.size() != p)
    throw DomainError("enkf: inconsistent dimensions");
  for (Eigen::Index k = 0; k < p; ++k)
    if (!(obs_std[k] > 0.0)) throw DomainError("enkf: observation error std must be positive");

  if (localization && (localization->rows() != forecast.rows() || localization->cols() != p))
    throw DomainError("enkf: localization must be n x p");

  Eigen::MatrixXd pxy = sample_cross_covariance(forecast, predicted);
  if (localization) pxy = pxy.cwiseProduct(*localization);
  Eigen::MatrixXd s = sample_cross_covariance(predicted, predicted);
  s.diagonal() += obs_std.array().square().matrix();

  AnalysisResult result;
  Eigen::LLT<Eigen::MatrixXd> llt(s);
  if (llt.info() != Eigen::Success) {
    const double scale = std::max(s.diagonal().cwiseAbs().maxCoeff(), 1e-300);
    double jitter = 1e-12 * scale;
    while (true) {
      Eigen::MatrixXd regularized = s;
      regularized.diagonal().array() += jitter;
      llt.compute(regularized);
      if (llt.info() == Eigen::Success) break;
      jitter *= 10.0;
      if (jitter > scale) throw DomainError("enkf: innovation covariance cannot be regularized");
    }
    spdlog::warn("enkf: innovation covariance not positive definite; added diagonal jitter {:.3g}", jitter);
    result.jitter = jitter;
  }
  // K = P_xy S^-1  <=>  K^T = S^-1 P_yx
  result.gain = llt.solve(pxy.transpose()).transpose();

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd innovations(p, m);
  for (Eigen::Index j = 0; j < m; ++j)
    for (Eigen::Index k = 0; k < p; ++k)
      innovations(k, j) = observations[k] + obs_std[k] * normal(rng) - predicted(k, j);

  result.analysis = forecast + result.gain * innovations;
  result.mean_innovation = innovations.rowwise().mean();
  result.mean_increment = result.analysis.rowwise().mean() - forecast.rowwise().mean();
  return result;
}

}  // namespace floodchain::enkf
