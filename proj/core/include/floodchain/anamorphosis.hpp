#pragma once

// Empirical Gaussian anamorphosis (normal-score transform).
//
// Sorted samples x_(1) <= ... <= x_(m) are paired with the standard normal
// quantiles of the plotting positions (i - 0.5) / m. Tied sample values share
// one knot at the mean of their scores. The forward map interpolates linearly
// between knots and extrapolates with the end-segment slopes, clamped to
// +-score_bound.

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace floodchain::anamorphosis {

struct AnamorphosisOptions {
  double score_bound = 4.0;
  bool unit_interval = false;  // WSR map: inverse output clipped to [0, 1]
};

class AnamorphosisMap {
 public:
  // Requires at least two finite samples (DomainError otherwise). Fewer than
  // two distinct values yields a degenerate map that behaves as the identity.
  static AnamorphosisMap fit(std::span<const double> samples, const AnamorphosisOptions& options = {});

  double forward(double value) const;
  double inverse(double score) const;

  bool degenerate() const noexcept { return values_.size() < 2; }
  std::size_t sample_count() const noexcept { return sample_count_; }
  const std::vector<double>& knot_values() const noexcept { return values_; }
  const std::vector<double>& knot_scores() const noexcept { return scores_; }
  const AnamorphosisOptions& options() const noexcept { return options_; }

 private:
  AnamorphosisMap() = default;

  std::vector<double> values_;  // strictly increasing
  std::vector<double> scores_;  // strictly increasing
  std::size_t sample_count_ = 0;
  AnamorphosisOptions options_;
};

// Standard normal quantile.
double normal_quantile(double p);

// Diagnostic dump: "label,knot,value,score".
void write_knots(std::ostream& out, const AnamorphosisMap& map, const std::string& label);

}  // namespace floodchain::anamorphosis
