#include "floodchain/anamorphosis.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

#include <boost/math/distributions/normal.hpp>

#include "floodchain/csv.hpp"
#include "floodchain/error.hpp"

namespace floodchain::anamorphosis {

double normal_quantile(double p) {
  static const boost::math::normal_distribution<double> standard;
  return boost::math::quantile(standard, p);
}

AnamorphosisMap AnamorphosisMap::fit(std::span<const double> samples, const AnamorphosisOptions& options) {
  if (samples.size() < 2) throw DomainError("anamorphosis: at least two samples are required");
  if (!(options.score_bound > 0.0)) throw DomainError("anamorphosis: score bound must be positive");
  std::vector<double> sorted(samples.begin(), samples.end());
  for (double v : sorted)
    if (!std::isfinite(v)) throw DomainError("anamorphosis: samples must be finite");
  std::sort(sorted.begin(), sorted.end());

  AnamorphosisMap map;
  map.options_ = options;
  map.sample_count_ = sorted.size();
  const double m = static_cast<double>(sorted.size());
  std::size_t k = 0;
  while (k < sorted.size()) {
    std::size_t end = k;
    double score_sum = 0.0;
    while (end < sorted.size() && sorted[end] == sorted[k]) {
      score_sum += normal_quantile((static_cast<double>(end) + 0.5) / m);
      ++end;
    }
    map.values_.push_back(sorted[k]);
    map.scores_.push_back(score_sum / static_cast<double>(end - k));
    k = end;
  }
  if (map.degenerate()) {
    map.values_.resize(1);
    map.scores_.assign(1, 0.0);
  }
  return map;
}

double AnamorphosisMap::forward(double value) const {
  if (degenerate()) return value;
  const auto& x = values_;
  const auto& s = scores_;
  const std::size_t n = x.size();
  double score;
  if (value <= x.front()) {
    const double slope = (s[1] - s[0]) / (x[1] - x[0]);
    score = s[0] + slope * (value - x[0]);
  } else if (value >= x.back()) {
    const double slope = (s[n - 1] - s[n - 2]) / (x[n - 1] - x[n - 2]);
    score = s[n - 1] + slope * (value - x[n - 1]);
  } else {
    const auto k = static_cast<std::size_t>(std::upper_bound(x.begin(), x.end(), value) - x.begin());
    const double w = (value - x[k - 1]) / (x[k] - x[k - 1]);
    score = s[k - 1] + w * (s[k] - s[k - 1]);
  }
  return std::clamp(score, -options_.score_bound, options_.score_bound);
}

double AnamorphosisMap::inverse(double score) const {
  double value;
  if (degenerate()) {
    value = score;
  } else {
    const auto& x = values_;
    const auto& s = scores_;
    const std::size_t n = x.size();
    if (score <= s.front()) {
      const double slope = (x[1] - x[0]) / (s[1] - s[0]);
      value = x[0] + slope * (score - s[0]);
    } else if (score >= s.back()) {
      const double slope = (x[n - 1] - x[n - 2]) / (s[n - 1] - s[n - 2]);
      value = x[n - 1] + slope * (score - s[n - 1]);
    } else {
      const auto k = static_cast<std::size_t>(std::upper_bound(s.begin(), s.end(), score) - s.begin());
      const double w = (score - s[k - 1]) / (s[k] - s[k - 1]);
      value = x[k - 1] + w * (x[k] - x[k - 1]);
    }
  }
  if (options_.unit_interval) value = std::clamp(value, 0.0, 1.0);
  return value;
}

void write_knots(std::ostream& out, const AnamorphosisMap& map, const std::string& label) {
  for (std::size_t k = 0; k < map.knot_values().size(); ++k)
    csv::write_row(out, {label, std::to_string(k), csv::format(map.knot_values()[k]), csv::format(map.knot_scores()[k])});
}

}  // namespace floodchain::anamorphosis
