#include "mce/piecewise.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mce/errors.hpp"

namespace mce {

PiecewiseConstant::PiecewiseConstant(std::vector<double> times, std::vector<double> values) {
  if (values.empty() || times.size() != values.size()) {
    throw Error(ErrorCode::InvariantViolation,
                "piecewise curve needs one value per pillar time");
  }
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (!(times[i] > times[i - 1])) {
      throw Error(ErrorCode::InvariantViolation, "piecewise curve times not increasing");
    }
  }
  for (double v : values) {
    if (!std::isfinite(v)) throw Error(ErrorCode::InvariantViolation, "non-finite curve value");
  }
  // Value i is in force from times[i]; the first value also covers earlier times,
  // so only times[1..] are switching points.
  times_.assign(times.begin() + 1, times.end());
  values_ = std::move(values);
}

double PiecewiseConstant::operator()(double t) const {
  auto it = std::upper_bound(times_.begin(), times_.end(), t);
  return values_[static_cast<std::size_t>(it - times_.begin())];
}

double PiecewiseConstant::integral(double a, double b) const {
  if (b < a) throw Error(ErrorCode::InvalidInterval, "integral bounds reversed");
  if (is_constant()) return values_[0] * (b - a);
  double total = 0.0;
  double left = a;
  auto it = std::upper_bound(times_.begin(), times_.end(), a);
  auto idx = static_cast<std::size_t>(it - times_.begin());
  while (left < b) {
    double right = idx < times_.size() ? std::min(times_[idx], b) : b;
    total += values_[idx] * (right - left);
    left = right;
    ++idx;
  }
  return total;
}

double PiecewiseConstant::min_value() const {
  return *std::min_element(values_.begin(), values_.end());
}

std::vector<double> merged_cuts(double a, double b,
                                std::initializer_list<std::span<const double>> breakpoints) {
  std::vector<double> cuts{a};
  for (auto span : breakpoints) {
    for (double t : span) {
      if (t > a && t < b) cuts.push_back(t);
    }
  }
  cuts.push_back(b);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  return cuts;
}

double integrate_pieces(std::span<const double> cuts, const std::function<double(double)>& f) {
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    double len = cuts[i + 1] - cuts[i];
    if (len > 0.0) total += f(0.5 * (cuts[i] + cuts[i + 1])) * len;
  }
  return total;
}

}  // namespace mce
