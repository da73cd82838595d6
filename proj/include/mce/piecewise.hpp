#pragma once

#include <functional>
#include <span>
#include <vector>

namespace mce {

/// Right-continuous piecewise-constant function of time.
///
/// `values[i]` holds on [times[i], times[i+1]); the last value extends to
/// +infinity and the first value also covers t < times[0]. An empty `times`
/// with a single value is a constant.
class PiecewiseConstant {
 public:
  PiecewiseConstant() : values_{0.0} {}
  PiecewiseConstant(double constant) : values_{constant} {}  // NOLINT(implicit)
  PiecewiseConstant(std::vector<double> times, std::vector<double> values);

  double operator()(double t) const;

  /// Exact integral over [a, b], a <= b.
  double integral(double a, double b) const;

  std::span<const double> breakpoints() const { return times_; }
  std::span<const double> values() const { return values_; }

  double min_value() const;
  bool is_constant() const { return values_.size() == 1; }

 private:
  std::vector<double> times_;   // breakpoints where the value switches, size values_.size()-1
  std::vector<double> values_;
};

/// Sorted, de-duplicated union of breakpoints from several functions,
/// restricted to the open interval (a, b), with a and b added at the ends.
std::vector<double> merged_cuts(double a, double b,
                                std::initializer_list<std::span<const double>> breakpoints);

/// Integrates an integrand that is constant between the given cuts by
/// midpoint evaluation on each piece. Exact for piecewise-constant inputs.
double integrate_pieces(std::span<const double> cuts, const std::function<double(double)>& f);

}  // namespace mce
