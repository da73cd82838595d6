#include "mce/credit_funding.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "mce/errors.hpp"
#include "mce/log.hpp"
#include "mce/text.hpp"

namespace mce {

void CreditSpec::validate() const {
  for (const auto* curve : {&lambda_CI, &lambda_IC, &lambda_P, &lambda_I}) {
    if (curve->min_value() < 0.0) throw Error(ErrorCode::InvariantViolation, "intensities must be >= 0");
  }
  for (double lgd : {lgd_C, lgd_I}) {
    if (!(lgd >= 0.0 && lgd <= 1.0)) throw Error(ErrorCode::InvariantViolation, "LGD must lie in [0, 1]");
  }
}

CreditRates credit_rates_at(const CreditSpec& credit, double t) {
  return {credit.lambda_CI(t), credit.lambda_IC(t), credit.lgd_C, credit.lgd_I};
}

void FundingSpec::validate(const CreditSpec& credit) const {
  auto cuts = merged_cuts(0.0, 1e9, {w_minus.breakpoints(), w_plus.breakpoints(), w_I.breakpoints(),
                                     credit.lambda_I.breakpoints()});
  for (double t : cuts) {
    if (w_plus(t) + w_I(t) * credit.lambda_I(t) < w_minus(t)) {
      throw Error(ErrorCode::InvariantViolation,
                  "funding rate below investing rate at t=" + text::format_roundtrip(t));
    }
  }
}

double funding_rate(const FundingSpec& spec, const CreditSpec& credit, double e_t, double t,
                    FundingDirection direction) {
  if (!(t >= 0.0)) throw Error(ErrorCode::OutOfDomain, "funding rate queried at negative time");
  double pool = spec.w_P(t) * credit.lambda_P(t);
  if (direction == FundingDirection::invest) return e_t + spec.w_minus(t) + pool;
  return e_t + spec.w_plus(t) + pool + spec.w_I(t) * credit.lambda_I(t);
}

void CollateralPolicy::validate() const {
  if (mode == CollateralMode::fraction) {
    for (double a : alpha.values()) {
      if (!(a >= 0.0 && a <= 1.0)) {
        throw Error(ErrorCode::AlphaOutOfRange, "fraction mode needs alpha in [0, 1]");
      }
    }
  }
  if (!(delta >= 0.0) || delta > max_delta) {
    throw Error(ErrorCode::OutOfDomain, "margin period of risk outside [0, " +
                                            text::format_roundtrip(max_delta * 365.0) + "] days");
  }
  if (!(quantile_q > 0.0 && quantile_q < 1.0)) {
    throw Error(ErrorCode::OutOfDomain, "quantile level must lie in (0, 1)");
  }
}

double empirical_quantile(std::span<const double> samples, double q) {
  if (samples.empty()) throw Error(ErrorCode::EmptySamples, "no samples");
  if (!(q > 0.0 && q < 1.0)) throw Error(ErrorCode::OutOfDomain, "quantile level must lie in (0, 1)");
  std::vector<double> sorted(samples.begin(), samples.end());
  // smallest m with m/n > q; the infimum sits at the m-th order statistic
  const auto n = sorted.size();
  auto idx = static_cast<std::size_t>(std::floor(q * static_cast<double>(n) + 1e-9));
  idx = std::min(idx, n - 1);
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<long>(idx), sorted.end());
  return sorted[idx];
}

VarHaircut haircut_var(std::span<const double> values_at_horizon, double value_now, double q) {
  if (values_at_horizon.empty()) throw Error(ErrorCode::EmptySamples, "no horizon values");
  if (value_now == 0.0) throw Error(ErrorCode::ZeroValue, "haircut needs a nonzero current value");
  if (!(q > 0.0 && q < 1.0)) throw Error(ErrorCode::OutOfDomain, "quantile level must lie in (0, 1)");
  std::vector<double> change(values_at_horizon.size()), neg_change(values_at_horizon.size());
  for (std::size_t i = 0; i < change.size(); ++i) {
    change[i] = values_at_horizon[i] - value_now;
    neg_change[i] = -change[i];
  }
  const double up = std::min(empirical_quantile(neg_change, q), 0.0);
  const double down = std::min(empirical_quantile(change, q), 0.0);
  VarHaircut out;
  if (-value_now < up) out.plus = -up / value_now;
  if (value_now < down) out.minus = down / value_now;
  return out;
}

PriceHaircut haircut_price(std::span<const double> discounted_values, double value_now) {
  if (discounted_values.empty()) throw Error(ErrorCode::EmptySamples, "no horizon values");
  if (value_now == 0.0) throw Error(ErrorCode::ZeroValue, "haircut needs a nonzero current value");
  double sum = 0.0;
  for (double v : discounted_values) sum += std::max(v / value_now - 1.0, 0.0);
  PriceHaircut out;
  out.upside = sum / static_cast<double>(discounted_values.size());
  out.varsigma = 1.0 + std::min(out.upside - 1.0, 0.0);
  if (out.upside >= 1.0) {
    out.at_boundary = true;
    log::warn("option-style haircut saturated at 1 (expected upside " + text::format_sig(out.upside, 6) + ")");
  }
  return out;
}

double collateral_fraction(const CollateralPolicy& policy, const CollateralContext& context) {
  switch (policy.mode) {
    case CollateralMode::none: return 0.0;
    case CollateralMode::perfect: return 1.0;
    case CollateralMode::fraction: return policy.alpha(context.t);
    case CollateralMode::ccp:
      if (policy.haircut_method == HaircutMethod::var) {
        return haircut_var(context.values_at_horizon, context.value_now, policy.quantile_q).alpha();
      }
      return haircut_price(context.discounted_at_horizon, context.value_now).alpha();
  }
  return 1.0;
}

}  // namespace mce
