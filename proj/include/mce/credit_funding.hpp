#pragma once

#include <span>

#include "mce/piecewise.hpp"

namespace mce {

/// Deterministic default intensities (per annum) and losses given default.
struct CreditSpec {
  PiecewiseConstant lambda_CI;  // counterparty defaults first
  PiecewiseConstant lambda_IC;  // investor defaults first
  PiecewiseConstant lambda_P;   // collateral-pool average
  PiecewiseConstant lambda_I;   // investor
  double lgd_C = 0.6;
  double lgd_I = 0.6;

  /// Throws InvariantViolation for negative intensities or LGDs outside [0, 1].
  void validate() const;

  /// Total first-to-default intensity lambda^{C<I} + lambda^{I<C}.
  double lambda(double t) const { return lambda_CI(t) + lambda_IC(t); }
};

/// Point-in-time credit inputs of the effective discount rates.
struct CreditRates {
  double lambda_CI = 0.0;
  double lambda_IC = 0.0;
  double lgd_C = 0.0;
  double lgd_I = 0.0;
};

CreditRates credit_rates_at(const CreditSpec& credit, double t);

/// Weights of the affine funding/investing rate model.
struct FundingSpec {
  PiecewiseConstant w_minus;
  PiecewiseConstant w_plus;
  PiecewiseConstant w_P;
  PiecewiseConstant w_I;

  /// Rejects weights that make borrowing cheaper than investing at any time.
  void validate(const CreditSpec& credit) const;
};

enum class FundingDirection { borrow, invest };

/// f- = e + w- + wP lambdaP ; f+ = e + w+ + wP lambdaP + wI lambdaI.
/// Errors: OutOfDomain for t < 0.
double funding_rate(const FundingSpec& spec, const CreditSpec& credit, double e_t, double t,
                    FundingDirection direction);

enum class CollateralMode { none, perfect, fraction, ccp };
enum class HaircutMethod { var, price };

struct CollateralPolicy {
  CollateralMode mode = CollateralMode::perfect;
  PiecewiseConstant alpha{1.0};  // fraction mode only
  double c_plus_spread = 0.0;    // c+ - e
  double c_minus_spread = 0.0;   // c- - e
  double delta = 10.0 / 365.0;   // margin period of risk, years
  double max_delta = 20.0 / 365.0;
  double quantile_q = 0.01;
  HaircutMethod haircut_method = HaircutMethod::price;

  void validate() const;
};

struct VarHaircut {
  double plus = 0.0;
  double minus = 0.0;
  double alpha() const { return 1.0 + plus + minus; }
};

/// Q_X(q) = inf{x : q < P[X < x]} on the empirical distribution of `samples`.
double empirical_quantile(std::span<const double> samples, double q);

/// Quantile haircuts from simulated values of the deal at t + delta.
/// The quantiles are taken on the change V(t+delta) - V(t).
/// Errors: ZeroValue, EmptySamples, OutOfDomain for q outside (0, 1).
VarHaircut haircut_var(std::span<const double> values_at_horizon, double value_now, double q);

struct PriceHaircut {
  double varsigma = 0.0;
  double upside = 0.0;   // E[(V(t+delta) D / V(t) - 1)+]
  bool at_boundary = false;
  double alpha() const { return 1.0 + varsigma; }
};

/// Option-style haircut 1 + (E[(V D / V_t - 1)+] - 1)^- from discounted
/// horizon values V(t+delta) D(t, t+delta; f). Errors: ZeroValue, EmptySamples.
PriceHaircut haircut_price(std::span<const double> discounted_values, double value_now);

/// Inputs needed by the CCP mode; the other modes ignore them.
struct CollateralContext {
  double t = 0.0;
  double value_now = 0.0;
  std::span<const double> values_at_horizon;      // V(t + delta)
  std::span<const double> discounted_at_horizon;  // V(t + delta) D(t, t + delta; f)
};

double collateral_fraction(const CollateralPolicy& policy, const CollateralContext& context = {});

}  // namespace mce
