#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mce/credit_funding.hpp"
#include "mce/curves.hpp"
#include "mce/hjm.hpp"

namespace mce {

enum class FlowKind { fixed, libor };

/// One coupon: fixed flows pay sign * notional * accrual * rate, LIBOR flows
/// pay sign * notional * accrual * L(T - x, T) with x = accrual.
struct CashFlow {
  double pay_time = 0.0;
  FlowKind kind = FlowKind::fixed;
  double accrual = 1.0;  // year fraction; the LIBOR tenor for libor flows
  double rate = 0.0;     // fixed flows only
  double notional = 1.0;
  double sign = 1.0;     // +1 received, -1 paid

  double reset_time() const { return kind == FlowKind::libor ? pay_time - accrual : pay_time; }
};

struct DealSchedule {
  std::vector<CashFlow> flows;

  double maturity() const;
  /// Pay times nondecreasing, LIBOR resets >= 0, finite amounts.
  void validate() const;

  static DealSchedule zero_coupon(double maturity, double amount = 1.0);
  /// One-period IRS receiving fixed K against LIBOR(T - x, T).
  static DealSchedule one_period_irs(double fixed_rate, double maturity, double tenor, double notional = 1.0);
  /// Fixed vs LIBOR swap, both legs paying every `tenor`. Receives fixed unless `pay_fixed`.
  static DealSchedule swap(double fixed_rate, double maturity, double tenor, double notional = 1.0,
                           bool pay_fixed = false);
  /// Fixed coupons every `period` plus notional at maturity.
  static DealSchedule fixed_bond(double coupon, double maturity, double period, double notional = 1.0);
};

/// Everything a pricer reads: t=0 curves, the model, and simulated paths.
struct Market {
  const CurveSet& curves;
  const VolatilitySpec& model;
  const PathEnsemble& paths;
};

struct Decomposition {
  double cva = 0.0;
  double dva = 0.0;
  double funding_cost = 0.0;
  double collateral_cost = 0.0;

  double total() const { return cva + dva + funding_cost + collateral_cost; }
};

struct AdjustedPrice {
  double clean_price = 0.0;     // OIS-collateralized value
  double adjusted_price = 0.0;  // value under the collateral/funding/credit policy
  Decomposition decomposition;  // sums to adjusted - clean
  double std_error = 0.0;       // Monte Carlo error of adjusted_price
  double alpha_at_inception = 1.0;
};

/// Amount paid at each grid date on each path, row-major [path][date].
/// Errors: GridTooCoarse, ScheduleBeyondCurve.
std::vector<double> coupon_amounts(const DealSchedule& deal, const Market& market);

/// Perfect collateral at the overnight rate: discounting at e.
AdjustedPrice price_perfect(const DealSchedule& deal, const Market& market);

/// zeta = (1 - a)(lCI LGD_C 1{V>0} + lIC LGD_I 1{V<0}) - a (f - c). Errors: AlphaOutOfRange.
double effective_rate_zeta(double alpha, int sign_value, const CreditRates& credit, double f_tilde,
                           double c_tilde);

/// Over-collateralization generalization with (1-a)+ and (1-a)- branches.
double effective_rate_xi(double alpha, int sign_value, const CreditRates& credit, double f_tilde,
                         double c_tilde);

enum class DefaultOrder { counterparty_first, investor_first };

/// Close-out cash flow with re-hypothecation:
/// eps - 1{C first} LGD_C (eps - C)+ - 1{I first} LGD_I (eps - C)-.
double on_default_cashflow(double close_out, double collateral, DefaultOrder who, const CreditSpec& credit);

/// Integrated spread buckets over one interval for a given sign of the deal value.
struct SpreadIntegrals {
  double cva = 0.0;
  double dva = 0.0;
  double funding = 0.0;     // (1 - a)(f - e)
  double collateral = 0.0;  // a (c - e)
  double total = 0.0;       // int (f - e + xi)
};

/// Collateral fraction as a function of time after resolving the policy;
/// the CCP mode computes its haircut once at inception from the paths.
PiecewiseConstant resolve_alpha(const CollateralPolicy& policy, const DealSchedule& deal,
                                const FundingSpec& funding, const CreditSpec& credit, const Market& market);

SpreadIntegrals spread_integrals(double t0, double t1, int sign_value, const PiecewiseConstant& alpha,
                                 const CollateralPolicy& policy, const FundingSpec& funding,
                                 const CreditSpec& credit);

/// Sign of the deal value per path and grid date, [path][date].
struct ExposureSigns {
  std::size_t num_dates = 0;
  std::vector<std::int8_t> signs;  // empty: `constant` everywhere
  int constant = 1;

  int at(std::size_t path, std::size_t date) const {
    return signs.empty() ? constant : signs[path * num_dates + date];
  }
  static ExposureSigns fixed(int sign) { return ExposureSigns{0, {}, sign}; }
};

/// Reduced (Feynman-Kac) price: coupons discounted pathwise at f + xi, with
/// the value sign at each grid date taken from a least-squares regression of
/// the continuation value on the Markov state.
AdjustedPrice price_reduced(const DealSchedule& deal, const CollateralPolicy& policy, const FundingSpec& funding,
                            const CreditSpec& credit, const Market& market);

/// The signs used by `price_reduced` for this deal.
ExposureSigns exposure_signs(const DealSchedule& deal, const CollateralPolicy& policy,
                             const FundingSpec& funding, const CreditSpec& credit, const Market& market);

struct OracleSettings {
  double damping = 0.5;
  double tolerance = 1e-10;
  int max_iterations = 200;
  std::size_t max_dates = 64;
};

struct OracleResult {
  double value = 0.0;
  double std_error = 0.0;
};

/// Verification pricer: solves the recursive pricing equation (explicit
/// collateral-funding term, close-out cash flow at default intensities) by
/// backward induction across grid dates and damped Picard iteration on
/// Chebyshev nodes within each interval. Paths are solved one by one, so on
/// stochastic paths it is exact only for deals whose value sign is fixed.
/// Errors: NoConvergence, OutOfDomain if the grid is too large.
OracleResult price_master_oracle(const DealSchedule& deal, const CollateralPolicy& policy,
                                 const FundingSpec& funding, const CreditSpec& credit, const Market& market,
                                 const OracleSettings& settings = {});

/// Per-path D(0, T; q) with q = f + xi - e under the given signs.
std::vector<double> dividend_discounts(double T, const CollateralPolicy& policy, const FundingSpec& funding,
                                       const CreditSpec& credit, const Market& market,
                                       const ExposureSigns& signs = ExposureSigns::fixed(1),
                                       const DealSchedule* deal_for_alpha = nullptr);

struct ConvexityEstimate {
  double gamma = 0.0;
  double std_error = 0.0;
  double forward = 0.0;            // F_0(T, x)
  double adjusted_forward = 0.0;   // F_0 (1 + gamma)
  double expected_discount = 0.0;  // E^T[D(0, T; q)]
};

/// Covariance of F_{T-x}(T, x) with D(0, T; q) under the T-forward measure,
/// estimated with self-normalized deflator weights on matched paths.
/// Errors: ZeroForward, GridTooCoarse.
ConvexityEstimate convexity_adjustment(double T, double x, std::span<const double> dividend_discount,
                                       const Market& market);

ConvexityEstimate convexity_adjustment(double T, double x, const CollateralPolicy& policy,
                                       const FundingSpec& funding, const CreditSpec& credit, const Market& market,
                                       const ExposureSigns& signs = ExposureSigns::fixed(1));

struct BondEstimate {
  double value = 0.0;
  double std_error = 0.0;
};

/// P(T) E^T[D(0, T; q)].
BondEstimate adjusted_bond(double T, std::span<const double> dividend_discount, const Market& market);
BondEstimate adjusted_bond(double T, const CollateralPolicy& policy, const FundingSpec& funding,
                           const CreditSpec& credit, const Market& market,
                           const ExposureSigns& signs = ExposureSigns::fixed(1));

/// x (K - Fbar) Pbar for a one-period IRS receiving K.
AdjustedPrice price_irs_partial(double K, double T, double x, const CollateralPolicy& policy,
                                const FundingSpec& funding, const CreditSpec& credit, const Market& market);

}  // namespace mce
