#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <vector>

#include "mce/pricing.hpp"
#include "test_util.hpp"

using namespace mce;
using mce::testing::code_of;

namespace {

constexpr double kRate = 0.02;
constexpr double kTenor = 0.5;

CurveSet flat_curves() {
  const double F = (std::exp(kRate * kTenor) - 1.0) / kTenor;
  ForwardCurve fwd(kTenor, {kTenor, 10.0}, {F, F}, 1.0 / kTenor);
  CurveSet c{DiscountCurve::flat(kRate, 10.0), {}};
  c.forwards.emplace(kTenor, fwd);
  return c;
}

std::vector<double> deal_grid(const DealSchedule& deal, std::vector<double> extra = {}) {
  std::vector<double> g{0.0};
  for (const auto& f : deal.flows) {
    g.push_back(f.pay_time);
    g.push_back(f.reset_time());
  }
  g.insert(g.end(), extra.begin(), extra.end());
  std::sort(g.begin(), g.end());
  g.erase(std::unique(g.begin(), g.end(), [](double a, double b) { return std::abs(a - b) < 1e-12; }), g.end());
  return g;
}

// Curves, model and paths kept alive together for a Market view.
struct Setup {
  CurveSet curves = flat_curves();
  VolatilitySpec model;
  PathEnsemble paths;
  Setup(VolatilitySpec spec, const std::vector<double>& grid, std::size_t n, std::uint64_t seed = 1)
      : model(std::move(spec)), paths(simulate(model, grid, n, seed)) {}
  Market market() const { return {curves, model, paths}; }
};

Setup deterministic(const DealSchedule& deal, std::vector<double> extra = {}) {
  return Setup(VolatilitySpec::zero_vol(1), deal_grid(deal, extra), 4);
}

Setup stochastic(const DealSchedule& deal, std::size_t n = 4000, std::uint64_t seed = 1) {
  return Setup(VolatilitySpec::one_factor(0.05, 0.01), deal_grid(deal), n, seed);
}

CollateralPolicy fraction(double a, double c_spread = 0.0) {
  CollateralPolicy p;
  p.mode = CollateralMode::fraction;
  p.alpha = a;
  p.c_plus_spread = c_spread;
  p.c_minus_spread = c_spread;
  return p;
}

CreditSpec credit(double lambda_ci = 0.02, double lgd_c = 0.6) {
  CreditSpec c;
  c.lambda_CI = lambda_ci;
  c.lambda_IC = 0.01;
  c.lgd_C = lgd_c;
  c.lgd_I = 0.6;
  return c;
}

FundingSpec funding(double w_plus = 0.001, double w_minus = 0.0) {
  FundingSpec f;
  f.w_plus = w_plus;
  f.w_minus = w_minus;
  return f;
}

}  // namespace

TEST_CASE("effective discount rates") {
  CreditRates c{0.02, 0.03, 0.6, 0.6};
  CHECK(effective_rate_zeta(0.5, 1, c, 0.021, 0.020) == doctest::Approx(0.0055).epsilon(1e-12));
  CHECK(effective_rate_zeta(1.0, 1, c, 0.025, 0.021) == doctest::Approx(-0.004));
  CHECK(effective_rate_zeta(0.0, 1, c, 0.025, 0.021) == doctest::Approx(0.012));
  CHECK(effective_rate_zeta(0.0, -1, c, 0.025, 0.021) == doctest::Approx(0.018));
  CHECK(effective_rate_zeta(0.0, 0, c, 0.025, 0.021) == 0.0);
  CHECK(code_of([&] { effective_rate_zeta(1.1, 1, c, 0.0, 0.0); }) == ErrorCode::AlphaOutOfRange);
  CHECK(code_of([&] { effective_rate_zeta(-0.1, 1, c, 0.0, 0.0); }) == ErrorCode::AlphaOutOfRange);

  CHECK(effective_rate_xi(1.0, 1, c, 0.025, 0.021) == doctest::Approx(-0.004));
  CHECK(effective_rate_xi(1.1, 1, c, 0.021, 0.020) == doctest::Approx(-0.0029).epsilon(1e-12));
  for (double a : {0.0, 0.25, 0.5, 0.9, 1.0}) {
    for (int s : {-1, 0, 1}) {
      CHECK(effective_rate_xi(a, s, c, 0.023, 0.0205) == effective_rate_zeta(a, s, c, 0.023, 0.0205));
    }
  }
  CHECK(code_of([&] { effective_rate_xi(-0.5, 1, c, 0.0, 0.0); }) == ErrorCode::OutOfDomain);
}

TEST_CASE("close-out cash flow") {
  auto cr = credit();
  CHECK(on_default_cashflow(100.0, 60.0, DefaultOrder::counterparty_first, cr) == doctest::Approx(76.0));
  CHECK(on_default_cashflow(-100.0, -60.0, DefaultOrder::investor_first, cr) == doctest::Approx(-76.0));
  CHECK(on_default_cashflow(42.0, 42.0, DefaultOrder::counterparty_first, cr) == 42.0);
  CHECK(on_default_cashflow(42.0, 42.0, DefaultOrder::investor_first, cr) == 42.0);
  // losses only arise on the defaulter's side of the gap
  CHECK(on_default_cashflow(100.0, 60.0, DefaultOrder::investor_first, cr) == 100.0);
}

TEST_CASE("schedules") {
  auto s = DealSchedule::swap(0.03, 2.0, 0.5, 100.0);
  CHECK(s.flows.size() == 8);
  CHECK(s.maturity() == 2.0);
  s.validate();
  auto b = DealSchedule::fixed_bond(0.05, 3.0, 1.0);
  CHECK(b.flows.size() == 4);
  DealSchedule bad{{CashFlow{2.0}, CashFlow{1.0}}};
  CHECK(code_of([&] { bad.validate(); }) == ErrorCode::InvariantViolation);
  DealSchedule early{{CashFlow{0.25, FlowKind::libor, 0.5}}};
  CHECK(code_of([&] { early.validate(); }) == ErrorCode::InvariantViolation);
}

TEST_CASE("perfect collateral pricing") {
  for (double T : {0.5, 2.0, 7.0}) {
    auto deal = DealSchedule::zero_coupon(T);
    auto setup = deterministic(deal);
    auto p = price_perfect(deal, setup.market());
    CHECK(p.clean_price == doctest::Approx(std::exp(-kRate * T)).epsilon(1e-13));
    CHECK(p.adjusted_price == p.clean_price);
  }
  // one-period IRS struck at the forward is worth zero
  const double F = flat_curves().forward(kTenor).forward(3.0);
  auto irs = DealSchedule::one_period_irs(F, 3.0, kTenor, 1e6);
  auto det = deterministic(irs);
  CHECK(std::abs(price_perfect(irs, det.market()).clean_price) < 1e-8);
  auto sto = stochastic(irs);
  auto ps = price_perfect(irs, sto.market());
  CHECK(std::abs(ps.clean_price) < 4.0 * ps.std_error + 1e-6);

  // par swap
  auto curves = flat_curves();
  double K = irs_swap_rate(curves.discount, curves.forward(kTenor), 4.0);
  auto swap = DealSchedule::swap(K, 4.0, kTenor, 1e6);
  auto ds = deterministic(swap);
  CHECK(std::abs(price_perfect(swap, ds.market()).clean_price) < 1e-7);
}

TEST_CASE("reduced pricing collapses to perfect collateral") {
  auto deal = DealSchedule::swap(0.025, 3.0, kTenor, 100.0);
  auto setup = stochastic(deal, 1000);
  CollateralPolicy perfect;
  auto r = price_reduced(deal, perfect, FundingSpec{}, credit(), setup.market());
  auto p = price_perfect(deal, setup.market());
  CHECK(r.clean_price == p.clean_price);
  CHECK(r.adjusted_price == doctest::Approx(p.clean_price).epsilon(1e-12));
  CHECK(std::abs(r.decomposition.total()) < 1e-12);
  auto f1 = price_reduced(deal, fraction(1.0), FundingSpec{}, credit(), setup.market());
  CHECK(f1.adjusted_price == doctest::Approx(p.clean_price).epsilon(1e-12));
}

TEST_CASE("uncollateralized fixed leg closed form") {
  const double T = 3.0, coupon = 5.0;
  auto deal = DealSchedule::zero_coupon(T, coupon);
  auto setup = deterministic(deal, {1.0, 2.0});
  auto r = price_reduced(deal, fraction(0.0), funding(0.001), credit(0.02, 0.6), setup.market());
  double expected = coupon * std::exp(-(kRate + 0.001 + 0.02 * 0.6) * T);
  CHECK(std::abs(r.adjusted_price - expected) < 1e-10);
  CHECK(r.decomposition.total() == doctest::Approx(r.adjusted_price - r.clean_price).epsilon(1e-12));
  CHECK(r.decomposition.cva < 0.0);
  CHECK(r.decomposition.funding_cost < 0.0);
  CHECK(r.decomposition.dva == 0.0);
  CHECK(r.decomposition.collateral_cost == 0.0);
}

TEST_CASE("partial collateral closed form and oracle") {
  const double T = 2.0;
  auto deal = DealSchedule::zero_coupon(T);
  auto setup = deterministic(deal, {0.5, 1.0, 1.5});
  auto policy = fraction(0.5, 0.0002);
  auto r = price_reduced(deal, policy, funding(0.001), credit(), setup.market());
  // zeta = 0.5 * 0.012 - 0.5 * (0.001 - 0.0002); spread over e is 0.001 + zeta
  double expected = std::exp(-(kRate + 0.001 + 0.0056) * T);
  CHECK(std::abs(r.adjusted_price - expected) < 1e-10);
  auto o = price_master_oracle(deal, policy, funding(0.001), credit(), setup.market());
  CHECK(std::abs(o.value - expected) < 1e-8);

  // a piecewise alpha still matches the reduced pricer
  CollateralPolicy pw = fraction(0.0);
  pw.alpha = PiecewiseConstant({0.0, 0.75}, {0.3, 0.8});
  auto bond = DealSchedule::fixed_bond(0.04, 2.0, 0.5);
  auto bs = deterministic(bond, {0.75});
  auto rb = price_reduced(bond, pw, funding(0.002, 0.0005), credit(), bs.market());
  auto ob = price_master_oracle(bond, pw, funding(0.002, 0.0005), credit(), bs.market());
  CHECK(std::abs(rb.adjusted_price - ob.value) < 1e-8);
}

TEST_CASE("master oracle limits") {
  DealSchedule empty;
  auto setup = Setup(VolatilitySpec::zero_vol(1), {0.0, 1.0}, 3);
  CHECK(price_master_oracle(empty, fraction(0.3), funding(), credit(), setup.market()).value == 0.0);

  auto bond = DealSchedule::fixed_bond(0.03, 2.0, 1.0);
  auto sto = stochastic(bond, 50);
  auto o = price_master_oracle(bond, CollateralPolicy{}, FundingSpec{}, credit(), sto.market());
  auto p = price_perfect(bond, sto.market());
  CHECK(o.value == doctest::Approx(p.clean_price).epsilon(1e-10));
}

TEST_CASE("credit adjustments are monotone") {
  auto deal = DealSchedule::fixed_bond(0.03, 5.0, 1.0);
  auto setup = deterministic(deal);
  double prev = 1e9;
  for (double lambda : {0.0, 0.01, 0.03, 0.08}) {
    double v = price_reduced(deal, fraction(0.0), funding(), credit(lambda), setup.market()).adjusted_price;
    CHECK(v < prev);
    prev = v;
  }
  prev = 1e9;
  for (double lgd : {0.0, 0.4, 0.6, 1.0}) {
    double v = price_reduced(deal, fraction(0.0), funding(), credit(0.02, lgd), setup.market()).adjusted_price;
    CHECK(v < prev);
    prev = v;
  }
}

TEST_CASE("decomposition sums to the adjustment on stochastic paths") {
  auto deal = DealSchedule::swap(0.022, 3.0, kTenor, 1e4, true);
  auto setup = stochastic(deal, 2000);
  auto r = price_reduced(deal, fraction(0.4, 0.0003), funding(0.002, 0.0005), credit(), setup.market());
  CHECK(r.decomposition.total() == doctest::Approx(r.adjusted_price - r.clean_price).epsilon(1e-9));
  CHECK(r.std_error > 0.0);
  CHECK(r.alpha_at_inception == 0.4);
}

TEST_CASE("grid and curve coverage errors") {
  auto deal = DealSchedule::zero_coupon(2.0);
  Setup coarse(VolatilitySpec::zero_vol(1), {0.0, 1.0}, 2);
  CHECK(code_of([&] { price_perfect(deal, coarse.market()); }) == ErrorCode::GridTooCoarse);
  auto far = DealSchedule::zero_coupon(12.0);
  auto fs = deterministic(far);
  CHECK(code_of([&] { price_perfect(far, fs.market()); }) == ErrorCode::ScheduleBeyondCurve);
}

TEST_CASE("adjusted bond and partial IRS") {
  const double T = 2.0;
  auto deal = DealSchedule::one_period_irs(0.03, T, kTenor);
  auto setup = stochastic(deal, 2000);
  auto m = setup.market();
  const double P = std::exp(-kRate * T);

  // q = 0: perfect collateral
  auto b0 = adjusted_bond(T, CollateralPolicy{}, FundingSpec{}, credit(), m);
  CHECK(b0.value == doctest::Approx(P).epsilon(1e-12));
  // alpha = 1 with a 50bp collateral spread: q = 0.005 flat
  auto b1 = adjusted_bond(T, fraction(1.0, 0.005), FundingSpec{}, credit(), m);
  CHECK(b1.value == doctest::Approx(std::exp(-0.04) * std::exp(-0.01)).epsilon(1e-12));
  // alpha = 0, positive value: q = w+ + lambda LGD
  auto b2 = adjusted_bond(T, fraction(0.0), funding(0.001), credit(0.02, 0.6), m);
  CHECK(b2.value == doctest::Approx(P * std::exp(-(0.001 + 0.012) * T)).epsilon(1e-12));

  const double F0 = setup.curves.forward(kTenor).forward(T);
  auto perfect = price_irs_partial(0.03, T, kTenor, CollateralPolicy{}, FundingSpec{}, credit(), m);
  CHECK(perfect.clean_price == doctest::Approx(kTenor * (0.03 - F0) * P).epsilon(1e-13));
  CHECK(perfect.adjusted_price == doctest::Approx(perfect.clean_price).epsilon(1e-12));
  auto det = price_irs_partial(0.03, T, kTenor, fraction(1.0, 0.005), FundingSpec{}, credit(), m);
  CHECK(std::abs(det.adjusted_price - kTenor * (0.03 - F0) * P * std::exp(-0.005 * T)) < 1e-10);
  CHECK(det.decomposition.total() == doctest::Approx(det.adjusted_price - det.clean_price).epsilon(1e-9));

  auto g = convexity_adjustment(T, kTenor, fraction(1.0, 0.005), FundingSpec{}, credit(), m);
  CHECK(g.gamma == 0.0);
  CHECK(g.forward == F0);
}

TEST_CASE("convexity estimate and its standard error") {
  const double T = 2.0, x = kTenor, beta = 5.0;
  auto deal = DealSchedule::one_period_irs(0.03, T, x);
  auto estimate = [&](std::size_t n, std::uint64_t seed) {
    Setup s(VolatilitySpec::one_factor(0.05, 0.01), deal_grid(deal), n, seed);
    const auto& fc = s.curves.forward(x);
    const double k = fc.shift(), F0 = fc.forward(T);
    const auto j = s.paths.date_index(T - x);
    std::vector<double> D(n);
    for (std::size_t p = 0; p < n; ++p) {
      double F = reconstruct_forward(s.paths.state(p, j), fc, s.model, T, x);
      D[p] = std::pow((k + F) / (k + F0), beta);
    }
    return convexity_adjustment(T, x, D, s.market());
  };
  auto full = estimate(40000, 3);
  auto half = estimate(20000, 4);
  CHECK(full.gamma > 0.0);
  CHECK(std::abs(full.gamma - half.gamma) < 4.0 * std::hypot(full.std_error, half.std_error));
  CHECK(half.std_error / full.std_error == doctest::Approx(std::sqrt(2.0)).epsilon(0.1));
  CHECK(full.adjusted_forward == doctest::Approx(full.forward * (1.0 + full.gamma)));
}

TEST_CASE("CCP collateral fraction") {
  auto deal = DealSchedule::fixed_bond(0.03, 2.0, 0.5);
  CollateralPolicy ccp;
  ccp.mode = CollateralMode::ccp;
  Setup s(VolatilitySpec::one_factor(0.05, 0.01), deal_grid(deal, {ccp.delta}), 2000);
  auto alpha = resolve_alpha(ccp, deal, funding(), credit(), s.market());
  CHECK(alpha(0.0) >= 1.0);
  CHECK(alpha(0.0) < 2.0);
  CHECK(code_of([&] { dividend_discounts(2.0, ccp, funding(), credit(), s.market()); }) ==
        ErrorCode::InvariantViolation);
  auto r = price_reduced(deal, ccp, funding(), credit(), s.market());
  CHECK(r.alpha_at_inception == alpha(0.0));
}
