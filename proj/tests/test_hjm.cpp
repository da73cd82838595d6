#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <tuple>
#include <vector>

#include "mce/curves.hpp"
#include "mce/hjm.hpp"
#include "test_util.hpp"

using namespace mce;
using mce::testing::code_of;

namespace {

VolatilityParams two_factor_params() {
  VolatilityParams p;
  p.num_factors = 2;
  p.mean_reversion = {PiecewiseConstant(0.05), PiecewiseConstant({0.0, 1.0}, {0.2, 0.4})};
  p.loadings = {0.008, 0.002, 0.0, 0.006};
  p.kappa = {1.0, 2.0};
  p.theta = {1.0, 1.0};
  p.nu = {0.3, 0.4};
  p.v_bar = {1.0, 1.0};
  p.rho = {-0.2, 0.1, 0.0, 0.3};
  return p;
}

// Midpoint-rule integral of exp(-int_t^v a) over [T0, T1].
double quad_G0(const PiecewiseConstant& a, double t, double T0, double T1) {
  const int n = 20000;
  const double h = (T1 - T0) / n;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) sum += std::exp(-a.integral(t, T0 + (i + 0.5) * h)) * h;
  return sum;
}

}  // namespace

TEST_CASE("g factor") {
  auto spec = VolatilitySpec::one_factor(0.1, 0.01);
  CHECK(g_factor(spec, 1.0, 1.0)[0] == 1.0);
  CHECK(g_factor(spec, 0.0, 2.0)[0] == doctest::Approx(0.818730753).epsilon(1e-9));
  CHECK(code_of([&] { g_factor(spec, 1.0, 0.0); }) == ErrorCode::InvalidInterval);
}

TEST_CASE("G integrals") {
  auto flat = VolatilitySpec::one_factor(0.0, 0.01);
  CHECK(G_integrals(flat, 0.0, 0.0, 2.0, 2.0, 0.0).G0[0] == doctest::Approx(2.0));
  auto spec = VolatilitySpec::one_factor(0.1, 0.01);
  CHECK(G_integrals(spec, 0.0, 1.0, 2.0, 2.0, 0.0).G0[0] ==
        doctest::Approx((std::exp(-0.1) - std::exp(-0.2)) / 0.1).epsilon(1e-12));
  auto empty = G_integrals(spec, 0.0, 1.5, 1.5, 2.0, 0.5);
  CHECK(empty.G0[0] == 0.0);
  CHECK(empty.G[0] == 0.0);
  CHECK(code_of([&] { G_integrals(spec, 1.0, 0.5, 2.0, 2.0, 0.0); }) == ErrorCode::InvalidInterval);

  // piecewise mean reversion against quadrature
  VolatilitySpec two(two_factor_params());
  for (auto [t, T0, T1] : {std::tuple{0.0, 0.5, 3.0}, std::tuple{0.7, 0.9, 1.1}, std::tuple{1.5, 2.0, 4.0}}) {
    auto G = G_integrals(two, t, T0, T1, T1, 0.0);
    for (std::size_t i = 0; i < 2; ++i) {
      CHECK(G.G0[i] == doctest::Approx(quad_G0(two.mean_reversion_curve(i), t, T0, T1)).epsilon(1e-8));
    }
  }

  // tenor weights scale G but not G0
  auto p = two_factor_params();
  p.tenor_weights[0.5] = {1.1, 0.9};
  VolatilitySpec weighted(p);
  auto G = G_integrals(weighted, 0.0, 1.5, 2.0, 2.0, 0.5);
  CHECK(G.G[0] == doctest::Approx(1.1 * G.G0[0]));
  CHECK(G.G[1] == doctest::Approx(0.9 * G.G0[1]));
}

TEST_CASE("single Euler step matches hand formulas") {
  auto spec = VolatilitySpec::one_factor(0.1, 0.01);
  MarkovState s = MarkovState::initial(spec);
  s.X = {0.002};
  s.Y = {5e-5};
  const double dt = 0.01, z = 0.5;
  std::vector<double> dW{z}, dZ{-0.3};
  auto next = evolve_state(s, dt, dW, dZ, spec);
  double x1 = 0.002 + (5e-5 - 0.1 * 0.002) * dt + 0.01 * z * std::sqrt(dt);
  CHECK(next.X[0] == doctest::Approx(x1).epsilon(1e-14));
  CHECK(next.Y[0] == doctest::Approx(5e-5 + (1e-4 - 0.2 * 5e-5) * dt).epsilon(1e-14));
  CHECK(next.int_x == doctest::Approx(0.5 * (0.002 + x1) * dt).epsilon(1e-14));
  CHECK(next.v[0] == 1.0);
  CHECK(next.t == doctest::Approx(0.01));

  // correlated CIR variance with full truncation
  VolatilityParams p;
  p.mean_reversion = {PiecewiseConstant(0.0)};
  p.loadings = {0.01};
  p.kappa = {1.5};
  p.theta = {1.0};
  p.nu = {0.5};
  p.v_bar = {0.5};
  p.rho = {0.3};
  VolatilitySpec cir(p);
  auto c0 = MarkovState::initial(cir);
  std::vector<double> w{0.7}, zz{-1.2};
  auto c1 = evolve_state(c0, 0.04, w, zz, cir);
  double zc = 0.3 * 0.7 + std::sqrt(1 - 0.09) * -1.2;
  CHECK(c1.v_aux[0] == doctest::Approx(0.5 + 1.5 * 0.5 * 0.04 + 0.5 * std::sqrt(0.5) * 0.2 * zc).epsilon(1e-14));
  CHECK(c1.X[0] == doctest::Approx(std::sqrt(0.5) * 0.01 * 0.7 * 0.2).epsilon(1e-14));

  MarkovState low = c0;
  low.v_aux = {-0.1};
  low.v = {0.0};
  auto l1 = evolve_state(low, 0.04, w, zz, cir);
  CHECK(l1.X[0] == 0.0);  // sqrt(v+) = 0
  CHECK(l1.v_aux[0] == doctest::Approx(-0.1 + 1.5 * 0.04));
  CHECK(l1.v[0] == doctest::Approx(std::max(l1.v_aux[0], 0.0)));

  CHECK(code_of([&] { evolve_state(s, 0.0, dW, dZ, spec); }) == ErrorCode::NonPositiveDt);
  CHECK(code_of([&] { evolve_state(s, -0.1, dW, dZ, spec); }) == ErrorCode::NonPositiveDt);
}

TEST_CASE("degenerate dynamics") {
  auto zero = VolatilitySpec::zero_vol(2);
  auto ens = simulate(zero, {0.0, 1.0, 2.0}, 5, 3);
  for (std::size_t p = 0; p < 5; ++p) {
    for (std::size_t k = 0; k < 3; ++k) {
      auto s = ens.state(p, k);
      for (double x : s.X) CHECK(x == 0.0);
      for (double y : s.Y) CHECK(y == 0.0);
      CHECK(s.int_x == 0.0);
    }
  }
  // kappa = nu = 0 keeps v at v_bar
  auto flat = VolatilitySpec::one_factor(0.03, 0.01);
  auto e2 = simulate(flat, {0.0, 3.0}, 4, 1);
  CHECK(e2.state(2, 1).v[0] == 1.0);
}

TEST_CASE("Y stays nonnegative and grows without mean reversion") {
  auto p = two_factor_params();
  p.mean_reversion = {PiecewiseConstant(0.0), PiecewiseConstant(0.0)};
  VolatilitySpec spec(p);
  std::vector<double> grid{0.0, 0.5, 1.0, 1.5, 2.0};
  auto ens = simulate(spec, grid, 200, 11);
  for (std::size_t path = 0; path < ens.num_paths(); ++path) {
    for (std::size_t k = 1; k < grid.size(); ++k) {
      auto prev = ens.state(path, k - 1), cur = ens.state(path, k);
      for (std::size_t i = 0; i < 2; ++i) {
        CHECK(cur.y(i, i) >= 0.0);
        CHECK(cur.y(i, i) >= prev.y(i, i));
      }
    }
  }
}

TEST_CASE("one-factor Gaussian moments") {
  // With v = 1 and constant a, X_t is Gaussian:
  //   Y_t = s^2 (1 - e^{-2at}) / (2a) = Var X_t,  E X_t = s^2 (1 - e^{-at})^2 / (2 a^2).
  const double a = 0.05, sig = 0.015, t = 2.0;
  auto spec = VolatilitySpec::one_factor(a, sig);
  const std::size_t n = 20000;
  auto ens = simulate(spec, {0.0, t}, n, 5, {.max_dt = 1.0 / 96.0});
  double sum = 0.0, sum2 = 0.0;
  for (std::size_t p = 0; p < n; ++p) {
    double x = ens.state(p, 1).X[0];
    sum += x;
    sum2 += x * x;
  }
  double mean = sum / n, var = sum2 / n - mean * mean;
  double y = sig * sig * (1 - std::exp(-2 * a * t)) / (2 * a);
  double m = sig * sig * std::pow(1 - std::exp(-a * t), 2) / (2 * a * a);
  CHECK(ens.state(0, 1).Y[0] == doctest::Approx(y).epsilon(2e-3));
  CHECK(std::abs(mean - m) < 4.0 * std::sqrt(y / n));
  CHECK(std::abs(var / y - 1.0) < 4.0 * std::sqrt(2.0 / n));
}

TEST_CASE("deflated bonds are martingales") {
  VolatilitySpec spec(two_factor_params());
  auto curve = DiscountCurve::flat(0.02, 10.0);
  const std::size_t n = 20000;
  auto ens = simulate(spec, {0.0, 1.0, 3.0}, n, 9);
  for (double T : {2.0, 5.0}) {
    double sum = 0.0, sum2 = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
      auto s = ens.state(p, 1);
      double v = collateral_discount(s, curve) * reconstruct_bond(s, curve, spec, T);
      sum += v;
      sum2 += v * v;
    }
    double mean = sum / n, se = std::sqrt((sum2 / n - mean * mean) / n);
    CHECK(std::abs(mean - curve.discount_factor(T)) < 4.0 * se + 1e-6);
  }
}

TEST_CASE("reconstruction at time zero and for stale states") {
  VolatilitySpec spec(two_factor_params());
  auto curve = DiscountCurve::flat(0.02, 10.0);
  ForwardCurve fwd(0.5, {0.5, 5.0}, {0.021, 0.025}, 2.0);
  auto s0 = MarkovState::initial(spec);
  CHECK(reconstruct_bond(s0, curve, spec, 3.0) == doctest::Approx(std::exp(-0.06)).epsilon(1e-14));
  CHECK(reconstruct_forward(s0, fwd, spec, 3.0, 0.5) == fwd.forward(3.0));
  auto later = s0;
  later.t = 2.0;
  CHECK(reconstruct_bond(later, curve, spec, 2.0) == 1.0);
  CHECK(code_of([&] { reconstruct_forward(later, fwd, spec, 2.0, 0.5); }) == ErrorCode::StaleState);
  CHECK(code_of([&] { reconstruct_bond(later, curve, spec, 1.0); }) == ErrorCode::OutOfDomain);

  // zero-vol paths keep the initial forward
  auto zero = VolatilitySpec::zero_vol(2);
  auto ens = simulate(zero, {0.0, 1.0, 2.0}, 3, 2);
  CHECK(reconstruct_forward(ens.state(1, 2), fwd, zero, 3.0, 0.5) == fwd.forward(3.0));
}

TEST_CASE("parallel and serial simulations agree bitwise") {
  VolatilitySpec spec(two_factor_params());
  std::vector<double> grid{0.0, 0.25, 1.0, 2.5};
  auto serial = simulate_serial(spec, grid, 300, 123);
  auto parallel = simulate(spec, grid, 300, 123, {.threads = 3});
  auto single = simulate(spec, grid, 300, 123, {.threads = 1});
  CHECK(std::equal(serial.data().begin(), serial.data().end(), parallel.data().begin(), parallel.data().end()));
  CHECK(std::equal(serial.data().begin(), serial.data().end(), single.data().begin(), single.data().end()));
  // a prefix of paths does not depend on the ensemble size
  auto fewer = simulate(spec, grid, 10, 123);
  CHECK(fewer.state(7, 3) == serial.state(7, 3));
  auto other_seed = simulate(spec, grid, 10, 124);
  CHECK_FALSE(other_seed.state(7, 3) == serial.state(7, 3));
}

TEST_CASE("ensemble validation") {
  auto spec = VolatilitySpec::one_factor(0.0, 0.01);
  CHECK(code_of([&] { simulate(spec, {}, 10, 1); }) == ErrorCode::EmptyGrid);
  CHECK(code_of([&] { simulate(spec, {0.0, 1.0}, 10, 1, {.max_dt = 0.0}); }) == ErrorCode::NonPositiveDt);
  CHECK(code_of([&] { simulate(spec, {0.5, 1.0}, 10, 1); }) == ErrorCode::InvariantViolation);
  CHECK(code_of([&] { simulate(spec, {0.0, 1.0, 1.0}, 10, 1); }) == ErrorCode::InvariantViolation);
  auto ens = simulate(spec, {0.0, 0.5, 1.0}, 2, 1);
  CHECK(ens.date_index(0.5) == 1);
  CHECK(ens.date_index(1.0 + 1e-12) == 2);
  CHECK(ens.has_date(1.0));
  CHECK_FALSE(ens.has_date(0.75));
  CHECK(code_of([&] { ens.date_index(0.75); }) == ErrorCode::GridTooCoarse);
  auto csv = ens.dump_csv();
  CHECK(csv.rfind("path,t,X0,Y00,v0\n", 0) == 0);
}

TEST_CASE("correlation must be positive semidefinite") {
  auto p = two_factor_params();
  p.rho = {0.9, 0.9, 0.9, 0.9};
  CHECK(code_of([&] { VolatilitySpec spec(p); }) == ErrorCode::InvariantViolation);
  // perfect self-correlation is semidefinite and accepted
  p.rho = {1.0, 0.0, 0.0, 1.0};
  VolatilitySpec ok(p);
  auto ens = simulate(ok, {0.0, 1.0}, 50, 4);
  CHECK(ens.num_paths() == 50);
}
