#include "mce/pricing.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <string>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss.hpp>

#include "mce/errors.hpp"
#include "mce/text.hpp"

namespace mce {

namespace {

constexpr double kTimeTolerance = 1e-9;

int sign_of(double v) { return (v > 0.0) - (v < 0.0); }

std::string fmt(double v) { return text::format_roundtrip(v); }

// Runs body(p) for every path, in parallel when OpenMP is on. The first
// exception thrown by any path is rethrown after the loop.
template <typename Body>
void for_each_path(std::size_t num_paths, Body&& body) {
  std::exception_ptr failure;
  const auto n = static_cast<long>(num_paths);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (long p = 0; p < n; ++p) {
    try {
      body(static_cast<std::size_t>(p));
    } catch (...) {
#ifdef _OPENMP
#pragma omp critical(mce_pricing_failure)
#endif
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
}

struct MeanError {
  double mean = 0.0;
  double std_error = 0.0;
};

MeanError mean_and_error(std::span<const double> v) {
  const double n = static_cast<double>(v.size());
  double sum = 0.0;
  for (double x : v) sum += x;
  const double mean = sum / n;
  if (v.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / (n - 1.0) / n)};
}

void check_schedule(const DealSchedule& deal, const Market& market) {
  deal.validate();
  const auto& curve = market.curves.discount;
  for (const auto& f : deal.flows) {
    if (!curve.extrapolates() && f.pay_time > curve.max_time() + kTimeTolerance) {
      throw Error(ErrorCode::ScheduleBeyondCurve,
                  "pay date " + fmt(f.pay_time) + " beyond discount curve end " + fmt(curve.max_time()));
    }
    if (f.kind == FlowKind::libor) {
      try {
        market.curves.forward(f.accrual).forward(f.pay_time);
      } catch (const Error& e) {
        throw Error(ErrorCode::ScheduleBeyondCurve, "LIBOR flow at " + fmt(f.pay_time) + ": " + e.what());
      }
      if (f.reset_time() > kTimeTolerance) market.paths.date_index(f.reset_time());
    }
    market.paths.date_index(f.pay_time);
  }
}

// Pathwise quantities shared by all pricers of one deal.
struct PathData {
  std::size_t paths = 0;
  std::size_t dates = 0;
  std::vector<double> amounts;   // [p][k] coupon paid at date k
  std::vector<double> discount;  // [p][k] D(t_k, t_{k+1}; e), last column unused
};

PathData path_data(const DealSchedule& deal, const Market& market) {
  PathData out;
  out.paths = market.paths.num_paths();
  out.dates = market.paths.num_dates();
  out.amounts = coupon_amounts(deal, market);
  out.discount.assign(out.paths * out.dates, 1.0);
  const auto& curve = market.curves.discount;
  for_each_path(out.paths, [&](std::size_t p) {
    if (out.dates < 2) return;
    auto prev = market.paths.state(p, 0);
    for (std::size_t k = 0; k + 1 < out.dates; ++k) {
      auto next = market.paths.state(p, k + 1);
      out.discount[p * out.dates + k] = collateral_discount(prev, next, curve);
      prev = std::move(next);
    }
  });
  return out;
}

// Least-squares estimate of E[target | state at date k], quadratic in the
// standardized (X, diag Y, v).
std::vector<double> regress(const PathEnsemble& paths, std::size_t k, std::span<const double> target) {
  const std::size_t n = paths.num_paths();
  const std::size_t f = paths.num_factors();
  Eigen::MatrixXd z(static_cast<long>(n), static_cast<long>(3 * f));
  for (std::size_t p = 0; p < n; ++p) {
    auto s = paths.state(p, k);
    for (std::size_t i = 0; i < f; ++i) {
      z(static_cast<long>(p), static_cast<long>(i)) = s.X[i];
      z(static_cast<long>(p), static_cast<long>(f + i)) = s.y(i, i);
      z(static_cast<long>(p), static_cast<long>(2 * f + i)) = s.v[i];
    }
  }
  std::vector<long> keep;
  for (long c = 0; c < z.cols(); ++c) {
    double mean = z.col(c).mean();
    z.col(c).array() -= mean;
    double sd = std::sqrt(z.col(c).squaredNorm() / static_cast<double>(n));
    if (sd > 1e-12 * (1.0 + std::abs(mean))) {
      z.col(c) /= sd;
      keep.push_back(c);
    }
  }
  const long m = static_cast<long>(1 + keep.size() + keep.size() * (keep.size() + 1) / 2);
  Eigen::MatrixXd basis(static_cast<long>(n), m);
  basis.col(0).setOnes();
  long c = 1;
  for (long i : keep) basis.col(c++) = z.col(i);
  for (std::size_t i = 0; i < keep.size(); ++i) {
    for (std::size_t j = i; j < keep.size(); ++j) {
      basis.col(c++) = z.col(keep[i]).cwiseProduct(z.col(keep[j]));
    }
  }
  Eigen::Map<const Eigen::VectorXd> y(target.data(), static_cast<long>(n));
  Eigen::VectorXd beta = basis.completeOrthogonalDecomposition().solve(y);
  Eigen::VectorXd fitted = basis * beta;
  return {fitted.data(), fitted.data() + n};
}

// Sign of E[target | F_{t_k}] per path.
void estimate_signs(const PathEnsemble& paths, std::size_t k, std::span<const double> target,
                    std::span<std::int8_t> out) {
  bool all_pos = true, all_neg = true, all_zero = true;
  for (double v : target) {
    all_pos = all_pos && v > 0.0;
    all_neg = all_neg && v < 0.0;
    all_zero = all_zero && v == 0.0;
  }
  int uniform = all_pos ? 1 : all_neg ? -1 : all_zero ? 0 : 2;
  if (uniform == 2 && k == 0) uniform = sign_of(mean_and_error(target).mean);
  if (uniform != 2) {
    std::fill(out.begin(), out.end(), static_cast<std::int8_t>(uniform));
    return;
  }
  auto fitted = regress(paths, k, target);
  for (std::size_t p = 0; p < out.size(); ++p) out[p] = static_cast<std::int8_t>(sign_of(fitted[p]));
}

// Spread integrals for every interval and sign s in {-1, 0, 1} (index s + 1).
using SpreadTable = std::vector<std::array<SpreadIntegrals, 3>>;

SpreadTable spread_table(const std::vector<double>& grid, const PiecewiseConstant& alpha,
                         const CollateralPolicy& policy, const FundingSpec& funding, const CreditSpec& credit) {
  SpreadTable table(grid.size());
  for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
    for (int s = -1; s <= 1; ++s) {
      table[k][static_cast<std::size_t>(s + 1)] =
          spread_integrals(grid[k], grid[k + 1], s, alpha, policy, funding, credit);
    }
  }
  return table;
}

struct Induction {
  std::vector<double> adjusted;  // [p][k]
  std::vector<double> clean;     // [p][k]
  std::array<std::vector<double>, 4> buckets;  // cva, dva, funding, collateral at date 0
  std::vector<std::int8_t> signs;              // [p][k]
};

// Backward induction over grid dates. V_k is the value at t_k after the
// coupon at t_k; the value sign on (t_k, t_{k+1}) is that of E[D Y | F_k]
// with Y = V_{k+1} + pi_{k+1}. A null table prices at e (clean only).
Induction induct(const PathData& data, const SpreadTable* table, const PathEnsemble& paths) {
  const std::size_t P = data.paths, K = data.dates;
  Induction out;
  out.adjusted.assign(P * K, 0.0);
  out.clean.assign(P * K, 0.0);
  out.signs.assign(P * K, 0);
  std::array<std::vector<double>, 4> bucket;
  for (auto& b : bucket) b.assign(P, 0.0);
  std::vector<double> target(P);
  std::vector<std::int8_t> sign_k(P);
  for (std::size_t k = K - 1; k-- > 0;) {
    for (std::size_t p = 0; p < P; ++p) {
      double y = out.adjusted[p * K + k + 1] + data.amounts[p * K + k + 1];
      target[p] = data.discount[p * K + k] * y;
    }
    if (table) {
      estimate_signs(paths, k, target, sign_k);
    } else {
      std::fill(sign_k.begin(), sign_k.end(), std::int8_t{0});
    }
    for (std::size_t p = 0; p < P; ++p) {
      const std::size_t i = p * K + k;
      const double d = data.discount[i];
      const double y = out.adjusted[i + 1] + data.amounts[i + 1];
      out.clean[i] = d * (out.clean[i + 1] + data.amounts[i + 1]);
      out.signs[i] = sign_k[p];
      if (!table) {
        out.adjusted[i] = out.clean[i];
        continue;
      }
      const auto& sp = (*table)[k][static_cast<std::size_t>(sign_k[p] + 1)];
      out.adjusted[i] = d * std::exp(-sp.total) * y;
      // first-order-exact allocation of d (e^{-S} - 1) Y across the buckets
      const double phi = sp.total == 0.0 ? -1.0 : std::expm1(-sp.total) / sp.total;
      const double scale = d * y * phi;
      const std::array<double, 4> rates{sp.cva, sp.dva, sp.funding, sp.collateral};
      for (std::size_t j = 0; j < 4; ++j) bucket[j][p] = d * bucket[j][p] + scale * rates[j];
    }
  }
  for (std::size_t p = 0; p < P; ++p) {
    out.adjusted[p * K] += data.amounts[p * K];
    out.clean[p * K] += data.amounts[p * K];
  }
  out.buckets = std::move(bucket);
  return out;
}

std::vector<double> column(const std::vector<double>& m, std::size_t rows, std::size_t cols, std::size_t k) {
  std::vector<double> out(rows);
  for (std::size_t p = 0; p < rows; ++p) out[p] = m[p * cols + k];
  return out;
}

AdjustedPrice summarize(const Induction& ind, std::size_t P, std::size_t K, double alpha0) {
  AdjustedPrice out;
  auto adj = mean_and_error(column(ind.adjusted, P, K, 0));
  auto clean = mean_and_error(column(ind.clean, P, K, 0));
  out.adjusted_price = adj.mean;
  out.clean_price = clean.mean;
  out.std_error = adj.std_error;
  out.alpha_at_inception = alpha0;
  out.decomposition.cva = mean_and_error(ind.buckets[0]).mean;
  out.decomposition.dva = mean_and_error(ind.buckets[1]).mean;
  out.decomposition.funding_cost = mean_and_error(ind.buckets[2]).mean;
  out.decomposition.collateral_cost = mean_and_error(ind.buckets[3]).mean;
  return out;
}

struct ReducedRun {
  AdjustedPrice price;
  ExposureSigns signs;
};

ReducedRun run_reduced(const DealSchedule& deal, const CollateralPolicy& policy, const FundingSpec& funding,
                       const CreditSpec& credit, const Market& market) {
  policy.validate();
  credit.validate();
  funding.validate(credit);
  auto data = path_data(deal, market);
  auto alpha = resolve_alpha(policy, deal, funding, credit, market);
  auto table = spread_table(market.paths.grid(), alpha, policy, funding, credit);
  auto ind = induct(data, &table, market.paths);
  ReducedRun out;
  out.price = summarize(ind, data.paths, data.dates, alpha(0.0));
  out.signs.num_dates = data.dates;
  out.signs.signs = std::move(ind.signs);
  return out;
}

// Chebyshev-Lobatto nodes on [-1, 1] with cumulative integration matrices.
struct Spectral {
  static constexpr std::size_t M = 12;
  std::array<double, M + 1> nodes{};
  std::array<std::array<double, M + 1>, M + 1> from_left{};  // int_{-1}^{x_i} l_j
  std::array<std::array<double, M + 1>, M + 1> to_right{};   // int_{x_i}^{1} l_j

  Spectral() {
    const double pi = std::acos(-1.0);
    std::array<double, M + 1> w{};
    for (std::size_t j = 0; j <= M; ++j) {
      nodes[j] = -std::cos(pi * static_cast<double>(j) / static_cast<double>(M));
      w[j] = (j % 2 == 0 ? 1.0 : -1.0) * ((j == 0 || j == M) ? 0.5 : 1.0);
    }
    auto lagrange = [&](std::size_t j, double s) {
      double den = 0.0;
      for (std::size_t i = 0; i <= M; ++i) {
        if (s == nodes[i]) return i == j ? 1.0 : 0.0;
        den += w[i] / (s - nodes[i]);
      }
      return (w[j] / (s - nodes[j])) / den;
    };
    using Gauss = boost::math::quadrature::gauss<double, 20>;
    for (std::size_t i = 0; i <= M; ++i) {
      for (std::size_t j = 0; j <= M; ++j) {
        from_left[i][j] =
            i == 0 ? 0.0 : Gauss::integrate([&](double s) { return lagrange(j, s); }, -1.0, nodes[i]);
      }
    }
    for (std::size_t i = 0; i <= M; ++i) {
      for (std::size_t j = 0; j <= M; ++j) to_right[i][j] = from_left[M][j] - from_left[i][j];
    }
  }
};

const Spectral& spectral() {
  static const Spectral s;
  return s;
}

// Constant inputs of the pricing equation on one sub-interval.
struct LocalRates {
  double e, lambda_CI, lambda_IC, lgd_C, lgd_I, alpha;
  double invest_spread, borrow_spread, c_plus, c_minus;
};

// V on [s0, s1] given V(s1); returns V(s0).
double solve_piece(double s0, double s1, double v_end, const LocalRates& r, const OracleSettings& settings) {
  const auto& sp = spectral();
  constexpr std::size_t M = Spectral::M;
  const double h = 0.5 * (s1 - s0);
  std::array<double, M + 1> v{}, rate{}, kernel{}, cum{}, phi{}, next{};
  v.fill(v_end);
  for (int it = 0; it < settings.max_iterations; ++it) {
    for (std::size_t i = 0; i <= M; ++i) {
      const double V = v[i];
      const double f_spread = (1.0 - r.alpha) * V > 0.0 ? r.borrow_spread : r.invest_spread;
      const double c_spread = r.alpha * V > 0.0 ? r.c_plus : r.c_minus;
      const double gap = V - r.alpha * V;
      const double theta_C = V - r.lgd_C * std::max(gap, 0.0);
      const double theta_I = V - r.lgd_I * std::min(gap, 0.0);
      rate[i] = r.e + f_spread + r.lambda_CI + r.lambda_IC;
      kernel[i] = r.lambda_CI * theta_C + r.lambda_IC * theta_I + (f_spread - c_spread) * r.alpha * V;
    }
    for (std::size_t i = 0; i <= M; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j <= M; ++j) acc += sp.from_left[i][j] * rate[j];
      cum[i] = h * acc;
      phi[i] = kernel[i] * std::exp(-cum[i]);
    }
    double change = 0.0, scale = 1.0;
    for (std::size_t i = 0; i <= M; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j <= M; ++j) acc += sp.to_right[i][j] * phi[j];
      const double fresh = std::exp(cum[i]) * (std::exp(-cum[M]) * v_end + h * acc);
      next[i] = (1.0 - settings.damping) * v[i] + settings.damping * fresh;
      change = std::max(change, std::abs(fresh - v[i]));
      scale = std::max(scale, std::abs(fresh));
    }
    v = next;
    if (change <= settings.tolerance * scale) return v[0];
  }
  throw Error(ErrorCode::NoConvergence,
              "Picard iteration did not converge in " + std::to_string(settings.max_iterations) + " iterations");
}

}  // namespace

// ---------------------------------------------------------------- schedules

double DealSchedule::maturity() const {
  double T = 0.0;
  for (const auto& f : flows) T = std::max(T, f.pay_time);
  return T;
}

void DealSchedule::validate() const {
  for (std::size_t i = 0; i < flows.size(); ++i) {
    const auto& f = flows[i];
    if (!std::isfinite(f.pay_time) || f.pay_time < 0.0) {
      throw Error(ErrorCode::InvariantViolation, "pay time must be finite and >= 0");
    }
    if (i > 0 && f.pay_time < flows[i - 1].pay_time) {
      throw Error(ErrorCode::InvariantViolation, "pay times must be nondecreasing");
    }
    if (!(f.accrual > 0.0) || !std::isfinite(f.notional) || !std::isfinite(f.rate) || !std::isfinite(f.sign)) {
      throw Error(ErrorCode::InvariantViolation, "flow needs positive accrual and finite amounts");
    }
    if (f.kind == FlowKind::libor && f.reset_time() < -kTimeTolerance) {
      throw Error(ErrorCode::InvariantViolation, "LIBOR reset before 0 at pay date " + fmt(f.pay_time));
    }
  }
}

DealSchedule DealSchedule::zero_coupon(double maturity, double amount) {
  return {{CashFlow{maturity, FlowKind::fixed, 1.0, amount, 1.0, 1.0}}};
}

DealSchedule DealSchedule::one_period_irs(double fixed_rate, double maturity, double tenor, double notional) {
  return {{CashFlow{maturity, FlowKind::fixed, tenor, fixed_rate, notional, 1.0},
           CashFlow{maturity, FlowKind::libor, tenor, 0.0, notional, -1.0}}};
}

DealSchedule DealSchedule::swap(double fixed_rate, double maturity, double tenor, double notional, bool pay_fixed) {
  DealSchedule deal;
  const double s = pay_fixed ? -1.0 : 1.0;
  const auto n = static_cast<long>(std::llround(maturity / tenor));
  if (n < 1 || std::abs(static_cast<double>(n) * tenor - maturity) > kTimeTolerance) {
    throw Error(ErrorCode::InvariantViolation, "swap tenor must divide maturity");
  }
  for (long i = 1; i <= n; ++i) {
    const double T = static_cast<double>(i) * tenor;
    deal.flows.push_back({T, FlowKind::fixed, tenor, fixed_rate, notional, s});
    deal.flows.push_back({T, FlowKind::libor, tenor, 0.0, notional, -s});
  }
  return deal;
}

DealSchedule DealSchedule::fixed_bond(double coupon, double maturity, double period, double notional) {
  DealSchedule deal;
  const auto n = static_cast<long>(std::llround(maturity / period));
  if (n < 1 || std::abs(static_cast<double>(n) * period - maturity) > kTimeTolerance) {
    throw Error(ErrorCode::InvariantViolation, "coupon period must divide maturity");
  }
  for (long i = 1; i <= n; ++i) {
    deal.flows.push_back({static_cast<double>(i) * period, FlowKind::fixed, period, coupon, notional, 1.0});
  }
  deal.flows.push_back({maturity, FlowKind::fixed, 1.0, 1.0, notional, 1.0});
  return deal;
}

// ---------------------------------------------------------------- cash flows

std::vector<double> coupon_amounts(const DealSchedule& deal, const Market& market) {
  check_schedule(deal, market);
  const auto& paths = market.paths;
  const std::size_t P = paths.num_paths(), K = paths.num_dates();
  std::vector<double> out(P * K, 0.0);
  for (const auto& f : deal.flows) {
    const std::size_t kp = paths.date_index(f.pay_time);
    const double scale = f.sign * f.notional * f.accrual;
    if (f.kind == FlowKind::fixed) {
      for (std::size_t p = 0; p < P; ++p) out[p * K + kp] += scale * f.rate;
      continue;
    }
    const auto& curve = market.curves.forward(f.accrual);
    if (f.reset_time() <= kTimeTolerance) {
      const double F0 = curve.forward(f.pay_time);
      for (std::size_t p = 0; p < P; ++p) out[p * K + kp] += scale * F0;
      continue;
    }
    const std::size_t kr = paths.date_index(f.reset_time());
    for_each_path(P, [&](std::size_t p) {
      out[p * K + kp] += scale * reconstruct_forward(paths.state(p, kr), curve, market.model, f.pay_time, f.accrual);
    });
  }
  return out;
}

AdjustedPrice price_perfect(const DealSchedule& deal, const Market& market) {
  auto data = path_data(deal, market);
  auto ind = induct(data, nullptr, market.paths);
  return summarize(ind, data.paths, data.dates, 1.0);
}

// ---------------------------------------------------------------- effective rates

double effective_rate_zeta(double alpha, int sign_value, const CreditRates& c, double f_tilde, double c_tilde) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw Error(ErrorCode::AlphaOutOfRange, "alpha=" + fmt(alpha) + " outside [0, 1]");
  }
  const double credit = sign_value > 0   ? c.lambda_CI * c.lgd_C
                        : sign_value < 0 ? c.lambda_IC * c.lgd_I
                                         : 0.0;
  return (1.0 - alpha) * credit - alpha * (f_tilde - c_tilde);
}

double effective_rate_xi(double alpha, int sign_value, const CreditRates& c, double f_tilde, double c_tilde) {
  if (!(alpha >= 0.0)) throw Error(ErrorCode::OutOfDomain, "alpha=" + fmt(alpha) + " must be >= 0");
  const double under = sign_value > 0   ? c.lambda_CI * c.lgd_C
                       : sign_value < 0 ? c.lambda_IC * c.lgd_I
                                        : 0.0;
  const double over = sign_value > 0   ? c.lambda_IC * c.lgd_I
                      : sign_value < 0 ? c.lambda_CI * c.lgd_C
                                       : 0.0;
  const double pos = std::max(1.0 - alpha, 0.0);
  const double neg = std::min(1.0 - alpha, 0.0);
  return (pos * under + neg * over) - alpha * (f_tilde - c_tilde);
}

double on_default_cashflow(double close_out, double collateral, DefaultOrder who, const CreditSpec& credit) {
  const double gap = close_out - collateral;
  if (who == DefaultOrder::counterparty_first) return close_out - credit.lgd_C * std::max(gap, 0.0);
  return close_out - credit.lgd_I * std::min(gap, 0.0);
}

SpreadIntegrals spread_integrals(double t0, double t1, int s, const PiecewiseConstant& alpha,
                                 const CollateralPolicy& policy, const FundingSpec& funding,
                                 const CreditSpec& credit) {
  if (t1 < t0) throw Error(ErrorCode::InvalidInterval, "spread interval reversed");
  auto cuts = merged_cuts(t0, t1,
                          {credit.lambda_CI.breakpoints(), credit.lambda_IC.breakpoints(),
                           credit.lambda_P.breakpoints(), credit.lambda_I.breakpoints(),
                           funding.w_minus.breakpoints(), funding.w_plus.breakpoints(),
                           funding.w_P.breakpoints(), funding.w_I.breakpoints(), alpha.breakpoints()});
  SpreadIntegrals out;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double len = cuts[i + 1] - cuts[i];
    const double u = 0.5 * (cuts[i] + cuts[i + 1]);
    const double a = alpha(u);
    const auto cr = credit_rates_at(credit, u);
    const double f_spread = (1.0 - a) * s > 0.0 ? funding_rate(funding, credit, 0.0, u, FundingDirection::borrow)
                                                : funding_rate(funding, credit, 0.0, u, FundingDirection::invest);
    const double c_spread = a * s > 0.0 ? policy.c_plus_spread : policy.c_minus_spread;
    const double pos = std::max(1.0 - a, 0.0);
    const double neg = std::min(1.0 - a, 0.0);
    double cva = 0.0, dva = 0.0;
    if (s > 0) {
      cva = pos * cr.lambda_CI * cr.lgd_C;
      dva = neg * cr.lambda_IC * cr.lgd_I;
    } else if (s < 0) {
      cva = neg * cr.lambda_CI * cr.lgd_C;
      dva = pos * cr.lambda_IC * cr.lgd_I;
    }
    out.cva += len * cva;
    out.dva += len * dva;
    out.funding += len * (1.0 - a) * f_spread;
    out.collateral += len * a * c_spread;
    out.total += len * (f_spread + effective_rate_xi(a, s, cr, f_spread, c_spread));
  }
  return out;
}

PiecewiseConstant resolve_alpha(const CollateralPolicy& policy, const DealSchedule& deal, const FundingSpec& funding,
                                const CreditSpec& credit, const Market& market) {
  switch (policy.mode) {
    case CollateralMode::none: return 0.0;
    case CollateralMode::perfect: return 1.0;
    case CollateralMode::fraction: return policy.alpha;
    case CollateralMode::ccp: break;
  }
  // CCP: haircut from the clean value at inception and its conditional
  // expectation at the margin period of risk.
  const auto& paths = market.paths;
  auto data = path_data(deal, market);
  auto ind = induct(data, nullptr, paths);
  const std::size_t P = data.paths, K = data.dates;
  const double value_now = mean_and_error(column(ind.clean, P, K, 0)).mean;
  const std::size_t kd = paths.date_index(policy.delta);
  auto realized = column(ind.clean, P, K, kd);
  std::vector<double> horizon = kd == 0 ? realized : regress(paths, kd, realized);
  std::vector<double> discounted(P);
  const auto dir = value_now > 0.0 ? FundingDirection::borrow : FundingDirection::invest;
  const double spread = integrate_pieces(
      merged_cuts(0.0, policy.delta,
                  {funding.w_minus.breakpoints(), funding.w_plus.breakpoints(), funding.w_P.breakpoints(),
                   funding.w_I.breakpoints(), credit.lambda_P.breakpoints(), credit.lambda_I.breakpoints()}),
      [&](double u) { return funding_rate(funding, credit, 0.0, u, dir); });
  for (std::size_t p = 0; p < P; ++p) {
    double d = 1.0;
    for (std::size_t k = 0; k < kd; ++k) d *= data.discount[p * K + k];
    discounted[p] = horizon[p] * d * std::exp(-spread);
  }
  CollateralContext ctx{0.0, value_now, horizon, discounted};
  return collateral_fraction(policy, ctx);
}

// ---------------------------------------------------------------- reduced pricer

AdjustedPrice price_reduced(const DealSchedule& deal, const CollateralPolicy& policy, const FundingSpec& funding,
                            const CreditSpec& credit, const Market& market) {
  return run_reduced(deal, policy, funding, credit, market).price;
}

ExposureSigns exposure_signs(const DealSchedule& deal, const CollateralPolicy& policy, const FundingSpec& funding,
                             const CreditSpec& credit, const Market& market) {
  return run_reduced(deal, policy, funding, credit, market).signs;
}

// ---------------------------------------------------------------- master equation oracle

OracleResult price_master_oracle(const DealSchedule& deal, const CollateralPolicy& policy,
                                 const FundingSpec& funding, const CreditSpec& credit, const Market& market,
                                 const OracleSettings& settings) {
  policy.validate();
  credit.validate();
  funding.validate(credit);
  const auto& paths = market.paths;
  if (paths.num_dates() > settings.max_dates) {
    throw Error(ErrorCode::OutOfDomain, "oracle grid has " + std::to_string(paths.num_dates()) + " dates, limit " +
                                            std::to_string(settings.max_dates));
  }
  auto amounts = coupon_amounts(deal, market);
  auto alpha = resolve_alpha(policy, deal, funding, credit, market);
  const auto& curve = market.curves.discount;
  const auto& grid = paths.grid();
  const std::size_t P = paths.num_paths(), K = paths.num_dates();
  std::vector<double> value(P);
  for_each_path(P, [&](std::size_t p) {
    double v = 0.0;
    for (std::size_t k = K - 1; k-- > 0;) {
      v += amounts[p * K + k + 1];
      const auto from = paths.state(p, k);
      const auto to = paths.state(p, k + 1);
      const double x_bar = (to.int_x - from.int_x) / (grid[k + 1] - grid[k]);
      auto cuts = merged_cuts(grid[k], grid[k + 1],
                              {curve.pillars(), credit.lambda_CI.breakpoints(), credit.lambda_IC.breakpoints(),
                               credit.lambda_P.breakpoints(), credit.lambda_I.breakpoints(),
                               funding.w_minus.breakpoints(), funding.w_plus.breakpoints(),
                               funding.w_P.breakpoints(), funding.w_I.breakpoints(), alpha.breakpoints()});
      for (std::size_t i = cuts.size() - 1; i-- > 0;) {
        const double u = 0.5 * (cuts[i] + cuts[i + 1]);
        const double e = -(curve.log_discount(cuts[i + 1]) - curve.log_discount(cuts[i])) /
                             (cuts[i + 1] - cuts[i]) + x_bar;
        LocalRates r{e,
                     credit.lambda_CI(u),
                     credit.lambda_IC(u),
                     credit.lgd_C,
                     credit.lgd_I,
                     alpha(u),
                     funding_rate(funding, credit, 0.0, u, FundingDirection::invest),
                     funding_rate(funding, credit, 0.0, u, FundingDirection::borrow),
                     policy.c_plus_spread,
                     policy.c_minus_spread};
        v = solve_piece(cuts[i], cuts[i + 1], v, r, settings);
      }
    }
    value[p] = v + amounts[p * K];
  });
  auto me = mean_and_error(value);
  return {me.mean, me.std_error};
}

// ---------------------------------------------------------------- partial collateral

std::vector<double> dividend_discounts(double T, const CollateralPolicy& policy, const FundingSpec& funding,
                                       const CreditSpec& credit, const Market& market, const ExposureSigns& signs,
                                       const DealSchedule* deal_for_alpha) {
  policy.validate();
  const auto& paths = market.paths;
  const std::size_t kT = paths.date_index(T);
  PiecewiseConstant alpha;
  if (policy.mode == CollateralMode::ccp && !deal_for_alpha) {
    throw Error(ErrorCode::InvariantViolation, "CCP collateral needs the deal to size its haircut");
  }
  alpha = policy.mode == CollateralMode::ccp ? resolve_alpha(policy, *deal_for_alpha, funding, credit, market)
                                             : resolve_alpha(policy, DealSchedule{}, funding, credit, market);
  auto table = spread_table(paths.grid(), alpha, policy, funding, credit);
  std::vector<double> out(paths.num_paths());
  for (std::size_t p = 0; p < out.size(); ++p) {
    double total = 0.0;
    for (std::size_t k = 0; k < kT; ++k) total += table[k][static_cast<std::size_t>(signs.at(p, k) + 1)].total;
    out[p] = std::exp(-total);
  }
  return out;
}

namespace {

struct ForwardSample {
  double F0 = 0.0;
  std::vector<double> weight;   // D(0, T; e) / P_0(T)
  std::vector<double> forward;  // F_{T-x}(T, x)
};

std::vector<double> forward_weights(double T, const Market& market) {
  const auto& paths = market.paths;
  const std::size_t kT = paths.date_index(T);
  const double P0 = market.curves.discount.discount_factor(T);
  std::vector<double> w(paths.num_paths());
  for_each_path(w.size(), [&](std::size_t p) {
    w[p] = collateral_discount(paths.state(p, kT), market.curves.discount) / P0;
  });
  return w;
}

}  // namespace

ConvexityEstimate convexity_adjustment(double T, double x, std::span<const double> D, const Market& market) {
  const auto& paths = market.paths;
  if (D.size() != paths.num_paths()) {
    throw Error(ErrorCode::InvariantViolation, "one dividend discount per path required");
  }
  const auto& curve = market.curves.forward(x);
  const double F0 = curve.forward(T);
  if (F0 == 0.0) throw Error(ErrorCode::ZeroForward, "F_0(" + fmt(T) + ", " + fmt(x) + ") is zero");
  const double reset = T - x;
  if (reset < -kTimeTolerance) throw Error(ErrorCode::OutOfDomain, "need T >= x");
  auto w = forward_weights(T, market);
  std::vector<double> F(paths.num_paths(), F0);
  if (reset > kTimeTolerance) {
    const std::size_t kr = paths.date_index(reset);
    for_each_path(F.size(), [&](std::size_t p) {
      F[p] = reconstruct_forward(paths.state(p, kr), curve, market.model, T, x);
    });
  }
  const std::size_t n = F.size();
  double W = 0.0, WF = 0.0, WD = 0.0;
  for (std::size_t p = 0; p < n; ++p) {
    W += w[p];
    WF += w[p] * F[p];
    WD += w[p] * D[p];
  }
  const double F_bar = WF / W, D_bar = WD / W;
  double cov = 0.0;
  std::vector<double> u(n);
  for (std::size_t p = 0; p < n; ++p) {
    cov += w[p] * (F[p] - F_bar) * (D[p] - D[0]);
    u[p] = w[p] / (W / static_cast<double>(n)) * (F[p] - F_bar) * (D[p] - D_bar);
  }
  cov /= W;
  ConvexityEstimate out;
  out.forward = F0;
  out.expected_discount = D_bar;
  out.gamma = cov / (F0 * D_bar);
  out.std_error = mean_and_error(u).std_error / std::abs(F0 * D_bar);
  out.adjusted_forward = F0 * (1.0 + out.gamma);
  return out;
}

ConvexityEstimate convexity_adjustment(double T, double x, const CollateralPolicy& policy,
                                       const FundingSpec& funding, const CreditSpec& credit, const Market& market,
                                       const ExposureSigns& signs) {
  auto D = dividend_discounts(T, policy, funding, credit, market, signs);
  return convexity_adjustment(T, x, D, market);
}

BondEstimate adjusted_bond(double T, std::span<const double> D, const Market& market) {
  if (D.size() != market.paths.num_paths()) {
    throw Error(ErrorCode::InvariantViolation, "one dividend discount per path required");
  }
  auto w = forward_weights(T, market);
  const std::size_t n = w.size();
  double W = 0.0, WD = 0.0;
  for (std::size_t p = 0; p < n; ++p) {
    W += w[p];
    WD += w[p] * D[p];
  }
  const double P0 = market.curves.discount.discount_factor(T);
  const double D_bar = WD / W;
  std::vector<double> u(n);
  for (std::size_t p = 0; p < n; ++p) u[p] = w[p] / (W / static_cast<double>(n)) * (D[p] - D_bar);
  return {P0 * D_bar, P0 * mean_and_error(u).std_error};
}

BondEstimate adjusted_bond(double T, const CollateralPolicy& policy, const FundingSpec& funding,
                           const CreditSpec& credit, const Market& market, const ExposureSigns& signs) {
  auto D = dividend_discounts(T, policy, funding, credit, market, signs);
  return adjusted_bond(T, D, market);
}

AdjustedPrice price_irs_partial(double K, double T, double x, const CollateralPolicy& policy,
                                const FundingSpec& funding, const CreditSpec& credit, const Market& market) {
  const auto deal = DealSchedule::one_period_irs(K, T, x);
  auto reduced = run_reduced(deal, policy, funding, credit, market);
  auto D = dividend_discounts(T, policy, funding, credit, market, reduced.signs, &deal);
  auto gamma = convexity_adjustment(T, x, D, market);
  auto bond = adjusted_bond(T, D, market);
  AdjustedPrice out;
  out.clean_price = x * (K - gamma.forward) * market.curves.discount.discount_factor(T);
  out.adjusted_price = x * (K - gamma.adjusted_forward) * bond.value;
  out.std_error = reduced.price.std_error;
  out.alpha_at_inception = reduced.price.alpha_at_inception;
  const auto& d = reduced.price.decomposition;
  const double total = d.total();
  if (total != 0.0) {
    const double r = (out.adjusted_price - out.clean_price) / total;
    out.decomposition = {d.cva * r, d.dva * r, d.funding_cost * r, d.collateral_cost * r};
  }
  return out;
}

}  // namespace mce
