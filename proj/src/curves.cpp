#include "mce/curves.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <sstream>

#include <boost/math/tools/toms748_solve.hpp>

#include "mce/errors.hpp"
#include "mce/text.hpp"

namespace mce {

namespace {

constexpr double kDomainTolerance = 1e-12;
constexpr double kDateTolerance = 1e-9;
constexpr double kSolverTolerance = 1e-14;
constexpr double kDiscountLow = 1e-12;
constexpr double kDiscountHigh = 10.0;

std::string fmt(double x) { return text::format_roundtrip(x); }

/// Fixed payment dates of an OIS of the given maturity, backwards from the
/// maturity in steps of `period`, with a short stub at the front.
std::vector<double> ois_fixed_dates(double maturity, double period) {
  std::vector<double> dates;
  for (double t = maturity; t > kDateTolerance; t -= period) dates.push_back(t);
  std::reverse(dates.begin(), dates.end());
  return dates;
}

}  // namespace

// ---------------------------------------------------------------- DiscountCurve

DiscountCurve::DiscountCurve(std::vector<double> pillars, std::vector<double> log_discounts,
                             bool extrapolate)
    : pillars_(std::move(pillars)), log_discounts_(std::move(log_discounts)), extrapolate_(extrapolate) {
  if (pillars_.size() < 2 || pillars_.size() != log_discounts_.size()) {
    throw Error(ErrorCode::InvariantViolation, "discount curve needs matching pillars beyond T=0");
  }
  if (pillars_.front() != 0.0 || log_discounts_.front() != 0.0) {
    throw Error(ErrorCode::InvariantViolation, "discount curve must start at P(0)=1");
  }
  for (std::size_t i = 1; i < pillars_.size(); ++i) {
    if (!(pillars_[i] > pillars_[i - 1])) {
      throw Error(ErrorCode::InvariantViolation, "discount pillars not increasing");
    }
    if (!std::isfinite(log_discounts_[i])) {
      throw Error(ErrorCode::InvariantViolation, "non-finite log discount");
    }
  }
}

DiscountCurve DiscountCurve::flat(double rate, double horizon, bool extrapolate) {
  return DiscountCurve({0.0, horizon}, {0.0, -rate * horizon}, extrapolate);
}

void DiscountCurve::check_domain(double T) const {
  if (!(T >= -kDomainTolerance) || (!extrapolate_ && T > max_time() + kDomainTolerance) ||
      std::isnan(T)) {
    throw Error(ErrorCode::OutOfDomain, "T=" + fmt(T) + " outside [0, " + fmt(max_time()) + "]");
  }
}

std::size_t DiscountCurve::segment(double T) const {
  auto it = std::upper_bound(pillars_.begin(), pillars_.end(), T);
  auto idx = static_cast<std::size_t>(it - pillars_.begin());
  if (idx == 0) return 0;
  return std::min(idx - 1, pillars_.size() - 2);
}

double DiscountCurve::log_discount(double T) const {
  check_domain(T);
  if (T <= 0.0) return 0.0;
  std::size_t i = segment(T);
  double t0 = pillars_[i], t1 = pillars_[i + 1];
  if (T == t1) return log_discounts_[i + 1];
  double w = (T - t0) / (t1 - t0);
  return log_discounts_[i] + w * (log_discounts_[i + 1] - log_discounts_[i]);
}

double DiscountCurve::discount_factor(double T) const {
  if (T == 0.0) return 1.0;
  return std::exp(log_discount(T));
}

double DiscountCurve::instantaneous_forward(double T) const {
  check_domain(T);
  std::size_t i = segment(std::max(T, 0.0));
  return -(log_discounts_[i + 1] - log_discounts_[i]) / (pillars_[i + 1] - pillars_[i]);
}

double DiscountCurve::ois_par_rate(double T, double x) const {
  if (!(x > 0.0) || T - x < -kDomainTolerance) {
    throw Error(ErrorCode::OutOfDomain, "need 0 <= T-x < T");
  }
  return (std::exp(log_discount(std::max(T - x, 0.0)) - log_discount(T)) - 1.0) / x;
}

// ---------------------------------------------------------------- ForwardCurve

ForwardCurve::ForwardCurve(double tenor, std::vector<double> pillars, std::vector<double> forwards,
                           double shift, bool extrapolate)
    : tenor_(tenor), pillars_(std::move(pillars)), forwards_(std::move(forwards)), shift_(shift),
      extrapolate_(extrapolate) {
  if (!(tenor_ > 0.0) || pillars_.empty() || pillars_.size() != forwards_.size()) {
    throw Error(ErrorCode::InvariantViolation, "forward curve needs a positive tenor and pillars");
  }
  for (std::size_t i = 0; i < pillars_.size(); ++i) {
    if (i > 0 && !(pillars_[i] > pillars_[i - 1])) {
      throw Error(ErrorCode::InvariantViolation, "forward pillars not increasing");
    }
    if (!(shift_ + forwards_[i] > 0.0)) {
      throw Error(ErrorCode::InconsistentStrip,
                  "k + F <= 0 at T=" + fmt(pillars_[i]) + " (x=" + fmt(tenor_) + ")");
    }
  }
}

double ForwardCurve::forward(double T) const {
  double lo = pillars_.front(), hi = pillars_.back();
  if (std::isnan(T) || T < lo - kDateTolerance || (!extrapolate_ && T > hi + kDateTolerance)) {
    throw Error(ErrorCode::OutOfDomain,
                "forward T=" + fmt(T) + " outside [" + fmt(lo) + ", " + fmt(hi) + "]");
  }
  if (T <= lo) return forwards_.front();
  if (T >= hi) return forwards_.back();
  auto it = std::upper_bound(pillars_.begin(), pillars_.end(), T);
  auto i = static_cast<std::size_t>(it - pillars_.begin()) - 1;
  // Pillars sit on i*x; snap so rounding in T does not blend neighbours.
  if (std::abs(T - pillars_[i]) <= kDateTolerance) return forwards_[i];
  if (std::abs(T - pillars_[i + 1]) <= kDateTolerance) return forwards_[i + 1];
  double w = (T - pillars_[i]) / (pillars_[i + 1] - pillars_[i]);
  return forwards_[i] + w * (forwards_[i + 1] - forwards_[i]);
}

// ---------------------------------------------------------------- bootstrap

double ois_swap_rate(const DiscountCurve& curve, double maturity, double fixed_period) {
  auto dates = ois_fixed_dates(maturity, fixed_period);
  double annuity = 0.0, prev = 0.0;
  for (double d : dates) {
    annuity += (d - prev) * curve.discount_factor(d);
    prev = d;
  }
  return (1.0 - curve.discount_factor(maturity)) / annuity;
}

DiscountCurve bootstrap_ois(const QuoteSet& quotes, const CurveOptions& options) {
  if (quotes.ois_quotes.empty()) throw Error(ErrorCode::NoQuotes, "no OIS quotes");
  if (!(options.ois_fixed_period > 0.0)) {
    throw Error(ErrorCode::OutOfDomain, "ois_fixed_period must be positive");
  }
  std::vector<double> pillars{0.0};
  std::vector<double> logs{0.0};

  for (const auto& q : quotes.ois_quotes) {
    double maturity = q.maturity;
    if (!(maturity > pillars.back())) {
      throw Error(ErrorCode::InvariantViolation, "maturities not increasing");
    }
    auto dates = ois_fixed_dates(maturity, options.ois_fixed_period);
    const double last_t = pillars.back();
    const double last_log = logs.back();

    // Discount at a fixed date given the trial pillar value: known curve up to
    // last_t, log-linear between last_t and the new pillar.
    auto objective = [&](double p_new) {
      double log_new = std::log(p_new);
      auto log_at = [&](double t) {
        if (t <= last_t) {
          auto it = std::upper_bound(pillars.begin(), pillars.end(), t);
          auto i = static_cast<std::size_t>(it - pillars.begin()) - 1;
          if (t == pillars[i]) return logs[i];
          double w = (t - pillars[i]) / (pillars[i + 1] - pillars[i]);
          return logs[i] + w * (logs[i + 1] - logs[i]);
        }
        double w = (t - last_t) / (maturity - last_t);
        return last_log + w * (log_new - last_log);
      };
      double annuity = 0.0, prev = 0.0;
      for (double d : dates) {
        annuity += (d - prev) * std::exp(log_at(d));
        prev = d;
      }
      return (1.0 - p_new) / annuity - q.rate;
    };

    double f_lo = objective(kDiscountLow);
    double f_hi = objective(kDiscountHigh);
    double root = 0.0;
    if (f_lo == 0.0) {
      root = kDiscountLow;
    } else if (f_hi == 0.0) {
      root = kDiscountHigh;
    } else if ((f_lo > 0.0) == (f_hi > 0.0)) {
      throw Error(ErrorCode::RootNotBracketed, "OIS maturity " + fmt(maturity));
    } else {
      std::uintmax_t max_iter = 200;
      auto tol = [](double a, double b) { return std::abs(b - a) <= kSolverTolerance; };
      auto [a, b] = boost::math::tools::toms748_solve(objective, kDiscountLow, kDiscountHigh, f_lo,
                                                      f_hi, tol, max_iter);
      root = std::abs(objective(a)) <= std::abs(objective(b)) ? a : b;
    }
    pillars.push_back(maturity);
    logs.push_back(std::log(root));
  }
  return DiscountCurve(std::move(pillars), std::move(logs), options.extrapolate);
}

double default_shift(double tenor, const CurveOptions& options) {
  for (const auto& [x, k] : options.shifts) {
    if (std::abs(x - tenor) <= kDateTolerance) return k;
  }
  return 1.0 / tenor;
}

ForwardCurve bootstrap_forwards(const QuoteSet& quotes, const DiscountCurve& discount, double tenor,
                                const CurveOptions& options) {
  const std::vector<ParQuote>* strip = nullptr;
  for (const auto& [x, s] : quotes.irs_quotes) {
    if (std::abs(x - tenor) <= kDateTolerance) strip = &s;
  }
  if (strip == nullptr || strip->empty()) {
    throw Error(ErrorCode::NoQuotes, "no IRS quotes for tenor " + fmt(tenor));
  }
  const double shift = default_shift(tenor, options);
  const double last_maturity = strip->back().maturity;
  if (last_maturity > discount.max_time() + kDateTolerance && !discount.extrapolates()) {
    throw Error(ErrorCode::OutOfDomain, "discount curve ends before IRS maturity " + fmt(last_maturity));
  }

  std::vector<double> pillars;
  std::vector<double> forwards;
  std::vector<double> discounts;
  double known_leg = 0.0;  // sum F_i P(T_i) over solved periods
  double annuity = 0.0;    // sum P(T_i) over solved periods

  for (const auto& q : *strip) {
    auto periods = static_cast<std::size_t>(std::llround(q.maturity / tenor));
    double new_annuity = 0.0;
    std::size_t first_new = pillars.size();
    for (std::size_t i = first_new + 1; i <= periods; ++i) {
      double t = static_cast<double>(i) * tenor;
      pillars.push_back(t);
      discounts.push_back(discount.discount_factor(t));
      new_annuity += discounts.back();
    }
    if (new_annuity <= 0.0) throw Error(ErrorCode::InvariantViolation, "maturities not increasing");
    // x cancels on both legs: K * sum P = sum F P
    double forward = (q.rate * (annuity + new_annuity) - known_leg) / new_annuity;
    if (!(shift + forward > 0.0)) {
      throw Error(ErrorCode::InconsistentStrip,
                  "forward " + fmt(forward) + " breaches shift bound at maturity " + fmt(q.maturity));
    }
    for (std::size_t i = first_new; i < pillars.size(); ++i) {
      forwards.push_back(forward);
      known_leg += forward * discounts[i];
    }
    annuity += new_annuity;
  }
  return ForwardCurve(tenor, std::move(pillars), std::move(forwards), shift, options.extrapolate);
}

double irs_swap_rate(const DiscountCurve& discount, const ForwardCurve& forwards, double maturity) {
  double x = forwards.tenor();
  auto periods = static_cast<std::size_t>(std::llround(maturity / x));
  double fixed = 0.0, floating = 0.0;
  for (std::size_t i = 1; i <= periods; ++i) {
    double t = static_cast<double>(i) * x;
    double p = discount.discount_factor(t);
    fixed += p;
    floating += forwards.forward(t) * p;
  }
  return floating / fixed;
}

const ForwardCurve& CurveSet::forward(double tenor) const {
  for (const auto& [x, curve] : forwards) {
    if (std::abs(x - tenor) <= kDateTolerance) return curve;
  }
  throw Error(ErrorCode::OutOfDomain, "no forward curve for tenor " + fmt(tenor));
}

CurveSet build_curves(const QuoteSet& quotes, const CurveOptions& options) {
  CurveSet set{bootstrap_ois(quotes, options), {}};
  for (const auto& [tenor, strip] : quotes.irs_quotes) {
    if (!strip.empty()) set.forwards.emplace(tenor, bootstrap_forwards(quotes, set.discount, tenor, options));
  }
  return set;
}

std::string dump_discount_csv(const DiscountCurve& curve) {
  std::ostringstream out;
  out << "T,logP\n";
  for (std::size_t i = 0; i < curve.pillars().size(); ++i) {
    out << text::format_roundtrip(curve.pillars()[i]) << ","
        << text::format_roundtrip(curve.log_discounts()[i]) << "\n";
  }
  return out.str();
}

std::string dump_forwards_csv(const CurveSet& curves) {
  std::ostringstream out;
  out << "T,x,F\n";
  for (const auto& [x, curve] : curves.forwards) {
    for (std::size_t i = 0; i < curve.pillars().size(); ++i) {
      out << text::format_roundtrip(curve.pillars()[i]) << "," << text::format_roundtrip(x) << ","
          << text::format_roundtrip(curve.forwards()[i]) << "\n";
    }
  }
  return out.str();
}

}  // namespace mce
