#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "mce/quotes.hpp"

namespace mce {

struct CurveOptions {
  /// Fixed-leg period of multi-period OIS quotes (years). Quotes with
  /// maturity up to this value are single-period.
  double ois_fixed_period = 1.0;
  /// Flat-forward extrapolation past the last pillar instead of OutOfDomain.
  bool extrapolate = false;
  /// Shift k(T,x) per tenor; tenors missing here use 1/x.
  std::map<double, double> shifts;
};

/// OIS-collateralized discount curve P_0(T;e), log-linear in discount
/// factors, so instantaneous forwards are piecewise constant between pillars.
class DiscountCurve {
 public:
  DiscountCurve(std::vector<double> pillars, std::vector<double> log_discounts,
                bool extrapolate = false);

  /// Flat continuously-compounded curve out to `horizon`.
  static DiscountCurve flat(double rate, double horizon, bool extrapolate = false);

  double discount_factor(double T) const;
  double log_discount(double T) const;

  /// -d/dT ln P. At a pillar the right-limit is returned (the left one at the last pillar).
  double instantaneous_forward(double T) const;

  /// (1/x)(P(T-x)/P(T) - 1): fair rate of a one-period OIS.
  double ois_par_rate(double T, double x) const;

  std::span<const double> pillars() const { return pillars_; }
  std::span<const double> log_discounts() const { return log_discounts_; }
  double max_time() const { return pillars_.back(); }
  bool extrapolates() const { return extrapolate_; }

 private:
  std::size_t segment(double T) const;
  void check_domain(double T) const;

  std::vector<double> pillars_;
  std::vector<double> log_discounts_;
  bool extrapolate_;
};

/// Tenor-specific LIBOR forward curve F_0(T, x) on the tenor grid T_i = i x,
/// linear between pillars, with shift k(T, x).
class ForwardCurve {
 public:
  ForwardCurve(double tenor, std::vector<double> pillars, std::vector<double> forwards, double shift,
               bool extrapolate = false);

  double forward(double T) const;
  double tenor() const { return tenor_; }
  double shift() const { return shift_; }
  std::span<const double> pillars() const { return pillars_; }
  std::span<const double> forwards() const { return forwards_; }

 private:
  double tenor_;
  std::vector<double> pillars_;
  std::vector<double> forwards_;
  double shift_;
  bool extrapolate_;
};

/// Solves discount pillars sequentially so every OIS quote reprices.
/// Errors: NoQuotes, RootNotBracketed.
DiscountCurve bootstrap_ois(const QuoteSet& quotes, const CurveOptions& options = {});

/// Par rate of a multi-period OIS on `curve` with the same fixed schedule
/// the bootstrap uses.
double ois_swap_rate(const DiscountCurve& curve, double maturity, double fixed_period);

/// Forwards on the tenor grid, piecewise flat between quoted maturities,
/// solved quote by quote. Errors: NoQuotes, OutOfDomain, InconsistentStrip.
ForwardCurve bootstrap_forwards(const QuoteSet& quotes, const DiscountCurve& discount, double tenor,
                                const CurveOptions& options = {});

/// Par rate of a fixed-vs-LIBOR swap paying every `x` up to `maturity`.
double irs_swap_rate(const DiscountCurve& discount, const ForwardCurve& forwards, double maturity);

double default_shift(double tenor, const CurveOptions& options);

/// Discount curve plus one forward curve per quoted tenor.
struct CurveSet {
  DiscountCurve discount;
  std::map<double, ForwardCurve> forwards;

  /// Tenor match within 1e-9. Throws OutOfDomain for an unknown tenor.
  const ForwardCurve& forward(double tenor) const;
};

CurveSet build_curves(const QuoteSet& quotes, const CurveOptions& options = {});

/// CSV dumps: "T,logP" and "T,x,F".
std::string dump_discount_csv(const DiscountCurve& curve);
std::string dump_forwards_csv(const CurveSet& curves);

}  // namespace mce
