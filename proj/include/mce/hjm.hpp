#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "mce/curves.hpp"
#include "mce/piecewise.hpp"

namespace mce {

/// Raw volatility parameters as read from configuration. Matrices are
/// row-major N x N.
struct VolatilityParams {
  std::size_t num_factors = 1;
  std::vector<PiecewiseConstant> mean_reversion;       // a_i(t), one per factor
  std::map<double, std::vector<double>> tenor_weights;  // q per tenor and factor; absent tenor -> 1
  std::vector<double> loadings;                         // R, upper triangular
  std::vector<double> kappa, theta, nu, v_bar;          // square-root variance per factor
  std::vector<double> rho;                              // rho_ij = corr(dZ_i, dW_j)
};

/// Validated separable volatility structure
///   sigma_t(u; T, x) = h_t^T (q(u; T, x) o g(t, u)),  h_t = diag(sqrt(v_t)) R,
/// with g(t, u) = exp(-int_t^u a) factor by factor.
class VolatilitySpec {
 public:
  explicit VolatilitySpec(VolatilityParams params);

  /// Deterministic one-factor model: constant mean reversion, h = sigma.
  static VolatilitySpec one_factor(double mean_reversion, double sigma);
  /// N factors with h identically zero.
  static VolatilitySpec zero_vol(std::size_t num_factors = 1);

  std::size_t num_factors() const { return n_; }
  const VolatilityParams& params() const { return params_; }

  double mean_reversion(std::size_t factor, double t) const { return params_.mean_reversion[factor](t); }
  const PiecewiseConstant& mean_reversion_curve(std::size_t factor) const {
    return params_.mean_reversion[factor];
  }
  /// q_i(x); ones for x = 0 (the OIS limit) and for tenors without weights.
  std::vector<double> tenor_weights(double tenor) const;

  double loading(std::size_t i, std::size_t j) const { return params_.loadings[i * n_ + j]; }
  /// (R R^T)_ij
  double loading_product(std::size_t i, std::size_t j) const { return rrt_[i * n_ + j]; }
  /// Lower factor L of the joint (W, Z) correlation, 2N x 2N row-major.
  std::span<const double> correlation_factor() const { return chol_; }

 private:
  VolatilityParams params_;
  std::size_t n_;
  std::vector<double> rrt_;
  std::vector<double> chol_;
};

/// Markov state of the model at time t. Y is N x N row-major. `v` holds the
/// (nonnegative) variances, `v_aux` the untruncated Euler variable, and
/// `int_x` the running integral of sum_i X_i used for the short-rate deflator.
struct MarkovState {
  double t = 0.0;
  std::vector<double> X;
  std::vector<double> Y;
  std::vector<double> v;
  std::vector<double> v_aux;
  double int_x = 0.0;

  static MarkovState initial(const VolatilitySpec& spec);
  std::size_t num_factors() const { return X.size(); }
  double y(std::size_t i, std::size_t j) const { return Y[i * X.size() + j]; }

  friend bool operator==(const MarkovState&, const MarkovState&) = default;
};

/// g(t, u) per factor. Errors: InvalidInterval if t > u.
std::vector<double> g_factor(const VolatilitySpec& spec, double t, double u);

struct GIntegrals {
  std::vector<double> G0;  // int_{T0}^{T1} g(t, v) dv
  std::vector<double> G;   // int_{T0}^{T1} q(v; T, x) g(t, v) dv
};

/// Closed-form integrals for piecewise-constant mean reversion.
/// Errors: InvalidInterval unless t <= T0 <= T1.
GIntegrals G_integrals(const VolatilitySpec& spec, double t, double T0, double T1, double T, double x);

/// One Euler step of length dt. dW and dZ are independent standard normals;
/// the (W, Z) correlation is applied inside. Variance uses full truncation.
/// Errors: NonPositiveDt.
MarkovState evolve_state(const MarkovState& state, double dt, std::span<const double> dW,
                         std::span<const double> dZ, const VolatilitySpec& spec);

/// In-place variant used by the path kernels; `scratch` needs 4N doubles.
void evolve_in_place(MarkovState& state, double dt, std::span<const double> normals,
                     const VolatilitySpec& spec, std::span<double> scratch);

/// F_t(T, x) = (k + F_0) exp{G* . (X + Y (G0(t,t,T) - G*/2))} - k.
/// Errors: StaleState if state.t > T - x, OutOfDomain from the curve.
double reconstruct_forward(const MarkovState& state, const ForwardCurve& curve0,
                           const VolatilitySpec& spec, double T, double x);

/// P_t(T) = P_0(T)/P_0(t) exp{-G0 . X - G0 . Y G0 / 2},  G0 = G0(t, t, T).
double reconstruct_bond(const MarkovState& state, const DiscountCurve& curve0, const VolatilitySpec& spec,
                        double T);

/// Pathwise collateral-rate discount D(0, t; e) = P_0(t) exp(-int_0^t sum_i X_i).
double collateral_discount(const MarkovState& state, const DiscountCurve& curve0);

/// Pathwise D(t1, t2; e) between two states on the same path.
double collateral_discount(const MarkovState& from, const MarkovState& to, const DiscountCurve& curve0);

/// Simulated states at the requested observation dates, one slot per path.
class PathEnsemble {
 public:
  PathEnsemble(std::vector<double> grid, std::size_t num_paths, std::size_t num_factors,
               std::uint64_t seed);

  const std::vector<double>& grid() const { return grid_; }
  std::size_t num_paths() const { return num_paths_; }
  std::size_t num_dates() const { return grid_.size(); }
  std::size_t num_factors() const { return n_; }
  std::uint64_t seed() const { return seed_; }

  MarkovState state(std::size_t path, std::size_t date) const;
  void store(std::size_t path, std::size_t date, const MarkovState& state);

  /// Index of a grid date within 1e-9 years. Errors: GridTooCoarse.
  std::size_t date_index(double t) const;
  bool has_date(double t) const;

  /// Raw per-path storage, for bitwise comparisons.
  std::span<const double> data() const { return data_; }

  /// CSV "path,t,X...,Ydiag...,v...".
  std::string dump_csv() const;

 private:
  std::size_t stride() const { return n_ * n_ + 3 * n_ + 1; }

  std::vector<double> grid_;
  std::size_t num_paths_;
  std::size_t n_;
  std::uint64_t seed_;
  std::vector<double> data_;
};

struct SimulationOptions {
  double max_dt = 1.0 / 96.0;
  int threads = 0;  // 0: OpenMP default
};

/// Grid times must start at 0 and increase. Path p depends only on (seed, p),
/// so results are identical for any thread count. Errors: EmptyGrid.
PathEnsemble simulate(const VolatilitySpec& spec, const std::vector<double>& grid, std::size_t num_paths,
                      std::uint64_t seed, const SimulationOptions& options = {});

/// Single-threaded reference with the same per-path streams as `simulate`.
PathEnsemble simulate_serial(const VolatilitySpec& spec, const std::vector<double>& grid,
                             std::size_t num_paths, std::uint64_t seed,
                             const SimulationOptions& options = {});

}  // namespace mce
