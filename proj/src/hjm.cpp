#include "mce/hjm.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include <Eigen/Dense>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "mce/errors.hpp"
#include "mce/text.hpp"

namespace mce {

namespace {

constexpr double kTimeTolerance = 1e-9;

std::vector<double> broadcast(const std::vector<double>& v, std::size_t n, double fallback,
                              const char* name) {
  if (v.empty()) return std::vector<double>(n, fallback);
  if (v.size() == 1) return std::vector<double>(n, v[0]);
  if (v.size() != n) {
    throw Error(ErrorCode::InvariantViolation, std::string(name) + " needs one entry per factor");
  }
  return v;
}

/// int_{s0}^{s1} exp(-c (v - s0)) dv
double decay_integral(double c, double len) {
  if (c == 0.0) return len;
  return -std::expm1(-c * len) / c;
}

}  // namespace

// ---------------------------------------------------------------- VolatilitySpec

VolatilitySpec::VolatilitySpec(VolatilityParams params) : params_(std::move(params)) {
  n_ = params_.num_factors;
  if (n_ == 0) throw Error(ErrorCode::InvariantViolation, "num_factors must be >= 1");
  auto& p = params_;
  if (p.mean_reversion.empty()) p.mean_reversion.assign(n_, PiecewiseConstant(0.0));
  if (p.mean_reversion.size() == 1 && n_ > 1) p.mean_reversion.assign(n_, p.mean_reversion[0]);
  if (p.mean_reversion.size() != n_) {
    throw Error(ErrorCode::InvariantViolation, "mean_reversion needs one curve per factor");
  }
  p.kappa = broadcast(p.kappa, n_, 0.0, "kappa");
  p.theta = broadcast(p.theta, n_, 1.0, "theta");
  p.nu = broadcast(p.nu, n_, 0.0, "nu");
  p.v_bar = broadcast(p.v_bar, n_, 1.0, "v_bar");
  for (std::size_t i = 0; i < n_; ++i) {
    if (p.kappa[i] < 0 || p.theta[i] < 0 || p.nu[i] < 0 || p.v_bar[i] < 0) {
      throw Error(ErrorCode::InvariantViolation, "square-root parameters must be >= 0");
    }
  }
  if (p.loadings.empty()) {
    p.loadings.assign(n_ * n_, 0.0);
    for (std::size_t i = 0; i < n_; ++i) p.loadings[i * n_ + i] = 0.01;
  }
  if (p.loadings.size() != n_ * n_) throw Error(ErrorCode::InvariantViolation, "R must be N x N");
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (p.loadings[i * n_ + j] != 0.0) {
        throw Error(ErrorCode::InvariantViolation, "R must be upper triangular");
      }
    }
  }
  for (auto& [tenor, q] : p.tenor_weights) {
    q = broadcast(q, n_, 1.0, "q");
    if (!(tenor > 0.0)) throw Error(ErrorCode::InvariantViolation, "q tenors must be positive");
  }
  if (p.rho.empty()) p.rho.assign(n_ * n_, 0.0);
  if (p.rho.size() != n_ * n_) throw Error(ErrorCode::InvariantViolation, "rho must be N x N");
  for (double r : p.rho) {
    if (!(r >= -1.0 && r <= 1.0)) throw Error(ErrorCode::InvariantViolation, "rho entries must lie in [-1, 1]");
  }

  rrt_.assign(n_ * n_, 0.0);
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t j = 0; j < n_; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < n_; ++k) s += loading(i, k) * loading(j, k);
      rrt_[i * n_ + j] = s;
    }
  }

  // Joint correlation of (W, Z): identity blocks, cross block corr(Z_i, W_j) = rho_ij.
  const auto m = static_cast<Eigen::Index>(2 * n_);
  Eigen::MatrixXd joint = Eigen::MatrixXd::Identity(m, m);
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t j = 0; j < n_; ++j) {
      auto zi = static_cast<Eigen::Index>(n_ + i), wj = static_cast<Eigen::Index>(j);
      joint(zi, wj) = p.rho[i * n_ + j];
      joint(wj, zi) = p.rho[i * n_ + j];
    }
  }
  Eigen::MatrixXd factor;
  Eigen::LLT<Eigen::MatrixXd> llt(joint);
  if (llt.info() == Eigen::Success) {
    factor = llt.matrixL();
  } else {
    // Semidefinite (e.g. |rho_ii| = 1): pivoted LDL^T, rejecting negative pivots.
    Eigen::LDLT<Eigen::MatrixXd> ldlt(joint);
    Eigen::VectorXd d = ldlt.vectorD();
    if (ldlt.info() != Eigen::Success || d.minCoeff() < -1e-12) {
      throw Error(ErrorCode::InvariantViolation, "joint (W, Z) correlation is not positive semidefinite");
    }
    Eigen::MatrixXd lower = ldlt.matrixL();
    Eigen::MatrixXd scaled = lower * d.cwiseMax(0.0).cwiseSqrt().asDiagonal();
    factor = ldlt.transpositionsP().transpose() * scaled;
  }
  chol_.resize(static_cast<std::size_t>(m * m));
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) chol_[static_cast<std::size_t>(i * m + j)] = factor(i, j);
  }
}

VolatilitySpec VolatilitySpec::one_factor(double mean_reversion, double sigma) {
  VolatilityParams p;
  p.num_factors = 1;
  p.mean_reversion = {PiecewiseConstant(mean_reversion)};
  p.loadings = {sigma};
  p.kappa = {0.0};
  p.theta = {1.0};
  p.nu = {0.0};
  p.v_bar = {1.0};
  return VolatilitySpec(std::move(p));
}

VolatilitySpec VolatilitySpec::zero_vol(std::size_t num_factors) {
  VolatilityParams p;
  p.num_factors = num_factors;
  p.loadings.assign(num_factors * num_factors, 0.0);
  p.v_bar.assign(num_factors, 0.0);
  return VolatilitySpec(std::move(p));
}

std::vector<double> VolatilitySpec::tenor_weights(double tenor) const {
  if (std::abs(tenor) > kTimeTolerance) {
    for (const auto& [x, q] : params_.tenor_weights) {
      if (std::abs(x - tenor) <= kTimeTolerance) return q;
    }
  }
  return std::vector<double>(n_, 1.0);
}

// ---------------------------------------------------------------- g and G

std::vector<double> g_factor(const VolatilitySpec& spec, double t, double u) {
  if (t > u) throw Error(ErrorCode::InvalidInterval, "g(t,u) needs t <= u");
  std::vector<double> g(spec.num_factors());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = std::exp(-spec.mean_reversion_curve(i).integral(t, u));
  return g;
}

GIntegrals G_integrals(const VolatilitySpec& spec, double t, double T0, double T1, double T, double x) {
  if (!(t <= T0 && T0 <= T1)) throw Error(ErrorCode::InvalidInterval, "need t <= T0 <= T1");
  (void)T;  // q is constant in (v, T) for a given tenor
  const std::size_t n = spec.num_factors();
  GIntegrals out{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
  if (T0 == T1) return out;
  auto q = spec.tenor_weights(x);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& a = spec.mean_reversion_curve(i);
    auto cuts = merged_cuts(T0, T1, {a.breakpoints()});
    double log_g = -a.integral(t, T0);
    double sum = 0.0;
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
      double len = cuts[k + 1] - cuts[k];
      double rate = a(0.5 * (cuts[k] + cuts[k + 1]));
      sum += std::exp(log_g) * decay_integral(rate, len);
      log_g -= rate * len;
    }
    out.G0[i] = sum;
    out.G[i] = q[i] * sum;
  }
  return out;
}

// ---------------------------------------------------------------- state

MarkovState MarkovState::initial(const VolatilitySpec& spec) {
  const std::size_t n = spec.num_factors();
  MarkovState s;
  s.X.assign(n, 0.0);
  s.Y.assign(n * n, 0.0);
  s.v = spec.params().v_bar;
  s.v_aux = spec.params().v_bar;
  return s;
}

void evolve_in_place(MarkovState& s, double dt, std::span<const double> normals, const VolatilitySpec& spec,
                     std::span<double> scratch) {
  if (!(dt > 0.0)) throw Error(ErrorCode::NonPositiveDt, "dt must be positive");
  const std::size_t n = spec.num_factors();
  const std::size_t m = 2 * n;
  auto L = spec.correlation_factor();
  const auto& p = spec.params();
  double* corr = scratch.data();   // 2N correlated normals (W then Z)
  double* sv = scratch.data() + m; // sqrt(v+)

  for (std::size_t i = 0; i < m; ++i) {
    // full row: the LDL^T fallback factor is not triangular
    double acc = 0.0;
    for (std::size_t j = 0; j < m; ++j) acc += L[i * m + j] * normals[j];
    corr[i] = acc;
  }
  for (std::size_t i = 0; i < n; ++i) sv[i] = std::sqrt(std::max(s.v_aux[i], 0.0));

  const double sqdt = std::sqrt(dt);
  double sum_x_old = 0.0, sum_x_new = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double a_i = spec.mean_reversion(i, s.t);
    double row = 0.0;
    for (std::size_t j = 0; j < n; ++j) row += s.Y[i * n + j];
    double diffusion = 0.0;
    for (std::size_t j = 0; j < n; ++j) diffusion += spec.loading(i, j) * corr[j];
    sum_x_old += s.X[i];
    s.X[i] += (row - a_i * s.X[i]) * dt + sv[i] * diffusion * sqdt;
    sum_x_new += s.X[i];
  }
  for (std::size_t i = 0; i < n; ++i) {
    double a_i = spec.mean_reversion(i, s.t);
    for (std::size_t j = 0; j < n; ++j) {
      double a_j = spec.mean_reversion(j, s.t);
      double m_ij = sv[i] * sv[j] * spec.loading_product(i, j);
      s.Y[i * n + j] += (m_ij - (a_i + a_j) * s.Y[i * n + j]) * dt;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    double vp = sv[i] * sv[i];
    s.v_aux[i] += p.kappa[i] * (p.theta[i] - vp) * dt + p.nu[i] * sv[i] * sqdt * corr[n + i];
    s.v[i] = std::max(s.v_aux[i], 0.0);
  }
  s.int_x += 0.5 * (sum_x_old + sum_x_new) * dt;
  s.t += dt;
}

MarkovState evolve_state(const MarkovState& state, double dt, std::span<const double> dW,
                         std::span<const double> dZ, const VolatilitySpec& spec) {
  const std::size_t n = spec.num_factors();
  if (dW.size() != n || dZ.size() != n) {
    throw Error(ErrorCode::InvariantViolation, "dW and dZ need one draw per factor");
  }
  std::vector<double> normals(dW.begin(), dW.end());
  normals.insert(normals.end(), dZ.begin(), dZ.end());
  std::vector<double> scratch(4 * n);
  MarkovState next = state;
  evolve_in_place(next, dt, normals, spec, scratch);
  return next;
}

// ---------------------------------------------------------------- reconstruction

double reconstruct_forward(const MarkovState& s, const ForwardCurve& curve0, const VolatilitySpec& spec,
                           double T, double x) {
  if (s.t > T - x + kTimeTolerance) {
    throw Error(ErrorCode::StaleState, "state time past the fixing date T - x");
  }
  const double k = curve0.shift();
  const double f0 = curve0.forward(T);
  const std::size_t n = spec.num_factors();
  const double t = std::min(s.t, T - x);
  auto gstar = G_integrals(spec, t, T - x, T, T, x).G;
  auto g0 = G_integrals(spec, t, t, T, T, 0.0).G0;
  double exponent = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double inner = s.X[i];
    for (std::size_t j = 0; j < n; ++j) inner += s.Y[i * n + j] * (g0[j] - 0.5 * gstar[j]);
    exponent += gstar[i] * inner;
  }
  if (exponent == 0.0) return f0;
  return (k + f0) * std::exp(exponent) - k;
}

double reconstruct_bond(const MarkovState& s, const DiscountCurve& curve0, const VolatilitySpec& spec,
                        double T) {
  if (T < s.t - kTimeTolerance) throw Error(ErrorCode::OutOfDomain, "bond maturity before state time");
  if (T <= s.t) return 1.0;
  const std::size_t n = spec.num_factors();
  auto g0 = G_integrals(spec, s.t, s.t, T, T, 0.0).G0;
  double exponent = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double yg = 0.0;
    for (std::size_t j = 0; j < n; ++j) yg += s.Y[i * n + j] * g0[j];
    exponent -= g0[i] * (s.X[i] + 0.5 * yg);
  }
  double ratio = std::exp(curve0.log_discount(T) - curve0.log_discount(s.t));
  return exponent == 0.0 ? ratio : ratio * std::exp(exponent);
}

double collateral_discount(const MarkovState& s, const DiscountCurve& curve0) {
  return std::exp(curve0.log_discount(s.t) - s.int_x);
}

double collateral_discount(const MarkovState& from, const MarkovState& to, const DiscountCurve& curve0) {
  return std::exp(curve0.log_discount(to.t) - curve0.log_discount(from.t) - (to.int_x - from.int_x));
}

// ---------------------------------------------------------------- ensemble

PathEnsemble::PathEnsemble(std::vector<double> grid, std::size_t num_paths, std::size_t num_factors,
                           std::uint64_t seed)
    : grid_(std::move(grid)), num_paths_(num_paths), n_(num_factors), seed_(seed) {
  if (grid_.empty()) throw Error(ErrorCode::EmptyGrid, "simulation grid is empty");
  if (grid_.front() != 0.0) throw Error(ErrorCode::InvariantViolation, "grid must start at 0");
  for (std::size_t i = 1; i < grid_.size(); ++i) {
    if (!(grid_[i] > grid_[i - 1])) throw Error(ErrorCode::InvariantViolation, "grid not increasing");
  }
  if (num_paths_ == 0) throw Error(ErrorCode::InvariantViolation, "num_paths must be >= 1");
  data_.assign(num_paths_ * grid_.size() * stride(), 0.0);
}

MarkovState PathEnsemble::state(std::size_t path, std::size_t date) const {
  const double* p = data_.data() + (path * grid_.size() + date) * stride();
  MarkovState s;
  s.t = grid_[date];
  s.X.assign(p, p + n_);
  p += n_;
  s.Y.assign(p, p + n_ * n_);
  p += n_ * n_;
  s.v.assign(p, p + n_);
  p += n_;
  s.v_aux.assign(p, p + n_);
  p += n_;
  s.int_x = *p;
  return s;
}

void PathEnsemble::store(std::size_t path, std::size_t date, const MarkovState& s) {
  double* p = data_.data() + (path * grid_.size() + date) * stride();
  p = std::copy(s.X.begin(), s.X.end(), p);
  p = std::copy(s.Y.begin(), s.Y.end(), p);
  p = std::copy(s.v.begin(), s.v.end(), p);
  p = std::copy(s.v_aux.begin(), s.v_aux.end(), p);
  *p = s.int_x;
}

std::size_t PathEnsemble::date_index(double t) const {
  auto it = std::lower_bound(grid_.begin(), grid_.end(), t - kTimeTolerance);
  if (it == grid_.end() || std::abs(*it - t) > kTimeTolerance) {
    throw Error(ErrorCode::GridTooCoarse, "date " + text::format_roundtrip(t) + " not on simulation grid");
  }
  return static_cast<std::size_t>(it - grid_.begin());
}

bool PathEnsemble::has_date(double t) const {
  auto it = std::lower_bound(grid_.begin(), grid_.end(), t - kTimeTolerance);
  return it != grid_.end() && std::abs(*it - t) <= kTimeTolerance;
}

std::string PathEnsemble::dump_csv() const {
  std::ostringstream out;
  out << "path,t";
  for (std::size_t i = 0; i < n_; ++i) out << ",X" << i;
  for (std::size_t i = 0; i < n_; ++i) out << ",Y" << i << i;
  for (std::size_t i = 0; i < n_; ++i) out << ",v" << i;
  out << "\n";
  for (std::size_t p = 0; p < num_paths_; ++p) {
    for (std::size_t k = 0; k < grid_.size(); ++k) {
      auto s = state(p, k);
      out << p << "," << text::format_roundtrip(s.t);
      for (double x : s.X) out << "," << text::format_roundtrip(x);
      for (std::size_t i = 0; i < n_; ++i) out << "," << text::format_roundtrip(s.y(i, i));
      for (double v : s.v) out << "," << text::format_roundtrip(v);
      out << "\n";
    }
  }
  return out.str();
}

// ---------------------------------------------------------------- simulation

namespace {

/// Path p draws from its own generator seeded by (seed, p), so its normals do
/// not depend on which thread runs it or in what order.
void simulate_path(const VolatilitySpec& spec, const std::vector<double>& grid, std::size_t path,
                   std::uint64_t seed, double max_dt, PathEnsemble& out) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(path), static_cast<std::uint32_t>(path >> 32), 0x6d6365u};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> normal;
  const std::size_t n = spec.num_factors();
  std::vector<double> normals(2 * n);
  std::vector<double> scratch(4 * n);

  MarkovState state = MarkovState::initial(spec);
  out.store(path, 0, state);
  for (std::size_t k = 1; k < grid.size(); ++k) {
    const double span = grid[k] - grid[k - 1];
    const auto steps = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(span / max_dt - 1e-9)));
    const double dt = span / static_cast<double>(steps);
    for (std::size_t s = 0; s < steps; ++s) {
      for (auto& z : normals) z = normal(rng);
      evolve_in_place(state, dt, normals, spec, scratch);
    }
    state.t = grid[k];  // drop accumulated rounding in t
    out.store(path, k, state);
  }
}

void check_inputs(const std::vector<double>& grid, const SimulationOptions& options) {
  if (grid.empty()) throw Error(ErrorCode::EmptyGrid, "simulation grid is empty");
  if (!(options.max_dt > 0.0)) throw Error(ErrorCode::NonPositiveDt, "grid dt must be positive");
}

}  // namespace

PathEnsemble simulate(const VolatilitySpec& spec, const std::vector<double>& grid, std::size_t num_paths,
                      std::uint64_t seed, const SimulationOptions& options) {
  check_inputs(grid, options);
  PathEnsemble out(grid, num_paths, spec.num_factors(), seed);
  const auto count = static_cast<long long>(num_paths);
#ifdef _OPENMP
  const int threads = options.threads > 0 ? options.threads : omp_get_max_threads();
#pragma omp parallel for schedule(static) num_threads(threads)
#endif
  for (long long p = 0; p < count; ++p) {
    simulate_path(spec, grid, static_cast<std::size_t>(p), seed, options.max_dt, out);
  }
  return out;
}

PathEnsemble simulate_serial(const VolatilitySpec& spec, const std::vector<double>& grid,
                             std::size_t num_paths, std::uint64_t seed, const SimulationOptions& options) {
  check_inputs(grid, options);
  PathEnsemble out(grid, num_paths, spec.num_factors(), seed);
  for (std::size_t p = 0; p < num_paths; ++p) simulate_path(spec, grid, p, seed, options.max_dt, out);
  return out;
}

}  // namespace mce
