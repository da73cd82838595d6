#include "mce/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <optional>
#include <set>

#include <CLI11.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "mce/acceptance.hpp"
#include "mce/config.hpp"
#include "mce/errors.hpp"
#include "mce/report.hpp"
#include "mce/text.hpp"

namespace mce::cli {

namespace {

namespace fs = std::filesystem;

struct Options {
  std::string quotes, config, deal, policy, out, maturities, dump_paths;
  std::string format;
  std::optional<std::size_t> paths;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<double> grid_dt, tenor, strike, horizon;
  int only = 0;
};

struct Context {
  EngineConfig config;
  QuoteSet quotes;
  RunManifest manifest;
};

Context load_context(const Options& o, const std::string& command) {
  Context c;
  c.manifest.command = command;
  c.manifest.version = engine_version();
  if (!o.config.empty()) {
    c.config = load_config(o.config);
    c.manifest.add_input(o.config);
  }
  if (o.quotes.empty()) throw Error(ErrorCode::UsageError, "--quotes is required");
  c.quotes = parse_quotes(o.quotes);
  c.manifest.add_input(o.quotes);
  auto& sim = c.config.simulation;
  if (o.paths) {
    if (*o.paths == 0) throw Error(ErrorCode::OutOfDomain, "--paths must be >= 1");
    sim.num_paths = *o.paths;
  }
  if (o.seed) sim.seed = *o.seed;
  if (o.threads) {
    if (*o.threads < 0) throw Error(ErrorCode::OutOfDomain, "--threads must be >= 0");
    sim.threads = *o.threads;
  }
  if (o.grid_dt) {
    if (!(*o.grid_dt > 0.0)) throw Error(ErrorCode::OutOfDomain, "--grid-dt must be > 0");
    sim.grid_dt = *o.grid_dt;
  }
#ifdef _OPENMP
  if (sim.threads > 0) omp_set_num_threads(sim.threads);
#endif
  c.manifest.seed = sim.seed;
  return c;
}

std::vector<double> parse_list(const std::string& s, const char* flag) {
  std::vector<double> out;
  for (auto token : text::split(s, ',')) {
    auto v = text::parse_double(text::trim(token));
    if (!v || !(*v > 0.0)) throw Error(ErrorCode::UsageError, std::string(flag) + " expects positive numbers");
    out.push_back(*v);
  }
  return out;
}

// Sorted grid from 0 through the given dates, merged within 1e-9.
std::vector<double> make_grid(std::vector<double> dates) {
  dates.push_back(0.0);
  std::sort(dates.begin(), dates.end());
  std::vector<double> grid;
  for (double t : dates) {
    if (t < 0.0) continue;
    if (grid.empty() || t - grid.back() > 1e-9) grid.push_back(t);
  }
  return grid;
}

PathEnsemble run_paths(const Context& c, const std::vector<double>& grid) {
  const auto& sim = c.config.simulation;
  return simulate(c.config.model, grid, sim.num_paths, sim.seed, {sim.grid_dt, sim.threads});
}

void finish(Context& c, const Options& o, std::ostream& out) {
  if (o.out.empty()) return;
  write_json(fs::path(o.out) / "manifest.json", c.manifest.to_json());
  out << "wrote " << c.manifest.outputs.size() << " file(s) to " << o.out << "\n";
}

// Writes to --out/<name> when set, otherwise prints to `out`.
void publish(Context& c, const Options& o, const std::string& name, const std::string& content, std::ostream& out) {
  if (o.out.empty()) {
    out << content;
    return;
  }
  fs::create_directories(o.out);
  text::write_file(fs::path(o.out) / name, content);
  c.manifest.outputs.push_back(name);
}

int cmd_bootstrap(const Options& o, std::ostream& out) {
  auto c = load_context(o, "bootstrap");
  const auto curves = build_curves(c.quotes, c.config.curves);
  // instrument: 0 OIS, 1 IRS
  Table table{{"instrument", "tenor", "maturity", "quote", "model", "error"}, {}};
  for (const auto& q : c.quotes.ois_quotes) {
    double m = ois_swap_rate(curves.discount, q.maturity, c.config.curves.ois_fixed_period);
    table.rows.push_back({0.0, 0.0, q.maturity, q.rate, m, m - q.rate});
  }
  for (const auto& [x, strip] : c.quotes.irs_quotes) {
    for (const auto& q : strip) {
      double m = irs_swap_rate(curves.discount, curves.forward(x), q.maturity);
      table.rows.push_back({1.0, x, q.maturity, q.rate, m, m - q.rate});
    }
  }
  const auto format = parse_report_format(o.format.empty() ? "csv" : o.format);
  if (!o.out.empty()) {
    publish(c, o, "discount.csv", dump_discount_csv(curves.discount), out);
    publish(c, o, "forwards.csv", dump_forwards_csv(curves), out);
  }
  if (format == ReportFormat::json) {
    nlohmann::ordered_json doc;
    doc["repricing"] = table_json(table);
    publish(c, o, "repricing.json", doc.dump(2) + "\n", out);
  } else {
    publish(c, o, "repricing.csv", table_csv(table), out);
  }
  finish(c, o, out);
  return 0;
}

int cmd_simulate(const Options& o, std::ostream& out) {
  auto c = load_context(o, "simulate");
  const auto curves = build_curves(c.quotes, c.config.curves);
  const double horizon = o.horizon ? *o.horizon : std::min(curves.discount.max_time(), 10.0);
  if (!(horizon > 0.0)) throw Error(ErrorCode::OutOfDomain, "--horizon must be > 0");
  std::vector<double> dates;
  if (!o.maturities.empty()) {
    dates = parse_list(o.maturities, "--maturities");
  } else {
    const auto n = static_cast<long>(std::ceil(horizon / 0.25 - 1e-9));
    for (long i = 1; i <= n; ++i) dates.push_back(std::min(0.25 * static_cast<double>(i), horizon));
  }
  const auto grid = make_grid(dates);
  const auto paths = run_paths(c, grid);
  const std::size_t N = paths.num_factors(), P = paths.num_paths();
  Table table;
  table.columns = {"t", "P0", "mean_deflator", "se_deflator"};
  for (std::size_t i = 0; i < N; ++i) table.columns.push_back("mean_X" + std::to_string(i));
  for (std::size_t i = 0; i < N; ++i) table.columns.push_back("mean_v" + std::to_string(i));
  for (std::size_t k = 0; k < grid.size(); ++k) {
    std::vector<double> d(P), X(N, 0.0), v(N, 0.0);
    for (std::size_t p = 0; p < P; ++p) {
      const auto s = paths.state(p, k);
      d[p] = collateral_discount(s, curves.discount);
      for (std::size_t i = 0; i < N; ++i) {
        X[i] += s.X[i];
        v[i] += s.v[i];
      }
    }
    double mean = 0.0;
    for (double x : d) mean += x;
    mean /= static_cast<double>(P);
    double ss = 0.0;
    for (double x : d) ss += (x - mean) * (x - mean);
    const double se = P > 1 ? std::sqrt(ss / static_cast<double>(P - 1) / static_cast<double>(P)) : 0.0;
    std::vector<double> row{grid[k], curves.discount.discount_factor(grid[k]), mean, se};
    for (double x : X) row.push_back(x / static_cast<double>(P));
    for (double x : v) row.push_back(x / static_cast<double>(P));
    table.rows.push_back(row);
  }
  const auto format = parse_report_format(o.format.empty() ? "csv" : o.format);
  if (format == ReportFormat::json) {
    nlohmann::ordered_json doc;
    doc["paths"] = P;
    doc["seed"] = paths.seed();
    doc["summary"] = table_json(table);
    publish(c, o, "simulation.json", doc.dump(2) + "\n", out);
  } else {
    publish(c, o, "simulation.csv", table_csv(table), out);
  }
  if (!o.dump_paths.empty()) {
    text::write_file(o.dump_paths, paths.dump_csv());
    c.manifest.outputs.push_back(o.dump_paths);
  }
  finish(c, o, out);
  return 0;
}

CollateralPolicy load_policy_option(const Options& o, Context& c) {
  if (o.policy.empty()) return {};
  c.manifest.add_input(o.policy);
  return load_policy(o.policy);
}

int cmd_price(const Options& o, std::ostream& out) {
  auto c = load_context(o, "price");
  if (o.deal.empty()) throw Error(ErrorCode::UsageError, "--deal is required");
  const auto deal = load_deal(o.deal);
  c.manifest.add_input(o.deal);
  const auto policy = load_policy_option(o, c);
  const auto curves = build_curves(c.quotes, c.config.curves);
  std::vector<double> dates;
  for (const auto& f : deal.flows) {
    dates.push_back(f.pay_time);
    if (f.kind == FlowKind::libor) dates.push_back(f.reset_time());
  }
  if (policy.mode == CollateralMode::ccp) dates.push_back(policy.delta);
  const auto paths = run_paths(c, make_grid(dates));
  const Market market{curves, c.config.model, paths};
  const auto price = price_reduced(deal, policy, c.config.funding, c.config.credit, market);
  const auto format = parse_report_format(o.format.empty() ? "json" : o.format);
  if (format == ReportFormat::json) {
    nlohmann::ordered_json doc;
    doc["maturity"] = round_sig(deal.maturity());
    doc["paths"] = paths.num_paths();
    doc["seed"] = paths.seed();
    doc["price"] = price_json(price);
    publish(c, o, "price.json", doc.dump(2) + "\n", out);
  } else {
    publish(c, o, "price.csv", table_csv(price_table(price)), out);
  }
  finish(c, o, out);
  return 0;
}

int cmd_adjustments(const Options& o, std::ostream& out) {
  auto c = load_context(o, "adjustments");
  const auto policy = load_policy_option(o, c);
  const auto curves = build_curves(c.quotes, c.config.curves);
  if (curves.forwards.empty()) throw Error(ErrorCode::NoQuotes, "no IRS quotes for a forward curve");
  const double x = o.tenor ? *o.tenor : curves.forwards.begin()->first;
  const auto maturities = o.maturities.empty() ? std::vector<double>{1.0, 2.0, 3.0, 5.0}
                                               : parse_list(o.maturities, "--maturities");
  std::vector<double> dates;
  for (double T : maturities) {
    dates.push_back(T);
    dates.push_back(T - x);
  }
  if (policy.mode == CollateralMode::ccp) dates.push_back(policy.delta);
  const auto paths = run_paths(c, make_grid(dates));
  const Market market{curves, c.config.model, paths};
  const auto& fwd = curves.forward(x);
  Table table{{"T", "x", "F", "Fbar", "gamma", "P", "Pbar", "gamma_se"}, {}};
  for (double T : maturities) {
    const double K = o.strike ? *o.strike : fwd.forward(T);
    const auto deal = DealSchedule::one_period_irs(K, T, x);
    const auto signs = o.strike ? exposure_signs(deal, policy, c.config.funding, c.config.credit, market)
                                : ExposureSigns::fixed(1);
    const auto D = dividend_discounts(T, policy, c.config.funding, c.config.credit, market, signs, &deal);
    const auto g = convexity_adjustment(T, x, D, market);
    const auto bond = adjusted_bond(T, D, market);
    table.rows.push_back({T, x, g.forward, g.adjusted_forward, g.gamma, curves.discount.discount_factor(T),
                          bond.value, g.std_error});
  }
  const auto format = parse_report_format(o.format.empty() ? "csv" : o.format);
  if (format == ReportFormat::json) {
    nlohmann::ordered_json doc;
    doc["paths"] = paths.num_paths();
    doc["seed"] = paths.seed();
    doc["adjustments"] = table_json(table);
    publish(c, o, "adjustments.json", doc.dump(2) + "\n", out);
  } else {
    publish(c, o, "adjustments.csv", table_csv(table), out);
  }
  finish(c, o, out);
  return 0;
}

int cmd_selftest(const Options& o, std::ostream& out) {
  bool all = true;
  for (int id = 1; id <= 10; ++id) {
    if (o.only != 0 && o.only != id) continue;
    for (const auto& r : run_acceptance(id)) {
      out << format_result(r) << std::endl;
      all = all && r.passed;
    }
  }
  return all ? 0 : 1;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multi-curve collateral, funding and credit pricing engine", "mce"};
  app.require_subcommand(1);
  Options o;
  auto add_market = [&](CLI::App* sub) {
    sub->add_option("--quotes", o.quotes, "Quote file (.csv or .json)")->required();
    sub->add_option("--config", o.config, "Engine configuration JSON");
    sub->add_option("--out", o.out, "Output directory (default: print to stdout)");
    sub->add_option("--format", o.format, "Report format: json or csv");
  };
  auto add_sim = [&](CLI::App* sub) {
    sub->add_option("--paths", o.paths, "Monte Carlo paths");
    sub->add_option("--seed", o.seed, "Random seed");
    sub->add_option("--threads", o.threads, "OpenMP threads (0: default)");
    sub->add_option("--grid-dt", o.grid_dt, "Maximum Euler step (years)");
  };
  auto* bootstrap = app.add_subcommand("bootstrap", "Bootstrap curves and report repricing errors");
  add_market(bootstrap);
  auto* sim = app.add_subcommand("simulate", "Simulate the Markov state and summarize it");
  add_market(sim);
  add_sim(sim);
  sim->add_option("--horizon", o.horizon, "Last date with a quarterly grid (years)");
  sim->add_option("--maturities", o.maturities, "Comma-separated observation dates instead of the grid");
  sim->add_option("--dump-paths", o.dump_paths, "Write every simulated state to this CSV");
  auto* price = app.add_subcommand("price", "Price a deal under a collateral policy");
  add_market(price);
  add_sim(price);
  price->add_option("--deal", o.deal, "Deal JSON")->required();
  price->add_option("--policy", o.policy, "Collateral policy JSON (default: perfect)");
  auto* adj = app.add_subcommand("adjustments", "Convexity-adjusted forwards and adjusted bonds");
  add_market(adj);
  add_sim(adj);
  adj->add_option("--policy", o.policy, "Collateral policy JSON (default: perfect)");
  adj->add_option("--tenor", o.tenor, "LIBOR tenor x (default: shortest quoted)");
  adj->add_option("--maturities", o.maturities, "Comma-separated maturities T (default 1,2,3,5)");
  adj->add_option("--strike", o.strike, "Fixed rate of the one-period IRS that sets exposure signs");
  auto* self = app.add_subcommand("selftest", "Run the acceptance criteria");
  self->add_option("--only", o.only, "Run a single criterion id");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return 2;
  }

  try {
    if (bootstrap->parsed()) return cmd_bootstrap(o, out);
    if (sim->parsed()) return cmd_simulate(o, out);
    if (price->parsed()) return cmd_price(o, out);
    if (adj->parsed()) return cmd_adjustments(o, out);
    if (self->parsed()) return cmd_selftest(o, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return is_validation_error(e.code()) ? 2 : 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace mce::cli
