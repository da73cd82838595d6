#include "mce/config.hpp"

#include <cmath>
#include <initializer_list>
#include <set>
#include <string>

#include <json.hpp>

#include "mce/errors.hpp"
#include "mce/text.hpp"

namespace mce {

namespace {

using nlohmann::json;

json parse_object(std::string_view text, const char* what) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::MalformedRecord, std::string(what) + ": " + e.what());
  }
  if (!doc.is_object()) throw Error(ErrorCode::MalformedRecord, std::string(what) + " must be a JSON object");
  return doc;
}

void check_keys(const json& doc, std::initializer_list<const char*> allowed, const char* what) {
  std::set<std::string> names(allowed.begin(), allowed.end());
  for (const auto& [key, _] : doc.items()) {
    if (!names.count(key)) throw Error(ErrorCode::UnknownKey, std::string(what) + ": unknown key '" + key + "'");
  }
}

double number(const json& v, const std::string& key) {
  if (!v.is_number()) throw Error(ErrorCode::MalformedRecord, "'" + key + "' must be a number");
  return v.get<double>();
}

std::vector<double> numbers(const json& v, const std::string& key) {
  if (v.is_number()) return {v.get<double>()};
  if (!v.is_array()) throw Error(ErrorCode::MalformedRecord, "'" + key + "' must be a number or array");
  std::vector<double> out;
  for (const auto& x : v) {
    if (x.is_array()) {
      for (const auto& y : x) out.push_back(number(y, key));
    } else {
      out.push_back(number(x, key));
    }
  }
  return out;
}

/// number, or {"times": [...], "values": [...]}
PiecewiseConstant piecewise(const json& v, const std::string& key) {
  if (v.is_number()) return v.get<double>();
  if (!v.is_object() || !v.contains("times") || !v.contains("values")) {
    throw Error(ErrorCode::MalformedRecord, "'" + key + "' must be a number or {times, values}");
  }
  check_keys(v, {"times", "values"}, key.c_str());
  try {
    return PiecewiseConstant(numbers(v["times"], key), numbers(v["values"], key));
  } catch (const Error& e) {
    throw Error(ErrorCode::MalformedRecord, "'" + key + "': " + e.what());
  }
}

double tenor_key(const std::string& s, const std::string& key) {
  auto x = text::parse_double(s);
  if (x && *x > 0.0) return *x;
  throw Error(ErrorCode::MalformedRecord, "'" + key + "' keys must be positive tenors, got '" + s + "'");
}

void require(bool ok, const std::string& message) {
  if (!ok) throw Error(ErrorCode::OutOfDomain, message);
}

void require_nonnegative(const PiecewiseConstant& f, const std::string& key) {
  require(f.min_value() >= 0.0, "'" + key + "' must be >= 0");
}

}  // namespace

EngineConfig validate_config(std::string_view json_text) {
  const json doc = parse_object(json_text, "config");
  check_keys(doc,
             {"num_factors", "mean_reversion", "q", "shift", "R", "kappa", "theta", "nu", "v_bar", "rho",
              "grid_dt", "num_paths", "seed", "threads", "lgd_C", "lgd_I", "lambda_CI", "lambda_IC", "lambda_P",
              "lambda_I", "w_minus", "w_plus", "w_P", "w_I", "extrapolate", "ois_fixed_period"},
             "config");
  EngineConfig cfg;
  VolatilityParams vp;
  if (doc.contains("num_factors")) {
    const auto& n = doc["num_factors"];
    if (!n.is_number_integer() || n.get<long>() < 1) {
      throw Error(ErrorCode::OutOfDomain, "'num_factors' must be an integer >= 1");
    }
    vp.num_factors = n.get<std::size_t>();
  }
  if (doc.contains("mean_reversion")) {
    const auto& a = doc["mean_reversion"];
    if (a.is_array()) {
      for (const auto& x : a) vp.mean_reversion.push_back(piecewise(x, "mean_reversion"));
    } else {
      vp.mean_reversion.push_back(piecewise(a, "mean_reversion"));
    }
  }
  if (doc.contains("q")) {
    const auto& q = doc["q"];
    if (!q.is_object()) throw Error(ErrorCode::MalformedRecord, "'q' must map tenors to weights");
    for (const auto& [k, v] : q.items()) vp.tenor_weights[tenor_key(k, "q")] = numbers(v, "q");
  }
  if (doc.contains("R")) vp.loadings = numbers(doc["R"], "R");
  if (doc.contains("kappa")) vp.kappa = numbers(doc["kappa"], "kappa");
  if (doc.contains("theta")) vp.theta = numbers(doc["theta"], "theta");
  if (doc.contains("nu")) vp.nu = numbers(doc["nu"], "nu");
  if (doc.contains("v_bar")) vp.v_bar = numbers(doc["v_bar"], "v_bar");
  if (doc.contains("rho")) vp.rho = numbers(doc["rho"], "rho");
  cfg.model = VolatilitySpec(std::move(vp));

  if (doc.contains("shift")) {
    const auto& s = doc["shift"];
    if (!s.is_object()) throw Error(ErrorCode::MalformedRecord, "'shift' must map tenors to shifts");
    for (const auto& [k, v] : s.items()) cfg.curves.shifts[tenor_key(k, "shift")] = number(v, "shift");
  }
  if (doc.contains("extrapolate")) {
    if (!doc["extrapolate"].is_boolean()) throw Error(ErrorCode::MalformedRecord, "'extrapolate' must be boolean");
    cfg.curves.extrapolate = doc["extrapolate"].get<bool>();
  }
  if (doc.contains("ois_fixed_period")) {
    cfg.curves.ois_fixed_period = number(doc["ois_fixed_period"], "ois_fixed_period");
    require(cfg.curves.ois_fixed_period > 0.0, "'ois_fixed_period' must be > 0");
  }

  auto& sim = cfg.simulation;
  if (doc.contains("grid_dt")) {
    sim.grid_dt = number(doc["grid_dt"], "grid_dt");
    require(sim.grid_dt > 0.0, "'grid_dt' must be > 0");
  }
  if (doc.contains("num_paths")) {
    const auto& n = doc["num_paths"];
    require(n.is_number_integer() && n.get<long>() >= 1, "'num_paths' must be an integer >= 1");
    sim.num_paths = n.get<std::size_t>();
  }
  if (doc.contains("seed")) {
    const auto& s = doc["seed"];
    require(s.is_number_integer() && s.get<long long>() >= 0, "'seed' must be a nonnegative integer");
    sim.seed = s.get<std::uint64_t>();
  }
  if (doc.contains("threads")) {
    const auto& t = doc["threads"];
    require(t.is_number_integer() && t.get<long>() >= 0, "'threads' must be an integer >= 0");
    sim.threads = t.get<int>();
  }

  auto& cr = cfg.credit;
  for (auto [key, field] : {std::pair{"lgd_C", &cr.lgd_C}, std::pair{"lgd_I", &cr.lgd_I}}) {
    if (!doc.contains(key)) continue;
    *field = number(doc[key], key);
    require(*field >= 0.0 && *field <= 1.0, std::string("'") + key + "' must lie in [0, 1]");
  }
  for (auto [key, field] : {std::pair{"lambda_CI", &cr.lambda_CI}, std::pair{"lambda_IC", &cr.lambda_IC},
                            std::pair{"lambda_P", &cr.lambda_P}, std::pair{"lambda_I", &cr.lambda_I}}) {
    if (!doc.contains(key)) continue;
    *field = piecewise(doc[key], key);
    require_nonnegative(*field, key);
  }
  auto& fs = cfg.funding;
  for (auto [key, field] : {std::pair{"w_minus", &fs.w_minus}, std::pair{"w_plus", &fs.w_plus},
                            std::pair{"w_P", &fs.w_P}, std::pair{"w_I", &fs.w_I}}) {
    if (doc.contains(key)) *field = piecewise(doc[key], key);
  }
  cr.validate();
  fs.validate(cr);
  return cfg;
}

EngineConfig load_config(const std::filesystem::path& path) { return validate_config(text::read_file(path)); }

CollateralPolicy parse_policy(std::string_view json_text) {
  const json doc = parse_object(json_text, "policy");
  check_keys(doc,
             {"mode", "alpha", "c_spread", "c_plus_spread", "c_minus_spread", "delta_days", "quantile_q",
              "haircut_method"},
             "policy");
  CollateralPolicy p;
  if (doc.contains("mode")) {
    const auto m = doc["mode"].is_string() ? doc["mode"].get<std::string>() : "";
    if (m == "none") {
      p.mode = CollateralMode::none;
    } else if (m == "perfect") {
      p.mode = CollateralMode::perfect;
    } else if (m == "fraction") {
      p.mode = CollateralMode::fraction;
    } else if (m == "ccp") {
      p.mode = CollateralMode::ccp;
    } else {
      throw Error(ErrorCode::OutOfDomain, "policy mode must be none|perfect|fraction|ccp");
    }
  }
  if (doc.contains("alpha")) p.alpha = piecewise(doc["alpha"], "alpha");
  if (doc.contains("c_spread")) p.c_plus_spread = p.c_minus_spread = number(doc["c_spread"], "c_spread");
  if (doc.contains("c_plus_spread")) p.c_plus_spread = number(doc["c_plus_spread"], "c_plus_spread");
  if (doc.contains("c_minus_spread")) p.c_minus_spread = number(doc["c_minus_spread"], "c_minus_spread");
  if (doc.contains("delta_days")) p.delta = number(doc["delta_days"], "delta_days") / 365.0;
  if (doc.contains("quantile_q")) p.quantile_q = number(doc["quantile_q"], "quantile_q");
  if (doc.contains("haircut_method")) {
    const auto h = doc["haircut_method"].is_string() ? doc["haircut_method"].get<std::string>() : "";
    if (h == "var") {
      p.haircut_method = HaircutMethod::var;
    } else if (h == "price") {
      p.haircut_method = HaircutMethod::price;
    } else {
      throw Error(ErrorCode::OutOfDomain, "haircut_method must be var|price");
    }
  }
  p.validate();
  return p;
}

CollateralPolicy load_policy(const std::filesystem::path& path) { return parse_policy(text::read_file(path)); }

DealSchedule parse_deal(std::string_view json_text) {
  const json doc = parse_object(json_text, "deal");
  auto get = [&](const char* key, double fallback) {
    return doc.contains(key) ? number(doc[key], key) : fallback;
  };
  auto need = [&](const char* key) {
    if (!doc.contains(key)) throw Error(ErrorCode::MalformedRecord, std::string("deal needs '") + key + "'");
    return number(doc[key], key);
  };
  DealSchedule deal;
  if (doc.contains("flows")) {
    check_keys(doc, {"flows"}, "deal");
    if (!doc["flows"].is_array()) throw Error(ErrorCode::MalformedRecord, "'flows' must be an array");
    for (const auto& f : doc["flows"]) {
      if (!f.is_object()) throw Error(ErrorCode::MalformedRecord, "each flow must be an object");
      check_keys(f, {"pay_time", "kind", "accrual", "rate", "notional", "sign"}, "flow");
      CashFlow c;
      if (!f.contains("pay_time")) throw Error(ErrorCode::MalformedRecord, "flow needs 'pay_time'");
      c.pay_time = number(f["pay_time"], "pay_time");
      const auto kind = f.contains("kind") && f["kind"].is_string() ? f["kind"].get<std::string>() : "fixed";
      if (kind == "fixed") {
        c.kind = FlowKind::fixed;
      } else if (kind == "libor") {
        c.kind = FlowKind::libor;
      } else {
        throw Error(ErrorCode::OutOfDomain, "flow kind must be fixed|libor");
      }
      if (f.contains("accrual")) c.accrual = number(f["accrual"], "accrual");
      if (f.contains("rate")) c.rate = number(f["rate"], "rate");
      if (f.contains("notional")) c.notional = number(f["notional"], "notional");
      if (f.contains("sign")) c.sign = number(f["sign"], "sign");
      deal.flows.push_back(c);
    }
  } else {
    const auto type = doc.contains("type") && doc["type"].is_string() ? doc["type"].get<std::string>() : "";
    if (type == "swap") {
      check_keys(doc, {"type", "fixed_rate", "maturity", "tenor", "notional", "pay_fixed"}, "deal");
      bool pay_fixed = doc.contains("pay_fixed") && doc["pay_fixed"].is_boolean() && doc["pay_fixed"].get<bool>();
      deal = DealSchedule::swap(need("fixed_rate"), need("maturity"), need("tenor"), get("notional", 1.0),
                                pay_fixed);
    } else if (type == "one_period_irs") {
      check_keys(doc, {"type", "fixed_rate", "maturity", "tenor", "notional"}, "deal");
      deal = DealSchedule::one_period_irs(need("fixed_rate"), need("maturity"), need("tenor"), get("notional", 1.0));
    } else if (type == "zero_coupon") {
      check_keys(doc, {"type", "maturity", "amount"}, "deal");
      deal = DealSchedule::zero_coupon(need("maturity"), get("amount", 1.0));
    } else if (type == "fixed_bond") {
      check_keys(doc, {"type", "coupon", "maturity", "period", "notional"}, "deal");
      deal = DealSchedule::fixed_bond(need("coupon"), need("maturity"), get("period", 1.0), get("notional", 1.0));
    } else {
      throw Error(ErrorCode::MalformedRecord,
                  "deal needs 'flows' or 'type' in swap|one_period_irs|zero_coupon|fixed_bond");
    }
  }
  deal.validate();
  return deal;
}

DealSchedule load_deal(const std::filesystem::path& path) { return parse_deal(text::read_file(path)); }

}  // namespace mce
