#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "mce/credit_funding.hpp"
#include "mce/curves.hpp"
#include "mce/hjm.hpp"
#include "mce/pricing.hpp"

namespace mce {

struct SimulationSettings {
  double grid_dt = 1.0 / 96.0;
  std::size_t num_paths = 10000;
  std::uint64_t seed = 42;
  int threads = 0;
};

/// Model, simulation, curve, credit and funding settings of one run.
struct EngineConfig {
  VolatilitySpec model = VolatilitySpec::one_factor(0.0, 0.01);
  SimulationSettings simulation;
  CurveOptions curves;
  CreditSpec credit;
  FundingSpec funding;
};

/// Parses a flat JSON object. Errors: UnknownKey, OutOfDomain,
/// MalformedRecord, InvariantViolation.
EngineConfig validate_config(std::string_view json_text);
EngineConfig load_config(const std::filesystem::path& path);

/// {"mode": "none|perfect|fraction|ccp", "alpha", "c_plus_spread",
///  "c_minus_spread", "delta_days", "quantile_q", "haircut_method": "var|price"}
CollateralPolicy parse_policy(std::string_view json_text);
CollateralPolicy load_policy(const std::filesystem::path& path);

/// Either {"flows": [{pay_time, kind, accrual, rate, notional, sign}]} or a
/// generator {"type": "swap|one_period_irs|zero_coupon|fixed_bond", ...}.
DealSchedule parse_deal(std::string_view json_text);
DealSchedule load_deal(const std::filesystem::path& path);

}  // namespace mce
