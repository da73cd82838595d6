#pragma once

#include <string>
#include <vector>

#include "mce/quotes.hpp"

namespace mce {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
  double time_limit = 0.0;  // 0: none
};

/// Ten-pillar OIS strip with 3M and 6M IRS strips.
QuoteSet synthetic_quotes();

CriterionResult check_bootstrap_roundtrip();
CriterionResult check_zero_vol_reduction();
CriterionResult check_martingale();
CriterionResult check_cir_moments();
CriterionResult check_oracle_equivalence();
CriterionResult check_limit_reductions();
CriterionResult check_convexity();
CriterionResult check_uncollateralized_bond();
CriterionResult check_haircut_bounds();
CriterionResult check_determinism();

/// Runs all criteria in order; `only` selects one id (0: all).
std::vector<CriterionResult> run_acceptance(int only = 0);

/// "[PASS] 1 bootstrap round-trip (0.01s): detail"
std::string format_result(const CriterionResult& result);

}  // namespace mce
