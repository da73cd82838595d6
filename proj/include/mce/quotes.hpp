#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace mce {

/// One market quote: maturity in year fractions, par rate as a decimal per annum.
struct ParQuote {
  double maturity = 0.0;
  double rate = 0.0;

  friend bool operator==(const ParQuote&, const ParQuote&) = default;
};

/// Market quotes for one valuation date.
///
/// OIS quotes define the collateral discount curve; IRS quotes are keyed by
/// the LIBOR tenor (years) of their floating leg. Rates are decimals (0.02),
/// never percent. Times are ACT/365-style year fractions.
struct QuoteSet {
  std::string as_of_date;  // ISO date, optional
  std::string day_count = "ACT/365F";
  std::vector<ParQuote> ois_quotes;
  std::map<double, std::vector<ParQuote>> irs_quotes;

  friend bool operator==(const QuoteSet&, const QuoteSet&) = default;
};

enum class QuoteFormat { csv, json };

/// Throws InvariantViolation describing the first broken rule.
void validate(const QuoteSet& quotes);

QuoteSet parse_quotes_csv(std::string_view text);
QuoteSet parse_quotes_json(std::string_view text);

/// Reads and validates a quote file. Errors: FileNotFound, MalformedRecord, InvariantViolation.
QuoteSet parse_quotes(const std::filesystem::path& path, QuoteFormat format);

/// Picks the format from the file extension (.json, anything else is CSV).
QuoteSet parse_quotes(const std::filesystem::path& path);

std::string serialize_quotes(const QuoteSet& quotes, QuoteFormat format);

}  // namespace mce
