#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "mce/pricing.hpp"

namespace mce {

enum class ReportFormat { json, csv };

ReportFormat parse_report_format(const std::string& name);

/// Column-oriented numeric table; cells print with 15 significant digits.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

/// Value rounded to `digits` significant digits, so JSON output carries no
/// more precision than the CSV output.
double round_sig(double value, int digits = 15);

std::string table_csv(const Table& table);
nlohmann::ordered_json table_json(const Table& table);

/// {clean_price, adjusted_price, std_error, alpha_at_inception,
///  decomposition: {cva, dva, funding_cost, collateral_cost}}
nlohmann::ordered_json price_json(const AdjustedPrice& price);
Table price_table(const AdjustedPrice& price);

/// Run record written next to every output set.
struct RunManifest {
  std::string command;
  std::vector<std::pair<std::string, std::string>> inputs;  // path, digest
  std::uint64_t seed = 0;
  std::string version;
  std::vector<std::string> outputs;

  void add_input(const std::filesystem::path& path);
  nlohmann::ordered_json to_json() const;
};

std::string engine_version();

/// Serializes with a trailing newline. Errors: IoError.
void write_json(const std::filesystem::path& path, const nlohmann::ordered_json& doc);

/// Writes `doc` as JSON, or `table` as CSV. Errors: IoError.
void emit_report(const std::filesystem::path& path, const nlohmann::ordered_json& doc, const Table& table,
                 ReportFormat format);

}  // namespace mce
