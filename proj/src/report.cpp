#include "mce/report.hpp"

#include "mce/errors.hpp"
#include "mce/text.hpp"

namespace mce {

ReportFormat parse_report_format(const std::string& name) {
  if (name == "json") return ReportFormat::json;
  if (name == "csv") return ReportFormat::csv;
  throw Error(ErrorCode::UsageError, "format must be json or csv, got '" + name + "'");
}

double round_sig(double value, int digits) {
  return *text::parse_double(text::format_sig(value, digits));
}

std::string table_csv(const Table& table) {
  std::string out;
  for (std::size_t i = 0; i < table.columns.size(); ++i) {
    if (i) out += ',';
    out += table.columns[i];
  }
  out += '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += text::format_sig(row[i], 15);
    }
    out += '\n';
  }
  return out;
}

nlohmann::ordered_json table_json(const Table& table) {
  auto rows = nlohmann::ordered_json::array();
  for (const auto& row : table.rows) {
    nlohmann::ordered_json r;
    for (std::size_t i = 0; i < row.size() && i < table.columns.size(); ++i) r[table.columns[i]] = round_sig(row[i]);
    rows.push_back(std::move(r));
  }
  return rows;
}

nlohmann::ordered_json price_json(const AdjustedPrice& p) {
  nlohmann::ordered_json out;
  out["clean_price"] = round_sig(p.clean_price);
  out["adjusted_price"] = round_sig(p.adjusted_price);
  out["std_error"] = round_sig(p.std_error);
  out["alpha_at_inception"] = round_sig(p.alpha_at_inception);
  out["decomposition"] = {{"cva", round_sig(p.decomposition.cva)},
                          {"dva", round_sig(p.decomposition.dva)},
                          {"funding_cost", round_sig(p.decomposition.funding_cost)},
                          {"collateral_cost", round_sig(p.decomposition.collateral_cost)}};
  return out;
}

Table price_table(const AdjustedPrice& p) {
  return {{"clean_price", "adjusted_price", "std_error", "alpha_at_inception", "cva", "dva", "funding_cost",
           "collateral_cost"},
          {{p.clean_price, p.adjusted_price, p.std_error, p.alpha_at_inception, p.decomposition.cva,
            p.decomposition.dva, p.decomposition.funding_cost, p.decomposition.collateral_cost}}};
}

void RunManifest::add_input(const std::filesystem::path& path) {
  inputs.emplace_back(path.string(), text::fnv1a_hex(text::read_file(path)));
}

nlohmann::ordered_json RunManifest::to_json() const {
  nlohmann::ordered_json out;
  out["command"] = command;
  auto in = nlohmann::ordered_json::array();
  for (const auto& [path, digest] : inputs) in.push_back({{"path", path}, {"fnv1a", digest}});
  out["inputs"] = in;
  out["seed"] = seed;
  out["version"] = version;
  out["outputs"] = outputs;
  return out;
}

std::string engine_version() { return "mce 1.0.0"; }

void write_json(const std::filesystem::path& path, const nlohmann::ordered_json& doc) {
  text::write_file(path, doc.dump(2) + "\n");
}

void emit_report(const std::filesystem::path& path, const nlohmann::ordered_json& doc, const Table& table,
                 ReportFormat format) {
  if (format == ReportFormat::json) {
    write_json(path, doc);
  } else {
    text::write_file(path, table_csv(table));
  }
}

}  // namespace mce
