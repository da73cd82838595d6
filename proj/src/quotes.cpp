#include "mce/quotes.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "mce/errors.hpp"
#include "mce/text.hpp"

namespace mce {

namespace {

constexpr double kTenorTolerance = 1e-9;

void check_strip(const std::vector<ParQuote>& quotes, const std::string& label, double tenor) {
  for (std::size_t i = 0; i < quotes.size(); ++i) {
    const auto& q = quotes[i];
    if (!(q.maturity > 0.0)) {
      throw Error(ErrorCode::InvariantViolation, label + ": maturity must be positive");
    }
    if (!std::isfinite(q.rate)) throw Error(ErrorCode::InvariantViolation, label + ": non-finite rate");
    if (i > 0 && quotes[i - 1].maturity == q.maturity) {
      throw Error(ErrorCode::InvariantViolation,
                  label + ": duplicate maturity " + text::format_roundtrip(q.maturity));
    }
    if (i > 0 && !(q.maturity > quotes[i - 1].maturity)) {
      throw Error(ErrorCode::InvariantViolation, "maturities not increasing (" + label + ")");
    }
    if (tenor > 0.0) {
      double periods = q.maturity / tenor;
      double rounded = std::round(periods);
      if (rounded < 1.0 || std::abs(periods - rounded) * tenor > kTenorTolerance) {
        throw Error(ErrorCode::InvariantViolation,
                    label + ": tenor does not divide maturity " + text::format_roundtrip(q.maturity));
      }
    }
  }
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

double field_double(std::string_view token, std::size_t line, const char* what) {
  auto v = text::parse_double(token);
  if (!v) {
    throw Error(ErrorCode::MalformedRecord,
                "line " + std::to_string(line) + ": bad " + what + " '" + std::string(token) + "'");
  }
  return *v;
}

}  // namespace

void validate(const QuoteSet& quotes) {
  bool any_irs = std::any_of(quotes.irs_quotes.begin(), quotes.irs_quotes.end(),
                             [](const auto& kv) { return !kv.second.empty(); });
  if (quotes.ois_quotes.empty() && !any_irs) {
    throw Error(ErrorCode::InvariantViolation, "no quotes");
  }
  check_strip(quotes.ois_quotes, "OIS", 0.0);
  for (const auto& [tenor, strip] : quotes.irs_quotes) {
    if (!(tenor > 0.0) || !std::isfinite(tenor)) {
      throw Error(ErrorCode::InvariantViolation, "IRS tenor must be positive");
    }
    check_strip(strip, "IRS " + text::format_roundtrip(tenor), tenor);
  }
}

QuoteSet parse_quotes_csv(std::string_view content) {
  QuoteSet out;
  bool header_seen = false;
  std::size_t line_no = 0;
  for (auto raw : text::split(content, '\n')) {
    ++line_no;
    auto line = text::trim(raw);
    if (line.empty()) continue;
    if (line.front() == '#') {
      // "# as_of: 2024-01-02" / "# day_count: ACT/365F"
      auto body = text::trim(line.substr(1));
      auto colon = body.find(':');
      if (colon != std::string_view::npos) {
        auto key = text::trim(body.substr(0, colon));
        auto value = std::string(text::trim(body.substr(colon + 1)));
        if (key == "as_of") out.as_of_date = value;
        if (key == "day_count") out.day_count = value;
      }
      continue;
    }
    auto fields = text::split(line, ',');
    if (!header_seen) {
      if (fields.size() != 4 || lower(text::trim(fields[0])) != "instrument" ||
          lower(text::trim(fields[1])) != "maturity" || lower(text::trim(fields[2])) != "tenor" ||
          lower(text::trim(fields[3])) != "rate") {
        throw Error(ErrorCode::MalformedRecord,
                    "line " + std::to_string(line_no) + ": expected header instrument,maturity,tenor,rate");
      }
      header_seen = true;
      continue;
    }
    if (fields.size() != 4) {
      throw Error(ErrorCode::MalformedRecord,
                  "line " + std::to_string(line_no) + ": expected 4 fields");
    }
    auto instrument = lower(text::trim(fields[0]));
    ParQuote q{field_double(fields[1], line_no, "maturity"), field_double(fields[3], line_no, "rate")};
    auto tenor_field = text::trim(fields[2]);
    if (instrument == "ois") {
      if (!tenor_field.empty()) {
        throw Error(ErrorCode::MalformedRecord,
                    "line " + std::to_string(line_no) + ": OIS rows take an empty tenor");
      }
      out.ois_quotes.push_back(q);
    } else if (instrument == "irs") {
      double tenor = field_double(tenor_field, line_no, "tenor");
      out.irs_quotes[tenor].push_back(q);
    } else {
      throw Error(ErrorCode::MalformedRecord,
                  "line " + std::to_string(line_no) + ": unknown instrument '" + instrument + "'");
    }
  }
  validate(out);
  return out;
}

QuoteSet parse_quotes_json(std::string_view content) {
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(content);
  } catch (const json::parse_error& e) {
    auto byte = std::min<std::size_t>(e.byte, content.size());
    auto line = 1 + std::count(content.begin(), content.begin() + static_cast<long>(byte), '\n');
    throw Error(ErrorCode::MalformedRecord, "line " + std::to_string(line) + ": " + e.what());
  }
  QuoteSet out;
  auto read_strip = [](const json& arr, const char* where) {
    if (!arr.is_array()) throw Error(ErrorCode::MalformedRecord, std::string(where) + " must be an array");
    std::vector<ParQuote> strip;
    for (const auto& item : arr) {
      if (!item.is_object() || !item.contains("maturity") || !item.contains("rate") ||
          !item["maturity"].is_number() || !item["rate"].is_number()) {
        throw Error(ErrorCode::MalformedRecord,
                    std::string(where) + ": each quote needs numeric maturity and rate");
      }
      strip.push_back({item["maturity"].get<double>(), item["rate"].get<double>()});
    }
    return strip;
  };
  try {
    if (!doc.is_object()) throw Error(ErrorCode::MalformedRecord, "top level must be an object");
    if (doc.contains("as_of")) out.as_of_date = doc["as_of"].get<std::string>();
    if (doc.contains("day_count")) out.day_count = doc["day_count"].get<std::string>();
    if (doc.contains("ois")) out.ois_quotes = read_strip(doc["ois"], "ois");
    if (doc.contains("irs")) {
      if (!doc["irs"].is_array()) throw Error(ErrorCode::MalformedRecord, "irs must be an array");
      for (const auto& block : doc["irs"]) {
        if (!block.contains("tenor") || !block["tenor"].is_number() || !block.contains("quotes")) {
          throw Error(ErrorCode::MalformedRecord, "irs block needs tenor and quotes");
        }
        double tenor = block["tenor"].get<double>();
        if (out.irs_quotes.count(tenor)) {
          throw Error(ErrorCode::InvariantViolation, "duplicate IRS tenor block");
        }
        out.irs_quotes[tenor] = read_strip(block["quotes"], "irs.quotes");
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedRecord, e.what());
  }
  validate(out);
  return out;
}

QuoteSet parse_quotes(const std::filesystem::path& path, QuoteFormat format) {
  if (!std::filesystem::exists(path)) throw Error(ErrorCode::FileNotFound, path.string());
  auto content = text::read_file(path);
  return format == QuoteFormat::json ? parse_quotes_json(content) : parse_quotes_csv(content);
}

QuoteSet parse_quotes(const std::filesystem::path& path) {
  auto ext = lower(path.extension().string());
  return parse_quotes(path, ext == ".json" ? QuoteFormat::json : QuoteFormat::csv);
}

std::string serialize_quotes(const QuoteSet& quotes, QuoteFormat format) {
  if (format == QuoteFormat::json) {
    nlohmann::ordered_json doc;
    doc["as_of"] = quotes.as_of_date;
    doc["day_count"] = quotes.day_count;
    auto strip_json = [](const std::vector<ParQuote>& strip) {
      auto arr = nlohmann::ordered_json::array();
      for (const auto& q : strip) arr.push_back({{"maturity", q.maturity}, {"rate", q.rate}});
      return arr;
    };
    doc["ois"] = strip_json(quotes.ois_quotes);
    doc["irs"] = nlohmann::ordered_json::array();
    for (const auto& [tenor, strip] : quotes.irs_quotes) {
      doc["irs"].push_back({{"tenor", tenor}, {"quotes", strip_json(strip)}});
    }
    return doc.dump(2) + "\n";
  }
  std::ostringstream out;
  if (!quotes.as_of_date.empty()) out << "# as_of: " << quotes.as_of_date << "\n";
  out << "# day_count: " << quotes.day_count << "\n";
  out << "instrument,maturity,tenor,rate\n";
  for (const auto& q : quotes.ois_quotes) {
    out << "OIS," << text::format_roundtrip(q.maturity) << ",," << text::format_roundtrip(q.rate) << "\n";
  }
  for (const auto& [tenor, strip] : quotes.irs_quotes) {
    for (const auto& q : strip) {
      out << "IRS," << text::format_roundtrip(q.maturity) << "," << text::format_roundtrip(tenor) << ","
          << text::format_roundtrip(q.rate) << "\n";
    }
  }
  return out.str();
}

}  // namespace mce
