#include <doctest.h>

#include "mce/errors.hpp"
#include "mce/quotes.hpp"
#include "test_util.hpp"

using namespace mce;
using mce::testing::code_of;

TEST_CASE("CSV quotes parse with metadata") {
  auto q = parse_quotes_csv(
      "# as_of: 2024-01-02\n# day_count: ACT/365F\ninstrument,maturity,tenor,rate\n"
      "OIS,0.5,,0.011\nOIS,1,,0.0125\nIRS,1,0.25,0.015\nIRS,2,0.25,0.0175\n");
  CHECK(q.as_of_date == "2024-01-02");
  REQUIRE(q.ois_quotes.size() == 2);
  CHECK(q.ois_quotes[1].rate == 0.0125);
  REQUIRE(q.irs_quotes.count(0.25) == 1);
  CHECK(q.irs_quotes.at(0.25).size() == 2);
}

TEST_CASE("malformed CSV records name the line") {
  try {
    parse_quotes_csv("instrument,maturity,tenor,rate\nOIS,1,,abc\n");
    FAIL("expected MalformedRecord");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MalformedRecord);
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
  CHECK(code_of([] { parse_quotes_csv("maturity,rate\n1,0.01\n"); }) == ErrorCode::MalformedRecord);
  CHECK(code_of([] { parse_quotes_csv("instrument,maturity,tenor,rate\nOIS,1,0.25,0.01\n"); }) ==
        ErrorCode::MalformedRecord);
  CHECK(code_of([] { parse_quotes_csv("instrument,maturity,tenor,rate\nFRA,1,0.25,0.01\n"); }) ==
        ErrorCode::MalformedRecord);
}

TEST_CASE("quote invariants") {
  CHECK(code_of([] { parse_quotes_csv("instrument,maturity,tenor,rate\nOIS,2,,0.01\nOIS,1,,0.01\n"); }) ==
        ErrorCode::InvariantViolation);
  CHECK(code_of([] { parse_quotes_csv("instrument,maturity,tenor,rate\nIRS,1.1,0.25,0.01\n"); }) ==
        ErrorCode::InvariantViolation);
  CHECK(code_of([] { parse_quotes_csv("instrument,maturity,tenor,rate\n"); }) == ErrorCode::InvariantViolation);
}

TEST_CASE("JSON and CSV round-trip") {
  auto q = parse_quotes(MCE_DATA_DIR "/quotes.csv");
  CHECK(q.ois_quotes.size() == 10);
  CHECK(q.irs_quotes.size() == 2);
  CHECK(parse_quotes_json(serialize_quotes(q, QuoteFormat::json)) == q);
  CHECK(parse_quotes_csv(serialize_quotes(q, QuoteFormat::csv)) == q);
}

TEST_CASE("missing quote file") {
  CHECK(code_of([] { parse_quotes("/nonexistent/quotes.csv"); }) == ErrorCode::FileNotFound);
}
