#include <doctest.h>

#include <cmath>

#include "mce/errors.hpp"
#include "mce/piecewise.hpp"
#include "mce/text.hpp"

using namespace mce;

TEST_CASE("piecewise constant evaluation is right-continuous") {
  PiecewiseConstant f({0.0, 1.0, 3.0}, {0.1, 0.2, 0.4});
  CHECK(f(-1.0) == 0.1);
  CHECK(f(0.5) == 0.1);
  CHECK(f(1.0) == 0.2);
  CHECK(f(2.999) == 0.2);
  CHECK(f(3.0) == 0.4);
  CHECK(f(100.0) == 0.4);
  CHECK(f.min_value() == 0.1);
  CHECK_FALSE(f.is_constant());
  CHECK(PiecewiseConstant(0.3).is_constant());
}

TEST_CASE("piecewise integral matches a fine Riemann sum") {
  PiecewiseConstant f({0.0, 0.7, 2.2}, {0.05, -0.01, 0.3});
  const double a = 0.3, b = 4.1;
  const int n = 400000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) sum += f(a + (b - a) * (i + 0.5) / n) * (b - a) / n;
  CHECK(f.integral(a, b) == doctest::Approx(sum).epsilon(1e-5));
  CHECK(f.integral(1.0, 1.0) == 0.0);
}

TEST_CASE("merged cuts and piecewise integration") {
  PiecewiseConstant f({0.0, 1.0}, {1.0, 2.0});
  PiecewiseConstant g({0.0, 0.5, 1.5}, {1.0, 3.0, 5.0});
  auto cuts = merged_cuts(0.25, 2.0, {f.breakpoints(), g.breakpoints()});
  REQUIRE(cuts.size() == 5);
  CHECK(cuts.front() == 0.25);
  CHECK(cuts.back() == 2.0);
  double exact = integrate_pieces(cuts, [&](double t) { return f(t) * g(t); });
  // 0.25-0.5: 1*1, 0.5-1: 1*3, 1-1.5: 2*3, 1.5-2: 2*5
  CHECK(exact == doctest::Approx(0.25 + 1.5 + 3.0 + 5.0).epsilon(1e-14));
}

TEST_CASE("piecewise constructor rejects bad input") {
  CHECK_THROWS_AS(PiecewiseConstant({0.0, 1.0}, {1.0}), Error);
  CHECK_THROWS_AS(PiecewiseConstant({1.0, 0.5}, {1.0, 2.0}), Error);
}

TEST_CASE("text helpers") {
  CHECK(text::parse_double("0.025").value() == 0.025);
  CHECK_FALSE(text::parse_double("0.02x").has_value());
  CHECK_FALSE(text::parse_double("").has_value());
  CHECK(text::format_roundtrip(0.1) == "0.1");
  CHECK(*text::parse_double(text::format_roundtrip(1.0 / 3.0)) == 1.0 / 3.0);
  CHECK(text::format_sig(0.0) == "0");
  CHECK(text::format_sig(1.0 / 3.0, 15) == "0.333333333333333");
  CHECK(text::trim("  a b \t") == "a b");
  auto parts = text::split("a,,b", ',');
  REQUIRE(parts.size() == 3);
  CHECK(parts[1].empty());
  CHECK(text::fnv1a_hex("") == "cbf29ce484222325");
  CHECK(text::fnv1a_hex("a") == "af63dc4c8601ec8c");
}

TEST_CASE("file helpers report missing and unwritable paths") {
  try {
    text::read_file("/nonexistent/mce/file.csv");
    FAIL("expected FileNotFound");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::FileNotFound);
  }
  try {
    text::write_file("/nonexistent/mce/out.json", "{}");
    FAIL("expected IoError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::IoError);
  }
}

TEST_CASE("error classification") {
  CHECK(is_validation_error(ErrorCode::UnknownKey));
  CHECK(is_validation_error(ErrorCode::MalformedRecord));
  CHECK_FALSE(is_validation_error(ErrorCode::NoConvergence));
  CHECK(std::string(Error(ErrorCode::ZeroForward, "x").what()).find("ZeroForward") != std::string::npos);
}
