#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "helpsense/errors.hpp"
#include "helpsense/wire.hpp"

using namespace helpsense;

TEST(Wire, FixedFormatting) {
  EXPECT_EQ(wire::format_fixed(1.5, 3), "1.500");
  EXPECT_EQ(wire::format_fixed(0.1234567, 6), "0.123457");
  EXPECT_EQ(wire::format_fixed(-0.0000001, 3), "0.000");
  EXPECT_EQ(wire::format_fixed(-2.25, 2), "-2.25");
}

TEST(Wire, ShortFormatKeepsFraction) {
  EXPECT_EQ(wire::format_short(4.0), "4.0");
  EXPECT_EQ(wire::format_short(0.1), "0.1");
  EXPECT_EQ(wire::format_short(12.375), "12.375");
}

TEST(Wire, QuantizeMatchesParsedText) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> dist(-100.0, 100.0);
  for (int i = 0; i < 2000; ++i) {
    const double v = dist(rng);
    for (int d : {3, 6}) {
      const double q = wire::quantize(v, d);
      EXPECT_EQ(q, std::stod(wire::format_fixed(v, d)));
      EXPECT_EQ(wire::quantize(q, d), q);
      EXPECT_LE(std::abs(q - v), 0.5 * std::pow(10.0, -d) + 1e-12);
    }
  }
}

TEST(Wire, ExactFormatRoundTrips) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> dist(-1e6, 1e6);
  for (int i = 0; i < 1000; ++i) {
    const double v = dist(rng);
    EXPECT_EQ(wire::parse_double(wire::format_exact(v)), v);
  }
}

TEST(Wire, NumberParsingRejectsJunk) {
  EXPECT_EQ(wire::parse_double("+1.25"), 1.25);
  EXPECT_THROW(wire::parse_double("1.2x"), std::invalid_argument);
  EXPECT_THROW(wire::parse_double(""), std::invalid_argument);
  EXPECT_THROW(wire::parse_double("nan"), std::invalid_argument);
  EXPECT_THROW(wire::parse_double("inf"), std::invalid_argument);
  EXPECT_EQ(wire::parse_int("-7"), -7);
  EXPECT_THROW(wire::parse_uint("-7"), std::invalid_argument);
  EXPECT_TRUE(wire::parse_bool("true"));
  EXPECT_FALSE(wire::parse_bool("0"));
  EXPECT_THROW(wire::parse_bool("maybe"), std::invalid_argument);
}

TEST(Wire, QuotedFieldsRoundTrip) {
  const std::string nasty = "say \"hi\"\\ now\n\tand\rthen = x y";
  const auto fields = wire::split_fields("a=1 text=" + wire::quote(nasty) + " b=two");
  ASSERT_EQ(fields.size(), 3u);
  EXPECT_EQ(fields[0].key, "a");
  EXPECT_EQ(fields[1].value, nasty);
  EXPECT_EQ(fields[2].value, "two");
}

TEST(Wire, FieldSetRejectsUnknownAndDuplicateKeys) {
  wire::FieldSet ok(wire::split_fields("t=1.000 v=0.5"));
  EXPECT_NO_THROW(ok.expect_only({"t", "v"}));
  EXPECT_EQ(ok.number("v"), 0.5);
  EXPECT_THROW(ok.get("w"), std::invalid_argument);

  wire::FieldSet extra(wire::split_fields("t=1 v=2 w=3"));
  EXPECT_THROW(extra.expect_only({"t", "v"}), std::invalid_argument);

  EXPECT_THROW(wire::FieldSet(wire::split_fields("t=1 t=2")).expect_only({"t"}), std::invalid_argument);
  EXPECT_THROW(wire::split_fields("t=\"unterminated"), std::invalid_argument);
  EXPECT_THROW(wire::split_fields("novalue"), std::invalid_argument);
}
