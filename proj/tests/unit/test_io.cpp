#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "calitr/error.hpp"
#include "calitr/io.hpp"

using namespace calitr;

TEST(Io, Fnv1aKnownVectors) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(fnv1a64("foobar"), 0x85944171f73967e8ULL);
}

TEST(Io, RoundSignificant) {
  const json j = {{"a", 0.1 + 0.2}, {"b", {1.0 / 3.0, 7}}, {"c", std::numeric_limits<double>::infinity()}};
  const json r = round_significant(j, 12);
  EXPECT_EQ(r["a"].get<double>(), 0.3);
  EXPECT_EQ(r["b"][0].get<double>(), 0.333333333333);
  EXPECT_TRUE(r["b"][1].is_number_integer());
  EXPECT_TRUE(r["c"].is_null());
}

TEST(Io, CanonicalDumpIgnoresInsertionOrderAndNoise) {
  json a, b;
  a["x"] = 1.0;
  a["y"] = 2.0;
  b["y"] = 2.0 + 1e-15;
  b["x"] = 1.0;
  EXPECT_EQ(canonical_dump(a), canonical_dump(b));
  EXPECT_EQ(config_hash(a), config_hash(b));
  b["x"] = 1.5;
  EXPECT_NE(config_hash(a), config_hash(b));
}

TEST(Io, ConstraintSpecRoundTrip) {
  ConstraintSpec spec;
  spec.moments = {Moment::mean(1), Moment::mean2(2), Moment::cross(1, 3)};
  spec.targets = (Vector(3) << 0.5, 1.25, -0.1).finished();
  const ConstraintSpec back = constraint_spec_from_json(json::parse(to_json(spec).dump()));
  ASSERT_EQ(back.moments.size(), 3u);
  EXPECT_EQ(back.moments[1].kind, MomentKind::Mean2);
  EXPECT_EQ(back.moments[2].i, 1);
  EXPECT_EQ(back.moments[2].j, 3);
  EXPECT_EQ(back.targets, spec.targets);
}

TEST(Io, ConstraintSpecErrors) {
  auto code = [](const char* text) {
    try {
      constraint_spec_from_json(json::parse(text));
    } catch (const Error& e) {
      return e.code();
    }
    return Errc::InvalidArgument;
  };
  EXPECT_EQ(code(R"({"moments":[{"kind":"quantile","index":1}],"targets":[0]})"), Errc::UnsupportedMoment);
  EXPECT_EQ(code(R"({"moments":[{"kind":"mean"}],"targets":[0]})"), Errc::ParseError);
  EXPECT_EQ(code(R"({"targets":[0]})"), Errc::ParseError);
  EXPECT_EQ(code(R"({"moments":[{"kind":"mean","index":1}],"targets":["a"]})"), Errc::ParseError);
}

TEST(Io, RuleRoundTrip) {
  const LinearRule rule((Vector(3) << 0.25, -1.0, 0.5).finished());
  const json j = rule_to_json(rule, 8.1, 0.2);
  EXPECT_EQ(rule_from_json(j).beta(), rule.beta());
  EXPECT_THROW(rule_from_json(json::parse(R"({"beta":[]})")), Error);
}

TEST(Io, MissingFile) {
  try {
    read_text("/nonexistent/calitr/file");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::MissingFile);
  }
}

TEST(Io, ProvenanceFields) {
  const json p = provenance("learn", 7, {{"k", 1}});
  EXPECT_EQ(p["tool"], "calitr");
  EXPECT_EQ(p["version"], "1.0.0");
  EXPECT_EQ(p["command"], "learn");
  EXPECT_EQ(p["seed"], 7);
  EXPECT_EQ(provenance_line(p).rfind("# {", 0), 0u);
}
