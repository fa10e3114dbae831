#include "fv/fv.hpp"

#include <gtest/gtest.h>

#include <cstdio>
#include <fstream>

using namespace fv;

namespace {

bool contains(const Battery& b, const std::string& text) {
  FormulaPtr f = parse(text, b.sig);
  for (const auto& g : b.sentences)
    if (same_formula(f, g)) return true;
  return false;
}

std::vector<std::string> printed(const Battery& b) {
  std::vector<std::string> out;
  for (const auto& f : b.sentences) out.push_back(print(f));
  return out;
}

}  // namespace

TEST(Battery, DepthZero) {
  Battery b = battery(battery_signature(), 0);
  EXPECT_EQ(b.sentences.size(), 3u);
  EXPECT_TRUE(contains(b, "0"));
  EXPECT_TRUE(contains(b, "1"));
  EXPECT_TRUE(contains(b, "P(c)"));
}

TEST(Battery, DepthOneClosure) {
  Battery b = battery(battery_signature(), 1);
  EXPECT_TRUE(contains(b, "sup x . P(x)"));
  EXPECT_TRUE(contains(b, "half(P(c))"));
  EXPECT_TRUE(contains(b, "P(c) -. 1"));
  EXPECT_TRUE(contains(b, "P(f(c,c))"));
  EXPECT_FALSE(contains(b, "sup x . half(P(x))"));
}

TEST(Battery, Deterministic) {
  for (int d = 0; d <= 2; ++d) EXPECT_EQ(printed(battery(battery_signature(), d)), printed(battery(battery_signature(), d)));
}

TEST(Battery, ClosedRestrictedAndDistinct) {
  Battery b = battery(battery_signature(), 3);
  std::set<std::string> seen;
  for (const auto& f : b.sentences) {
    EXPECT_TRUE(f->restricted) << print(f);
    EXPECT_TRUE(free_vars(f).empty()) << print(f);
    EXPECT_TRUE(seen.insert(print(f)).second) << print(f);
  }
}

TEST(Battery, Nested) {
  Battery b2 = battery(battery_signature(), 2), b3 = battery(battery_signature(), 3);
  std::vector<std::string> p2 = printed(b2), p3 = printed(b3);
  ASSERT_LT(p2.size(), p3.size());
  EXPECT_TRUE(std::equal(p2.begin(), p2.end(), p3.begin()));
  EXPECT_EQ(p2.size(), 211u);
  EXPECT_EQ(p3.size(), 2933u);
  EXPECT_THROW(battery(battery_signature(), 5), std::invalid_argument);
}

TEST(Divisibility, PrimeFiveCofinal) {
  DivisibilityReport r = demo_matrix_divisibility({2, 5, 11}, {3, 7, 13}, 10);
  EXPECT_TRUE(r.ok);
  ASSERT_EQ(r.rows.size(), 3u);
  EXPECT_EQ(r.rows[1].prime, 5);
  EXPECT_EQ(r.rows[1].divides_xi, (std::vector<int>{2, 3, 4, 5, 6, 7, 8, 9, 10}));
  EXPECT_TRUE(r.rows[1].divides_eta.empty());
  EXPECT_TRUE(r.rows[1].cofinal);
}

TEST(Divisibility, PrimeTwoDividesEverything) {
  DivisibilityReport r = demo_matrix_divisibility({2, 5, 11}, {3, 7, 13}, 10);
  EXPECT_EQ(r.rows[0].divides_xi.size(), 10u);
}

TEST(Divisibility, EtaProductsByDirectDivision) {
  auto k = partial_products({3, 7, 13}, 5);
  ASSERT_EQ(k.size(), 5u);
  EXPECT_EQ(k[0], 3);
  EXPECT_EQ(k[1], 21);
  EXPECT_EQ(k[2], 273);
  for (const auto& v : k) EXPECT_NE(v % 5, 0);
  for (std::size_t j = 1; j < k.size(); ++j) EXPECT_GT(k[j], k[j - 1]);
}

TEST(Divisibility, BadInput) {
  EXPECT_THROW(demo_matrix_divisibility({2, 4}, {3}, 5), std::invalid_argument);
  EXPECT_THROW(demo_matrix_divisibility({2, 5}, {5, 7}, 5), std::invalid_argument);
  EXPECT_THROW(demo_matrix_divisibility({}, {3}, 5), std::invalid_argument);
}

TEST(Caps, Enforcement) {
  Caps c;
  EXPECT_NO_THROW(c.check_depth(3));
  EXPECT_THROW(c.check_depth(4), std::invalid_argument);
  EXPECT_THROW(c.check_n(3), std::invalid_argument);
  EXPECT_THROW(c.check_family(5, 2), std::invalid_argument);
  EXPECT_THROW(c.check_family(2, 5), std::invalid_argument);
  FvSuiteOptions o;
  o.depth = 4;
  EXPECT_THROW(suite_fv(1, o, c), std::invalid_argument);
}

TEST(Caps, LoadFromFile) {
  std::string path = testing::TempDir() + "caps_test.json";
  {
    std::ofstream out(path);
    out << R"({"max_depth": 2, "max_n": 1})";
  }
  Caps c = load_caps(path);
  EXPECT_EQ(c.max_depth, 2);
  EXPECT_EQ(c.max_n, 1);
  EXPECT_EQ(c.max_omega, 4);
  std::remove(path.c_str());
  EXPECT_THROW(load_caps(path), std::runtime_error);
}

TEST(Suites, QuickRunsAreClean) {
  EXPECT_TRUE(suite_atomic(3, 100).ok());
  EXPECT_TRUE(suite_fubini(3, 10).ok());
  EXPECT_TRUE(suite_principal(3, 10).ok());
  EXPECT_TRUE(suite_quotient(3, 2, 2).ok());
  EXPECT_TRUE(suite_preservation(3, 5, 2).ok());
}

TEST(Suites, Reproducible) {
  SuiteReport a = suite_atomic(9, 50), b = suite_atomic(9, 50);
  a.seconds = b.seconds = 0;
  EXPECT_EQ(a.to_json().dump(), b.to_json().dump());
  FvSuiteOptions o;
  o.depth = 1;
  o.families = 3;
  FvSuiteResult x = suite_fv(9, o), y = suite_fv(9, o);
  EXPECT_EQ(x.report.cases, y.report.cases);
  EXPECT_EQ(x.report.failures, y.report.failures);
  EXPECT_EQ(x.sigmas.size(), y.sigmas.size());
}

TEST(Suites, QuotientPairsAreIsomorphic) {
  EXPECT_EQ(quotient(close_ideal(default_labels(3), {1})).size(), quotient(trivial_ideal(2)).size());
  EXPECT_EQ(quotient(trivial_ideal(1)).size(), quotient(close_ideal(default_labels(2), {2})).size());
}

TEST(RandomFamily, RespectsShape) {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    Family fam = random_family(battery_signature(), seed, FamilyShape{3, 3, 27});
    EXPECT_GE(fam.ideal.size(), 1);
    EXPECT_LE(fam.ideal.size(), 3);
    std::size_t points = 1;
    for (const auto& s : fam.structures) {
      EXPECT_LE(s.size(), 3);
      points *= static_cast<std::size_t>(s.size());
    }
    EXPECT_LE(points, 27u);
    EXPECT_FALSE(fam.ideal.contains((Subset{1} << fam.ideal.size()) - 1));
  }
}
