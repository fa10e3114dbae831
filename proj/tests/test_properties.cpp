#include "fv/fv.hpp"

#include <gtest/gtest.h>

#include <bit>
#include <random>

using namespace fv;

namespace {

bool monus_free(const FormulaPtr& f) {
  if (f->kind == Kind::Monus || f->kind == Kind::Inf) return false;
  for (const auto& k : f->kids)
    if (!monus_free(k)) return false;
  return true;
}

Rational random_value(std::mt19937_64& rng) {
  Rational r(static_cast<long>(rng() % 17), 16);
  r.canonicalize();
  return r;
}

}  // namespace

TEST(Property, LimsupSingleGenerator) {
  std::mt19937_64 rng(101);
  for (int trial = 0; trial < 300; ++trial) {
    int k = 1 + static_cast<int>(rng() % 5);
    Subset full = (Subset{1} << k) - 1;
    Subset M = static_cast<Subset>(rng() % full);
    IdealSpec I = close_ideal(default_labels(k), M ? std::vector<Subset>{M} : std::vector<Subset>{});
    std::vector<Rational> r;
    for (int g = 0; g < k; ++g) r.push_back(random_value(rng));
    Rational expect = 0;
    for (int g = 0; g < k; ++g)
      if (!(M >> g & 1)) expect = std::max(expect, r[static_cast<std::size_t>(g)]);
    ASSERT_EQ(limsup_ideal(I, r), expect);
    EXPECT_LE(limsup_ideal(I, r), limsup_ideal(trivial_ideal(k), r));
  }
}

TEST(Property, QuotientAtomsCountOutsideSupport) {
  for (int k = 1; k <= 5; ++k) {
    Subset full = (Subset{1} << k) - 1;
    for (Subset M = 0; M < full; ++M) {
      QuotientBA B = quotient(close_ideal(default_labels(k), M ? std::vector<Subset>{M} : std::vector<Subset>{}));
      EXPECT_EQ(B.atoms, k - std::popcount(static_cast<unsigned>(M)));
      EXPECT_EQ(B.of(full), B.top());
      EXPECT_EQ(B.of(M), 0u);
    }
  }
}

TEST(Property, TrivialIdealIsDirectProduct) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(seed);
    int k = 1 + static_cast<int>(rng() % 3);
    Family fam;
    fam.ideal = trivial_ideal(k);
    std::size_t total = 1;
    for (int g = 0; g < k; ++g) {
      fam.structures.push_back(random_structure(battery_signature(), 1 + static_cast<int>(rng() % 3), rng()));
      total *= static_cast<std::size_t>(fam.structures.back().size());
    }
    ReducedProduct rp = reduced_product(fam);
    ASSERT_EQ(rp.classes.size(), total);
    for (std::size_t a = 0; a < total; ++a)
      for (std::size_t b = 0; b < total; ++b) {
        Rational m = 0;
        for (int g = 0; g < k; ++g)
          m = std::max(m, fam.structures[static_cast<std::size_t>(g)].d(rp.points[a][static_cast<std::size_t>(g)],
                                                                         rp.points[b][static_cast<std::size_t>(g)]));
        ASSERT_EQ(rp.induced.d(rp.class_of[a], rp.class_of[b]), m);
      }
  }
}

TEST(Property, MaximalIdealGivesCoordinateValues) {
  Battery bat = battery(battery_signature(), 2);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(seed + 500);
    int k = 2 + static_cast<int>(rng() % 2);
    int g0 = static_cast<int>(rng() % static_cast<unsigned>(k));
    Family fam;
    fam.ideal = close_ideal(default_labels(k), {((Subset{1} << k) - 1) & ~(Subset{1} << g0)});
    for (int g = 0; g < k; ++g) fam.structures.push_back(random_structure(battery_signature(), 1 + static_cast<int>(rng() % 3), rng()));
    ReducedProduct rp = reduced_product(fam);
    EXPECT_EQ(battery_values(rp.induced, bat.sentences), battery_values(fam.structures[static_cast<std::size_t>(g0)], bat.sentences));
  }
}

TEST(Property, NormalizeIsIdempotent) {
  const Signature sig = battery_signature();
  for (const auto& f : battery(sig, 1).sentences) {
    for (const FormulaPtr& g : {make_neg(f), make_min(f, make_half(f)), make_max(f, make_dyadic(3, 3))}) {
      FormulaPtr once = normalize_restricted(g);
      EXPECT_TRUE(same_formula(normalize_restricted(once), once)) << print(g);
    }
  }
}

TEST(Property, RelabelingPreservesReducedProductValues) {
  Battery bat = battery(battery_signature(), 2);
  std::mt19937_64 rng(77);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Family A = random_family(battery_signature(), seed, FamilyShape{3, 3, 27});
    Family B = A;
    for (auto& s : B.structures) s = relabel(s, random_permutation(s.size(), rng), "r");
    EXPECT_EQ(battery_values(reduced_product(A).induced, bat.sentences),
              battery_values(reduced_product(B).induced, bat.sentences));
  }
}

// Sentences built without truncated subtraction.
TEST(Property, CertifyMonusFreeSentences) {
  Battery bat = battery(battery_signature(), 3);
  std::vector<FormulaPtr> picked;
  for (const auto& f : bat.sentences)
    if (monus_free(f)) picked.push_back(normalize_restricted(f));
  ASSERT_GT(picked.size(), 20u);
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    Family fam = random_family(battery_signature(), mix_seed(31, seed), FamilyShape{3, 3, 27});
    ReducedProduct rp = reduced_product(fam);
    QuotientBA B = quotient(fam.ideal);
    for (const auto& f : picked)
      for (int n = 0; n <= 2; ++n) {
        CertifyResult r = certify_with(translate(f, n), rp, B, {}, f);
        ASSERT_TRUE(r.ok) << print(f) << " n=" << n << " " << describe_family(fam) << ": " << r.failure;
      }
  }
}

TEST(Property, MonusFreeSigmasAreMonotone) {
  Battery bat = battery(battery_signature(), 2);
  auto algebras = small_quotients(3);
  for (const auto& f : bat.sentences) {
    if (!monus_free(f)) continue;
    for (int n = 0; n <= 1; ++n) {
      DeterminingSequence ds = translate(normalize_restricted(f), n);
      const int s = ds.vars();
      for (const auto& sg : ds.sigmas)
        for (const auto& B : algebras) {
          MonotoneOptions mo;
          mo.exhaustive_max_vars = 6;
          EXPECT_TRUE(is_monotone(sg, B, s, mo).ok) << print(f) << " n=" << n;
        }
    }
  }
}
