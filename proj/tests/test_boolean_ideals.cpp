#include "fv/fv.hpp"

#include <gtest/gtest.h>

#include <set>

using namespace fv;

namespace {

Subset bits(std::initializer_list<int> elems) {
  Subset s = 0;
  for (int e : elems) s |= Subset{1} << (e - 1);
  return s;
}

std::set<Subset> member_set(const IdealSpec& I) { return {I.members.begin(), I.members.end()}; }

std::vector<Rational> r3() { return {Rational(9, 10), Rational(1, 5), Rational(1, 2)}; }

BFormulaPtr pb(const std::string& text) { return parse_bformula(text, 1); }

}  // namespace

TEST(CloseIdeal, Singleton) {
  IdealSpec I = close_ideal(default_labels(3), {bits({1})});
  EXPECT_EQ(member_set(I), (std::set<Subset>{0, bits({1})}));
}

TEST(CloseIdeal, ImproperUnion) {
  EXPECT_THROW(close_ideal(default_labels(2), {bits({1}), bits({2})}), ImproperIdeal);
}

TEST(CloseIdeal, PairGenerator) {
  IdealSpec I = close_ideal(default_labels(3), {bits({1, 2})});
  EXPECT_EQ(member_set(I), (std::set<Subset>{0, bits({1}), bits({2}), bits({1, 2})}));
}

TEST(CloseIdeal, IsClosed) {
  for (int n = 1; n <= 4; ++n)
    for (Subset g1 = 0; g1 < (Subset{1} << n); ++g1)
      for (Subset g2 = 0; g2 < (Subset{1} << n); ++g2) {
        if ((g1 | g2) == (Subset{1} << n) - 1) continue;
        IdealSpec I = close_ideal(default_labels(n), {g1, g2});
        EXPECT_NO_THROW(I.check());
        EXPECT_TRUE(I.contains(0) && I.contains(g1) && I.contains(g2));
        for (Subset a : I.members)
          for (Subset b : I.members) EXPECT_TRUE(I.contains(a | b));
      }
}

TEST(Limsup, TrivialIdealIsMax) { EXPECT_EQ(limsup_ideal(trivial_ideal(3), r3()), Rational(9, 10)); }

TEST(Limsup, DiscardFirstCoordinate) {
  EXPECT_EQ(limsup_ideal(close_ideal(default_labels(3), {bits({1})}), r3()), Rational(1, 2));
}

TEST(Limsup, ConstantVector) {
  for (Subset g = 0; g < 7; ++g) {
    IdealSpec I = close_ideal(default_labels(3), {g});
    EXPECT_EQ(limsup_ideal(I, std::vector<Rational>(3, Rational(2, 7))), Rational(2, 7));
  }
}

TEST(Limsup, PrincipalAtCoordinate) {
  auto r = r3();
  for (int g0 = 1; g0 <= 3; ++g0) {
    Subset rest = bits({1, 2, 3}) & ~bits({g0});
    EXPECT_EQ(limsup_ideal(close_ideal(default_labels(3), {rest}), r), r[static_cast<std::size_t>(g0 - 1)]);
  }
}

TEST(Quotient, TrivialOnTwo) {
  QuotientBA B = quotient(trivial_ideal(2));
  EXPECT_EQ(B.size(), 4u);
  EXPECT_EQ(B.of(0), 0u);
  EXPECT_EQ(B.of(bits({1, 2})), B.top());
}

TEST(Quotient, DiscardOneGivesFourClasses) {
  QuotientBA B = quotient(close_ideal(default_labels(3), {bits({1})}));
  EXPECT_EQ(B.size(), 4u);
  // Classes are determined by the trace on {2,3}.
  for (Subset X = 0; X < 8; ++X)
    for (Subset Y = 0; Y < 8; ++Y) EXPECT_EQ(B.of(X) == B.of(Y), (X & 6) == (Y & 6));
}

TEST(Quotient, SinglePoint) {
  QuotientBA B = quotient(trivial_ideal(1));
  EXPECT_EQ(B.size(), 2u);
  EXPECT_NE(B.of(0), B.of(1));
}

TEST(Quotient, BooleanLawsAndHomomorphism) {
  for (int n = 1; n <= 4; ++n)
    for (Subset g = 0; g + 1 < (Subset{1} << n); ++g) {
      QuotientBA B = quotient(close_ideal(default_labels(n), {g}));
      ASSERT_LE(B.size(), 16u);
      const std::uint32_t N = B.size();
      EXPECT_NE(B.of(0), B.of(B.ideal.full()));
      for (Subset X = 0; X < (Subset{1} << n); ++X) {
        EXPECT_EQ(B.of(B.ideal.full() & ~X), B.comp(B.of(X)));
        EXPECT_EQ(B.of(B.rep[B.of(X)]), B.of(X));
        EXPECT_TRUE(B.ideal.contains(X ^ B.rep[B.of(X)]));
        for (Subset Y = 0; Y < (Subset{1} << n); ++Y) {
          EXPECT_EQ(B.of(X & Y), B.meet(B.of(X), B.of(Y)));
          EXPECT_EQ(B.of(X | Y), B.join(B.of(X), B.of(Y)));
        }
      }
      for (std::uint32_t a = 0; a < N; ++a) {
        EXPECT_EQ(B.meet(a, B.comp(a)), 0u);
        EXPECT_EQ(B.join(a, B.comp(a)), B.top());
        for (std::uint32_t b = 0; b < N; ++b) {
          EXPECT_EQ(B.meet(a, B.join(a, b)), a);
          EXPECT_EQ(B.leq(a, b), B.meet(a, b) == a);
          for (std::uint32_t c = 0; c < N; ++c)
            EXPECT_EQ(B.meet(a, B.join(b, c)), B.join(B.meet(a, b), B.meet(a, c)));
        }
      }
    }
}

TEST(BaEval, NonzeroOfEmpty) {
  QuotientBA B = quotient(trivial_ideal(2));
  EXPECT_FALSE(ba_eval(B, bneq0(bvar(0, 0, 0, 0)), {B.of(0)}));
}

TEST(BaEval, ExistsBelow) {
  QuotientBA B = quotient(trivial_ideal(2));
  BFormulaPtr f = pb("(exists (z1[0][0]) (and (!= z1[0][0] 0) (<= z1[0][0] y[0][0])))");
  EXPECT_TRUE(ba_eval(B, f, {B.of(bits({1}))}));
  EXPECT_FALSE(ba_eval(B, f, {B.of(0)}));
}

TEST(BaEval, ForallBelowTop) {
  BFormulaPtr f = pb("(forall (z1[0][0]) (<= z1[0][0] 1))");
  for (int n = 1; n <= 3; ++n) EXPECT_TRUE(ba_eval(quotient(trivial_ideal(n)), f, {}));
}

TEST(BaEval, UnboundVariable) {
  QuotientBA B = quotient(trivial_ideal(2));
  EXPECT_THROW(ba_eval(B, bneq0(bvar(0, 0, 1, 1)), {0}), std::invalid_argument);
}

TEST(BaEval, ParsePrintRoundTrip) {
  for (const char* text : {"(exists (z1[0][0]) (and (!= z1[0][0] 0) (<= z1[0][0] y[0][0])))",
                           "(or (= (meet y[0][0] (comp y[0][1])) 0) (not (-> (!= y[0][1] 0) (= 1 0))))"}) {
    BFormulaPtr f = parse_bformula(text, 2);
    EXPECT_EQ(print_bformula(f), text);
  }
  EXPECT_THROW(parse_bformula("(!= z1[0][0] 0)", 2), std::invalid_argument);
}

TEST(BaEval, IsomorphicQuotientsAgree) {
  QuotientBA A = quotient(close_ideal(default_labels(3), {bits({1})}));
  QuotientBA B = quotient(trivial_ideal(2));
  std::vector<BFormulaPtr> closed = {
      pb("(forall (z1[0][0]) (exists (z1[1][0]) (and (<= z1[1][0] z1[0][0]) (!= z1[1][0] 0))))"),
      pb("(exists (z1[0][0]) (and (!= z1[0][0] 0) (!= (comp z1[0][0]) 0)))"),
      pb("(forall (z1[0][0] z1[1][0]) (or (= (meet z1[0][0] z1[1][0]) 0) (<= z1[0][0] z1[1][0]) (<= z1[1][0] z1[0][0])))"),
  };
  for (const auto& f : closed) EXPECT_EQ(ba_eval(A, f, {}), ba_eval(B, f, {}));
  EXPECT_TRUE(ba_eval(A, closed[1], {}));
  EXPECT_TRUE(ba_eval(A, closed[2], {}));
  EXPECT_FALSE(ba_eval(quotient(trivial_ideal(3)), closed[2], {}));
  EXPECT_FALSE(ba_eval(quotient(trivial_ideal(1)), closed[1], {}));
}

TEST(Fubini, DiscardRowOne) {
  IdealSpec I = close_ideal(default_labels(2), {bits({1})});
  IdealSpec J = close_ideal({"a", "b"}, {});
  IdealSpec F = fubini(I, J);
  // Row 1 arbitrary, row 2 empty.
  EXPECT_EQ(F.members.size(), 4u);
  for (Subset A = 0; A < 16; ++A) EXPECT_EQ(F.contains(A), (A & 0b1100) == 0);
  EXPECT_EQ(F.omega[2], "(2,a)");
}

TEST(Fubini, TrivialOneByOne) {
  IdealSpec F = fubini(trivial_ideal(1), trivial_ideal(1));
  EXPECT_EQ(member_set(F), std::set<Subset>{0});
}

TEST(Fubini, ProperAndDoubleSection) {
  for (int n1 = 1; n1 <= 3; ++n1)
    for (int n2 = 1; n2 <= 3; ++n2)
      for (Subset g1 = 0; g1 + 1 < (Subset{1} << n1); ++g1)
        for (Subset g2 = 0; g2 + 1 < (Subset{1} << n2); ++g2) {
          IdealSpec I = close_ideal(default_labels(n1), {g1});
          IdealSpec J = close_ideal(default_labels(n2), {g2});
          IdealSpec F = fubini(I, J);
          ASSERT_NO_THROW(F.check());
          EXPECT_FALSE(F.contains(F.full()));
          std::set<Subset> Iset = member_set(I), Jset = member_set(J);
          // Sections read off by coordinates rather than by row shifts.
          for (Subset A = 0; A <= F.full(); ++A) {
            Subset big = 0;
            for (int a = 0; a < n1; ++a) {
              Subset section = 0;
              for (int b = 0; b < n2; ++b)
                if (A & (Subset{1} << (a * n2 + b))) section |= Subset{1} << b;
              if (!Jset.count(section)) big |= Subset{1} << a;
            }
            ASSERT_EQ(F.contains(A), Iset.count(big) == 1);
          }
        }
}

TEST(Fubini, Associative) {
  IdealSpec I = close_ideal(default_labels(2), {bits({2})});
  IdealSpec J = trivial_ideal(2);
  IdealSpec K = close_ideal(default_labels(2), {bits({1})});
  EXPECT_EQ(fubini(fubini(I, J), K).members, fubini(I, fubini(J, K)).members);
}

TEST(Monotone, NonzeroIsMonotone) {
  for (int n = 1; n <= 3; ++n) EXPECT_TRUE(is_monotone(bneq0(bvar(0, 0, 0, 0)), quotient(trivial_ideal(n)), 1).ok);
}

TEST(Monotone, ZeroTestIsNot) {
  QuotientBA B = quotient(trivial_ideal(1));
  MonotoneReport r = is_monotone(beq(bvar(0, 0, 0, 0), bzero()), B, 1);
  EXPECT_FALSE(r.ok);
  EXPECT_EQ(r.lower, std::vector<std::uint32_t>{0});
  EXPECT_EQ(r.upper, std::vector<std::uint32_t>{1});
}

TEST(Monotone, ExistsBelow) {
  MonotoneReport r = is_monotone(pb("(exists (z1[0][0]) (and (<= z1[0][0] y[0][0]) (!= z1[0][0] 0)))"),
                                 quotient(trivial_ideal(2)), 1);
  EXPECT_TRUE(r.ok);
  EXPECT_TRUE(r.exhaustive);
}

TEST(Monotone, SampledModeFindsViolation) {
  MonotoneOptions opt;
  opt.exhaustive_limit = 1;
  BFormulaPtr f = parse_bformula("(= (meet y[0][0] y[0][1]) 0)", 2);
  MonotoneReport r = is_monotone(f, quotient(trivial_ideal(3)), 2, opt);
  EXPECT_FALSE(r.exhaustive);
  EXPECT_FALSE(r.ok);
}

TEST(ExistsMeet, MatchesExpansion) {
  // One bound block, m = 2, L = 2: z1[0], z1[1] below the bounds and their meet below the third.
  std::vector<BTermPtr> bounds;
  for (int k = 0; k < 6; ++k) bounds.push_back(bvar(0, k / 2, k % 2, k));
  auto z = [](int j, int i) { return bvar(1, j, i, 100 + j * 2 + i); };
  BFormulaPtr body = band({bneq0(bmeet(z(0, 0), z(1, 1))), bneq0(z(0, 1))});
  BFormulaPtr em = bexists_meet(1, 2, 2, 100, bounds, body);
  BFormulaPtr raw = expand_exists_meet(em);
  for (int n = 1; n <= 2; ++n) {
    QuotientBA B = quotient(trivial_ideal(n));
    std::vector<std::uint32_t> a(6, 0);
    std::uint64_t total = 1;
    for (int k = 0; k < 6; ++k) total *= B.size();
    for (std::uint64_t code = 0; code < total; ++code) {
      std::uint64_t c = code;
      for (auto& x : a) {
        x = static_cast<std::uint32_t>(c % B.size());
        c /= B.size();
      }
      ASSERT_EQ(ba_eval(B, em, a), ba_eval(B, raw, a)) << code;
    }
  }
}
