#include "fv/fv.hpp"

#include <gtest/gtest.h>

using namespace fv;

namespace {

Signature sig() { return battery_signature(); }

// Reference semantics of the connectives written out from their definitions.
Rational ref_monus(const Rational& x, const Rational& y) { return x >= y ? Rational(x - y) : Rational(0); }

Rational ref_eval(const FiniteStructure& s, const FormulaPtr& f, std::map<int, int>& env);

int ref_term(const FiniteStructure& s, const TermPtr& t, std::map<int, int>& env) {
  if (t->kind == Term::Kind::Var) return env.at(t->index);
  if (t->kind == Term::Kind::Const) return s.consts[static_cast<std::size_t>(t->index)];
  std::vector<int> args;
  for (const auto& a : t->args) args.push_back(ref_term(s, a, env));
  return s.funcs[static_cast<std::size_t>(t->index)][s.flat(args)];
}

Rational ref_eval(const FiniteStructure& s, const FormulaPtr& f, std::map<int, int>& env) {
  switch (f->kind) {
    case Kind::Zero: return 0;
    case Kind::One: return 1;
    case Kind::Atomic: {
      std::vector<int> args;
      for (const auto& t : f->terms) args.push_back(ref_term(s, t, env));
      return s.preds[static_cast<std::size_t>(f->symbol)][s.flat(args)];
    }
    case Kind::Dist: return s.d(ref_term(s, f->terms[0], env), ref_term(s, f->terms[1], env));
    case Kind::Half: return ref_eval(s, f->kids[0], env) / 2;
    case Kind::Monus: return ref_monus(ref_eval(s, f->kids[0], env), ref_eval(s, f->kids[1], env));
    case Kind::Min: return std::min(ref_eval(s, f->kids[0], env), ref_eval(s, f->kids[1], env));
    case Kind::Max: return std::max(ref_eval(s, f->kids[0], env), ref_eval(s, f->kids[1], env));
    case Kind::Neg: return 1 - ref_eval(s, f->kids[0], env);
    case Kind::Const: return Rational(f->p) / Rational(mpz_class(1) << f->q);
    case Kind::Sup:
    case Kind::Inf: {
      bool had = env.count(f->var) != 0;
      int saved = had ? env[f->var] : 0;
      Rational best = f->kind == Kind::Sup ? 0 : 1;
      for (int u = 0; u < s.size(); ++u) {
        env[f->var] = u;
        Rational v = ref_eval(s, f->kids[0], env);
        best = f->kind == Kind::Sup ? std::max(best, v) : std::min(best, v);
      }
      if (had) env[f->var] = saved;
      else env.erase(f->var);
      return best;
    }
  }
  return -1;
}

}  // namespace

TEST(Parse, SupOfAtomic) {
  FormulaPtr f = parse("sup x . P(x)", sig());
  ASSERT_EQ(f->kind, Kind::Sup);
  EXPECT_EQ(f->name, "x");
  ASSERT_EQ(f->kids[0]->kind, Kind::Atomic);
  EXPECT_EQ(f->kids[0]->name, "P");
  EXPECT_EQ(print_term(f->kids[0]->terms[0]), "x");
}

TEST(Parse, MonusOfHalf) {
  FormulaPtr f = parse("P(c) -. half(1)", sig());
  ASSERT_EQ(f->kind, Kind::Monus);
  EXPECT_EQ(f->kids[0]->kind, Kind::Atomic);
  EXPECT_EQ(f->kids[0]->terms[0]->kind, Term::Kind::Const);
  ASSERT_EQ(f->kids[1]->kind, Kind::Half);
  EXPECT_EQ(f->kids[1]->kids[0]->kind, Kind::One);
}

TEST(Parse, MinIsDerived) {
  FormulaPtr f = parse("min(P(x), d(x,c))", sig());
  ASSERT_EQ(f->kind, Kind::Min);
  EXPECT_EQ(f->kids[0]->kind, Kind::Atomic);
  EXPECT_EQ(f->kids[1]->kind, Kind::Dist);
  EXPECT_FALSE(f->restricted);
}

TEST(Parse, MonusIsLeftAssociative) {
  FormulaPtr f = parse("P(c) -. 1 -. 0", sig());
  ASSERT_EQ(f->kind, Kind::Monus);
  EXPECT_EQ(f->kids[0]->kind, Kind::Monus);
  EXPECT_EQ(f->kids[1]->kind, Kind::Zero);
}

TEST(Parse, Errors) {
  try {
    parse("P(c) -. ", sig());
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_GE(e.position, 7u);
  }
  EXPECT_THROW(parse("Q(c)", sig()), ParseError);
  EXPECT_THROW(parse("P(c,c)", sig()), ParseError);
  EXPECT_THROW(parse("f(c)", sig()), ParseError);
  EXPECT_THROW(parse("P(f(c))", sig()), ParseError);
  EXPECT_THROW(parse("const(5/2^2)", sig()), ParseError);
  EXPECT_THROW(parse("sup c . P(c)", sig()), ParseError);
}

TEST(Parse, RoundTripBattery) {
  Battery b = battery(sig(), 3);
  for (const auto& f : b.sentences) {
    std::string text = print(f);
    FormulaPtr g = parse(text, sig());
    EXPECT_TRUE(same_formula(f, g)) << text;
    EXPECT_EQ(print(g), text);
  }
}

TEST(Parse, RoundTripDerivedAndOpen) {
  for (const char* text : {"min(P(x),d(x,c))", "max(neg(P(c)),const(3/2^2))", "sup x . inf y . d(x,y) -. P(f(x,y))",
                           "(sup x . P(x)) -. (inf y . P(y))", "P(c) -. (P(c) -. half(P(c)))"}) {
    FormulaPtr f = parse(text, sig());
    EXPECT_EQ(print(f), text);
    EXPECT_TRUE(same_formula(parse(print(f), sig()), f));
  }
}

TEST(Normalize, MinExpansion) {
  FormulaPtr f = parse("min(P(x), d(x,c))", sig());
  FormulaPtr g = normalize_restricted(f);
  FormulaPtr expect = parse("P(x) -. (P(x) -. d(x,c))", sig());
  EXPECT_TRUE(same_formula(g, expect)) << print(g);
  EXPECT_TRUE(g->restricted);
}

TEST(Normalize, DyadicThreeQuarters) {
  FormulaPtr g = normalize_restricted(make_dyadic(3, 2));
  FormulaPtr expect = make_monus(make_one(), make_half(make_half(make_one())));
  EXPECT_TRUE(same_formula(g, expect)) << print(g);
}

TEST(Normalize, RestrictedUnchanged) {
  FormulaPtr f = parse("sup x . P(x) -. half(d(x,c))", sig());
  EXPECT_TRUE(same_formula(normalize_restricted(f), f));
}

TEST(Normalize, NegAndMax) {
  EXPECT_TRUE(same_formula(normalize_restricted(parse("neg(P(c))", sig())), parse("1 -. P(c)", sig())));
  FormulaPtr m = normalize_restricted(parse("max(P(c), 0)", sig()));
  EXPECT_TRUE(same_formula(m, parse("1 -. ((1 -. P(c)) -. ((1 -. P(c)) -. (1 -. 0)))", sig()))) << print(m);
}

TEST(Normalize, DyadicConstantsExact) {
  for (int q = 0; q <= 6; ++q)
    for (long p = 0; p <= (1L << q); ++p) {
      FormulaPtr g = normalize_restricted(make_dyadic(p, q));
      ASSERT_TRUE(g->restricted);
      FiniteStructure s = random_structure(sig(), 1, 1);
      std::map<int, int> env;
      EXPECT_EQ(ref_eval(s, g, env), Rational(p) / Rational(mpz_class(1) << q)) << p << "/2^" << q;
    }
}

// Normalization preserves values exactly on formulas of depth <= 3 over a 2-element structure.
TEST(Normalize, SemanticsPreserved) {
  const Signature s = sig();
  Battery b1 = battery(s, 1);
  std::vector<FormulaPtr> derived;
  for (const auto& a : b1.sentences) {
    derived.push_back(make_neg(a));
    derived.push_back(make_half(make_neg(a)));
    for (const auto& c : b1.sentences) {
      derived.push_back(make_min(a, c));
      derived.push_back(make_max(a, c));
    }
  }
  for (long p = 0; p <= 4; ++p) derived.push_back(make_max(make_dyadic(p, 2), parse("P(c)", s)));
  derived.push_back(parse("sup x . min(P(x), neg(d(x,c)))", s));
  derived.push_back(parse("inf x . max(P(x), const(1/2^1))", s));
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    FiniteStructure A = random_structure(s, 2, seed);
    Evaluator ev(A);
    for (const auto& f : derived) {
      std::map<int, int> env;
      std::vector<int> e;
      Rational direct = ref_eval(A, f, env);
      EXPECT_EQ(ev.eval(normalize_restricted(f), e), direct) << print(f);
    }
  }
}

TEST(FreeVars, Examples) {
  const Signature s = sig();
  auto names = [](const FormulaPtr& f) {
    std::vector<std::string> out;
    for (const auto& v : free_vars(f)) out.push_back(v);
    return out;
  };
  EXPECT_EQ(names(parse("sup x . d(x,y)", s)), (std::vector<std::string>{"y"}));
  EXPECT_EQ(names(make_atomic(Signature{{{"R", 2, Rational(1)}}, {}, {}}, "R", {make_var("x"), make_var("y")})),
            (std::vector<std::string>{"x", "y"}));
  EXPECT_TRUE(names(make_one()).empty());
  EXPECT_EQ(names(parse("d(y,x) -. sup y . P(y)", s)), (std::vector<std::string>{"y", "x"}));
}

TEST(Connectives, MonusAndHalf) {
  const Signature s = sig();
  auto leaf_values = [](std::vector<Rational> vals) {
    auto i = std::make_shared<std::size_t>(0);
    return [vals, i](const FormulaPtr&) { return vals[(*i)++]; };
  };
  FormulaPtr m = parse("P(c) -. P(f(c,c))", s);
  EXPECT_EQ(eval_connective_free(m, leaf_values({Rational(1, 2), Rational(3, 4)})), 0);
  EXPECT_EQ(eval_connective_free(m, leaf_values({Rational(3, 4), Rational(1, 2)})), Rational(1, 4));
  EXPECT_EQ(eval_connective_free(make_half(make_one()), leaf_values({})), Rational(1, 2));
  EXPECT_THROW(eval_connective_free(m, leaf_values({Rational(3, 2), Rational(1, 2)})), std::domain_error);
}

TEST(Evaluation, RestrictedFormulasStayInUnitInterval) {
  const Signature s = sig();
  Battery b = battery(s, 3);
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    FiniteStructure A = random_structure(s, 3, seed);
    Evaluator ev(A);
    for (const auto& f : b.sentences) {
      std::vector<int> e;
      Rational v = ev.eval(f, e);
      ASSERT_TRUE(in_unit_interval(v)) << print(f);
    }
  }
}
