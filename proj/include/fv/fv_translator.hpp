#pragma once

#include "fv/boolean_ideals.hpp"
#include "fv/reduced_products.hpp"
#include "fv/structures.hpp"
#include "fv/syntax.hpp"

#include <mutex>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace fv {

class UnsupportedNode : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// sigma_i has free variables y[j][i'] at slot j * levels() + i'.
struct DeterminingSequence {
  int n = 0;
  std::vector<int> free;  // free metric variable ids, first-occurrence order
  std::vector<BFormulaPtr> sigmas;
  std::vector<FormulaPtr> psis;

  int arity() const { return static_cast<int>(free.size()); }
  int m() const { return static_cast<int>(psis.size()); }
  int top() const { return 1 << n; }
  int levels() const { return top() + 1; }
  int vars() const { return m() * levels(); }
  int slot(int j, int i) const { return j * levels() + i; }
  int max_binder() const {
    int mb = 0;
    for (const auto& s : sigmas) mb = std::max(mb, s->max_binder);
    return mb;
  }
};

namespace detail {

inline BFormulaPtr reindex(const BFormulaPtr& f, int L) {
  return substitute(f, [L](const BTerm& v) { return bvar(0, v.j, v.i, v.j * L + v.i); });
}

inline void collect_free_blocks(const BTermPtr& t, std::vector<char>& used) {
  if (!t) return;
  if (t->kind == BTerm::Kind::Var && t->q == 0 && t->j < static_cast<int>(used.size())) used[static_cast<std::size_t>(t->j)] = 1;
  collect_free_blocks(t->a, used);
  collect_free_blocks(t->b, used);
}

inline void collect_free_blocks(const BFormulaPtr& f, std::vector<char>& used) {
  collect_free_blocks(f->t1, used);
  collect_free_blocks(f->t2, used);
  for (const auto& b : f->bounds) collect_free_blocks(b, used);
  for (const auto& k : f->kids) collect_free_blocks(k, used);
}

// Drops subformulas whose variables occur in no sigma and compacts the block indices.
inline void drop_unused_psis(DeterminingSequence& ds) {
  std::vector<char> used(static_cast<std::size_t>(ds.m()), 0);
  for (const auto& s : ds.sigmas) collect_free_blocks(s, used);
  if (std::all_of(used.begin(), used.end(), [](char c) { return c != 0; })) return;
  std::vector<int> remap(used.size(), -1);
  std::vector<FormulaPtr> kept;
  for (std::size_t j = 0; j < used.size(); ++j)
    if (used[j]) {
      remap[j] = static_cast<int>(kept.size());
      kept.push_back(ds.psis[j]);
    }
  if (kept.empty()) {
    remap[0] = 0;
    kept.push_back(ds.psis[0]);
  }
  const int L = ds.levels();
  for (auto& s : ds.sigmas)
    s = substitute(s, [&](const BTerm& v) {
      int j = remap[static_cast<std::size_t>(v.j)];
      return bvar(0, j, v.i, j * L + v.i);
    });
  ds.psis = std::move(kept);
}

}  // namespace detail

class Translator {
 public:
  const DeterminingSequence& translate(const FormulaPtr& f, int n) {
    if (n < 0 || n > 8) throw std::invalid_argument("precision out of range");
    {
      std::lock_guard<std::mutex> lock(mu_);
      auto it = memo_.find(Key{f, n});
      if (it != memo_.end()) return it->second;
    }
    DeterminingSequence ds = build(f, n);
    std::lock_guard<std::mutex> lock(mu_);
    return memo_.emplace(Key{f, n}, std::move(ds)).first->second;
  }

  std::size_t cached() const {
    std::lock_guard<std::mutex> lock(mu_);
    return memo_.size();
  }

 private:
  struct Key {
    FormulaPtr f;
    int n;
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const { return hash_mix(k.f->hash, static_cast<std::size_t>(k.n)); }
  };
  struct KeyEq {
    bool operator()(const Key& a, const Key& b) const { return a.n == b.n && same_formula(a.f, b.f); }
  };

  mutable std::mutex mu_;
  std::unordered_map<Key, DeterminingSequence, KeyHash, KeyEq> memo_;

  DeterminingSequence build(const FormulaPtr& f, int n) {
    DeterminingSequence ds;
    ds.n = n;
    ds.free = f->free;
    const int top = ds.top();
    switch (f->kind) {
      case Kind::Atomic:
      case Kind::Dist:
        ds.psis = {f};
        for (int i = 0; i <= top; ++i) ds.sigmas.push_back(bneq0(bvar(0, 0, i, i)));
        return ds;
      case Kind::Zero:
        ds.psis = {f};
        for (int i = 0; i <= top; ++i) ds.sigmas.push_back(bfalse());
        return ds;
      case Kind::One:
        ds.psis = {f};
        for (int i = 0; i <= top; ++i) ds.sigmas.push_back(i < top ? btrue() : bfalse());
        return ds;
      case Kind::Half: return half(f, n);
      case Kind::Monus: {
        DeterminingSequence r = monus(f, n);
        detail::drop_unused_psis(r);
        return r;
      }
      case Kind::Sup: return sup(f, n);
      case Kind::Inf: {
        FormulaPtr body = make_monus(make_one(), f->kids[0]);
        DeterminingSequence r = translate(make_monus(make_one(), make_sup(f->name, body)), n);
        r.free = f->free;
        return r;
      }
      default: throw UnsupportedNode("unsupported node: derived connectives must be normalized first");
    }
  }

  DeterminingSequence half(const FormulaPtr& f, int n) {
    DeterminingSequence ds;
    ds.n = n;
    ds.free = f->free;
    const int L = ds.levels(), top = ds.top();
    const DeterminingSequence& c = translate(f->kids[0], n == 0 ? 0 : n - 1);
    for (const auto& p : c.psis) ds.psis.push_back(make_half(p));
    if (n == 0) {
      ds.sigmas = {c.sigmas[0], bfalse()};
      return ds;
    }
    const int half_top = top / 2;
    for (int i = 0; i <= top; ++i) ds.sigmas.push_back(i <= half_top ? detail::reindex(c.sigmas[static_cast<std::size_t>(i)], L) : bfalse());
    return ds;
  }

  DeterminingSequence monus(const FormulaPtr& f, int n) {
    DeterminingSequence ds;
    ds.n = n;
    ds.free = f->free;
    const int L = ds.levels(), top = ds.top();
    const DeterminingSequence& a = translate(f->kids[0], n);
    const DeterminingSequence& b = translate(f->kids[1], n);
    const int m1 = a.m();
    ds.psis = a.psis;
    for (const auto& p : b.psis) ds.psis.push_back(make_monus(make_one(), p));
    std::vector<BFormulaPtr> neg_b;
    for (int i = 0; i <= top; ++i)
      neg_b.push_back(bnot(substitute(b.sigmas[static_cast<std::size_t>(i)], [&](const BTerm& v) {
        int j = m1 + v.j, ii = top - v.i;
        return bcomp(bvar(0, j, ii, j * L + ii));
      })));
    for (int k = 0; k <= top; ++k) {
      std::vector<BFormulaPtr> alts;
      for (int i0 = k; i0 <= top; ++i0)
        alts.push_back(band({a.sigmas[static_cast<std::size_t>(i0)], neg_b[static_cast<std::size_t>(i0 - k)]}));
      ds.sigmas.push_back(bor(std::move(alts)));
    }
    return ds;
  }

  DeterminingSequence sup(const FormulaPtr& f, int n) {
    DeterminingSequence ds;
    ds.n = n;
    ds.free = f->free;
    const int L = ds.levels(), top = ds.top();
    const DeterminingSequence& c = translate(f->kids[0], n);
    const int mc = c.m();
    if (mc > 4) throw SearchTooLarge("sup over more than 4 subformulas");
    const std::vector<int> order = subset_order(mc);
    std::vector<int> index_of(static_cast<std::size_t>(1) << mc, -1);
    for (std::size_t k = 0; k < order.size(); ++k) index_of[static_cast<std::size_t>(order[k])] = static_cast<int>(k);
    for (int U : order) {
      FormulaPtr body;
      for (int j = 0; j < mc; ++j)
        if (U >> j & 1) body = body ? make_min(body, c.psis[static_cast<std::size_t>(j)]) : c.psis[static_cast<std::size_t>(j)];
      ds.psis.push_back(normalize_restricted(make_sup(f->name, body)));
    }
    const int q = c.max_binder() + 1;
    std::vector<BTermPtr> bounds;
    for (int S = 1; S < (1 << mc); ++S)
      for (int i = 0; i < L; ++i) {
        int k = index_of[static_cast<std::size_t>(S)];
        bounds.push_back(bvar(0, k, i, k * L + i));
      }
    for (int i = 0; i <= top; ++i)
      ds.sigmas.push_back(bexists_meet(q, mc, L, 0, bounds, bind_free(c.sigmas[static_cast<std::size_t>(i)], q)));
    return ds;
  }

 public:
  // Nonempty subsets of [0,mc): singletons first, then by size, then by value.
  static std::vector<int> subset_order(int mc) {
    std::vector<int> out;
    for (int j = 0; j < mc; ++j) out.push_back(1 << j);
    for (int size = 2; size <= mc; ++size)
      for (int U = 1; U < (1 << mc); ++U)
        if (std::popcount(static_cast<unsigned>(U)) == size) out.push_back(U);
    return out;
  }
};

inline DeterminingSequence translate(const FormulaPtr& f, int n) {
  Translator t;
  return t.translate(f, n);
}

// The existential block for a sup node written out literally: one z-block per nonempty tuple of
// subsets of [0,mc) indexed by levels, with bounds, product constraints and the child sigma applied
// to the singleton tuples. Intended for small cases only.
inline BFormulaPtr sup_tau_literal(const DeterminingSequence& child, int level) {
  const int mc = child.m(), L = child.levels();
  const int T = mc * L;
  if (T > 12) throw SearchTooLarge("literal sup block too large");
  std::vector<std::uint32_t> tuples;
  for (int size = 1; size <= T; ++size)
    for (std::uint32_t t = 1; t < (std::uint32_t{1} << T); ++t)
      if (std::popcount(t) == size) tuples.push_back(t);
  std::vector<int> tuple_index(std::size_t{1} << T, -1);
  for (std::size_t k = 0; k < tuples.size(); ++k) tuple_index[tuples[k]] = static_cast<int>(k);
  const std::vector<int> order = Translator::subset_order(mc);
  std::vector<int> theta_index(std::size_t{1} << mc, -1);
  for (std::size_t k = 0; k < order.size(); ++k) theta_index[static_cast<std::size_t>(order[k])] = static_cast<int>(k);

  const int q = child.max_binder() + 1;
  const int base = 1 << 16;
  auto zv = [&](int k, int i) { return bvar(q, k, i, base + k * L + i); };
  auto uni = [&](std::uint32_t t) {
    int U = 0;
    for (int pos = 0; pos < L; ++pos) U |= static_cast<int>((t >> (pos * mc)) & ((1u << mc) - 1));
    return U;
  };
  std::vector<BTermPtr> vars;
  std::vector<BFormulaPtr> cs;
  for (std::size_t k = 0; k < tuples.size(); ++k)
    for (int i = 0; i < L; ++i) {
      vars.push_back(zv(static_cast<int>(k), i));
      int th = theta_index[static_cast<std::size_t>(uni(tuples[k]))];
      cs.push_back(ble(zv(static_cast<int>(k), i), bvar(0, th, i, th * L + i)));
    }
  for (std::size_t a = 0; a < tuples.size(); ++a)
    for (std::size_t b = a + 1; b < tuples.size(); ++b) {
      int c = tuple_index[tuples[a] | tuples[b]];
      for (int i = 0; i < L; ++i)
        cs.push_back(beq(bmeet(zv(static_cast<int>(a), i), zv(static_cast<int>(b), i)), zv(c, i)));
    }
  cs.push_back(substitute(child.sigmas[static_cast<std::size_t>(level)], [&](const BTerm& v) { return zv(v.j, v.i); }));
  return bexists(std::move(vars), band(std::move(cs)));
}

// ---------------------------------------------------------------- level sets and bounds

struct LevelSets {
  int n = 0, m = 0;
  std::vector<Subset> strict, weak;           // index j * levels + i
  std::vector<std::vector<Rational>> values;  // [j][gamma]

  int levels() const { return (1 << n) + 1; }
  Subset X(int j, int i) const { return strict[static_cast<std::size_t>(j * levels() + i)]; }
  Subset Xt(int j, int i) const { return weak[static_cast<std::size_t>(j * levels() + i)]; }
};

// tuples[v][gamma] is the coordinate at gamma of the product point assigned to free variable v.
inline LevelSets level_sets(const DeterminingSequence& ds, const Family& fam, const std::vector<std::vector<int>>& tuples) {
  if (static_cast<int>(tuples.size()) != ds.arity()) throw std::invalid_argument("arity mismatch");
  const int k = fam.ideal.size();
  LevelSets ls;
  ls.n = ds.n;
  ls.m = ds.m();
  const int L = ds.levels();
  ls.strict.assign(static_cast<std::size_t>(ls.m * L), 0);
  ls.weak.assign(static_cast<std::size_t>(ls.m * L), 0);
  std::vector<int> env;
  for (int j = 0; j < ls.m; ++j) {
    std::vector<Rational> vals;
    for (int g = 0; g < k; ++g) {
      env.assign(static_cast<std::size_t>(VarTable::count()), -1);
      for (std::size_t v = 0; v < tuples.size(); ++v)
        env[static_cast<std::size_t>(ds.free[v])] = tuples[v][static_cast<std::size_t>(g)];
      vals.push_back(Evaluator(fam.structures[static_cast<std::size_t>(g)]).eval(ds.psis[static_cast<std::size_t>(j)], env));
    }
    for (int i = 0; i < L; ++i) {
      Rational t = dyadic(i, ds.n);
      for (int g = 0; g < k; ++g) {
        if (vals[static_cast<std::size_t>(g)] > t) ls.strict[static_cast<std::size_t>(j * L + i)] |= Subset{1} << g;
        if (vals[static_cast<std::size_t>(g)] >= t) ls.weak[static_cast<std::size_t>(j * L + i)] |= Subset{1} << g;
      }
    }
    ls.values.push_back(std::move(vals));
  }
  return ls;
}

inline std::vector<std::uint32_t> class_assignment(const QuotientBA& B, const std::vector<Subset>& sets) {
  std::vector<std::uint32_t> a;
  a.reserve(sets.size());
  for (Subset s : sets) a.push_back(B.of(s));
  return a;
}

struct FVBounds {
  int n = 0;
  std::optional<int> lower_strict;  // level l with sigma_l true on [X]; value l / 2^n
  std::optional<int> ell_tilde;     // max level with sigma_l true on [X~]
  std::optional<int> first_fail;    // min level with sigma_l false on [X~]
  std::vector<char> strict_truth, weak_truth;
  Rational direct;

  Rational upper() const { return first_fail ? dyadic(*first_fail, n) : Rational(1); }
  // Combined strict lower bound, if any.
  std::optional<Rational> lower() const {
    std::optional<Rational> lo;
    if (lower_strict) lo = dyadic(*lower_strict, n);
    if (ell_tilde) {
      Rational t = dyadic(*ell_tilde - 1, n);
      if (!lo || t > *lo) lo = t;
    }
    return lo;
  }
  bool contained() const {
    auto lo = lower();
    return (!lo || direct > *lo) && direct <= upper();
  }
};

// Value of f at the classes of the given product points, computed directly in the reduced product.
inline Rational direct_value(const ReducedProduct& rp, const FormulaPtr& f, const std::vector<int>& free,
                             const std::vector<std::vector<int>>& tuples) {
  std::vector<int> env(static_cast<std::size_t>(VarTable::count()), -1);
  for (std::size_t v = 0; v < tuples.size(); ++v) env[static_cast<std::size_t>(free[v])] = project(rp, tuples[v]);
  return Evaluator(rp.induced).eval(f, env);
}

// tuples[v] is the product point (one coordinate per index) for free variable v.
inline FVBounds fv_bounds_with(const DeterminingSequence& ds, const ReducedProduct& rp, const QuotientBA& B,
                               const std::vector<std::vector<int>>& tuples, const FormulaPtr& f, LevelSets* out_sets = nullptr) {
  FVBounds b;
  b.n = ds.n;
  LevelSets ls = level_sets(ds, rp.family, tuples);
  auto xs = class_assignment(B, ls.strict);
  auto xt = class_assignment(B, ls.weak);
  for (int l = 0; l <= ds.top(); ++l) {
    bool s = ba_eval(B, ds.sigmas[static_cast<std::size_t>(l)], xs);
    bool w = ba_eval(B, ds.sigmas[static_cast<std::size_t>(l)], xt);
    b.strict_truth.push_back(s);
    b.weak_truth.push_back(w);
    if (s) b.lower_strict = l;
    if (w) b.ell_tilde = l;
    if (!w && !b.first_fail) b.first_fail = l;
  }
  b.direct = direct_value(rp, f, ds.free, tuples);
  if (out_sets) *out_sets = std::move(ls);
  return b;
}

inline FVBounds fv_bounds(const FormulaPtr& f, int n, const Family& fam, const std::vector<std::vector<int>>& tuples) {
  FormulaPtr g = normalize_restricted(f);
  DeterminingSequence ds = translate(g, n);
  ReducedProduct rp = reduced_product(fam);
  QuotientBA B = quotient(fam.ideal);
  return fv_bounds_with(ds, rp, B, tuples, g);
}

struct CertifyOptions {
  bool check_top_strict = false;  // the strict implication at l = 2^n
};

struct CertifyResult {
  bool ok = true;
  int level = -1;
  std::string failure;
  FVBounds bounds;
  LevelSets sets;
  std::vector<int> top_strict_findings;  // l = 2^n with sigma true on [X]; reported, not failed by default
};

inline CertifyResult certify_with(const DeterminingSequence& ds, const ReducedProduct& rp, const QuotientBA& B,
                                  const std::vector<std::vector<int>>& tuples, const FormulaPtr& f,
                                  const CertifyOptions& opt = {}) {
  CertifyResult r;
  r.bounds = fv_bounds_with(ds, rp, B, tuples, f, &r.sets);
  const Rational& v = r.bounds.direct;
  auto fail = [&](int l, std::string what) {
    if (!r.ok) return;
    r.ok = false;
    r.level = l;
    r.failure = std::move(what);
  };
  for (int l = 0; l <= ds.top(); ++l) {
    bool s = r.bounds.strict_truth[static_cast<std::size_t>(l)] != 0;
    bool w = r.bounds.weak_truth[static_cast<std::size_t>(l)] != 0;
    Rational t = dyadic(l, ds.n);
    if (s && !(v > t)) {
      if (l == ds.top() && !opt.check_top_strict)
        r.top_strict_findings.push_back(l);
      else
        fail(l, "sigma holds on strict level sets but value <= l/2^n");
    }
    if (v > t && !w) fail(l, "value > l/2^n but sigma fails on weak level sets");
    if (w && !(v > dyadic(l - 1, ds.n))) fail(l, "sigma holds on weak level sets but value <= (l-1)/2^n");
  }
  return r;
}

inline CertifyResult certify(const FormulaPtr& f, int n, const Family& fam, const std::vector<std::vector<int>>& tuples,
                             const CertifyOptions& opt = {}) {
  FormulaPtr g = normalize_restricted(f);
  DeterminingSequence ds = translate(g, n);
  ReducedProduct rp = reduced_product(fam);
  QuotientBA B = quotient(fam.ideal);
  return certify_with(ds, rp, B, tuples, g, opt);
}

// ---------------------------------------------------------------- pad-shift

struct PadShiftReport {
  bool ok = true;
  bool exhaustive = false;
  int level = -1;
  std::vector<std::uint32_t> assignment;
};

// sigma_{l-1}(z) <-> sigma_l(w) where w[j][0] = 1 and w[j][i] = z[j][i-1].
inline PadShiftReport pad_shift_check(const DeterminingSequence& ds, const QuotientBA& B, int samples = 1000,
                                      std::uint64_t seed = 1) {
  PadShiftReport rep;
  const int L = ds.levels(), s = ds.vars();
  double space = 1;
  for (int i = 0; i < s; ++i) space *= B.size();
  rep.exhaustive = space <= 65536.0;
  std::vector<std::uint32_t> z(static_cast<std::size_t>(s), 0), w(static_cast<std::size_t>(s), 0);
  auto shifted = [&]() {
    for (int j = 0; j < ds.m(); ++j) {
      w[static_cast<std::size_t>(j * L)] = B.top();
      for (int i = 1; i < L; ++i) w[static_cast<std::size_t>(j * L + i)] = z[static_cast<std::size_t>(j * L + i - 1)];
    }
  };
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::uint32_t> u(0, B.top());
  const auto total = rep.exhaustive ? static_cast<std::size_t>(space) : static_cast<std::size_t>(samples);
  for (std::size_t code = 0; code < total; ++code) {
    if (rep.exhaustive) {
      for (int i = 0; i < s; ++i) z[static_cast<std::size_t>(i)] = static_cast<std::uint32_t>((code >> (i * B.atoms)) & B.top());
    } else {
      for (auto& x : z) x = u(rng);
    }
    shifted();
    for (int l = 1; l <= ds.top(); ++l) {
      bool a = ba_eval(B, ds.sigmas[static_cast<std::size_t>(l - 1)], z);
      bool b = ba_eval(B, ds.sigmas[static_cast<std::size_t>(l)], w);
      if (a != b) {
        rep.ok = false;
        rep.level = l;
        rep.assignment = z;
        return rep;
      }
    }
  }
  return rep;
}

// ---------------------------------------------------------------- mutation

inline int count_atoms(const BFormulaPtr& f) {
  switch (f->kind) {
    case BFormula::Kind::Eq:
    case BFormula::Kind::Le:
    case BFormula::Kind::Neq0: return 1;
    default: {
      int c = 0;
      for (const auto& k : f->kids) c += count_atoms(k);
      return c;
    }
  }
}

namespace detail {

inline BFormulaPtr flip_atom(const BFormulaPtr& f, int& index, bool& hit) {
  using K = BFormula::Kind;
  switch (f->kind) {
    case K::Eq:
    case K::Le:
    case K::Neq0:
      if (index-- != 0) return f;
      hit = true;
      if (f->kind == K::Neq0) return beq(f->t1, bzero());
      return bnot(f);
    case K::Exists:
    case K::Forall: {
      BFormulaPtr body = flip_atom(f->kids[0], index, hit);
      return body == f->kids[0] ? f : bquant(f->kind, f->vars, body);
    }
    case K::ExistsMeet: {
      BFormulaPtr body = flip_atom(f->kids[0], index, hit);
      if (body == f->kids[0]) return f;
      return bexists_meet(f->q, f->m, f->L, f->base, f->bounds, body, false);
    }
    default: {
      std::vector<BFormulaPtr> kids;
      bool changed = false;
      for (const auto& k : f->kids) {
        kids.push_back(flip_atom(k, index, hit));
        changed = changed || kids.back() != k;
      }
      return changed ? bconn(f->kind, std::move(kids)) : f;
    }
  }
}

}  // namespace detail

inline int count_atoms(const DeterminingSequence& ds) {
  int c = 0;
  for (const auto& s : ds.sigmas) c += count_atoms(s);
  return c;
}

// Flips the index-th atom across all sigmas (Neq0 becomes = 0, other atoms are negated).
// Exists-meet nodes above the flip switch to exhaustive search since the body may no longer be monotone.
inline DeterminingSequence mutate(const DeterminingSequence& ds, int index) {
  DeterminingSequence r = ds;
  for (auto& s : r.sigmas) {
    bool hit = false;
    s = detail::flip_atom(s, index, hit);
    if (hit) return r;
  }
  throw std::out_of_range("atom index out of range");
}

}  // namespace fv
