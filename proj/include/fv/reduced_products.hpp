#pragma once

#include "fv/boolean_ideals.hpp"
#include "fv/structures.hpp"

#include <cstdlib>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace fv {

inline constexpr std::size_t kDefaultMaxProductPoints = 4096;

inline std::size_t max_product_points() {
  if (const char* env = std::getenv("FV_MAX_PRODUCT_POINTS")) {
    char* end = nullptr;
    unsigned long long v = std::strtoull(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
  }
  return kDefaultMaxProductPoints;
}

class SizeOverflow : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Family {
  IdealSpec ideal;
  std::vector<FiniteStructure> structures;  // one per element of the ground set, in order

  const Signature& sig() const { return structures.front().sig; }

  void check() const {
    if (static_cast<int>(structures.size()) != ideal.size())
      throw std::invalid_argument("family needs one structure per index");
    for (const auto& s : structures) {
      if (!(s.sig == structures.front().sig)) throw std::invalid_argument("family structures must share a signature");
      auto r = validate(s);
      if (!r) throw std::invalid_argument("family structure invalid: " + r.violation->what);
    }
  }
};

inline Family constant_family(const IdealSpec& I, const FiniteStructure& A) {
  return Family{I, std::vector<FiniteStructure>(static_cast<std::size_t>(I.size()), A)};
}

struct ReducedProduct {
  Family family;
  std::vector<int> radix;                // universe size per coordinate
  std::vector<std::vector<int>> points;  // lexicographic order
  std::vector<int> class_of;             // point -> class
  std::vector<std::vector<int>> classes;  // class -> points, ascending; first is the representative
  FiniteStructure induced;

  std::size_t point_index(const std::vector<int>& tuple) const {
    if (tuple.size() != radix.size()) throw std::invalid_argument("malformed product tuple");
    std::size_t idx = 0;
    for (std::size_t g = 0; g < radix.size(); ++g) {
      if (tuple[g] < 0 || tuple[g] >= radix[g]) throw std::invalid_argument("product tuple coordinate out of range");
      idx = idx * static_cast<std::size_t>(radix[g]) + static_cast<std::size_t>(tuple[g]);
    }
    return idx;
  }
  const std::vector<int>& rep(int cls) const {
    return points[static_cast<std::size_t>(classes[static_cast<std::size_t>(cls)].front())];
  }
};

namespace detail {

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[static_cast<std::size_t>(x)] != x) {
      parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
      x = parent[static_cast<std::size_t>(x)];
    }
    return x;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
  }
};

inline std::string tuple_label(const Family& fam, const std::vector<int>& t) {
  std::string s = "<";
  for (std::size_t g = 0; g < t.size(); ++g) {
    if (g) s += ",";
    s += fam.structures[g].universe[static_cast<std::size_t>(t[g])];
  }
  return s + ">";
}

}  // namespace detail

// d_I between two product points.
inline Rational product_distance(const Family& fam, const std::vector<int>& a, const std::vector<int>& b) {
  std::vector<Rational> r;
  r.reserve(a.size());
  for (std::size_t g = 0; g < a.size(); ++g) r.push_back(fam.structures[g].d(a[g], b[g]));
  return limsup_ideal(fam.ideal, r);
}

inline ReducedProduct reduced_product(const Family& fam) {
  fam.check();
  ReducedProduct rp;
  rp.family = fam;
  const std::size_t cap = max_product_points();
  std::size_t total = 1;
  for (const auto& s : fam.structures) {
    rp.radix.push_back(s.size());
    total *= static_cast<std::size_t>(s.size());
    if (total > cap) throw SizeOverflow("product has more than " + std::to_string(cap) + " points");
  }
  const int k = fam.ideal.size();
  rp.points.reserve(total);
  for (std::size_t idx = 0; idx < total; ++idx) {
    std::vector<int> t(static_cast<std::size_t>(k));
    std::size_t rest = idx;
    for (int g = k - 1; g >= 0; --g) {
      t[static_cast<std::size_t>(g)] = static_cast<int>(rest % static_cast<std::size_t>(rp.radix[static_cast<std::size_t>(g)]));
      rest /= static_cast<std::size_t>(rp.radix[static_cast<std::size_t>(g)]);
    }
    rp.points.push_back(std::move(t));
  }

  // Coordinates are point-distinct, so d_I(p,q) = 0 exactly when p and q differ on a member of I.
  detail::UnionFind uf(total);
  for (std::size_t a = 0; a < total; ++a)
    for (std::size_t b = a + 1; b < total; ++b) {
      Subset diff = 0;
      for (int g = 0; g < k; ++g)
        if (rp.points[a][static_cast<std::size_t>(g)] != rp.points[b][static_cast<std::size_t>(g)]) diff |= Subset{1} << g;
      if (fam.ideal.contains(diff)) uf.unite(static_cast<int>(a), static_cast<int>(b));
    }
  rp.class_of.assign(total, -1);
  std::vector<int> root_class(total, -1);
  for (std::size_t p = 0; p < total; ++p) {
    int r = uf.find(static_cast<int>(p));
    if (root_class[static_cast<std::size_t>(r)] < 0) {
      root_class[static_cast<std::size_t>(r)] = static_cast<int>(rp.classes.size());
      rp.classes.emplace_back();
    }
    int c = root_class[static_cast<std::size_t>(r)];
    rp.class_of[p] = c;
    rp.classes[static_cast<std::size_t>(c)].push_back(static_cast<int>(p));
  }
  const int C = static_cast<int>(rp.classes.size());
  if (C > kMaxUniverse * kMaxUniverse * kMaxUniverse * kMaxUniverse)
    throw SizeOverflow("too many classes");

  FiniteStructure& s = rp.induced;
  s.sig = fam.sig();
  for (int c = 0; c < C; ++c) s.universe.push_back(detail::tuple_label(fam, rp.rep(c)));
  s.dist.assign(static_cast<std::size_t>(C * C), 0);
  for (int a = 0; a < C; ++a)
    for (int b = a + 1; b < C; ++b) {
      Rational d = product_distance(fam, rp.rep(a), rp.rep(b));
      if (d == 0) throw std::logic_error("distinct classes at distance zero");
      s.d(a, b) = d;
      s.d(b, a) = d;
    }

  std::vector<int> ctup, coord;
  std::vector<Rational> vals(static_cast<std::size_t>(k));
  for (std::size_t p = 0; p < s.sig.preds.size(); ++p) {
    const int ar = s.sig.preds[p].arity;
    std::size_t count = ipow(static_cast<std::size_t>(C), ar);
    std::vector<Rational> table(count);
    for (std::size_t idx = 0; idx < count; ++idx) {
      unflatten(idx, C, ar, ctup);
      for (int g = 0; g < k; ++g) {
        coord.clear();
        for (int c : ctup) coord.push_back(rp.rep(c)[static_cast<std::size_t>(g)]);
        const auto& A = fam.structures[static_cast<std::size_t>(g)];
        vals[static_cast<std::size_t>(g)] = A.preds[p][A.flat(coord)];
      }
      table[idx] = limsup_ideal(fam.ideal, vals);
    }
    s.preds.push_back(std::move(table));
  }

  auto apply_fn = [&](std::size_t f, const std::vector<int>& pts) {
    std::vector<int> out(static_cast<std::size_t>(k));
    for (int g = 0; g < k; ++g) {
      coord.clear();
      for (int pi : pts) coord.push_back(rp.points[static_cast<std::size_t>(pi)][static_cast<std::size_t>(g)]);
      const auto& A = fam.structures[static_cast<std::size_t>(g)];
      out[static_cast<std::size_t>(g)] = A.funcs[f][A.flat(coord)];
    }
    return rp.class_of[rp.point_index(out)];
  };

  for (std::size_t f = 0; f < s.sig.funcs.size(); ++f) {
    const int ar = s.sig.funcs[f].arity;
    std::size_t count = ipow(static_cast<std::size_t>(C), ar);
    std::vector<int> table(count);
    std::vector<int> pts(static_cast<std::size_t>(ar));
    for (std::size_t idx = 0; idx < count; ++idx) {
      unflatten(idx, C, ar, ctup);
      for (int a = 0; a < ar; ++a) pts[static_cast<std::size_t>(a)] = rp.classes[static_cast<std::size_t>(ctup[static_cast<std::size_t>(a)])].front();
      table[idx] = apply_fn(f, pts);
    }
    // Well-definedness: every choice of members must land in the same class.
    std::size_t ptotal = ipow(total, ar);
    for (std::size_t idx = 0; idx < ptotal; ++idx) {
      unflatten(idx, static_cast<int>(total), ar, pts);
      std::size_t cidx = 0;
      for (int pi : pts) cidx = cidx * static_cast<std::size_t>(C) + static_cast<std::size_t>(rp.class_of[static_cast<std::size_t>(pi)]);
      if (apply_fn(f, pts) != table[cidx])
        throw std::logic_error("function " + s.sig.funcs[f].name + " is not well defined on classes");
    }
    s.funcs.push_back(std::move(table));
  }

  for (std::size_t c = 0; c < s.sig.consts.size(); ++c) {
    std::vector<int> t(static_cast<std::size_t>(k));
    for (int g = 0; g < k; ++g) t[static_cast<std::size_t>(g)] = fam.structures[static_cast<std::size_t>(g)].consts[c];
    s.consts.push_back(rp.class_of[rp.point_index(t)]);
  }
  return rp;
}

inline int project(const ReducedProduct& rp, const std::vector<int>& tuple) {
  return rp.class_of[rp.point_index(tuple)];
}

struct AtomicCheck {
  bool ok = false;
  Rational in_product, limsup;
};

// Compares an atomic formula in the induced structure with the limsup of its coordinate values.
// tuples[v] is the product tuple assigned to the v-th free variable of phi.
inline AtomicCheck atomic_limsup_check(const ReducedProduct& rp, const FormulaPtr& phi,
                                       const std::vector<std::vector<int>>& tuples) {
  if (phi->kind != Kind::Atomic && phi->kind != Kind::Dist) throw std::invalid_argument("formula is not atomic");
  if (tuples.size() != phi->free.size()) throw std::invalid_argument("tuple count does not match free variables");
  const auto& fam = rp.family;
  std::vector<int> env;
  auto bind = [&](auto&& pick) {
    env.assign(static_cast<std::size_t>(VarTable::count()), -1);
    for (std::size_t v = 0; v < tuples.size(); ++v) env[static_cast<std::size_t>(phi->free[v])] = pick(tuples[v]);
  };
  AtomicCheck r;
  bind([&](const std::vector<int>& t) { return project(rp, t); });
  r.in_product = Evaluator(rp.induced).eval(phi, env);
  std::vector<Rational> vals;
  for (int g = 0; g < fam.ideal.size(); ++g) {
    bind([&](const std::vector<int>& t) { return t[static_cast<std::size_t>(g)]; });
    vals.push_back(Evaluator(fam.structures[static_cast<std::size_t>(g)]).eval(phi, env));
  }
  r.limsup = limsup_ideal(fam.ideal, vals);
  r.ok = r.in_product == r.limsup;
  return r;
}

// Maps each class to the g0-coordinate of its representative and checks that this is an isomorphism.
inline bool principal_iso_check(const ReducedProduct& rp, int g0) {
  std::vector<int> map;
  for (int c = 0; c < static_cast<int>(rp.classes.size()); ++c) map.push_back(rp.rep(c)[static_cast<std::size_t>(g0)]);
  return is_isomorphism(rp.induced, rp.family.structures[static_cast<std::size_t>(g0)], map);
}

struct FubiniReport {
  bool ok = false;
  std::string failure;
  int single_classes = 0, iterated_classes = 0;
  std::vector<int> rho;  // class of the single product -> class of the iterated product
};

// Outer ideal J on Omega2 (index m), inner ideal I on Omega1 (index n). The single product lives on
// the grid Omega2 x Omega1 with the Fubini ideal J x I.
inline FubiniReport fubini_iso(const FiniteStructure& A, const IdealSpec& I, const IdealSpec& J) {
  FubiniReport rep;
  ReducedProduct inner = reduced_product(constant_family(I, A));
  ReducedProduct outer = reduced_product(constant_family(J, inner.induced));
  IdealSpec grid = fubini(J, I);
  ReducedProduct single = reduced_product(constant_family(grid, A));
  rep.single_classes = static_cast<int>(single.classes.size());
  rep.iterated_classes = static_cast<int>(outer.classes.size());

  const int nI = I.size(), nJ = J.size();
  auto rho_point = [&](const std::vector<int>& a) {
    std::vector<int> b(static_cast<std::size_t>(nJ));
    std::vector<int> row(static_cast<std::size_t>(nI));
    for (int m = 0; m < nJ; ++m) {
      for (int n = 0; n < nI; ++n) row[static_cast<std::size_t>(n)] = a[static_cast<std::size_t>(m * nI + n)];
      b[static_cast<std::size_t>(m)] = project(inner, row);
    }
    return project(outer, b);
  };
  rep.rho.assign(single.classes.size(), -1);
  for (std::size_t p = 0; p < single.points.size(); ++p) {
    int c = single.class_of[p];
    int img = rho_point(single.points[p]);
    int& slot = rep.rho[static_cast<std::size_t>(c)];
    if (slot < 0) {
      slot = img;
    } else if (slot != img) {
      rep.failure = "rho is not well defined on class " + std::to_string(c);
      return rep;
    }
  }
  if (rep.single_classes != rep.iterated_classes) {
    rep.failure = "class counts differ";
    return rep;
  }
  if (!is_isomorphism(single.induced, outer.induced, rep.rho)) {
    rep.failure = "rho does not preserve the structure";
    return rep;
  }
  rep.ok = true;
  return rep;
}

}  // namespace fv
