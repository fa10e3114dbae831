#pragma once

#include "fv/syntax.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

namespace fv {

inline constexpr int kMaxUniverse = 16;

struct FiniteStructure {
  Signature sig;
  std::vector<std::string> universe;
  std::vector<Rational> dist;                // row-major size x size
  std::vector<std::vector<Rational>> preds;  // per predicate, row-major over universe^arity
  std::vector<std::vector<int>> funcs;       // per function, row-major over universe^arity
  std::vector<int> consts;

  int size() const { return static_cast<int>(universe.size()); }
  const Rational& d(int a, int b) const { return dist[static_cast<std::size_t>(a * size() + b)]; }
  Rational& d(int a, int b) { return dist[static_cast<std::size_t>(a * size() + b)]; }

  std::size_t flat(const std::vector<int>& args) const {
    std::size_t idx = 0;
    for (int a : args) idx = idx * static_cast<std::size_t>(size()) + static_cast<std::size_t>(a);
    return idx;
  }

  int label_index(const std::string& label) const {
    for (int i = 0; i < size(); ++i)
      if (universe[static_cast<std::size_t>(i)] == label) return i;
    return -1;
  }

  bool operator==(const FiniteStructure& o) const {
    return sig == o.sig && universe == o.universe && dist == o.dist && preds == o.preds && funcs == o.funcs &&
           consts == o.consts;
  }
};

inline std::size_t ipow(std::size_t b, int e) {
  std::size_t r = 1;
  for (int i = 0; i < e; ++i) r *= b;
  return r;
}

// Decodes a row-major index into a tuple of the given arity.
inline void unflatten(std::size_t idx, int n, int arity, std::vector<int>& out) {
  out.assign(static_cast<std::size_t>(arity), 0);
  for (int i = arity - 1; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = static_cast<int>(idx % static_cast<std::size_t>(n));
    idx /= static_cast<std::size_t>(n);
  }
}

using Valuation = std::map<std::string, int>;

struct Violation {
  std::string what;
  std::vector<int> witness;
};

struct ValidationReport {
  bool ok = true;
  std::optional<Violation> violation;
  explicit operator bool() const { return ok; }
};

namespace detail {

inline Rational tuple_distance(const FiniteStructure& s, const std::vector<int>& a, const std::vector<int>& b) {
  Rational m = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (s.d(a[i], b[i]) > m) m = s.d(a[i], b[i]);
  return m;
}

inline ValidationReport fail(std::string what, std::vector<int> witness) {
  ValidationReport r;
  r.ok = false;
  r.violation = Violation{std::move(what), std::move(witness)};
  return r;
}

}  // namespace detail

inline ValidationReport validate(const FiniteStructure& s) {
  const int n = s.size();
  if (n < 1) return detail::fail("empty universe", {});
  if (s.dist.size() != static_cast<std::size_t>(n * n)) return detail::fail("distance matrix has wrong shape", {});
  for (int a = 0; a < n; ++a) {
    if (s.d(a, a) != 0) return detail::fail("d(a,a) != 0", {a});
    for (int b = 0; b < n; ++b) {
      if (!in_unit_interval(s.d(a, b))) return detail::fail("distance outside [0,1]", {a, b});
      if (s.d(a, b) != s.d(b, a)) return detail::fail("distance not symmetric", {a, b});
      if (a != b && s.d(a, b) == 0) return detail::fail("distinct points at distance 0", {a, b});
    }
  }
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c)
        if (s.d(a, c) > s.d(a, b) + s.d(b, c)) return detail::fail("triangle inequality", {a, b, c});

  if (s.preds.size() != s.sig.preds.size() || s.funcs.size() != s.sig.funcs.size() ||
      s.consts.size() != s.sig.consts.size())
    return detail::fail("tables do not match the signature", {});

  std::vector<int> ta, tb;
  for (std::size_t p = 0; p < s.preds.size(); ++p) {
    const auto& sym = s.sig.preds[p];
    std::size_t count = ipow(static_cast<std::size_t>(n), sym.arity);
    if (s.preds[p].size() != count) return detail::fail("predicate table has wrong size: " + sym.name, {});
    for (std::size_t i = 0; i < count; ++i)
      if (!in_unit_interval(s.preds[p][i])) return detail::fail("predicate value outside [0,1]: " + sym.name, {static_cast<int>(i)});
    for (std::size_t i = 0; i < count; ++i) {
      unflatten(i, n, sym.arity, ta);
      for (std::size_t j = i + 1; j < count; ++j) {
        unflatten(j, n, sym.arity, tb);
        Rational diff = s.preds[p][i] - s.preds[p][j];
        if (diff < 0) diff = -diff;
        if (diff > sym.lipschitz * detail::tuple_distance(s, ta, tb)) {
          std::vector<int> w = ta;
          w.insert(w.end(), tb.begin(), tb.end());
          return detail::fail("uniform continuity of " + sym.name, w);
        }
      }
    }
  }
  for (std::size_t f = 0; f < s.funcs.size(); ++f) {
    const auto& sym = s.sig.funcs[f];
    std::size_t count = ipow(static_cast<std::size_t>(n), sym.arity);
    if (s.funcs[f].size() != count) return detail::fail("function table has wrong size: " + sym.name, {});
    for (std::size_t i = 0; i < count; ++i)
      if (s.funcs[f][i] < 0 || s.funcs[f][i] >= n) return detail::fail("function value out of range: " + sym.name, {static_cast<int>(i)});
    for (std::size_t i = 0; i < count; ++i) {
      unflatten(i, n, sym.arity, ta);
      for (std::size_t j = i + 1; j < count; ++j) {
        unflatten(j, n, sym.arity, tb);
        if (s.d(s.funcs[f][i], s.funcs[f][j]) > sym.lipschitz * detail::tuple_distance(s, ta, tb)) {
          std::vector<int> w = ta;
          w.insert(w.end(), tb.begin(), tb.end());
          return detail::fail("uniform continuity of " + sym.name, w);
        }
      }
    }
  }
  for (std::size_t c = 0; c < s.consts.size(); ++c)
    if (s.consts[c] < 0 || s.consts[c] >= n) return detail::fail("constant out of range: " + s.sig.consts[c], {});
  return {};
}

// ---------------------------------------------------------------- evaluation

// Direct evaluator. Quantified subformulas are memoized per assignment of their free variables.
class Evaluator {
 public:
  explicit Evaluator(const FiniteStructure& s) : s_(s) {}

  Rational eval(const FormulaPtr& f, std::vector<int>& env) {
    switch (f->kind) {
      case Kind::Zero: return 0;
      case Kind::One: return 1;
      case Kind::Atomic: {
        args_.clear();
        for (const auto& t : f->terms) args_.push_back(term(t, env));
        return s_.preds[static_cast<std::size_t>(f->symbol)][s_.flat(args_)];
      }
      case Kind::Dist: return s_.d(term(f->terms[0], env), term(f->terms[1], env));
      case Kind::Half: return eval(f->kids[0], env) / 2;
      case Kind::Monus: {
        Rational a = eval(f->kids[0], env);
        Rational b = eval(f->kids[1], env);
        return monus(a, b);
      }
      case Kind::Sup:
      case Kind::Inf: return quant(f, env);
      case Kind::Min:
      case Kind::Max:
      case Kind::Neg:
      case Kind::Const: {
        std::vector<Rational> vals;
        for (const auto& k : f->kids) vals.push_back(eval(k, env));
        return apply_connective(*f, vals);
      }
    }
    throw std::logic_error("unknown formula kind");
  }

  int term(const TermPtr& t, const std::vector<int>& env) const {
    switch (t->kind) {
      case Term::Kind::Var: {
        int v = t->index < static_cast<int>(env.size()) ? env[static_cast<std::size_t>(t->index)] : -1;
        if (v < 0) throw std::invalid_argument("unbound variable " + t->name);
        return v;
      }
      case Term::Kind::Const: return s_.consts[static_cast<std::size_t>(t->index)];
      case Term::Kind::Func: {
        std::vector<int> a;
        a.reserve(t->args.size());
        for (const auto& x : t->args) a.push_back(term(x, env));
        return s_.funcs[static_cast<std::size_t>(t->index)][s_.flat(a)];
      }
    }
    throw std::logic_error("unknown term kind");
  }

  const FiniteStructure& structure() const { return s_; }

 private:
  struct Key {
    const Formula* f;
    std::uint64_t packed;
    bool operator==(const Key& o) const { return f == o.f && packed == o.packed; }
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const {
      return hash_mix(std::hash<const void*>{}(k.f), std::hash<std::uint64_t>{}(k.packed));
    }
  };

  Rational quant(const FormulaPtr& f, std::vector<int>& env) {
    bool cache = f->free.size() <= 3;
    Key key{f.get(), 0};
    if (cache) {
      for (int v : f->free) {
        int val = v < static_cast<int>(env.size()) ? env[static_cast<std::size_t>(v)] : -1;
        if (val < 0) throw std::invalid_argument("unbound variable " + VarTable::name(v));
        key.packed = (key.packed << 16) | static_cast<std::uint64_t>(val);
      }
      auto it = memo_.find(key);
      if (it != memo_.end()) return it->second;
    }
    auto slot = static_cast<std::size_t>(f->var);
    if (env.size() <= slot) env.resize(slot + 1, -1);
    int saved = env[slot];
    bool sup = f->kind == Kind::Sup;
    Rational best = sup ? 0 : 1;
    for (int u = 0; u < s_.size(); ++u) {
      env[slot] = u;
      Rational v = eval(f->kids[0], env);
      if (sup ? v > best : v < best) best = v;
    }
    env[slot] = saved;
    if (cache) memo_.emplace(key, best);
    return best;
  }

  const FiniteStructure& s_;
  std::vector<int> args_;
  std::unordered_map<Key, Rational, KeyHash> memo_;
};

inline std::vector<int> make_env(const Valuation& v) {
  std::vector<int> env(static_cast<std::size_t>(VarTable::count()), -1);
  for (const auto& [name, val] : v) {
    auto id = static_cast<std::size_t>(VarTable::intern(name));
    if (env.size() <= id) env.resize(id + 1, -1);
    env[id] = val;
  }
  return env;
}

inline Rational eval(const FiniteStructure& s, const FormulaPtr& f, const Valuation& v = {}) {
  for (const auto& [name, val] : v)
    if (val < 0 || val >= s.size()) throw std::invalid_argument("valuation out of range for " + name);
  std::vector<int> env = make_env(v);
  for (int id : f->free)
    if (id >= static_cast<int>(env.size()) || env[static_cast<std::size_t>(id)] < 0)
      throw std::invalid_argument("unbound variable " + VarTable::name(id));
  Evaluator ev(s);
  return ev.eval(f, env);
}

// ---------------------------------------------------------------- random structures

namespace detail {

inline Rational grid_value(std::mt19937_64& rng, int denom) {
  std::uniform_int_distribution<int> u(0, denom);
  Rational r(u(rng), denom);
  r.canonicalize();
  return r;
}

inline bool pred_ok(const FiniteStructure& s, std::size_t p) {
  const auto& sym = s.sig.preds[p];
  std::size_t count = s.preds[p].size();
  std::vector<int> ta, tb;
  for (std::size_t i = 0; i < count; ++i) {
    unflatten(i, s.size(), sym.arity, ta);
    for (std::size_t j = i + 1; j < count; ++j) {
      unflatten(j, s.size(), sym.arity, tb);
      Rational diff = s.preds[p][i] - s.preds[p][j];
      if (diff < 0) diff = -diff;
      if (diff > sym.lipschitz * tuple_distance(s, ta, tb)) return false;
    }
  }
  return true;
}

inline bool func_ok(const FiniteStructure& s, std::size_t f) {
  const auto& sym = s.sig.funcs[f];
  std::size_t count = s.funcs[f].size();
  std::vector<int> ta, tb;
  for (std::size_t i = 0; i < count; ++i) {
    unflatten(i, s.size(), sym.arity, ta);
    for (std::size_t j = i + 1; j < count; ++j) {
      unflatten(j, s.size(), sym.arity, tb);
      if (s.d(s.funcs[f][i], s.funcs[f][j]) > sym.lipschitz * tuple_distance(s, ta, tb)) return false;
    }
  }
  return true;
}

}  // namespace detail

inline FiniteStructure random_structure(const Signature& sig, int size, std::uint64_t seed) {
  if (size < 1 || size > kMaxUniverse) throw std::invalid_argument("universe size must be in 1..16");
  constexpr int kGrid = 16;
  std::mt19937_64 rng(seed);
  FiniteStructure s;
  s.sig = sig;
  for (int i = 0; i < size; ++i) s.universe.push_back("e" + std::to_string(i));
  s.dist.assign(static_cast<std::size_t>(size * size), Rational(0));
  for (int a = 0; a < size; ++a)
    for (int b = a + 1; b < size; ++b) {
      Rational v = detail::grid_value(rng, kGrid);
      s.d(a, b) = v;
      s.d(b, a) = v;
    }
  for (int k = 0; k < size; ++k)
    for (int a = 0; a < size; ++a)
      for (int b = 0; b < size; ++b)
        if (s.d(a, k) + s.d(k, b) < s.d(a, b)) s.d(a, b) = s.d(a, k) + s.d(k, b);
  for (int a = 0; a < size; ++a)
    for (int b = 0; b < size; ++b)
      if (a != b && s.d(a, b) == 0) s.d(a, b) = Rational(1, kGrid);

  for (const auto& sym : sig.preds) {
    std::size_t count = ipow(static_cast<std::size_t>(size), sym.arity);
    std::vector<Rational> vals(count);
    for (auto& v : vals) v = detail::grid_value(rng, kGrid);
    s.preds.push_back(vals);
    std::size_t p = s.preds.size() - 1;
    if (detail::pred_ok(s, p)) continue;
    Rational mean = 0;
    for (const auto& v : vals) mean += v;
    mean /= static_cast<long>(count);
    auto blend = [&](const Rational& t) {
      for (std::size_t i = 0; i < count; ++i) s.preds[p][i] = mean + t * (vals[i] - mean);
    };
    Rational lo = 0, hi = 1;
    for (int it = 0; it < 12; ++it) {
      Rational mid = (lo + hi) / 2;
      blend(mid);
      if (detail::pred_ok(s, p)) lo = mid;
      else hi = mid;
    }
    blend(lo);
  }

  for (const auto& sym : sig.funcs) {
    std::size_t count = ipow(static_cast<std::size_t>(size), sym.arity);
    std::uniform_int_distribution<int> u(0, size - 1);
    s.funcs.emplace_back(count);
    std::size_t f = s.funcs.size() - 1;
    bool ok = false;
    for (int attempt = 0; attempt < 64 && !ok; ++attempt) {
      for (auto& v : s.funcs[f]) v = u(rng);
      ok = detail::func_ok(s, f);
    }
    if (!ok) {
      std::vector<int> t;
      for (std::size_t i = 0; i < count; ++i) {
        unflatten(i, size, sym.arity, t);
        s.funcs[f][i] = sym.lipschitz >= 1 ? t[0] : 0;
      }
    }
  }
  std::uniform_int_distribution<int> u(0, size - 1);
  for (std::size_t c = 0; c < sig.consts.size(); ++c) s.consts.push_back(u(rng));
  return s;
}

// Applies a bijection perm (old index -> new index) and relabels the universe.
inline FiniteStructure relabel(const FiniteStructure& s, const std::vector<int>& perm, const std::string& prefix = "r") {
  const int n = s.size();
  FiniteStructure t = s;
  for (int i = 0; i < n; ++i) t.universe[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])] = prefix + s.universe[static_cast<std::size_t>(i)];
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) t.d(perm[static_cast<std::size_t>(a)], perm[static_cast<std::size_t>(b)]) = s.d(a, b);
  std::vector<int> tup, img;
  for (std::size_t p = 0; p < s.preds.size(); ++p) {
    int ar = s.sig.preds[p].arity;
    for (std::size_t i = 0; i < s.preds[p].size(); ++i) {
      unflatten(i, n, ar, tup);
      img.clear();
      for (int x : tup) img.push_back(perm[static_cast<std::size_t>(x)]);
      t.preds[p][t.flat(img)] = s.preds[p][i];
    }
  }
  for (std::size_t f = 0; f < s.funcs.size(); ++f) {
    int ar = s.sig.funcs[f].arity;
    for (std::size_t i = 0; i < s.funcs[f].size(); ++i) {
      unflatten(i, n, ar, tup);
      img.clear();
      for (int x : tup) img.push_back(perm[static_cast<std::size_t>(x)]);
      t.funcs[f][t.flat(img)] = perm[static_cast<std::size_t>(s.funcs[f][i])];
    }
  }
  for (std::size_t c = 0; c < s.consts.size(); ++c) t.consts[c] = perm[static_cast<std::size_t>(s.consts[c])];
  return t;
}

// True iff map (index in a -> index in b) is a bijection preserving d, all tables and constants.
inline bool is_isomorphism(const FiniteStructure& a, const FiniteStructure& b, const std::vector<int>& map) {
  const int n = a.size();
  if (n != b.size() || static_cast<int>(map.size()) != n) return false;
  std::vector<bool> hit(static_cast<std::size_t>(n), false);
  for (int x : map) {
    if (x < 0 || x >= n || hit[static_cast<std::size_t>(x)]) return false;
    hit[static_cast<std::size_t>(x)] = true;
  }
  for (int x = 0; x < n; ++x)
    for (int y = 0; y < n; ++y)
      if (a.d(x, y) != b.d(map[static_cast<std::size_t>(x)], map[static_cast<std::size_t>(y)])) return false;
  std::vector<int> tup, img;
  for (std::size_t p = 0; p < a.preds.size(); ++p)
    for (std::size_t i = 0; i < a.preds[p].size(); ++i) {
      unflatten(i, n, a.sig.preds[p].arity, tup);
      img.clear();
      for (int x : tup) img.push_back(map[static_cast<std::size_t>(x)]);
      if (a.preds[p][i] != b.preds[p][b.flat(img)]) return false;
    }
  for (std::size_t f = 0; f < a.funcs.size(); ++f)
    for (std::size_t i = 0; i < a.funcs[f].size(); ++i) {
      unflatten(i, n, a.sig.funcs[f].arity, tup);
      img.clear();
      for (int x : tup) img.push_back(map[static_cast<std::size_t>(x)]);
      if (map[static_cast<std::size_t>(a.funcs[f][i])] != b.funcs[f][b.flat(img)]) return false;
    }
  for (std::size_t c = 0; c < a.consts.size(); ++c)
    if (map[static_cast<std::size_t>(a.consts[c])] != b.consts[c]) return false;
  return true;
}

}  // namespace fv
