#pragma once

#include "fv/rational.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace fv {

inline constexpr int kMaxOmega = 6;
inline constexpr int kMaxGrid = 20;

using Subset = std::uint64_t;

class ImproperIdeal : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A proper ideal on a finite labeled ground set, stored extensionally.
struct IdealSpec {
  std::vector<std::string> omega;
  std::vector<Subset> members;  // sorted ascending
  std::vector<char> member_bits;

  int size() const { return static_cast<int>(omega.size()); }
  Subset full() const { return size() == 64 ? ~Subset{0} : ((Subset{1} << size()) - 1); }
  bool contains(Subset s) const { return member_bits[static_cast<std::size_t>(s)] != 0; }

  static IdealSpec from_members(std::vector<std::string> omega, std::vector<Subset> members) {
    if (omega.empty() || static_cast<int>(omega.size()) > kMaxGrid)
      throw std::invalid_argument("ground set size out of range");
    IdealSpec I;
    I.omega = std::move(omega);
    std::sort(members.begin(), members.end());
    members.erase(std::unique(members.begin(), members.end()), members.end());
    I.members = std::move(members);
    I.member_bits.assign(static_cast<std::size_t>(1) << I.size(), 0);
    for (Subset s : I.members) {
      if (s > I.full()) throw std::invalid_argument("member outside ground set");
      I.member_bits[static_cast<std::size_t>(s)] = 1;
    }
    I.check();
    return I;
  }

  void check() const {
    if (!contains(0)) throw std::invalid_argument("ideal must contain the empty set");
    if (contains(full())) throw ImproperIdeal("ideal contains the whole ground set");
    for (Subset s : members) {
      for (Subset t = s; t; t = (t - 1) & s)
        if (!contains(t)) throw std::invalid_argument("ideal not downward closed");
      for (Subset u : members)
        if (!contains(s | u)) throw std::invalid_argument("ideal not closed under union");
    }
  }

  // Union of all members; on a finite ground set the ideal is exactly its power set.
  Subset support() const {
    Subset u = 0;
    for (Subset s : members) u |= s;
    return u;
  }

  int index_of(const std::string& label) const {
    for (int i = 0; i < size(); ++i)
      if (omega[static_cast<std::size_t>(i)] == label) return i;
    return -1;
  }
};

inline std::vector<std::string> default_labels(int n) {
  std::vector<std::string> out;
  for (int i = 1; i <= n; ++i) out.push_back(std::to_string(i));
  return out;
}

// Smallest downward- and union-closed family containing the generators and the empty set.
inline IdealSpec close_ideal(std::vector<std::string> omega, const std::vector<Subset>& generators) {
  if (omega.empty() || static_cast<int>(omega.size()) > kMaxOmega)
    throw std::invalid_argument("ground set size must be in 1..6");
  Subset full = (Subset{1} << omega.size()) - 1;
  Subset u = 0;
  for (Subset g : generators) {
    if (g & ~full) throw std::invalid_argument("generator outside ground set");
    u |= g;
  }
  if (u == full) throw ImproperIdeal("closure of the generators contains the whole ground set");
  std::vector<Subset> members;
  for (Subset t = u;; t = (t - 1) & u) {
    members.push_back(t);
    if (t == 0) break;
  }
  return IdealSpec::from_members(std::move(omega), std::move(members));
}

inline IdealSpec trivial_ideal(int n) { return close_ideal(default_labels(n), {}); }

// min over S in I of max over gamma not in S of r_gamma.
inline Rational limsup_ideal(const IdealSpec& I, const std::vector<Rational>& r) {
  if (static_cast<int>(r.size()) != I.size()) throw std::invalid_argument("value vector size mismatch");
  std::optional<Rational> best;
  for (Subset S : I.members) {
    Rational m = 0;
    for (int g = 0; g < I.size(); ++g)
      if (!(S >> g & 1) && r[static_cast<std::size_t>(g)] > m) m = r[static_cast<std::size_t>(g)];
    if (!best || m < *best) best = m;
  }
  return *best;
}

// P(Omega)/I. Elements are encoded as bitmasks over the atoms of the quotient.
struct QuotientBA {
  IdealSpec ideal;
  int atoms = 0;
  std::vector<std::uint32_t> class_of;  // subset of Omega -> element
  std::vector<Subset> rep;              // element -> least subset in its class
  std::vector<Subset> atom_rep;

  std::uint32_t size() const { return std::uint32_t{1} << atoms; }
  std::uint32_t top() const { return size() - 1; }
  std::uint32_t meet(std::uint32_t a, std::uint32_t b) const { return a & b; }
  std::uint32_t join(std::uint32_t a, std::uint32_t b) const { return a | b; }
  std::uint32_t comp(std::uint32_t a) const { return top() & ~a; }
  bool leq(std::uint32_t a, std::uint32_t b) const { return (a & ~b) == 0; }
  std::uint32_t of(Subset s) const { return class_of[static_cast<std::size_t>(s)]; }
};

inline QuotientBA quotient(const IdealSpec& I) {
  const std::size_t N = std::size_t{1} << I.size();
  std::vector<int> cls(N, -1);
  std::vector<Subset> reps;
  for (Subset X = 0; X < N; ++X) {
    if (cls[X] >= 0) continue;
    int id = static_cast<int>(reps.size());
    reps.push_back(X);
    for (Subset S : I.members) cls[static_cast<std::size_t>(X ^ S)] = id;
  }
  const int C = static_cast<int>(reps.size());
  auto leq = [&](int a, int b) { return I.contains(reps[static_cast<std::size_t>(a)] & ~reps[static_cast<std::size_t>(b)]); };
  int zero = cls[0];
  std::vector<int> atom_ids;
  for (int c = 0; c < C; ++c) {
    if (c == zero) continue;
    bool minimal = true;
    for (int d = 0; d < C && minimal; ++d)
      if (d != zero && d != c && leq(d, c)) minimal = false;
    if (minimal) atom_ids.push_back(c);
  }
  QuotientBA B;
  B.ideal = I;
  B.atoms = static_cast<int>(atom_ids.size());
  if (B.atoms > 20) throw std::invalid_argument("quotient too large");
  if (C != (1 << B.atoms)) throw std::logic_error("quotient is not atomic of the expected size");
  std::vector<std::uint32_t> code(static_cast<std::size_t>(C), 0);
  for (int c = 0; c < C; ++c)
    for (int a = 0; a < B.atoms; ++a)
      if (leq(atom_ids[static_cast<std::size_t>(a)], c)) code[static_cast<std::size_t>(c)] |= std::uint32_t{1} << a;
  B.rep.assign(static_cast<std::size_t>(C), 0);
  std::vector<char> seen(static_cast<std::size_t>(C), 0);
  for (int c = 0; c < C; ++c) {
    auto e = code[static_cast<std::size_t>(c)];
    if (seen[e]) throw std::logic_error("quotient encoding is not injective");
    seen[e] = 1;
    B.rep[e] = reps[static_cast<std::size_t>(c)];
  }
  B.class_of.resize(N);
  for (Subset X = 0; X < N; ++X) B.class_of[X] = code[static_cast<std::size_t>(cls[X])];
  for (int a : atom_ids) B.atom_rep.push_back(reps[static_cast<std::size_t>(a)]);
  return B;
}

// Fubini product on the grid Omega1 x Omega2 (row-major, rows indexed by Omega1):
// A is small iff the rows whose sections are J-positive form an I-small set.
inline IdealSpec fubini(const IdealSpec& I, const IdealSpec& J) {
  const int n1 = I.size(), n2 = J.size();
  if (n1 * n2 > kMaxGrid) throw std::invalid_argument("grid too large");
  std::vector<std::string> labels;
  for (int a = 0; a < n1; ++a)
    for (int b = 0; b < n2; ++b)
      labels.push_back("(" + I.omega[static_cast<std::size_t>(a)] + "," + J.omega[static_cast<std::size_t>(b)] + ")");
  const Subset row_mask = (Subset{1} << n2) - 1;
  std::vector<Subset> members;
  const Subset N = Subset{1} << (n1 * n2);
  for (Subset A = 0; A < N; ++A) {
    Subset big_rows = 0;
    for (int a = 0; a < n1; ++a) {
      Subset section = (A >> (a * n2)) & row_mask;
      if (!J.contains(section)) big_rows |= Subset{1} << a;
    }
    if (I.contains(big_rows)) members.push_back(A);
  }
  return IdealSpec::from_members(std::move(labels), std::move(members));
}

// ---------------------------------------------------------------- Boolean formulas

struct BTerm;
using BTermPtr = std::shared_ptr<const BTerm>;

// Variables carry a binder id q (0 for free y-variables) and an evaluation slot.
struct BTerm {
  enum class Kind { Var, Zero, One, Meet, Join, Comp };
  Kind kind = Kind::Zero;
  int q = 0, j = 0, i = 0, slot = -1;
  BTermPtr a, b;
  int max_slot = -1;
};

inline BTermPtr bvar(int q, int j, int i, int slot) {
  auto t = std::make_shared<BTerm>();
  t->kind = BTerm::Kind::Var;
  t->q = q;
  t->j = j;
  t->i = i;
  t->slot = slot;
  t->max_slot = slot;
  return t;
}
inline BTermPtr bzero() {
  static const BTermPtr z = [] {
    auto t = std::make_shared<BTerm>();
    t->kind = BTerm::Kind::Zero;
    return t;
  }();
  return z;
}
inline BTermPtr bone() {
  static const BTermPtr o = [] {
    auto t = std::make_shared<BTerm>();
    t->kind = BTerm::Kind::One;
    return t;
  }();
  return o;
}
inline BTermPtr bop(BTerm::Kind k, BTermPtr a, BTermPtr b = nullptr) {
  auto t = std::make_shared<BTerm>();
  t->kind = k;
  t->max_slot = std::max(a->max_slot, b ? b->max_slot : -1);
  t->a = std::move(a);
  t->b = std::move(b);
  return t;
}
inline BTermPtr bmeet(BTermPtr a, BTermPtr b) { return bop(BTerm::Kind::Meet, std::move(a), std::move(b)); }
inline BTermPtr bjoin(BTermPtr a, BTermPtr b) { return bop(BTerm::Kind::Join, std::move(a), std::move(b)); }
inline BTermPtr bcomp(BTermPtr a) { return bop(BTerm::Kind::Comp, std::move(a)); }

struct BFormula;
using BFormulaPtr = std::shared_ptr<const BFormula>;

struct BFormula {
  enum class Kind { Eq, Le, Neq0, Not, And, Or, Implies, Exists, Forall, ExistsMeet };
  Kind kind = Kind::And;
  BTermPtr t1, t2;
  std::vector<BFormulaPtr> kids;
  std::vector<BTermPtr> vars;  // Exists / Forall

  // ExistsMeet: exists g[j][i] (j < m, i < L) with meet_{j in S} g[j][i] <= bounds[(S-1)*L + i]
  // for every nonempty S subset of [0,m) and every level i, and body(g).
  int q = 0, m = 0, L = 0, base = 0;
  std::vector<BTermPtr> bounds;
  bool monotone_body = true;

  int max_slot = -1;
  int max_binder = 0;

  // Exists: conjuncts of the body checked as soon as their last bound variable is assigned.
  std::vector<BFormulaPtr> conjuncts;
  std::vector<int> check_depth;

  int g_slot(int jj, int ii) const { return base + jj * L + ii; }
};

namespace detail {

inline void term_slots(const BTermPtr& t, std::vector<int>& out) {
  if (t->kind == BTerm::Kind::Var) out.push_back(t->slot);
  if (t->a) term_slots(t->a, out);
  if (t->b) term_slots(t->b, out);
}

inline int max_binder_of(const std::vector<BFormulaPtr>& kids) {
  int mb = 0;
  for (const auto& k : kids) mb = std::max(mb, k->max_binder);
  return mb;
}

}  // namespace detail

// Slots free in f (bound slots of inner quantifiers excluded).
inline std::vector<int> free_slots(const BFormulaPtr& f) {
  std::vector<int> out;
  std::function<void(const BFormulaPtr&, std::vector<int>&)> go = [&](const BFormulaPtr& g, std::vector<int>& bound) {
    auto add_term = [&](const BTermPtr& t) {
      std::vector<int> s;
      detail::term_slots(t, s);
      for (int x : s)
        if (std::find(bound.begin(), bound.end(), x) == bound.end()) out.push_back(x);
    };
    switch (g->kind) {
      case BFormula::Kind::Eq:
      case BFormula::Kind::Le:
        add_term(g->t1);
        add_term(g->t2);
        return;
      case BFormula::Kind::Neq0:
        add_term(g->t1);
        return;
      case BFormula::Kind::Exists:
      case BFormula::Kind::Forall: {
        std::size_t mark = bound.size();
        for (const auto& v : g->vars) bound.push_back(v->slot);
        for (const auto& k : g->kids) go(k, bound);
        bound.resize(mark);
        return;
      }
      case BFormula::Kind::ExistsMeet: {
        for (const auto& b : g->bounds) add_term(b);
        std::size_t mark = bound.size();
        for (int jj = 0; jj < g->m; ++jj)
          for (int ii = 0; ii < g->L; ++ii) bound.push_back(g->g_slot(jj, ii));
        go(g->kids[0], bound);
        bound.resize(mark);
        return;
      }
      default:
        for (const auto& k : g->kids) go(k, bound);
    }
  };
  std::vector<int> bound;
  go(f, bound);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

inline BFormulaPtr batom(BFormula::Kind k, BTermPtr a, BTermPtr b = nullptr) {
  auto f = std::make_shared<BFormula>();
  f->kind = k;
  f->max_slot = std::max(a->max_slot, b ? b->max_slot : -1);
  f->t1 = std::move(a);
  f->t2 = std::move(b);
  return f;
}
inline BFormulaPtr beq(BTermPtr a, BTermPtr b) { return batom(BFormula::Kind::Eq, std::move(a), std::move(b)); }
inline BFormulaPtr ble(BTermPtr a, BTermPtr b) { return batom(BFormula::Kind::Le, std::move(a), std::move(b)); }
inline BFormulaPtr bneq0(BTermPtr a) { return batom(BFormula::Kind::Neq0, std::move(a)); }

inline BFormulaPtr bconn(BFormula::Kind k, std::vector<BFormulaPtr> kids) {
  auto f = std::make_shared<BFormula>();
  f->kind = k;
  for (const auto& c : kids) f->max_slot = std::max(f->max_slot, c->max_slot);
  f->max_binder = detail::max_binder_of(kids);
  f->kids = std::move(kids);
  return f;
}
inline BFormulaPtr bnot(BFormulaPtr a) { return bconn(BFormula::Kind::Not, {std::move(a)}); }
inline BFormulaPtr band(std::vector<BFormulaPtr> k) { return bconn(BFormula::Kind::And, std::move(k)); }
inline BFormulaPtr bor(std::vector<BFormulaPtr> k) { return bconn(BFormula::Kind::Or, std::move(k)); }
inline BFormulaPtr bimplies(BFormulaPtr a, BFormulaPtr b) { return bconn(BFormula::Kind::Implies, {std::move(a), std::move(b)}); }

// The sentences 1 = 1 and 1 != 1.
inline BFormulaPtr btrue() { return beq(bone(), bone()); }
inline BFormulaPtr bfalse() { return bnot(beq(bone(), bone())); }

inline BFormulaPtr bquant(BFormula::Kind k, std::vector<BTermPtr> vars, BFormulaPtr body) {
  for (const auto& v : vars)
    if (v->kind != BTerm::Kind::Var) throw std::invalid_argument("quantifier must bind variables");
  auto f = std::make_shared<BFormula>();
  f->kind = k;
  f->max_slot = body->max_slot;
  int q = 0;
  for (const auto& v : vars) {
    f->max_slot = std::max(f->max_slot, v->slot);
    q = std::max(q, v->q);
  }
  f->max_binder = std::max(q, body->max_binder);
  if (k == BFormula::Kind::Exists) {
    std::vector<BFormulaPtr> cs;
    std::function<void(const BFormulaPtr&)> flat = [&](const BFormulaPtr& g) {
      if (g->kind == BFormula::Kind::And)
        for (const auto& c : g->kids) flat(c);
      else
        cs.push_back(g);
    };
    flat(body);
    for (const auto& c : cs) {
      std::vector<int> fs = free_slots(c);
      int depth = -1;
      for (std::size_t p = 0; p < vars.size(); ++p)
        if (std::binary_search(fs.begin(), fs.end(), vars[p]->slot)) depth = static_cast<int>(p);
      f->check_depth.push_back(depth);
    }
    f->conjuncts = std::move(cs);
  }
  f->vars = std::move(vars);
  f->kids = {std::move(body)};
  return f;
}
inline BFormulaPtr bexists(std::vector<BTermPtr> vars, BFormulaPtr body) {
  return bquant(BFormula::Kind::Exists, std::move(vars), std::move(body));
}
inline BFormulaPtr bforall(std::vector<BTermPtr> vars, BFormulaPtr body) {
  return bquant(BFormula::Kind::Forall, std::move(vars), std::move(body));
}

inline BFormulaPtr bexists_meet(int q, int m, int L, int base, std::vector<BTermPtr> bounds, BFormulaPtr body,
                                bool monotone_body = true) {
  if (m < 1 || m > 16 || L < 1) throw std::invalid_argument("bad exists-meet shape");
  if (bounds.size() != static_cast<std::size_t>(((1 << m) - 1) * L)) throw std::invalid_argument("bad exists-meet bounds");
  auto f = std::make_shared<BFormula>();
  f->kind = BFormula::Kind::ExistsMeet;
  f->q = q;
  f->m = m;
  f->L = L;
  f->base = base;
  f->max_slot = std::max(body->max_slot, base + m * L - 1);
  for (const auto& b : bounds) f->max_slot = std::max(f->max_slot, b->max_slot);
  f->max_binder = std::max(q, body->max_binder);
  f->bounds = std::move(bounds);
  f->monotone_body = monotone_body;
  f->kids = {std::move(body)};
  return f;
}

// Rebuilds f with the variables of binder q (free variables by default) replaced through the callback.
inline BFormulaPtr substitute(const BFormulaPtr& f, const std::function<BTermPtr(const BTerm&)>& free_map, int q = 0) {
  std::unordered_map<const BTerm*, BTermPtr> tmemo;
  std::unordered_map<const BFormula*, BFormulaPtr> fmemo;
  std::function<BTermPtr(const BTermPtr&)> st = [&](const BTermPtr& t) -> BTermPtr {
    if (!t) return t;
    auto it = tmemo.find(t.get());
    if (it != tmemo.end()) return it->second;
    BTermPtr r;
    switch (t->kind) {
      case BTerm::Kind::Var: r = t->q == q ? free_map(*t) : t; break;
      case BTerm::Kind::Zero:
      case BTerm::Kind::One: r = t; break;
      default: r = bop(t->kind, st(t->a), st(t->b));
    }
    tmemo.emplace(t.get(), r);
    return r;
  };
  std::function<BFormulaPtr(const BFormulaPtr&)> sf = [&](const BFormulaPtr& g) -> BFormulaPtr {
    auto it = fmemo.find(g.get());
    if (it != fmemo.end()) return it->second;
    BFormulaPtr r;
    switch (g->kind) {
      case BFormula::Kind::Eq:
      case BFormula::Kind::Le:
      case BFormula::Kind::Neq0: r = batom(g->kind, st(g->t1), st(g->t2)); break;
      case BFormula::Kind::Exists:
      case BFormula::Kind::Forall: r = bquant(g->kind, g->vars, sf(g->kids[0])); break;
      case BFormula::Kind::ExistsMeet: {
        std::vector<BTermPtr> b;
        for (const auto& x : g->bounds) b.push_back(st(x));
        r = bexists_meet(g->q, g->m, g->L, g->base, std::move(b), sf(g->kids[0]), g->monotone_body);
        break;
      }
      default: {
        std::vector<BFormulaPtr> k;
        for (const auto& x : g->kids) k.push_back(sf(x));
        r = bconn(g->kind, std::move(k));
      }
    }
    fmemo.emplace(g.get(), r);
    return r;
  };
  return sf(f);
}

// Renames free variables y[j][i] to bound variables of binder q (same slots).
inline BFormulaPtr bind_free(const BFormulaPtr& f, int q) {
  return substitute(f, [q](const BTerm& v) { return bvar(q, v.j, v.i, v.slot); });
}

// Raw form of an exists-meet node: explicit existential block plus the bound constraints.
// The block moves to fresh slots so the bounds keep reading the outer variables.
inline BFormulaPtr expand_exists_meet(const BFormulaPtr& f) {
  const int base = f->max_slot + 1;
  std::vector<BTermPtr> vars;
  for (int j = 0; j < f->m; ++j)
    for (int i = 0; i < f->L; ++i) vars.push_back(bvar(f->q, j, i, base + j * f->L + i));
  std::vector<BFormulaPtr> cs;
  for (int S = 1; S < (1 << f->m); ++S)
    for (int i = 0; i < f->L; ++i) {
      BTermPtr t;
      for (int j = 0; j < f->m; ++j)
        if (S >> j & 1) {
          BTermPtr v = vars[static_cast<std::size_t>(j * f->L + i)];
          t = t ? bmeet(t, v) : v;
        }
      cs.push_back(ble(t, f->bounds[static_cast<std::size_t>((S - 1) * f->L + i)]));
    }
  cs.push_back(substitute(f->kids[0], [&](const BTerm& v) { return vars[static_cast<std::size_t>(v.j * f->L + v.i)]; }, f->q));
  return bexists(std::move(vars), band(std::move(cs)));
}

// ---------------------------------------------------------------- printing and parsing

inline std::string print_bterm(const BTermPtr& t) {
  switch (t->kind) {
    case BTerm::Kind::Zero: return "0";
    case BTerm::Kind::One: return "1";
    case BTerm::Kind::Var:
      return (t->q == 0 ? std::string("y") : "z" + std::to_string(t->q)) + "[" + std::to_string(t->j) + "][" +
             std::to_string(t->i) + "]";
    case BTerm::Kind::Meet: return "(meet " + print_bterm(t->a) + " " + print_bterm(t->b) + ")";
    case BTerm::Kind::Join: return "(join " + print_bterm(t->a) + " " + print_bterm(t->b) + ")";
    case BTerm::Kind::Comp: return "(comp " + print_bterm(t->a) + ")";
  }
  return "?";
}

inline std::string print_bformula(const BFormulaPtr& f) {
  using K = BFormula::Kind;
  auto list = [&](const char* head) {
    std::string s = std::string("(") + head;
    for (const auto& k : f->kids) s += " " + print_bformula(k);
    return s + ")";
  };
  switch (f->kind) {
    case K::Eq: return "(= " + print_bterm(f->t1) + " " + print_bterm(f->t2) + ")";
    case K::Le: return "(<= " + print_bterm(f->t1) + " " + print_bterm(f->t2) + ")";
    case K::Neq0: return "(!= " + print_bterm(f->t1) + " 0)";
    case K::Not: return list("not");
    case K::And: return list("and");
    case K::Or: return list("or");
    case K::Implies: return list("->");
    case K::Exists:
    case K::Forall: {
      std::string s = f->kind == K::Exists ? "(exists (" : "(forall (";
      for (std::size_t i = 0; i < f->vars.size(); ++i) s += (i ? " " : "") + print_bterm(f->vars[i]);
      return s + ") " + print_bformula(f->kids[0]) + ")";
    }
    case K::ExistsMeet: {
      std::string s = "(exists-meet z" + std::to_string(f->q) + " " + std::to_string(f->m) + " " + std::to_string(f->L) + " (";
      for (std::size_t i = 0; i < f->bounds.size(); ++i) s += (i ? " " : "") + print_bterm(f->bounds[i]);
      return s + ") " + print_bformula(f->kids[0]) + ")";
    }
  }
  return "?";
}

namespace detail {

class BParser {
 public:
  BParser(const std::string& s, int L) : s_(s), L_(L) {}

  BFormulaPtr parse_all() {
    BFormulaPtr f = formula();
    ws();
    if (pos_ != s_.size()) fail("trailing input");
    return f;
  }

 private:
  const std::string& s_;
  int L_;
  std::size_t pos_ = 0;
  int next_slot_ = 1 << 12;
  std::vector<std::pair<std::string, BTermPtr>> scope_;

  [[noreturn]] void fail(const std::string& m) {
    throw std::invalid_argument("Boolean formula parse error: " + m + " at position " + std::to_string(pos_));
  }
  void ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  void expect(char c) {
    ws();
    if (pos_ >= s_.size() || s_[pos_] != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }
  bool at(char c) {
    ws();
    return pos_ < s_.size() && s_[pos_] == c;
  }
  std::string token() {
    ws();
    std::size_t st = pos_;
    while (pos_ < s_.size() && !std::isspace(static_cast<unsigned char>(s_[pos_])) && s_[pos_] != '(' && s_[pos_] != ')') ++pos_;
    if (st == pos_) fail("expected token");
    return s_.substr(st, pos_ - st);
  }
  static bool parse_var(const std::string& tok, int& q, int& j, int& i) {
    std::size_t p = 0;
    if (tok.empty()) return false;
    if (tok[0] == 'y') {
      q = 0;
      p = 1;
    } else if (tok[0] == 'z') {
      p = 1;
      std::size_t st = p;
      while (p < tok.size() && std::isdigit(static_cast<unsigned char>(tok[p]))) ++p;
      q = st == p ? 1 : std::stoi(tok.substr(st, p - st));
    } else {
      return false;
    }
    auto num = [&](int& out) {
      if (p >= tok.size() || tok[p] != '[') return false;
      std::size_t st = ++p;
      while (p < tok.size() && std::isdigit(static_cast<unsigned char>(tok[p]))) ++p;
      if (st == p || p >= tok.size() || tok[p] != ']') return false;
      out = std::stoi(tok.substr(st, p - st));
      ++p;
      return true;
    };
    return num(j) && num(i) && p == tok.size();
  }

  BTermPtr var_from(const std::string& tok) {
    for (auto it = scope_.rbegin(); it != scope_.rend(); ++it)
      if (it->first == tok) return it->second;
    int q, j, i;
    if (!parse_var(tok, q, j, i)) fail("bad variable " + tok);
    if (q != 0) fail("unbound variable " + tok);
    return bvar(0, j, i, j * L_ + i);
  }

  BTermPtr new_bound(const std::string& tok, int slot = -1) {
    int q, j, i;
    if (!parse_var(tok, q, j, i) || q == 0) fail("bad bound variable " + tok);
    BTermPtr v = bvar(q, j, i, slot >= 0 ? slot : next_slot_++);
    return v;
  }

  BTermPtr term() {
    if (at('(')) {
      ++pos_;
      std::string head = token();
      BTermPtr r;
      if (head == "meet" || head == "join") {
        BTermPtr a = term();
        BTermPtr b = term();
        r = head == "meet" ? bmeet(a, b) : bjoin(a, b);
      } else if (head == "comp") {
        r = bcomp(term());
      } else {
        fail("unknown term operator " + head);
      }
      expect(')');
      return r;
    }
    std::string tok = token();
    if (tok == "0") return bzero();
    if (tok == "1") return bone();
    return var_from(tok);
  }

  BFormulaPtr formula() {
    expect('(');
    std::string head = token();
    BFormulaPtr r;
    if (head == "=" || head == "<=") {
      BTermPtr a = term();
      BTermPtr b = term();
      r = head == "=" ? beq(a, b) : ble(a, b);
    } else if (head == "!=") {
      BTermPtr a = term();
      std::string z = token();
      if (z != "0") fail("!= must compare with 0");
      r = bneq0(a);
    } else if (head == "not" || head == "and" || head == "or" || head == "->") {
      std::vector<BFormulaPtr> kids;
      while (!at(')')) kids.push_back(formula());
      if (head == "not") {
        if (kids.size() != 1) fail("not takes one argument");
        r = bnot(kids[0]);
      } else if (head == "->") {
        if (kids.size() != 2) fail("-> takes two arguments");
        r = bimplies(kids[0], kids[1]);
      } else {
        r = head == "and" ? band(kids) : bor(kids);
      }
    } else if (head == "exists" || head == "forall") {
      expect('(');
      std::vector<BTermPtr> vars;
      std::size_t mark = scope_.size();
      while (!at(')')) {
        std::string tok = token();
        BTermPtr v = new_bound(tok);
        vars.push_back(v);
        scope_.emplace_back(tok, v);
      }
      expect(')');
      BFormulaPtr body = formula();
      scope_.resize(mark);
      r = head == "exists" ? bexists(vars, body) : bforall(vars, body);
    } else if (head == "exists-meet") {
      std::string zq = token();
      if (zq.size() < 2 || zq[0] != 'z') fail("bad binder name");
      int q = std::stoi(zq.substr(1));
      int m = std::stoi(token());
      int L = std::stoi(token());
      expect('(');
      std::vector<BTermPtr> bounds;
      while (!at(')')) bounds.push_back(term());
      expect(')');
      int base = next_slot_;
      next_slot_ += m * L;
      std::size_t mark = scope_.size();
      for (int j = 0; j < m; ++j)
        for (int i = 0; i < L; ++i) {
          std::string name = zq + "[" + std::to_string(j) + "][" + std::to_string(i) + "]";
          scope_.emplace_back(name, bvar(q, j, i, base + j * L + i));
        }
      BFormulaPtr body = formula();
      scope_.resize(mark);
      r = bexists_meet(q, m, L, base, std::move(bounds), body);
    } else {
      fail("unknown formula head " + head);
    }
    expect(')');
    return r;
  }
};

}  // namespace detail

// Parses prefix notation; free y[j][i] gets slot j*L+i.
inline BFormulaPtr parse_bformula(const std::string& text, int L) { return detail::BParser(text, L).parse_all(); }

// ---------------------------------------------------------------- satisfaction

class SearchTooLarge : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

class BEval {
 public:
  BEval(const QuotientBA& B, std::vector<std::uint32_t>& env) : B_(B), env_(env) {}

  std::uint32_t term(const BTermPtr& t) const {
    switch (t->kind) {
      case BTerm::Kind::Zero: return 0;
      case BTerm::Kind::One: return B_.top();
      case BTerm::Kind::Var: return env_[static_cast<std::size_t>(t->slot)];
      case BTerm::Kind::Meet: return term(t->a) & term(t->b);
      case BTerm::Kind::Join: return term(t->a) | term(t->b);
      case BTerm::Kind::Comp: return B_.comp(term(t->a));
    }
    return 0;
  }

  bool eval(const BFormulaPtr& f) {
    using K = BFormula::Kind;
    switch (f->kind) {
      case K::Eq: return term(f->t1) == term(f->t2);
      case K::Le: return B_.leq(term(f->t1), term(f->t2));
      case K::Neq0: return term(f->t1) != 0;
      case K::Not: return !eval(f->kids[0]);
      case K::And:
        for (const auto& k : f->kids)
          if (!eval(k)) return false;
        return true;
      case K::Or:
        for (const auto& k : f->kids)
          if (eval(k)) return true;
        return false;
      case K::Implies: return !eval(f->kids[0]) || eval(f->kids[1]);
      case K::Exists: return exists(f);
      case K::Forall: return forall(f);
      case K::ExistsMeet: return exists_meet(f);
    }
    return false;
  }

 private:
  const QuotientBA& B_;
  std::vector<std::uint32_t>& env_;

  bool exists(const BFormulaPtr& f) {
    const std::size_t nv = f->vars.size();
    std::vector<std::uint32_t> saved(nv);
    for (std::size_t p = 0; p < nv; ++p) saved[p] = env_[static_cast<std::size_t>(f->vars[p]->slot)];
    for (std::size_t c = 0; c < f->conjuncts.size(); ++c)
      if (f->check_depth[c] < 0 && !eval(f->conjuncts[c])) return false;
    bool found = exists_rec(f, 0);
    for (std::size_t p = 0; p < nv; ++p) env_[static_cast<std::size_t>(f->vars[p]->slot)] = saved[p];
    return found;
  }

  bool exists_rec(const BFormulaPtr& f, std::size_t depth) {
    if (depth == f->vars.size()) return true;
    auto slot = static_cast<std::size_t>(f->vars[depth]->slot);
    for (std::uint32_t v = 0; v < B_.size(); ++v) {
      env_[slot] = v;
      bool ok = true;
      for (std::size_t c = 0; c < f->conjuncts.size() && ok; ++c)
        if (f->check_depth[c] == static_cast<int>(depth)) ok = eval(f->conjuncts[c]);
      if (ok && exists_rec(f, depth + 1)) return true;
    }
    return false;
  }

  bool forall(const BFormulaPtr& f) {
    const std::size_t nv = f->vars.size();
    std::vector<std::uint32_t> saved(nv);
    for (std::size_t p = 0; p < nv; ++p) saved[p] = env_[static_cast<std::size_t>(f->vars[p]->slot)];
    std::vector<std::uint32_t> cur(nv, 0);
    bool all = true;
    while (true) {
      for (std::size_t p = 0; p < nv; ++p) env_[static_cast<std::size_t>(f->vars[p]->slot)] = cur[p];
      if (!eval(f->kids[0])) {
        all = false;
        break;
      }
      std::size_t p = 0;
      while (p < nv && ++cur[p] == B_.size()) cur[p++] = 0;
      if (p == nv) break;
    }
    for (std::size_t p = 0; p < nv; ++p) env_[static_cast<std::size_t>(f->vars[p]->slot)] = saved[p];
    return all;
  }

  // Per level i and atom a, the admissible index sets J = {j : a in g[j][i]} form a downward
  // closed family. A monotone body only needs the maximal members.
  bool exists_meet(const BFormulaPtr& f) {
    const int m = f->m, L = f->L, A = B_.atoms;
    const int nS = 1 << m;
    std::vector<std::uint32_t> bound(static_cast<std::size_t>(nS * L), 0);
    for (int S = 1; S < nS; ++S)
      for (int i = 0; i < L; ++i)
        bound[static_cast<std::size_t>(S * L + i)] = term(f->bounds[static_cast<std::size_t>((S - 1) * L + i)]);

    std::vector<std::vector<int>> choices(static_cast<std::size_t>(L * A));
    std::vector<char> ok(static_cast<std::size_t>(nS));
    double total = 1;
    for (int i = 0; i < L; ++i)
      for (int a = 0; a < A; ++a) {
        ok[0] = 1;
        for (int J = 1; J < nS; ++J) {
          bool good = (bound[static_cast<std::size_t>(J * L + i)] >> a) & 1;
          for (int j = 0; j < m && good; ++j)
            if (J >> j & 1) good = ok[static_cast<std::size_t>(J & ~(1 << j))] != 0;
          ok[static_cast<std::size_t>(J)] = good;
        }
        auto& ch = choices[static_cast<std::size_t>(i * A + a)];
        for (int J = 0; J < nS; ++J) {
          if (!ok[static_cast<std::size_t>(J)]) continue;
          if (f->monotone_body) {
            bool maximal = true;
            for (int j = 0; j < m && maximal; ++j)
              if (!(J >> j & 1) && ok[static_cast<std::size_t>(J | (1 << j))]) maximal = false;
            if (!maximal) continue;
          }
          ch.push_back(J);
        }
        total *= static_cast<double>(ch.size());
      }
    if (total > 5e7) throw SearchTooLarge("exists-meet search space too large");

    std::vector<std::uint32_t> saved(static_cast<std::size_t>(m * L));
    for (int j = 0; j < m; ++j)
      for (int i = 0; i < L; ++i) saved[static_cast<std::size_t>(j * L + i)] = env_[static_cast<std::size_t>(f->g_slot(j, i))];

    const std::size_t P = choices.size();
    std::vector<std::size_t> cur(P, 0);
    bool found = false;
    while (true) {
      for (int j = 0; j < m; ++j)
        for (int i = 0; i < L; ++i) env_[static_cast<std::size_t>(f->g_slot(j, i))] = 0;
      for (int i = 0; i < L; ++i)
        for (int a = 0; a < A; ++a) {
          int J = choices[static_cast<std::size_t>(i * A + a)][cur[static_cast<std::size_t>(i * A + a)]];
          for (int j = 0; j < m; ++j)
            if (J >> j & 1) env_[static_cast<std::size_t>(f->g_slot(j, i))] |= std::uint32_t{1} << a;
        }
      if (eval(f->kids[0])) {
        found = true;
        break;
      }
      std::size_t p = 0;
      while (p < P && ++cur[p] == choices[p].size()) cur[p++] = 0;
      if (p == P) break;
    }
    for (int j = 0; j < m; ++j)
      for (int i = 0; i < L; ++i) env_[static_cast<std::size_t>(f->g_slot(j, i))] = saved[static_cast<std::size_t>(j * L + i)];
    return found;
  }
};

}  // namespace detail

inline bool ba_eval(const QuotientBA& B, const BFormulaPtr& f, const std::vector<std::uint32_t>& assignment) {
  std::vector<std::uint32_t> env(std::max<std::size_t>(assignment.size(), static_cast<std::size_t>(f->max_slot + 1)), 0);
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    if (assignment[i] >= B.size()) throw std::invalid_argument("assignment value is not an element of the algebra");
    env[i] = assignment[i];
  }
  for (int s : free_slots(f))
    if (s >= static_cast<int>(assignment.size())) throw std::invalid_argument("unbound variable in slot " + std::to_string(s));
  detail::BEval ev(B, env);
  return ev.eval(f);
}

// Same as ba_eval without the free-variable check; env must cover f->max_slot.
inline bool ba_eval_unchecked(const QuotientBA& B, const BFormulaPtr& f, std::vector<std::uint32_t>& env) {
  detail::BEval ev(B, env);
  return ev.eval(f);
}

// ---------------------------------------------------------------- monotonicity

struct MonotoneOptions {
  std::uint64_t exhaustive_limit = std::uint64_t{1} << 16;  // max |B|^s for exhaustive mode
  std::optional<int> exhaustive_max_vars;                   // overrides the limit when set
  int samples = 1000;
  std::uint64_t seed = 1;
};

struct MonotoneReport {
  bool ok = true;
  bool exhaustive = false;
  std::vector<std::uint32_t> lower, upper;  // witness pair when ok is false
};

inline MonotoneReport is_monotone(const BFormulaPtr& f, const QuotientBA& B, int s, const MonotoneOptions& opt = {}) {
  MonotoneReport rep;
  const std::size_t envsize = std::max<std::size_t>(static_cast<std::size_t>(s), static_cast<std::size_t>(f->max_slot + 1));
  std::vector<std::uint32_t> env(envsize, 0);
  auto truth = [&](const std::vector<std::uint32_t>& a) {
    std::copy(a.begin(), a.end(), env.begin());
    return ba_eval_unchecked(B, f, env);
  };
  double space = 1;
  for (int i = 0; i < s; ++i) space *= B.size();
  bool exhaustive = opt.exhaustive_max_vars ? s <= *opt.exhaustive_max_vars
                                            : space <= static_cast<double>(opt.exhaustive_limit);
  rep.exhaustive = exhaustive;
  std::vector<std::uint32_t> a(static_cast<std::size_t>(s), 0), b;
  if (exhaustive) {
    // Checking every covering pair (one atom added to one coordinate) suffices by transitivity.
    const auto total = static_cast<std::size_t>(space);
    std::vector<char> val(total);
    const int k = B.atoms;
    for (std::size_t code = 0; code < total; ++code) {
      for (int i = 0; i < s; ++i) a[static_cast<std::size_t>(i)] = static_cast<std::uint32_t>((code >> (i * k)) & B.top());
      val[code] = truth(a);
    }
    for (std::size_t code = 0; code < total; ++code) {
      if (!val[code]) continue;
      for (int i = 0; i < s; ++i)
        for (int at = 0; at < k; ++at) {
          std::size_t bit = std::size_t{1} << (i * k + at);
          if (code & bit) continue;
          if (!val[code | bit]) {
            rep.ok = false;
            for (int x = 0; x < s; ++x) a[static_cast<std::size_t>(x)] = static_cast<std::uint32_t>((code >> (x * k)) & B.top());
            b = a;
            b[static_cast<std::size_t>(i)] |= std::uint32_t{1} << at;
            rep.lower = a;
            rep.upper = b;
            return rep;
          }
        }
    }
    return rep;
  }
  std::mt19937_64 rng(opt.seed);
  std::uniform_int_distribution<std::uint32_t> u(0, B.top());
  for (int t = 0; t < opt.samples; ++t) {
    for (auto& x : a) x = u(rng);
    b = a;
    for (auto& x : b) x |= u(rng);
    if (truth(a) && !truth(b)) {
      rep.ok = false;
      rep.lower = a;
      rep.upper = b;
      return rep;
    }
  }
  return rep;
}

}  // namespace fv
