#pragma once

#include "fv/rational.hpp"

#include <cctype>
#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace fv {

struct Symbol {
  std::string name;
  int arity = 0;
  Rational lipschitz = 1;
};

// One sort, diameter 1. Lipschitz bounds stand in for moduli of uniform continuity.
struct Signature {
  std::vector<Symbol> preds;
  std::vector<Symbol> funcs;
  std::vector<std::string> consts;

  int pred_index(const std::string& n) const { return find(preds, n); }
  int func_index(const std::string& n) const { return find(funcs, n); }
  int const_index(const std::string& n) const {
    for (std::size_t i = 0; i < consts.size(); ++i)
      if (consts[i] == n) return static_cast<int>(i);
    return -1;
  }

  void check() const {
    std::map<std::string, int> seen;
    for (const auto& s : preds) ++seen[s.name];
    for (const auto& s : funcs) ++seen[s.name];
    for (const auto& c : consts) ++seen[c];
    for (const auto& [n, k] : seen)
      if (k > 1) throw std::invalid_argument("duplicate symbol " + n);
    for (const auto* list : {&preds, &funcs}) {
      for (const auto& s : *list) {
        if (s.arity < 1) throw std::invalid_argument("arity must be positive: " + s.name);
        if (s.lipschitz <= 0) throw std::invalid_argument("Lipschitz bound must be positive: " + s.name);
      }
    }
  }

  bool operator==(const Signature& o) const {
    auto same = [](const std::vector<Symbol>& a, const std::vector<Symbol>& b) {
      if (a.size() != b.size()) return false;
      for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i].name != b[i].name || a[i].arity != b[i].arity || a[i].lipschitz != b[i].lipschitz)
          return false;
      return true;
    };
    return same(preds, o.preds) && same(funcs, o.funcs) && consts == o.consts;
  }

 private:
  static int find(const std::vector<Symbol>& v, const std::string& n) {
    for (std::size_t i = 0; i < v.size(); ++i)
      if (v[i].name == n) return static_cast<int>(i);
    return -1;
  }
};

// Process-wide variable name interning so evaluation can index environments by id.
class VarTable {
 public:
  static int intern(const std::string& name) {
    auto& t = instance();
    std::lock_guard<std::mutex> lock(t.mu_);
    auto it = t.ids_.find(name);
    if (it != t.ids_.end()) return it->second;
    int id = static_cast<int>(t.names_.size());
    t.names_.push_back(name);
    t.ids_.emplace(name, id);
    return id;
  }
  static std::string name(int id) {
    auto& t = instance();
    std::lock_guard<std::mutex> lock(t.mu_);
    return t.names_.at(static_cast<std::size_t>(id));
  }
  static int count() {
    auto& t = instance();
    std::lock_guard<std::mutex> lock(t.mu_);
    return static_cast<int>(t.names_.size());
  }

 private:
  static VarTable& instance() {
    static VarTable t;
    return t;
  }
  std::mutex mu_;
  std::vector<std::string> names_;
  std::unordered_map<std::string, int> ids_;
};

inline std::size_t hash_mix(std::size_t seed, std::size_t v) {
  return seed ^ (v + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2));
}

struct Term;
using TermPtr = std::shared_ptr<const Term>;

struct Term {
  enum class Kind { Var, Const, Func };
  Kind kind = Kind::Var;
  int index = -1;  // variable id, constant index or function index
  std::string name;
  std::vector<TermPtr> args;
  std::size_t hash = 0;
};

inline bool same_term(const TermPtr& a, const TermPtr& b) {
  if (a == b) return true;
  if (a->hash != b->hash || a->kind != b->kind || a->index != b->index || a->args.size() != b->args.size())
    return false;
  for (std::size_t i = 0; i < a->args.size(); ++i)
    if (!same_term(a->args[i], b->args[i])) return false;
  return true;
}

inline TermPtr make_var(const std::string& name) {
  auto t = std::make_shared<Term>();
  t->kind = Term::Kind::Var;
  t->index = VarTable::intern(name);
  t->name = name;
  t->hash = hash_mix(11, std::hash<std::string>{}(name));
  return t;
}

inline TermPtr make_const(const Signature& sig, const std::string& name) {
  int idx = sig.const_index(name);
  if (idx < 0) throw std::invalid_argument("undeclared constant " + name);
  auto t = std::make_shared<Term>();
  t->kind = Term::Kind::Const;
  t->index = idx;
  t->name = name;
  t->hash = hash_mix(13, std::hash<std::string>{}(name));
  return t;
}

inline TermPtr make_func(const Signature& sig, const std::string& name, std::vector<TermPtr> args) {
  int idx = sig.func_index(name);
  if (idx < 0) throw std::invalid_argument("undeclared function " + name);
  if (static_cast<int>(args.size()) != sig.funcs[static_cast<std::size_t>(idx)].arity)
    throw std::invalid_argument("arity mismatch for " + name);
  auto t = std::make_shared<Term>();
  t->kind = Term::Kind::Func;
  t->index = idx;
  t->name = name;
  std::size_t h = hash_mix(17, std::hash<std::string>{}(name));
  for (const auto& a : args) h = hash_mix(h, a->hash);
  t->hash = h;
  t->args = std::move(args);
  return t;
}

inline void term_vars(const TermPtr& t, std::vector<int>& out) {
  if (t->kind == Term::Kind::Var) {
    for (int v : out)
      if (v == t->index) return;
    out.push_back(t->index);
    return;
  }
  for (const auto& a : t->args) term_vars(a, out);
}

inline std::string print_term(const TermPtr& t) {
  if (t->kind != Term::Kind::Func) return t->name;
  std::string s = t->name + "(";
  for (std::size_t i = 0; i < t->args.size(); ++i) {
    if (i) s += ",";
    s += print_term(t->args[i]);
  }
  return s + ")";
}

enum class Kind { Atomic, Dist, Zero, One, Half, Monus, Sup, Inf, Min, Max, Neg, Const };

struct Formula;
using FormulaPtr = std::shared_ptr<const Formula>;

struct Formula {
  Kind kind = Kind::Zero;
  int symbol = -1;  // predicate index (Atomic)
  std::string name;  // predicate name, or bound variable name (Sup/Inf)
  int var = -1;      // bound variable id (Sup/Inf)
  std::vector<TermPtr> terms;
  std::vector<FormulaPtr> kids;
  long p = 0;
  int q = 0;
  std::size_t hash = 0;
  std::vector<int> free;  // free variable ids, first-occurrence order
  int size = 0;           // connective and quantifier nodes
  bool restricted = true;
};

inline bool same_formula(const FormulaPtr& a, const FormulaPtr& b) {
  if (a == b) return true;
  if (a->hash != b->hash || a->kind != b->kind || a->symbol != b->symbol || a->var != b->var ||
      a->p != b->p || a->q != b->q || a->terms.size() != b->terms.size() || a->kids.size() != b->kids.size())
    return false;
  for (std::size_t i = 0; i < a->terms.size(); ++i)
    if (!same_term(a->terms[i], b->terms[i])) return false;
  for (std::size_t i = 0; i < a->kids.size(); ++i)
    if (!same_formula(a->kids[i], b->kids[i])) return false;
  return true;
}

struct FormulaHash {
  std::size_t operator()(const FormulaPtr& f) const { return f->hash; }
};
struct FormulaEq {
  bool operator()(const FormulaPtr& a, const FormulaPtr& b) const { return same_formula(a, b); }
};

namespace detail {

inline FormulaPtr finish(std::shared_ptr<Formula> f) {
  std::size_t h = hash_mix(static_cast<std::size_t>(f->kind) + 101, std::hash<std::string>{}(f->name));
  h = hash_mix(h, static_cast<std::size_t>(f->p));
  h = hash_mix(h, static_cast<std::size_t>(f->q));
  for (const auto& t : f->terms) h = hash_mix(h, t->hash);
  for (const auto& k : f->kids) h = hash_mix(h, k->hash);
  f->hash = h;

  std::vector<int> fv;
  for (const auto& t : f->terms) term_vars(t, fv);
  for (const auto& k : f->kids)
    for (int v : k->free) {
      if (f->var == v && (f->kind == Kind::Sup || f->kind == Kind::Inf)) continue;
      bool seen = false;
      for (int w : fv) seen = seen || w == v;
      if (!seen) fv.push_back(v);
    }
  f->free = std::move(fv);

  bool derived = f->kind == Kind::Min || f->kind == Kind::Max || f->kind == Kind::Neg || f->kind == Kind::Const;
  f->restricted = !derived;
  int size = (f->kind == Kind::Atomic || f->kind == Kind::Dist || f->kind == Kind::Zero || f->kind == Kind::One) ? 0 : 1;
  for (const auto& k : f->kids) {
    f->restricted = f->restricted && k->restricted;
    size += k->size;
  }
  for (const auto& t : f->terms) {
    std::function<int(const TermPtr&)> fcount = [&](const TermPtr& x) {
      int c = x->kind == Term::Kind::Func ? 1 : 0;
      for (const auto& a : x->args) c += fcount(a);
      return c;
    };
    size += fcount(t);
  }
  f->size = size;
  return f;
}

inline std::shared_ptr<Formula> node(Kind k) {
  auto f = std::make_shared<Formula>();
  f->kind = k;
  return f;
}

}  // namespace detail

inline FormulaPtr make_zero() { return detail::finish(detail::node(Kind::Zero)); }
inline FormulaPtr make_one() { return detail::finish(detail::node(Kind::One)); }

inline FormulaPtr make_atomic(const Signature& sig, const std::string& pred, std::vector<TermPtr> args) {
  int idx = sig.pred_index(pred);
  if (idx < 0) throw std::invalid_argument("undeclared predicate " + pred);
  if (static_cast<int>(args.size()) != sig.preds[static_cast<std::size_t>(idx)].arity)
    throw std::invalid_argument("arity mismatch for " + pred);
  auto f = detail::node(Kind::Atomic);
  f->symbol = idx;
  f->name = pred;
  f->terms = std::move(args);
  return detail::finish(f);
}

inline FormulaPtr make_dist(TermPtr a, TermPtr b) {
  auto f = detail::node(Kind::Dist);
  f->terms = {std::move(a), std::move(b)};
  return detail::finish(f);
}

inline FormulaPtr make_unary(Kind k, FormulaPtr a) {
  auto f = detail::node(k);
  f->kids = {std::move(a)};
  return detail::finish(f);
}

inline FormulaPtr make_binary(Kind k, FormulaPtr a, FormulaPtr b) {
  auto f = detail::node(k);
  f->kids = {std::move(a), std::move(b)};
  return detail::finish(f);
}

inline FormulaPtr make_half(FormulaPtr a) { return make_unary(Kind::Half, std::move(a)); }
inline FormulaPtr make_neg(FormulaPtr a) { return make_unary(Kind::Neg, std::move(a)); }
inline FormulaPtr make_monus(FormulaPtr a, FormulaPtr b) { return make_binary(Kind::Monus, std::move(a), std::move(b)); }
inline FormulaPtr make_min(FormulaPtr a, FormulaPtr b) { return make_binary(Kind::Min, std::move(a), std::move(b)); }
inline FormulaPtr make_max(FormulaPtr a, FormulaPtr b) { return make_binary(Kind::Max, std::move(a), std::move(b)); }

inline FormulaPtr make_quant(Kind k, const std::string& var, FormulaPtr body) {
  auto f = detail::node(k);
  f->name = var;
  f->var = VarTable::intern(var);
  f->kids = {std::move(body)};
  return detail::finish(f);
}
inline FormulaPtr make_sup(const std::string& v, FormulaPtr body) { return make_quant(Kind::Sup, v, std::move(body)); }
inline FormulaPtr make_inf(const std::string& v, FormulaPtr body) { return make_quant(Kind::Inf, v, std::move(body)); }

inline FormulaPtr make_dyadic(long p, int q) {
  if (q < 0 || q > 62 || p < 0 || p > (1L << q)) throw std::invalid_argument("dyadic constant out of range");
  auto f = detail::node(Kind::Const);
  f->p = p;
  f->q = q;
  return detail::finish(f);
}

inline std::vector<std::string> free_vars(const FormulaPtr& f) {
  std::vector<std::string> out;
  for (int v : f->free) out.push_back(VarTable::name(v));
  return out;
}

// ---------------------------------------------------------------- printing

inline std::string print(const FormulaPtr& f);

namespace detail {

inline bool is_quant(const FormulaPtr& f) { return f->kind == Kind::Sup || f->kind == Kind::Inf; }

inline void print_to(const FormulaPtr& f, std::string& out) {
  switch (f->kind) {
    case Kind::Zero: out += "0"; return;
    case Kind::One: out += "1"; return;
    case Kind::Atomic: {
      out += f->name + "(";
      for (std::size_t i = 0; i < f->terms.size(); ++i) {
        if (i) out += ",";
        out += print_term(f->terms[i]);
      }
      out += ")";
      return;
    }
    case Kind::Dist:
      out += "d(" + print_term(f->terms[0]) + "," + print_term(f->terms[1]) + ")";
      return;
    case Kind::Half:
    case Kind::Neg:
      out += f->kind == Kind::Half ? "half(" : "neg(";
      print_to(f->kids[0], out);
      out += ")";
      return;
    case Kind::Min:
    case Kind::Max:
      out += f->kind == Kind::Min ? "min(" : "max(";
      print_to(f->kids[0], out);
      out += ",";
      print_to(f->kids[1], out);
      out += ")";
      return;
    case Kind::Const:
      out += "const(" + std::to_string(f->p) + "/2^" + std::to_string(f->q) + ")";
      return;
    case Kind::Sup:
    case Kind::Inf:
      out += f->kind == Kind::Sup ? "sup " : "inf ";
      out += f->name + " . ";
      print_to(f->kids[0], out);
      return;
    case Kind::Monus: {
      const auto& a = f->kids[0];
      const auto& b = f->kids[1];
      bool pa = is_quant(a);
      bool pb = is_quant(b) || b->kind == Kind::Monus;
      if (pa) out += "(";
      print_to(a, out);
      if (pa) out += ")";
      out += " -. ";
      if (pb) out += "(";
      print_to(b, out);
      if (pb) out += ")";
      return;
    }
  }
}

}  // namespace detail

inline std::string print(const FormulaPtr& f) {
  std::string out;
  detail::print_to(f, out);
  return out;
}

// ---------------------------------------------------------------- parsing

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& msg, std::size_t pos)
      : std::runtime_error(msg + " at position " + std::to_string(pos)), position(pos) {}
  std::size_t position;
};

namespace detail {

class Parser {
 public:
  Parser(const std::string& text, const Signature& sig) : s_(text), sig_(sig) {}

  FormulaPtr parse_all() {
    FormulaPtr f = expr();
    skip_ws();
    if (pos_ != s_.size()) fail("unexpected trailing input");
    return f;
  }

 private:
  const std::string& s_;
  const Signature& sig_;
  std::size_t pos_ = 0;

  [[noreturn]] void fail(const std::string& msg) { throw ParseError(msg, pos_); }

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool peek(const std::string& tok) {
    skip_ws();
    return s_.compare(pos_, tok.size(), tok) == 0;
  }

  void expect(const std::string& tok) {
    if (!peek(tok)) fail("expected '" + tok + "'");
    pos_ += tok.size();
  }

  std::string ident() {
    skip_ws();
    std::size_t start = pos_;
    if (pos_ < s_.size() && (std::isalpha(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) {
      ++pos_;
      while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
    }
    if (start == pos_) fail("expected identifier");
    return s_.substr(start, pos_ - start);
  }

  long number() {
    skip_ws();
    std::size_t start = pos_;
    while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    if (start == pos_) fail("expected number");
    if (pos_ - start > 18) fail("number too large");
    return std::stol(s_.substr(start, pos_ - start));
  }

  bool peek_ident() {
    skip_ws();
    return pos_ < s_.size() && (std::isalpha(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_');
  }

  FormulaPtr expr() {
    FormulaPtr left = unary();
    while (peek("-.")) {
      pos_ += 2;
      FormulaPtr right = unary();
      left = make_monus(left, right);
    }
    return left;
  }

  FormulaPtr unary() {
    skip_ws();
    std::size_t save = pos_;
    if (peek_ident()) {
      std::string id = ident();
      if (id == "sup" || id == "inf") {
        std::string v = ident();
        if (sig_.const_index(v) >= 0 || sig_.func_index(v) >= 0 || sig_.pred_index(v) >= 0)
          fail("cannot bind declared symbol " + v);
        expect(".");
        FormulaPtr body = expr();
        return id == "sup" ? make_sup(v, body) : make_inf(v, body);
      }
      pos_ = save;
    }
    return primary();
  }

  FormulaPtr primary() {
    skip_ws();
    if (pos_ >= s_.size()) fail("unexpected end of input");
    char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      FormulaPtr f = expr();
      expect(")");
      return f;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t at = pos_;
      long v = number();
      if (v == 0) return make_zero();
      if (v == 1) return make_one();
      pos_ = at;
      fail("only 0 and 1 are numeric literals");
    }
    std::size_t at = pos_;
    std::string id = ident();
    if (id == "half" || id == "neg") {
      expect("(");
      FormulaPtr a = expr();
      expect(")");
      return id == "half" ? make_half(a) : make_neg(a);
    }
    if (id == "min" || id == "max") {
      expect("(");
      FormulaPtr a = expr();
      expect(",");
      FormulaPtr b = expr();
      expect(")");
      return id == "min" ? make_min(a, b) : make_max(a, b);
    }
    if (id == "const") {
      expect("(");
      long p = number();
      expect("/");
      long two = number();
      if (two != 2) fail("constant denominator must be written 2^q");
      expect("^");
      long q = number();
      expect(")");
      if (q > 62 || p > (1L << q)) fail("dyadic constant out of range");
      return make_dyadic(p, static_cast<int>(q));
    }
    if (id == "d") {
      expect("(");
      TermPtr a = term();
      expect(",");
      TermPtr b = term();
      expect(")");
      return make_dist(a, b);
    }
    if (id == "sup" || id == "inf") {
      pos_ = at;
      return unary();
    }
    int pidx = sig_.pred_index(id);
    if (pidx < 0) {
      pos_ = at;
      fail("undeclared predicate " + id);
    }
    expect("(");
    std::vector<TermPtr> args = term_list();
    if (static_cast<int>(args.size()) != sig_.preds[static_cast<std::size_t>(pidx)].arity) {
      pos_ = at;
      fail("arity mismatch for " + id);
    }
    return make_atomic(sig_, id, std::move(args));
  }

  std::vector<TermPtr> term_list() {
    std::vector<TermPtr> args;
    args.push_back(term());
    while (peek(",")) {
      ++pos_;
      args.push_back(term());
    }
    expect(")");
    return args;
  }

  TermPtr term() {
    skip_ws();
    std::size_t at = pos_;
    std::string id = ident();
    if (peek("(")) {
      ++pos_;
      int fidx = sig_.func_index(id);
      if (fidx < 0) {
        pos_ = at;
        fail("undeclared function " + id);
      }
      std::vector<TermPtr> args = term_list();
      if (static_cast<int>(args.size()) != sig_.funcs[static_cast<std::size_t>(fidx)].arity) {
        pos_ = at;
        fail("arity mismatch for " + id);
      }
      return make_func(sig_, id, std::move(args));
    }
    if (sig_.const_index(id) >= 0) return make_const(sig_, id);
    if (sig_.func_index(id) >= 0 || sig_.pred_index(id) >= 0) {
      pos_ = at;
      fail("symbol used without arguments: " + id);
    }
    static const char* reserved[] = {"sup", "inf", "half", "neg", "min", "max", "const", "d"};
    for (const char* r : reserved)
      if (id == r) {
        pos_ = at;
        fail("reserved word used as variable: " + id);
      }
    return make_var(id);
  }
};

}  // namespace detail

inline FormulaPtr parse(const std::string& text, const Signature& sig) {
  return detail::Parser(text, sig).parse_all();
}

// ---------------------------------------------------------------- normalization

namespace detail {

inline FormulaPtr dyadic_formula(Rational v) {
  if (v == 0) return make_zero();
  if (v == 1) return make_one();
  if (v <= Rational(1, 2)) return make_half(dyadic_formula(v * 2));
  return make_monus(make_one(), make_half(dyadic_formula((1 - v) * 2)));
}

inline FormulaPtr rebuild(const FormulaPtr& f, std::vector<FormulaPtr> kids) {
  bool same = true;
  for (std::size_t i = 0; i < kids.size(); ++i) same = same && kids[i] == f->kids[i];
  if (same) return f;
  auto g = std::make_shared<Formula>(*f);
  g->kids = std::move(kids);
  return finish(g);
}

}  // namespace detail

// Exact elimination of min, max, neg and dyadic constants.
inline FormulaPtr normalize_restricted(const FormulaPtr& f) {
  if (f->restricted) return f;
  std::unordered_map<const Formula*, FormulaPtr> memo;
  std::function<FormulaPtr(const FormulaPtr&)> go = [&](const FormulaPtr& g) -> FormulaPtr {
    if (g->restricted) return g;
    auto it = memo.find(g.get());
    if (it != memo.end()) return it->second;
    std::vector<FormulaPtr> kids;
    for (const auto& k : g->kids) kids.push_back(go(k));
    FormulaPtr r;
    switch (g->kind) {
      case Kind::Min:
        r = make_monus(kids[0], make_monus(kids[0], kids[1]));
        break;
      case Kind::Neg:
        r = make_monus(make_one(), kids[0]);
        break;
      case Kind::Max: {
        FormulaPtr na = make_monus(make_one(), kids[0]);
        FormulaPtr nb = make_monus(make_one(), kids[1]);
        r = make_monus(make_one(), make_monus(na, make_monus(na, nb)));
        break;
      }
      case Kind::Const:
        r = detail::dyadic_formula(dyadic(g->p, g->q));
        break;
      default:
        r = detail::rebuild(g, std::move(kids));
    }
    memo.emplace(g.get(), r);
    return r;
  };
  return go(f);
}

// ---------------------------------------------------------------- connective semantics

inline Rational apply_connective(const Formula& f, const std::vector<Rational>& args) {
  for (const auto& a : args)
    if (!in_unit_interval(a)) throw std::domain_error("connective argument outside [0,1]: " + to_string(a));
  switch (f.kind) {
    case Kind::Zero: return 0;
    case Kind::One: return 1;
    case Kind::Half: return args.at(0) / 2;
    case Kind::Monus: return monus(args.at(0), args.at(1));
    case Kind::Min: return args.at(0) < args.at(1) ? args.at(0) : args.at(1);
    case Kind::Max: return args.at(0) < args.at(1) ? args.at(1) : args.at(0);
    case Kind::Neg: return 1 - args.at(0);
    case Kind::Const: return dyadic(f.p, f.q);
    default: throw std::invalid_argument("not a connective");
  }
}

// Evaluates the connective skeleton of f; atomic and quantified subformulas are leaves
// whose values come from the callback.
inline Rational eval_connective_free(const FormulaPtr& f, const std::function<Rational(const FormulaPtr&)>& leaf) {
  switch (f->kind) {
    case Kind::Atomic:
    case Kind::Dist:
    case Kind::Sup:
    case Kind::Inf: {
      Rational v = leaf(f);
      if (!in_unit_interval(v)) throw std::domain_error("leaf value outside [0,1]: " + to_string(v));
      return v;
    }
    default: {
      std::vector<Rational> args;
      for (const auto& k : f->kids) args.push_back(eval_connective_free(k, leaf));
      return apply_connective(*f, args);
    }
  }
}

}  // namespace fv
