#pragma once

#include "fv/boolean_ideals.hpp"
#include "fv/fv_translator.hpp"
#include "fv/reduced_products.hpp"
#include "fv/structures.hpp"
#include "fv/syntax.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

namespace fv {

// ---------------------------------------------------------------- caps

struct Caps {
  int max_depth = 3;
  int max_omega = 4;
  int max_universe = 4;
  int max_n = 2;

  void check_depth(int d) const {
    if (d < 0 || d > std::min(max_depth, 4)) throw std::invalid_argument("battery depth exceeds cap");
  }
  void check_n(int n) const {
    if (n < 0 || n > max_n) throw std::invalid_argument("precision exceeds cap");
  }
  void check_family(int omega, int universe) const {
    if (omega < 1 || omega > max_omega) throw std::invalid_argument("index set size exceeds cap");
    if (universe < 1 || universe > max_universe) throw std::invalid_argument("universe size exceeds cap");
  }
};

inline Caps load_caps(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open caps file " + path);
  nlohmann::json j = nlohmann::json::parse(in);
  Caps c;
  c.max_depth = j.value("max_depth", c.max_depth);
  c.max_omega = j.value("max_omega", c.max_omega);
  c.max_universe = j.value("max_universe", c.max_universe);
  c.max_n = j.value("max_n", c.max_n);
  return c;
}

// Looks for FV_CAPS, then config/caps.json relative to the working directory; defaults otherwise.
inline Caps default_caps() {
  if (const char* p = std::getenv("FV_CAPS")) return load_caps(p);
  std::ifstream probe("config/caps.json");
  if (probe) return load_caps("config/caps.json");
  return Caps{};
}

// ---------------------------------------------------------------- battery

// P/1, f/2 and one constant c.
inline Signature battery_signature() {
  Signature s;
  s.preds.push_back({"P", 1, Rational(2)});
  s.funcs.push_back({"f", 2, Rational(8)});
  s.consts.push_back("c");
  return s;
}

namespace detail {

class BatteryGen {
 public:
  explicit BatteryGen(const Signature& sig) : sig_(sig) {}

  // Formulas with exactly `size` nodes whose free variables are among the first k pool names.
  const std::vector<FormulaPtr>& formulas(int size, int k) {
    auto key = std::make_pair(size, k);
    auto it = fmemo_.find(key);
    if (it != fmemo_.end()) return it->second;
    std::vector<FormulaPtr> out;
    if (size == 0) {
      out.push_back(make_zero());
      out.push_back(make_one());
    }
    for (const auto& a : atoms(size, k)) out.push_back(a);
    if (size >= 1) {
      for (const auto& a : formulas(size - 1, k))
        out.push_back(make_half(a));
      for (int s1 = 0; s1 <= size - 1; ++s1) {
        const auto& left = formulas(s1, k);
        const auto& right = formulas(size - 1 - s1, k);
        for (const auto& a : left)
          for (const auto& b : right) out.push_back(make_monus(a, b));
      }
      if (k < 2) {
        const std::string v = pool[static_cast<std::size_t>(k)];
        const int id = VarTable::intern(v);
        for (Kind q : {Kind::Sup, Kind::Inf})
          for (const auto& body : formulas(size - 1, k + 1)) {
            if (std::find(body->free.begin(), body->free.end(), id) == body->free.end()) continue;
            out.push_back(q == Kind::Sup ? make_sup(v, body) : make_inf(v, body));
          }
      }
    }
    return fmemo_.emplace(key, std::move(out)).first->second;
  }

  static constexpr const char* pool[2] = {"x", "y"};

 private:
  const Signature& sig_;
  std::map<std::pair<int, int>, std::vector<FormulaPtr>> fmemo_;
  std::map<std::pair<int, int>, std::vector<TermPtr>> tmemo_;

  const std::vector<TermPtr>& terms(int cost, int k) {
    auto key = std::make_pair(cost, k);
    auto it = tmemo_.find(key);
    if (it != tmemo_.end()) return it->second;
    std::vector<TermPtr> out;
    if (cost == 0) {
      for (const auto& c : sig_.consts) out.push_back(make_const(sig_, c));
      for (int v = 0; v < k; ++v) out.push_back(make_var(pool[v]));
    } else {
      for (const auto& fn : sig_.funcs) {
        if (fn.arity != 2) continue;
        for (int c1 = 0; c1 <= cost - 1; ++c1)
          for (const auto& a : terms(c1, k))
            for (const auto& b : terms(cost - 1 - c1, k)) out.push_back(make_func(sig_, fn.name, {a, b}));
      }
    }
    return tmemo_.emplace(key, std::move(out)).first->second;
  }

  std::vector<FormulaPtr> atoms(int cost, int k) {
    std::vector<FormulaPtr> out;
    for (const auto& p : sig_.preds) {
      if (p.arity != 1) continue;
      for (const auto& t : terms(cost, k)) out.push_back(make_atomic(sig_, p.name, {t}));
    }
    for (int c1 = 0; 2 * c1 <= cost; ++c1) {
      int c2 = cost - c1;
      const auto& A = terms(c1, k);
      const auto& B = terms(c2, k);
      for (std::size_t i = 0; i < A.size(); ++i)
        for (std::size_t j = c1 == c2 ? i + 1 : 0; j < B.size(); ++j) out.push_back(make_dist(A[i], B[j]));
    }
    return out;
  }
};

}  // namespace detail

struct Battery {
  Signature sig;
  int depth = 0;
  std::vector<FormulaPtr> sentences;
};

// Closed restricted sentences with at most `depth` connective, quantifier and function nodes.
// Quantifiers bind x at the outermost binder level and y inside it, and must bind a used variable.
inline Battery battery(const Signature& sig, int depth) {
  if (depth < 0 || depth > 4) throw std::invalid_argument("battery depth must be in 0..4");
  Battery b;
  b.sig = sig;
  b.depth = depth;
  detail::BatteryGen gen(sig);
  std::unordered_set<FormulaPtr, FormulaHash, FormulaEq> seen;
  for (int s = 0; s <= depth; ++s)
    for (const auto& f : gen.formulas(s, 0))
      if (seen.insert(f).second) b.sentences.push_back(f);
  return b;
}

// ---------------------------------------------------------------- reports

struct SuiteReport {
  std::string name;
  std::uint64_t seed = 0;
  long cases = 0;
  std::vector<std::string> failures;
  std::vector<std::string> findings;
  double seconds = 0;

  bool ok() const { return failures.empty(); }

  // Timing is left out unless asked for, so reports for one seed are byte-identical.
  nlohmann::json to_json(std::size_t max_listed = 20, bool with_timing = false) const {
    nlohmann::json j;
    j["suite"] = name;
    j["seed"] = seed;
    j["cases"] = cases;
    j["failure_count"] = failures.size();
    j["finding_count"] = findings.size();
    std::vector<std::string> fl(failures.begin(), failures.begin() + static_cast<long>(std::min(max_listed, failures.size())));
    std::vector<std::string> fi(findings.begin(), findings.begin() + static_cast<long>(std::min(max_listed, findings.size())));
    j["failures"] = fl;
    j["findings"] = fi;
    if (with_timing) j["seconds"] = seconds;
    return j;
  }
};

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t k) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (k + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// ---------------------------------------------------------------- random families

struct FamilyShape {
  int max_omega = 4;
  int max_universe = 4;
  std::size_t max_points = 256;
};

inline IdealSpec random_ideal(int omega, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> coin(0, 2);
  Subset full = (Subset{1} << omega) - 1;
  Subset M;
  do {
    M = 0;
    for (int g = 0; g < omega; ++g)
      if (coin(rng) == 0) M |= Subset{1} << g;
  } while (M == full);
  return close_ideal(default_labels(omega), M ? std::vector<Subset>{M} : std::vector<Subset>{});
}

inline Family random_family(const Signature& sig, std::uint64_t seed, const FamilyShape& shape = {}) {
  std::mt19937_64 rng(seed);
  int omega = std::uniform_int_distribution<int>(1, shape.max_omega)(rng);
  Family fam;
  fam.ideal = random_ideal(omega, rng);
  std::size_t points = 1;
  for (int g = 0; g < omega; ++g) {
    int size = std::uniform_int_distribution<int>(1, shape.max_universe)(rng);
    while (size > 1 && points * static_cast<std::size_t>(size) > shape.max_points) --size;
    points *= static_cast<std::size_t>(size);
    fam.structures.push_back(random_structure(sig, size, rng()));
  }
  return fam;
}

// ---------------------------------------------------------------- suites

inline std::string describe_family(const Family& fam) {
  std::ostringstream o;
  o << "|Omega|=" << fam.ideal.size() << " support=" << fam.ideal.support() << " sizes=[";
  for (std::size_t g = 0; g < fam.structures.size(); ++g) o << (g ? "," : "") << fam.structures[g].size();
  o << "]";
  return o.str();
}

inline FormulaPtr random_term_atom(const Signature& sig, std::mt19937_64& rng) {
  auto pick_term = [&](auto&& self, int depth) -> TermPtr {
    int r = std::uniform_int_distribution<int>(0, depth > 0 ? 3 : 2)(rng);
    if (r == 0) return make_const(sig, sig.consts[0]);
    if (r == 1) return make_var("x");
    if (r == 2) return make_var("y");
    return make_func(sig, sig.funcs[0].name, {self(self, depth - 1), self(self, depth - 1)});
  };
  if (std::uniform_int_distribution<int>(0, 1)(rng) == 0) return make_atomic(sig, sig.preds[0].name, {pick_term(pick_term, 1)});
  return make_dist(pick_term(pick_term, 1), pick_term(pick_term, 1));
}

// Atomic formulas in the reduced product equal the limsup of coordinate values.
inline SuiteReport suite_atomic(std::uint64_t seed, int cases = 1000, const Caps& caps = default_caps()) {
  Stopwatch sw;
  SuiteReport rep;
  rep.name = "atomic";
  rep.seed = seed;
  const Signature sig = battery_signature();
  FamilyShape shape{caps.max_omega, caps.max_universe, 4096};
  std::mt19937_64 rng(seed);
  for (int c = 0; c < cases; ++c) {
    Family fam = random_family(sig, mix_seed(seed, static_cast<std::uint64_t>(c)), shape);
    ReducedProduct rp = reduced_product(fam);
    FormulaPtr phi = random_term_atom(sig, rng);
    std::vector<std::vector<int>> tuples;
    for (std::size_t v = 0; v < phi->free.size(); ++v)
      tuples.push_back(rp.points[std::uniform_int_distribution<std::size_t>(0, rp.points.size() - 1)(rng)]);
    AtomicCheck r = atomic_limsup_check(rp, phi, tuples);
    ++rep.cases;
    if (!r.ok)
      rep.failures.push_back("case " + std::to_string(c) + " " + print(phi) + " " + describe_family(fam) +
                             " product=" + to_string(r.in_product) + " limsup=" + to_string(r.limsup));
  }
  rep.seconds = sw.seconds();
  return rep;
}

struct FvSuiteOptions {
  int depth = 3;
  std::vector<int> ns = {0, 1, 2};
  int families = 200;
  FamilyShape shape{4, 4, 64};
  CertifyOptions certify;
};

struct FvSuiteResult {
  SuiteReport report;
  long containment_failures = 0;
  long implication_failures = 0;
  long width_findings = 0;
  long tilde_chain_findings = 0;
  long top_strict_findings = 0;
  long skipped = 0;
  std::map<std::string, BFormulaPtr> sigmas;  // distinct emitted sigmas by printed form
  std::map<std::string, int> sigma_vars;      // printed form -> number of free variables
};

// Certifies every battery sentence on random families for each precision.
inline FvSuiteResult suite_fv(std::uint64_t seed, const FvSuiteOptions& opt = {}, const Caps& caps = default_caps()) {
  Stopwatch sw;
  caps.check_depth(opt.depth);
  for (int n : opt.ns) caps.check_n(n);
  caps.check_family(opt.shape.max_omega, opt.shape.max_universe);
  FvSuiteResult res;
  SuiteReport& rep = res.report;
  rep.name = "fv";
  rep.seed = seed;
  const Signature sig = battery_signature();
  Battery bat = battery(sig, opt.depth);
  std::vector<FormulaPtr> sentences;
  for (const auto& f : bat.sentences) sentences.push_back(normalize_restricted(f));
  Translator tr;
  std::vector<std::vector<const DeterminingSequence*>> seqs(sentences.size());
  for (std::size_t s = 0; s < sentences.size(); ++s)
    for (int n : opt.ns) {
      const DeterminingSequence& ds = tr.translate(sentences[s], n);
      seqs[s].push_back(&ds);
      for (const auto& sg : ds.sigmas) {
        std::string key = print_bformula(sg);
        if (res.sigmas.emplace(key, sg).second) res.sigma_vars[key] = ds.vars();
      }
    }
  for (int fi = 0; fi < opt.families; ++fi) {
    Family fam = random_family(sig, mix_seed(seed, static_cast<std::uint64_t>(fi)), opt.shape);
    ReducedProduct rp = reduced_product(fam);
    QuotientBA B = quotient(fam.ideal);
    for (std::size_t s = 0; s < sentences.size(); ++s) {
      for (std::size_t k = 0; k < opt.ns.size(); ++k) {
        const DeterminingSequence& ds = *seqs[s][k];
        const int n = ds.n;
        CertifyResult cr;
        try {
          cr = certify_with(ds, rp, B, {}, sentences[s], opt.certify);
        } catch (const SearchTooLarge& e) {
          ++res.skipped;
          rep.findings.push_back("skipped (search too large): " + print(bat.sentences[s]) + " n=" + std::to_string(n));
          continue;
        }
        ++rep.cases;
        const FVBounds& b = cr.bounds;
        std::string where = "sentence " + print(bat.sentences[s]) + " n=" + std::to_string(n) + " family " +
                            std::to_string(fi) + " (" + describe_family(fam) + ") value=" + to_string(b.direct);
        auto truth_str = [](const std::vector<char>& v) {
          std::string t;
          for (char c : v) t += c ? '1' : '0';
          return t;
        };
        where += " strict=" + truth_str(b.strict_truth) + " weak=" + truth_str(b.weak_truth);
        if (!b.contained()) {
          ++res.containment_failures;
          auto lo = b.lower();
          rep.failures.push_back("containment: " + where + " lower=" + (lo ? to_string(*lo) : std::string("none")) +
                                 " upper=" + to_string(b.upper()));
        }
        if (!cr.ok) {
          ++res.implication_failures;
          rep.failures.push_back("certify l=" + std::to_string(cr.level) + " " + cr.failure + ": " + where);
        }
        if (!cr.top_strict_findings.empty()) {
          ++res.top_strict_findings;
          rep.findings.push_back("sigma_top holds on strict sets: " + where);
        }
        if (b.ell_tilde && b.upper() - dyadic(*b.ell_tilde - 1, n) > dyadic(2, n)) {
          ++res.width_findings;
          rep.findings.push_back("bound width > 2^(1-n): " + where);
        }
        bool seen_false = false, chain_ok = true;
        for (char w : b.weak_truth) {
          if (!w) seen_false = true;
          else if (seen_false) chain_ok = false;
        }
        if (!chain_ok) {
          ++res.tilde_chain_findings;
          rep.findings.push_back("weak truth not downward closed in l: " + where);
        }
      }
    }
  }
  rep.seconds = sw.seconds();
  return res;
}

// Distinct quotient algebras over index sets of size <= max_omega. Quotients are encoded by their
// atoms, so algebras with the same number of atoms are identical as encoded objects.
inline std::vector<QuotientBA> small_quotients(int max_omega) {
  std::vector<QuotientBA> out;
  std::set<int> atoms_seen;
  for (int k = 1; k <= max_omega; ++k) {
    Subset full = (Subset{1} << k) - 1;
    for (Subset M = 0; M < full; ++M) {
      QuotientBA B = quotient(close_ideal(default_labels(k), M ? std::vector<Subset>{M} : std::vector<Subset>{}));
      if (atoms_seen.insert(B.atoms).second) out.push_back(std::move(B));
    }
  }
  return out;
}

inline SuiteReport suite_monotone(const FvSuiteResult& fv, std::uint64_t seed, int max_omega = 3) {
  Stopwatch sw;
  SuiteReport rep;
  rep.name = "monotone";
  rep.seed = seed;
  auto algebras = small_quotients(max_omega);
  for (const auto& [key, sg] : fv.sigmas) {
    int s = fv.sigma_vars.at(key);
    for (const auto& B : algebras) {
      MonotoneOptions mo;
      mo.exhaustive_max_vars = 6;
      mo.seed = mix_seed(seed, std::hash<std::string>{}(key));
      MonotoneReport r;
      try {
        r = is_monotone(sg, B, s, mo);
      } catch (const SearchTooLarge&) {
        rep.findings.push_back("skipped (search too large): " + key.substr(0, 120));
        continue;
      }
      ++rep.cases;
      if (!r.ok) rep.failures.push_back("not monotone on " + std::to_string(B.size()) + "-element algebra: " + key.substr(0, 200));
    }
  }
  rep.seconds = sw.seconds();
  return rep;
}

inline SuiteReport suite_pad_shift(std::uint64_t seed, int depth = 2, std::vector<int> ns = {0, 1, 2}) {
  Stopwatch sw;
  SuiteReport rep;
  rep.name = "pad_shift";
  rep.seed = seed;
  std::vector<QuotientBA> algebras = {quotient(trivial_ideal(2)), quotient(close_ideal(default_labels(3), {1}))};
  Battery bat = battery(battery_signature(), depth);
  Translator tr;
  for (const auto& f : bat.sentences)
    for (int n : ns) {
      const DeterminingSequence& ds = tr.translate(normalize_restricted(f), n);
      for (std::size_t a = 0; a < algebras.size(); ++a) {
        PadShiftReport r;
        try {
          r = pad_shift_check(ds, algebras[a], 1000, mix_seed(seed, rep.cases));
        } catch (const SearchTooLarge&) {
          rep.findings.push_back("skipped (search too large): " + print(f));
          continue;
        }
        ++rep.cases;
        if (!r.ok) {
          std::string z;
          for (auto v : r.assignment) z += std::to_string(v) + " ";
          rep.failures.push_back("pad-shift l=" + std::to_string(r.level) + " " + print(f) + " n=" + std::to_string(n) +
                                 " algebra " + std::to_string(a) + " z=[" + z + "]");
        }
      }
    }
  rep.seconds = sw.seconds();
  return rep;
}

inline std::vector<Rational> battery_values(const FiniteStructure& s, const std::vector<FormulaPtr>& sentences) {
  Evaluator ev(s);
  std::vector<Rational> out;
  std::vector<int> env;
  for (const auto& f : sentences) out.push_back(ev.eval(f, env));
  return out;
}

inline std::vector<int> random_permutation(int n, std::mt19937_64& rng) {
  std::vector<int> p(static_cast<std::size_t>(n));
  std::iota(p.begin(), p.end(), 0);
  std::shuffle(p.begin(), p.end(), rng);
  return p;
}

// Coordinatewise isomorphic families give equal sentence values and equal level sets.
inline SuiteReport suite_preservation(std::uint64_t seed, int cases = 100, int depth = 3, const Caps& caps = default_caps()) {
  Stopwatch sw;
  caps.check_depth(depth);
  SuiteReport rep;
  rep.name = "preservation";
  rep.seed = seed;
  const Signature sig = battery_signature();
  Battery bat = battery(sig, depth);
  std::vector<FormulaPtr> sentences;
  for (const auto& f : bat.sentences) sentences.push_back(normalize_restricted(f));
  Translator tr;
  FamilyShape shape{std::min(caps.max_omega, 3), std::min(caps.max_universe, 3), 27};
  std::mt19937_64 rng(seed);
  for (int c = 0; c < cases; ++c) {
    Family A = random_family(sig, mix_seed(seed, static_cast<std::uint64_t>(c)), shape);
    Family Bf = A;
    for (auto& s : Bf.structures) s = relabel(s, random_permutation(s.size(), rng), "b");
    ReducedProduct ra = reduced_product(A), rb = reduced_product(Bf);
    auto va = battery_values(ra.induced, sentences);
    auto vb = battery_values(rb.induced, sentences);
    for (std::size_t s = 0; s < sentences.size(); ++s) {
      ++rep.cases;
      if (va[s] != vb[s])
        rep.failures.push_back("value mismatch case " + std::to_string(c) + " " + print(bat.sentences[s]) + ": " +
                               to_string(va[s]) + " vs " + to_string(vb[s]));
      const DeterminingSequence& ds = tr.translate(sentences[s], 1);
      LevelSets la = level_sets(ds, A, {}), lb = level_sets(ds, Bf, {});
      if (la.strict != lb.strict || la.weak != lb.weak)
        rep.failures.push_back("level sets differ case " + std::to_string(c) + " " + print(bat.sentences[s]));
    }
  }
  rep.seconds = sw.seconds();
  return rep;
}

// Reduced powers over ideals with isomorphic quotients: the closure of {1} on {1,2,3} and the
// trivial ideal on {1,2}, plus a one-coordinate power against a principal maximal-ideal power.
inline SuiteReport suite_quotient(std::uint64_t seed, int structures = 5, int depth = 3, const Caps& caps = default_caps()) {
  Stopwatch sw;
  caps.check_depth(depth);
  SuiteReport rep;
  rep.name = "quotient";
  rep.seed = seed;
  const Signature sig = battery_signature();
  Battery bat = battery(sig, depth);
  std::vector<FormulaPtr> sentences;
  for (const auto& f : bat.sentences) sentences.push_back(normalize_restricted(f));
  const std::vector<std::pair<IdealSpec, IdealSpec>> pairs = {
      {close_ideal(default_labels(3), {1}), trivial_ideal(2)},
      {trivial_ideal(1), close_ideal(default_labels(2), {2})},
  };
  for (int k = 0; k < structures; ++k) {
    std::mt19937_64 rng(mix_seed(seed, static_cast<std::uint64_t>(k)));
    int size = std::uniform_int_distribution<int>(1, std::min(3, caps.max_universe))(rng);
    FiniteStructure A = random_structure(sig, size, rng());
    for (std::size_t p = 0; p < pairs.size(); ++p) {
      auto va = battery_values(reduced_product(constant_family(pairs[p].first, A)).induced, sentences);
      auto vb = battery_values(reduced_product(constant_family(pairs[p].second, A)).induced, sentences);
      for (std::size_t s = 0; s < sentences.size(); ++s) {
        ++rep.cases;
        if (va[s] != vb[s])
          rep.failures.push_back("structure " + std::to_string(k) + " pair " + std::to_string(p) + " " +
                                 print(bat.sentences[s]) + ": " + to_string(va[s]) + " vs " + to_string(vb[s]));
      }
    }
  }
  rep.seconds = sw.seconds();
  return rep;
}

inline SuiteReport suite_fubini(std::uint64_t seed, int instances = 50) {
  Stopwatch sw;
  SuiteReport rep;
  rep.name = "fubini";
  rep.seed = seed;
  const Signature sig = battery_signature();
  for (int c = 0; c < instances; ++c) {
    std::mt19937_64 rng(mix_seed(seed, static_cast<std::uint64_t>(c)));
    int a = std::uniform_int_distribution<int>(1, 3)(rng);
    int n1 = std::uniform_int_distribution<int>(1, 2)(rng);
    int n2 = std::uniform_int_distribution<int>(1, 2)(rng);
    FiniteStructure A = random_structure(sig, a, rng());
    IdealSpec I = random_ideal(n1, rng), J = random_ideal(n2, rng);
    FubiniReport r = fubini_iso(A, I, J);
    ++rep.cases;
    if (!r.ok)
      rep.failures.push_back("instance " + std::to_string(c) + " |A|=" + std::to_string(a) + " |Omega1|=" + std::to_string(n1) +
                             " |Omega2|=" + std::to_string(n2) + ": " + r.failure);
  }
  rep.seconds = sw.seconds();
  return rep;
}

// Reduced product over the ideal generated by Omega minus {g0} is isomorphic to the g0 coordinate.
inline SuiteReport suite_principal(std::uint64_t seed, int cases = 20) {
  Stopwatch sw;
  SuiteReport rep;
  rep.name = "principal";
  rep.seed = seed;
  const Signature sig = battery_signature();
  for (int c = 0; c < cases; ++c) {
    std::mt19937_64 rng(mix_seed(seed, static_cast<std::uint64_t>(c)));
    int omega = std::uniform_int_distribution<int>(1, 4)(rng);
    int g0 = std::uniform_int_distribution<int>(0, omega - 1)(rng);
    Subset rest = ((Subset{1} << omega) - 1) & ~(Subset{1} << g0);
    Family fam;
    fam.ideal = close_ideal(default_labels(omega), rest ? std::vector<Subset>{rest} : std::vector<Subset>{});
    for (int g = 0; g < omega; ++g)
      fam.structures.push_back(random_structure(sig, std::uniform_int_distribution<int>(1, 4)(rng), rng()));
    ReducedProduct rp = reduced_product(fam);
    ++rep.cases;
    if (!principal_iso_check(rp, g0))
      rep.failures.push_back("case " + std::to_string(c) + " g0=" + std::to_string(g0) + " " + describe_family(fam));
  }
  rep.seconds = sw.seconds();
  return rep;
}

// Every atom flip in sampled translations must be caught by certify on some family.
struct MutationOptions {
  int translations = 20;
  int families = 60;
  int max_atoms = 40;
};

inline SuiteReport suite_mutation(std::uint64_t seed, const MutationOptions& opt = {}) {
  Stopwatch sw;
  SuiteReport rep;
  rep.name = "mutation";
  rep.seed = seed;
  const Signature sig = battery_signature();
  Battery bat = battery(sig, 2);
  FamilyShape shape{2, 3, 9};
  std::vector<Family> fams;
  std::vector<ReducedProduct> rps;
  std::vector<QuotientBA> qs;
  for (int k = 0; k < opt.families; ++k) {
    fams.push_back(random_family(sig, mix_seed(seed ^ 0x5bd1e995ULL, static_cast<std::uint64_t>(k)), shape));
    rps.push_back(reduced_product(fams.back()));
    qs.push_back(quotient(fams.back().ideal));
  }
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> order(bat.sentences.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  int picked = 0;
  long unchanged = 0, in_slack = 0;
  for (std::size_t idx : order) {
    if (picked >= opt.translations) break;
    FormulaPtr f = normalize_restricted(bat.sentences[idx]);
    int n = std::uniform_int_distribution<int>(0, 1)(rng);
    DeterminingSequence ds = translate(f, n);
    const int atoms = count_atoms(ds);
    if (atoms > opt.max_atoms) continue;
    bool sound = true;
    for (std::size_t k = 0; k < fams.size() && sound; ++k) sound = certify_with(ds, rps[k], qs[k], {}, f).ok;
    if (!sound) continue;
    ++picked;
    for (int a = 0; a < atoms; ++a) {
      DeterminingSequence mut = mutate(ds, a);
      bool caught = false, changed = false;
      for (std::size_t k = 0; k < fams.size() && !caught; ++k) {
        try {
          CertifyResult r = certify_with(mut, rps[k], qs[k], {}, f, CertifyOptions{true});
          caught = !r.ok;
          FVBounds b = fv_bounds_with(ds, rps[k], qs[k], {}, f);
          changed = changed || r.bounds.strict_truth != b.strict_truth || r.bounds.weak_truth != b.weak_truth;
        } catch (const SearchTooLarge&) {
        }
      }
      ++rep.cases;
      if (!caught) {
        ++(changed ? in_slack : unchanged);
        rep.failures.push_back("flip of atom " + std::to_string(a) + " undetected (" +
                               (changed ? "sigma values change only where certify allows either"
                                        : "no sigma value changes on any family") +
                               "): " + print(bat.sentences[idx]) + " n=" + std::to_string(n));
      }
    }
  }
  if (picked < opt.translations)
    rep.failures.push_back("only " + std::to_string(picked) + " translations passed certify unmutated");
  if (unchanged + in_slack > 0)
    rep.findings.push_back(std::to_string(unchanged) + " undetected flips leave every sigma value unchanged on all families, " +
                           std::to_string(in_slack) + " change sigma values only where certify allows either");
  rep.seconds = sw.seconds();
  return rep;
}

// ---------------------------------------------------------------- divisibility demonstrator

struct DivisibilityRow {
  int m = 0;
  long prime = 0;
  std::vector<int> divides_xi;   // j in 1..horizon with xi_m | k_xi(j)
  std::vector<int> divides_eta;  // j in 1..horizon with xi_m | k_eta(j)
  bool cofinal = false;          // divides_xi == {m..horizon}
};

struct DivisibilityReport {
  bool ok = true;
  std::vector<DivisibilityRow> rows;
  std::string text;
};

inline bool is_prime(long p) {
  if (p < 2) return false;
  for (long d = 2; d * d <= p; ++d)
    if (p % d == 0) return false;
  return true;
}

// k(j) is the product of the first j primes of the list; the list is cycled past its end by
// repeating its primes, so partial products stay strictly increasing.
inline std::vector<mpz_class> partial_products(const std::vector<long>& primes, int horizon) {
  std::vector<mpz_class> k;
  mpz_class acc = 1;
  for (int j = 0; j < horizon; ++j) {
    acc *= primes[static_cast<std::size_t>(j) % primes.size()];
    k.push_back(acc);
  }
  return k;
}

inline DivisibilityReport demo_matrix_divisibility(const std::vector<long>& xi, const std::vector<long>& eta, int horizon) {
  if (xi.empty() || eta.empty() || horizon < 1) throw std::invalid_argument("empty prime list or horizon");
  for (long p : xi)
    if (!is_prime(p)) throw std::invalid_argument("not a prime: " + std::to_string(p));
  for (long p : eta) {
    if (!is_prime(p)) throw std::invalid_argument("not a prime: " + std::to_string(p));
    if (std::find(xi.begin(), xi.end(), p) != xi.end()) throw std::invalid_argument("prime lists overlap: " + std::to_string(p));
  }
  DivisibilityReport rep;
  auto kx = partial_products(xi, horizon), ke = partial_products(eta, horizon);
  std::ostringstream text;
  for (std::size_t m = 1; m <= xi.size(); ++m) {
    DivisibilityRow row;
    row.m = static_cast<int>(m);
    row.prime = xi[m - 1];
    for (int j = 1; j <= horizon; ++j) {
      if (mpz_divisible_ui_p(kx[static_cast<std::size_t>(j - 1)].get_mpz_t(), static_cast<unsigned long>(row.prime)))
        row.divides_xi.push_back(j);
      if (mpz_divisible_ui_p(ke[static_cast<std::size_t>(j - 1)].get_mpz_t(), static_cast<unsigned long>(row.prime)))
        row.divides_eta.push_back(j);
    }
    std::vector<int> expect;
    for (int j = static_cast<int>(m); j <= horizon; ++j) expect.push_back(j);
    row.cofinal = row.divides_xi == expect;
    if (!row.cofinal || !row.divides_eta.empty()) rep.ok = false;
    text << "m=" << m << " prime " << row.prime << ": divides k_xi(j) for j in {";
    for (std::size_t t = 0; t < row.divides_xi.size(); ++t) text << (t ? "," : "") << row.divides_xi[t];
    text << "}, divides k_eta(j) for " << row.divides_eta.size() << " of " << horizon << " indices\n";
    rep.rows.push_back(std::move(row));
  }
  text << "k_xi: ";
  for (const auto& v : kx) text << v.get_str() << " ";
  text << "\nk_eta: ";
  for (const auto& v : ke) text << v.get_str() << " ";
  text << "\nIn the matrix setting the sentence asking for n_m pairwise orthogonal equivalent projections summing "
          "to the unit is satisfied cofinally in one sequence algebra and never in the other; only the integer "
          "divisibility pattern is checked here.\n";
  rep.text = text.str();
  return rep;
}

}  // namespace fv
