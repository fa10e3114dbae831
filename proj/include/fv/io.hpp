#pragma once

#include "fv/boolean_ideals.hpp"
#include "fv/fv_translator.hpp"
#include "fv/reduced_products.hpp"
#include "fv/structures.hpp"
#include "fv/syntax.hpp"

#include <json.hpp>

#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace fv {

using json = nlohmann::json;

class FormatError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError(path + ": " + e.what());
  }
}

inline Rational rational_from_json(const json& j) {
  if (j.is_string()) return parse_rational(j.get<std::string>());
  if (j.is_number_integer()) return Rational(j.get<long>());
  throw FormatError("expected a rational as \"p/q\" or an integer");
}

// ---------------------------------------------------------------- signatures

inline Signature signature_from_json(const json& j) {
  Signature s;
  auto symbols = [&](const char* key, std::vector<Symbol>& out) {
    if (!j.contains(key)) return;
    for (const auto& e : j.at(key)) {
      Symbol sym;
      sym.name = e.at("name").get<std::string>();
      sym.arity = e.at("arity").get<int>();
      sym.lipschitz = e.contains("lipschitz") ? rational_from_json(e.at("lipschitz")) : Rational(1);
      out.push_back(sym);
    }
  };
  symbols("preds", s.preds);
  symbols("funcs", s.funcs);
  if (j.contains("consts"))
    for (const auto& c : j.at("consts")) s.consts.push_back(c.get<std::string>());
  s.check();
  return s;
}

inline json to_json(const Signature& s) {
  json j;
  auto symbols = [](const std::vector<Symbol>& list) {
    json a = json::array();
    for (const auto& sym : list) a.push_back({{"name", sym.name}, {"arity", sym.arity}, {"lipschitz", to_string(sym.lipschitz)}});
    return a;
  };
  j["preds"] = symbols(s.preds);
  j["funcs"] = symbols(s.funcs);
  j["consts"] = s.consts;
  return j;
}

// ---------------------------------------------------------------- structures

namespace detail {

inline int tensor_arity(const json& t) {
  int a = 0;
  const json* cur = &t;
  while (cur->is_array()) {
    ++a;
    if (cur->empty()) break;
    cur = &(*cur)[0];
  }
  return a;
}

template <class Leaf>
void read_tensor(const json& t, int n, int arity, Leaf&& leaf, std::vector<int>& prefix) {
  if (static_cast<int>(prefix.size()) == arity) {
    leaf(prefix, t);
    return;
  }
  if (!t.is_array() || static_cast<int>(t.size()) != n) throw FormatError("table has the wrong shape");
  for (int i = 0; i < n; ++i) {
    prefix.push_back(i);
    read_tensor(t[static_cast<std::size_t>(i)], n, arity, leaf, prefix);
    prefix.pop_back();
  }
}

template <class Leaf>
json write_tensor(int n, int arity, Leaf&& leaf, std::vector<int>& prefix) {
  if (static_cast<int>(prefix.size()) == arity) return leaf(prefix);
  json a = json::array();
  for (int i = 0; i < n; ++i) {
    prefix.push_back(i);
    a.push_back(write_tensor(n, arity, leaf, prefix));
    prefix.pop_back();
  }
  return a;
}

// Smallest Lipschitz constant (at least 1) that the given distance pattern allows.
inline Rational inferred_lipschitz(const FiniteStructure& s, bool pred, std::size_t index, int arity) {
  Rational best = 1;
  const std::size_t count = ipow(static_cast<std::size_t>(s.size()), arity);
  std::vector<int> a, b;
  for (std::size_t i = 0; i < count; ++i)
    for (std::size_t k = i + 1; k < count; ++k) {
      unflatten(i, s.size(), arity, a);
      unflatten(k, s.size(), arity, b);
      Rational d = tuple_distance(s, a, b);
      Rational diff = pred ? abs(Rational(s.preds[index][i] - s.preds[index][k]))
                           : s.d(s.funcs[index][i], s.funcs[index][k]);
      if (diff / d > best) best = diff / d;
    }
  return best;
}

}  // namespace detail

// Reads a structure. The signature comes from the argument, else from a "signature" member,
// else it is inferred from the tables with the smallest admissible Lipschitz bounds.
inline FiniteStructure structure_from_json(const json& j, const Signature* given = nullptr) {
  FiniteStructure s;
  for (const auto& u : j.at("universe")) s.universe.push_back(u.is_string() ? u.get<std::string>() : u.dump());
  const int n = s.size();
  if (n < 1 || n > kMaxUniverse) throw FormatError("universe size must be in 1..16");
  const json& dist = j.at("dist");
  if (!dist.is_array() || static_cast<int>(dist.size()) != n) throw FormatError("distance matrix has the wrong shape");
  s.dist.resize(static_cast<std::size_t>(n * n));
  for (int a = 0; a < n; ++a) {
    if (!dist[static_cast<std::size_t>(a)].is_array() || static_cast<int>(dist[static_cast<std::size_t>(a)].size()) != n)
      throw FormatError("distance matrix has the wrong shape");
    for (int b = 0; b < n; ++b) s.d(a, b) = rational_from_json(dist[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)]);
  }
  bool infer = false;
  if (given) {
    s.sig = *given;
  } else if (j.contains("signature")) {
    s.sig = signature_from_json(j.at("signature"));
  } else {
    infer = true;
    if (j.contains("preds"))
      for (const auto& [name, t] : j.at("preds").items()) s.sig.preds.push_back({name, detail::tensor_arity(t), Rational(1)});
    if (j.contains("funcs"))
      for (const auto& [name, t] : j.at("funcs").items()) s.sig.funcs.push_back({name, detail::tensor_arity(t), Rational(1)});
    if (j.contains("consts"))
      for (const auto& [name, v] : j.at("consts").items()) s.sig.consts.push_back(name);
  }
  std::vector<int> prefix;
  const json empty = json::object();
  const json& preds = j.contains("preds") ? j.at("preds") : empty;
  const json& funcs = j.contains("funcs") ? j.at("funcs") : empty;
  const json& consts = j.contains("consts") ? j.at("consts") : empty;
  for (const auto& sym : s.sig.preds) {
    if (!preds.contains(sym.name)) throw FormatError("missing predicate table " + sym.name);
    std::vector<Rational> table(ipow(static_cast<std::size_t>(n), sym.arity));
    detail::read_tensor(preds.at(sym.name), n, sym.arity,
                        [&](const std::vector<int>& idx, const json& v) { table[s.flat(idx)] = rational_from_json(v); }, prefix);
    s.preds.push_back(std::move(table));
  }
  for (const auto& sym : s.sig.funcs) {
    if (!funcs.contains(sym.name)) throw FormatError("missing function table " + sym.name);
    std::vector<int> table(ipow(static_cast<std::size_t>(n), sym.arity));
    detail::read_tensor(funcs.at(sym.name), n, sym.arity,
                        [&](const std::vector<int>& idx, const json& v) {
                          int e = s.label_index(v.is_string() ? v.get<std::string>() : v.dump());
                          if (e < 0) throw FormatError("function value is not a universe label");
                          table[s.flat(idx)] = e;
                        },
                        prefix);
    s.funcs.push_back(std::move(table));
  }
  for (const auto& c : s.sig.consts) {
    if (!consts.contains(c)) throw FormatError("missing constant " + c);
    const json& v = consts.at(c);
    int e = s.label_index(v.is_string() ? v.get<std::string>() : v.dump());
    if (e < 0) throw FormatError("constant value is not a universe label");
    s.consts.push_back(e);
  }
  if (infer) {
    for (std::size_t p = 0; p < s.sig.preds.size(); ++p)
      s.sig.preds[p].lipschitz = detail::inferred_lipschitz(s, true, p, s.sig.preds[p].arity);
    for (std::size_t f = 0; f < s.sig.funcs.size(); ++f)
      s.sig.funcs[f].lipschitz = detail::inferred_lipschitz(s, false, f, s.sig.funcs[f].arity);
  }
  s.sig.check();
  return s;
}

inline json to_json(const FiniteStructure& s, bool with_signature = false) {
  json j;
  j["universe"] = s.universe;
  json dist = json::array();
  for (int a = 0; a < s.size(); ++a) {
    json row = json::array();
    for (int b = 0; b < s.size(); ++b) row.push_back(to_string(s.d(a, b)));
    dist.push_back(row);
  }
  j["dist"] = dist;
  std::vector<int> prefix;
  json preds = json::object(), funcs = json::object(), consts = json::object();
  for (std::size_t p = 0; p < s.preds.size(); ++p)
    preds[s.sig.preds[p].name] = detail::write_tensor(s.size(), s.sig.preds[p].arity,
                                                      [&](const std::vector<int>& idx) { return json(to_string(s.preds[p][s.flat(idx)])); }, prefix);
  for (std::size_t f = 0; f < s.funcs.size(); ++f)
    funcs[s.sig.funcs[f].name] = detail::write_tensor(
        s.size(), s.sig.funcs[f].arity,
        [&](const std::vector<int>& idx) { return json(s.universe[static_cast<std::size_t>(s.funcs[f][s.flat(idx)])]); }, prefix);
  for (std::size_t c = 0; c < s.consts.size(); ++c) consts[s.sig.consts[c]] = s.universe[static_cast<std::size_t>(s.consts[c])];
  j["preds"] = preds;
  j["funcs"] = funcs;
  j["consts"] = consts;
  if (with_signature) j["signature"] = to_json(s.sig);
  return j;
}

// ---------------------------------------------------------------- ideals and families

inline IdealSpec ideal_from_json(const json& j) {
  std::vector<std::string> omega;
  for (const auto& o : j.at("omega")) omega.push_back(o.is_string() ? o.get<std::string>() : o.dump());
  if (omega.empty() || static_cast<int>(omega.size()) > kMaxOmega) throw FormatError("omega size must be in 1..6");
  auto index = [&](const json& o) {
    std::string l = o.is_string() ? o.get<std::string>() : o.dump();
    for (std::size_t i = 0; i < omega.size(); ++i)
      if (omega[i] == l) return static_cast<int>(i);
    throw FormatError("generator element not in omega: " + l);
  };
  std::vector<Subset> gens;
  if (j.contains("generators"))
    for (const auto& g : j.at("generators")) {
      Subset s = 0;
      for (const auto& o : g) s |= Subset{1} << index(o);
      gens.push_back(s);
    }
  return close_ideal(std::move(omega), gens);
}

inline json to_json(const IdealSpec& I) {
  json members = json::array();
  for (Subset s : I.members) {
    json m = json::array();
    for (int g = 0; g < I.size(); ++g)
      if (s >> g & 1) m.push_back(I.omega[static_cast<std::size_t>(g)]);
    members.push_back(m);
  }
  json gens = json::array();
  Subset sup = I.support();
  if (sup) {
    json m = json::array();
    for (int g = 0; g < I.size(); ++g)
      if (sup >> g & 1) m.push_back(I.omega[static_cast<std::size_t>(g)]);
    gens.push_back(m);
  }
  return {{"omega", I.omega}, {"generators", gens}, {"members", members}};
}

inline Family family_from_json(const json& j, const Signature* given = nullptr) {
  Family fam;
  fam.ideal = ideal_from_json(j.at("ideal"));
  Signature sig;
  const Signature* use = given;
  if (!use && j.contains("signature")) {
    sig = signature_from_json(j.at("signature"));
    use = &sig;
  }
  const json& ss = j.at("structures");
  for (const auto& label : fam.ideal.omega) {
    if (!ss.contains(label)) throw FormatError("missing structure for index " + label);
    fam.structures.push_back(structure_from_json(ss.at(label), use));
  }
  fam.check();
  return fam;
}

inline json to_json(const ReducedProduct& rp) {
  json j = to_json(rp.induced, true);
  json cmap = json::object();
  for (std::size_t c = 0; c < rp.classes.size(); ++c) {
    json members = json::array();
    for (int p : rp.classes[c]) {
      json t = json::array();
      for (std::size_t g = 0; g < rp.points[static_cast<std::size_t>(p)].size(); ++g)
        t.push_back(rp.family.structures[g].universe[static_cast<std::size_t>(rp.points[static_cast<std::size_t>(p)][g])]);
      members.push_back(t);
    }
    cmap[rp.induced.universe[c]] = members;
  }
  j["class_map"] = cmap;
  j["ideal"] = to_json(rp.family.ideal);
  return j;
}

inline json to_json(const DeterminingSequence& ds) {
  json sigmas = json::array(), psis = json::array();
  for (const auto& s : ds.sigmas) sigmas.push_back(print_bformula(s));
  for (const auto& p : ds.psis) psis.push_back(print(p));
  json free = json::array();
  for (int v : ds.free) free.push_back(VarTable::name(v));
  return {{"n", ds.n}, {"m", ds.m()}, {"free", free}, {"sigmas", sigmas}, {"psis", psis}, {"variable_convention", "y[j][i]"}};
}

}  // namespace fv
