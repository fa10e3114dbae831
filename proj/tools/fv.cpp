#include "fv/fv.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace {

void emit(const fv::json& j, const std::string& out) {
  if (out.empty()) {
    std::cout << j.dump(2) << "\n";
    return;
  }
  std::ofstream f(out);
  if (!f) throw fv::FormatError("cannot write " + out);
  f << j.dump(2) << "\n";
}

std::vector<long> parse_primes(const std::string& text) {
  std::vector<long> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(std::stol(tok));
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"reduced-product translation for continuous logic"};
  app.require_subcommand(1);

  std::string formula, sig_path, structure_path, family_path, ideal_path, out, suite = "all";
  int n = 1, depth = 3, families = 200, horizon = 10;
  std::uint64_t seed = 42;
  std::string xi = "2,5,11", eta = "3,7,13";

  auto* tr = app.add_subcommand("translate", "print a determining sequence");
  tr->add_option("--formula", formula)->required();
  tr->add_option("--n", n);
  tr->add_option("--sig", sig_path)->required();
  tr->add_option("--out", out);

  auto* ev = app.add_subcommand("eval", "evaluate a sentence or formula on a structure or reduced product");
  ev->add_option("--formula", formula)->required();
  ev->add_option("--structure", structure_path);
  ev->add_option("--family", family_path);
  ev->add_option("--sig", sig_path);

  auto* rp = app.add_subcommand("rp", "build a reduced product");
  rp->add_option("--family", family_path)->required();
  rp->add_option("--sig", sig_path);
  rp->add_option("--out", out);

  auto* id = app.add_subcommand("ideal", "close an ideal file and print its quotient");
  id->add_option("--ideal", ideal_path)->required();
  id->add_option("--out", out);

  auto* ck = app.add_subcommand("check", "run experiment suites");
  ck->add_option("--suite", suite)->check(CLI::IsMember({"atomic", "fv", "preservation", "quotient", "fubini", "all"}));
  ck->add_option("--seed", seed);
  ck->add_option("--depth", depth);
  ck->add_option("--families", families);
  ck->add_option("--out", out);

  auto* dm = app.add_subcommand("demo", "prime divisibility pattern behind the matrix sentences");
  dm->add_option("--xi", xi);
  dm->add_option("--eta", eta);
  dm->add_option("--horizon", horizon);
  dm->add_option("--out", out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    std::optional<fv::Signature> sig;
    if (!sig_path.empty()) sig = fv::signature_from_json(fv::read_json_file(sig_path));

    if (*tr) {
      fv::FormulaPtr f = fv::normalize_restricted(fv::parse(formula, *sig));
      emit(fv::to_json(fv::translate(f, n)), out);
      return 0;
    }
    if (*ev) {
      if (structure_path.empty() == family_path.empty()) {
        std::cerr << "eval needs exactly one of --structure or --family\n";
        return 2;
      }
      fv::FiniteStructure s;
      if (!structure_path.empty()) {
        s = fv::structure_from_json(fv::read_json_file(structure_path), sig ? &*sig : nullptr);
      } else {
        s = fv::reduced_product(fv::family_from_json(fv::read_json_file(family_path), sig ? &*sig : nullptr)).induced;
      }
      auto report = fv::validate(s);
      if (!report) {
        std::cerr << "invalid structure: " << report.violation->what << "\n";
        return 2;
      }
      fv::FormulaPtr f = fv::parse(formula, s.sig);
      if (!f->free.empty()) {
        std::cerr << "formula has free variables\n";
        return 2;
      }
      std::cout << fv::to_string(fv::eval(s, fv::normalize_restricted(f))) << "\n";
      return 0;
    }
    if (*rp) {
      fv::Family fam = fv::family_from_json(fv::read_json_file(family_path), sig ? &*sig : nullptr);
      emit(fv::to_json(fv::reduced_product(fam)), out);
      return 0;
    }
    if (*id) {
      fv::IdealSpec I = fv::ideal_from_json(fv::read_json_file(ideal_path));
      fv::QuotientBA B = fv::quotient(I);
      fv::json j = fv::to_json(I);
      j["quotient_size"] = B.size();
      j["atoms"] = B.atoms;
      emit(j, out);
      return 0;
    }
    if (*ck) {
      fv::Caps caps = fv::default_caps();
      caps.check_depth(depth);
      std::vector<fv::SuiteReport> reports;
      auto want = [&](const char* s) { return suite == s || suite == "all"; };
      if (want("atomic")) reports.push_back(fv::suite_atomic(seed, 1000, caps));
      if (want("fv")) {
        fv::FvSuiteOptions opt;
        opt.depth = depth;
        opt.families = families;
        reports.push_back(fv::suite_fv(seed, opt, caps).report);
      }
      if (want("preservation")) reports.push_back(fv::suite_preservation(seed, 100, depth, caps));
      if (want("quotient")) reports.push_back(fv::suite_quotient(seed, 5, depth, caps));
      if (want("fubini")) reports.push_back(fv::suite_fubini(seed, 50));
      fv::json all = fv::json::array();
      bool ok = true;
      for (const auto& r : reports) {
        all.push_back(r.to_json());
        std::cerr << r.name << ": " << r.seconds << "s\n";
        ok = ok && r.ok();
      }
      emit(all, out);
      return ok ? 0 : 1;
    }
    if (*dm) {
      fv::DivisibilityReport r = fv::demo_matrix_divisibility(parse_primes(xi), parse_primes(eta), horizon);
      fv::json rows = fv::json::array();
      for (const auto& row : r.rows)
        rows.push_back({{"m", row.m}, {"prime", row.prime}, {"divides_xi", row.divides_xi},
                        {"divides_eta", row.divides_eta}, {"cofinal", row.cofinal}});
      emit({{"ok", r.ok}, {"rows", rows}, {"text", r.text}}, out);
      return r.ok ? 0 : 1;
    }
  } catch (const fv::ParseError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
