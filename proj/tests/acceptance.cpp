#include "fv/fv.hpp"

#include <cstdio>
#include <iostream>
#include <string>

using namespace fv;

namespace {

constexpr std::uint64_t kSeed = 42;

int failures = 0;

void line(int id, const std::string& name, bool ok, const std::string& detail) {
  std::printf("criterion %2d %-24s %s  %s\n", id, name.c_str(), ok ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string summary(const SuiteReport& r) {
  std::string s = std::to_string(r.cases) + " cases, " + std::to_string(r.failures.size()) + " failures, " +
                  std::to_string(r.findings.size()) + " findings, " + std::to_string(static_cast<int>(r.seconds)) + "s";
  if (!r.failures.empty()) s += "; first: " + r.failures.front().substr(0, 240);
  return s;
}

void details(const SuiteReport& r, std::size_t limit = 5) {
  for (std::size_t i = 0; i < std::min(limit, r.failures.size()); ++i) std::cerr << "  failure: " << r.failures[i] << "\n";
  for (std::size_t i = 0; i < std::min(limit, r.findings.size()); ++i) std::cerr << "  finding: " << r.findings[i] << "\n";
}

}  // namespace

int main() {
  const Caps caps = default_caps();

  SuiteReport atomic = suite_atomic(kSeed, 1000, caps);
  line(1, "atomic limsup", atomic.ok() && atomic.seconds < 10, summary(atomic));
  details(atomic);

  FvSuiteResult fv = suite_fv(kSeed, FvSuiteOptions{}, caps);
  line(2, "fv soundness", fv.report.ok() && fv.report.seconds < 600, summary(fv.report));
  details(fv.report);

  line(3, "bound width", fv.containment_failures == 0,
       "containment failures " + std::to_string(fv.containment_failures) + ", width findings " +
           std::to_string(fv.width_findings) + ", tilde-chain findings " + std::to_string(fv.tilde_chain_findings) +
           ", top-level strict findings " + std::to_string(fv.top_strict_findings));

  SuiteReport mono = suite_monotone(fv, kSeed, 3);
  line(4, "monotonicity", mono.ok(), summary(mono) + ", " + std::to_string(fv.sigmas.size()) + " distinct sigmas");
  details(mono);

  SuiteReport pad = suite_pad_shift(kSeed, 2, {0, 1, 2});
  line(5, "pad-shift", pad.ok(), summary(pad));
  details(pad);

  SuiteReport pres = suite_preservation(kSeed, 100, 3, caps);
  line(6, "preservation", pres.ok() && pres.seconds < 300, summary(pres));
  details(pres);

  SuiteReport quot = suite_quotient(kSeed, 5, 3, caps);
  line(7, "quotient equivalence", quot.ok(), summary(quot));
  details(quot);

  SuiteReport fub = suite_fubini(kSeed, 50);
  line(8, "fubini", fub.ok(), summary(fub));
  details(fub);

  SuiteReport prin = suite_principal(kSeed, 20);
  line(9, "principal ultraproduct", prin.ok(), summary(prin));
  details(prin);

  DivisibilityReport div = demo_matrix_divisibility({2, 5, 11}, {3, 7, 13}, 10);
  line(10, "matrix divisibility", div.ok, std::to_string(div.rows.size()) + " primes checked");

  SuiteReport mut = suite_mutation(kSeed);
  line(11, "mutation sensitivity", mut.ok(), summary(mut));
  details(mut);

  std::printf("%d of 11 criteria failed\n", failures);
  return failures ? 1 : 0;
}
