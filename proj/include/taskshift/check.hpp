#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace taskshift {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;  // worst observed value against its tolerance
};

struct CheckOptions {
  std::uint64_t base_seed = 7;
  std::size_t configurations = 20;  // n spread over [20, 200], ensembles cycled
};

/// Built-in identity and oracle suite: interpolation, the two-term and
/// three-term risk decompositions, the survival/contamination identity,
/// label reconstruction, the pseudo-inverse oracle and the trace oracle.
std::vector<CheckResult> run_checks(const CheckOptions& options = {});

// One "PASS name: detail" / "FAIL name: detail" line per result.
void print_checks(std::ostream& out, const std::vector<CheckResult>& results);

}  // namespace taskshift
