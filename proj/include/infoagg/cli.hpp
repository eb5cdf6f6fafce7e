#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace infoagg::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kUsage = 2,
  kFormat = 3,
  kResource = 4,
  kVerificationFailed = 5,
};

// args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

enum class CheckStatus { kPass, kFail, kSkipped };

struct CheckResult {
  std::string name;
  CheckStatus status = CheckStatus::kPass;
  std::string detail;  // observed vs expected
};

struct VerifyOptions {
  std::string suite = "all";  // all|thm1|thm2|thm4|thm5|props|examples
  std::uint64_t budget = 10'000'000;
  std::uint64_t seed = 0;
};

std::vector<CheckResult> run_verify(const VerifyOptions& opts);
void print_checks(std::ostream& out, const std::vector<CheckResult>& checks);

}  // namespace infoagg::cli
