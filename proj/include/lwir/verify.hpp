#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace lwir {

struct CheckResult {
    std::string name;
    bool pass = false;
    std::string detail;
};

// Suites: "ops" (operator invariants, including the LR/HR MAC equality),
// "cost" (closed-form exactness and ratio claims), "equiv" (sub-pixel vs
// transposed convolution), or "all". Deterministic given the seed.
std::vector<CheckResult> run_checks(const std::string& suite, uint64_t seed);

bool all_passed(const std::vector<CheckResult>& results);

// [{"check": name, "status": "pass"|"fail", "detail": str}]
std::string checks_json_text(const std::vector<CheckResult>& results);

}  // namespace lwir
