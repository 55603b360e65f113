#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace induct {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string details;
  double seconds = 0.0;
};

// Runs acceptance criterion `id` (1..10).
CriterionResult run_criterion(int id, std::uint64_t seed = 42);

// Runs all criteria in order.
std::vector<CriterionResult> run_all_criteria(std::uint64_t seed = 42);

std::string format_result_line(const CriterionResult& r);

}  // namespace induct
