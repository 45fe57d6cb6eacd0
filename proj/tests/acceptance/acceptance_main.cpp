// Full acceptance suite: one PASS/FAIL line per criterion with wall time.
// Exits nonzero when any criterion fails.
#include "app/acceptance.hpp"

#include <cstring>
#include <iostream>

int main(int argc, char** argv) {
  conicfit::acceptance::SuiteOptions options;
  std::vector<int> ids = conicfit::acceptance::criterion_ids(false);
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--fast") == 0) {
      options.fast = true;
      ids = conicfit::acceptance::criterion_ids(true);
    } else {
      ids = {std::atoi(argv[i])};  // single criterion, for debugging
    }
  }
  std::vector<conicfit::acceptance::CriterionResult> results;
  int failed = 0;
  for (int id : ids) {
    results.push_back(conicfit::acceptance::run_criterion(id, options));
    std::cout << conicfit::acceptance::format_report({results.back()}, true) << std::flush;
    failed += !results.back().pass;
  }
  std::cout << "acceptance: " << results.size() - failed << "/" << results.size() << " passed\n";
  return failed == 0 ? 0 : 1;
}
