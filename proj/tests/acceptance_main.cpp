#include "covshift/experiments.hpp"

#include <cstdlib>
#include <iostream>
#include <string>

int main(int argc, char** argv) {
  covshift::AcceptanceOptions opts;
  for (int k = 1; k < argc; ++k) opts.only.push_back(std::stoi(argv[k]));
  const auto results = covshift::run_acceptance(opts, std::cout);
  int failed = 0;
  for (const auto& r : results) failed += r.passed ? 0 : 1;
  std::cout << (results.size() - failed) << "/" << results.size() << " criteria passed" << std::endl;
  return failed == 0 ? EXIT_SUCCESS : EXIT_FAILURE;
}
