#include <algorithm>
#include <cstdlib>
#include <iostream>

#include "kahlercap/acceptance.hpp"

int main() {
  int threads = 1;
  if (const char* s = std::getenv("KAHLERCAP_THREADS")) threads = std::max(1, std::atoi(s));
  const auto results = kahlercap::run_acceptance(std::cout, {}, threads);
  int failed = 0;
  for (const auto& r : results) failed += r.passed ? 0 : 1;
  std::cout << results.size() - static_cast<std::size_t>(failed) << "/" << results.size() << " criteria passed\n";
  return failed == 0 ? 0 : 1;
}
