#include <cstdlib>
#include <iostream>

#include "mce/acceptance.hpp"

int main(int argc, char** argv) {
  const int only = argc > 1 ? std::atoi(argv[1]) : 0;
  bool all = true;
  for (int id = 1; id <= 10; ++id) {
    if (only != 0 && only != id) continue;
    for (const auto& r : mce::run_acceptance(id)) {
      std::cout << mce::format_result(r) << std::endl;
      all = all && r.passed;
    }
  }
  return all ? 0 : 1;
}
