// Dedicated acceptance binary: one pass/fail line per criterion clause.

#include <cstring>
#include <iostream>

#include "randfront/acceptance.hpp"

int main(int argc, char** argv) {
  randfront::AcceptanceOptions opt;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--filter") == 0 && i + 1 < argc) opt.filter = argv[++i];
    if (std::strcmp(argv[i], "--jobs") == 0 && i + 1 < argc)
      opt.jobs = static_cast<unsigned>(std::atoi(argv[++i]));
  }
  const auto res = randfront::run_acceptance(opt, std::cout);
  return res.all_pass() ? 0 : 1;
}
