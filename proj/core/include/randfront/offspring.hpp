#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace randfront {

// Offspring law (p_k)_{k>=1} with p_0 = 0 and mean exactly 2.
struct OffspringLaw {
  std::vector<double> p;  // p[k] is the probability of k children; p[0] = 0

  double mean() const;
  double second_moment() const;  // m2 = sum k^2 p_k
  void validate() const;         // throws std::invalid_argument

  static OffspringLaw binary();                  // p_2 = 1
  static OffspringLaw one_three();               // p_1 = p_3 = 1/2
  static OffspringLaw gm(int n);                 // p_1 = 1-1/n, p_{n+1} = 1/n
  static OffspringLaw from_string(const std::string& text);
  std::string to_string() const;
};

}  // namespace randfront
