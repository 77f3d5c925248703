#pragma once

#include <string>
#include <vector>

namespace bbcopas {

// One diagnostic study's 2x2 table. Cell naming follows (test result, disease):
// n11 = TP, n10 = FP, n01 = FN, n00 = TN.
struct Study2x2 {
  int n11 = 0;
  int n10 = 0;
  int n01 = 0;
  int n00 = 0;
  std::string label;

  int n1() const noexcept { return n11 + n01; } // diseased
  int n0() const noexcept { return n10 + n00; } // non-diseased
  bool has_zero_cell() const noexcept {
    return n11 == 0 || n10 == 0 || n01 == 0 || n00 == 0;
  }
  int min_cell() const noexcept;
};

// Throws InvalidArgument unless all counts are >= 0 and n1, n0 >= 1.
void validate(const Study2x2& study);
void validate(const std::vector<Study2x2>& studies);

} // namespace bbcopas
