#include "bbcopas/study.hpp"

#include "bbcopas/errors.hpp"

#include <algorithm>
#include <string>

namespace bbcopas {

int Study2x2::min_cell() const noexcept {
  return std::min({n11, n10, n01, n00});
}

void validate(const Study2x2& study) {
  const auto name = study.label.empty() ? std::string("study") : "study '" + study.label + "'";
  if (study.n11 < 0 || study.n10 < 0 || study.n01 < 0 || study.n00 < 0)
    throw InvalidArgument(name + ": cell counts must be non-negative");
  if (study.n1() < 1)
    throw InvalidArgument(name + ": no diseased subjects (TP + FN = 0)");
  if (study.n0() < 1)
    throw InvalidArgument(name + ": no non-diseased subjects (FP + TN = 0)");
}

void validate(const std::vector<Study2x2>& studies) {
  for (const auto& s : studies) validate(s);
}

} // namespace bbcopas
