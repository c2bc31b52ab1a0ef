#include "loocmi/kernels.hpp"

#include <cmath>
#include <limits>

#include "loocmi/errors.hpp"

namespace loocmi::kernels {

TupleLaw::TupleLaw(std::span<const double> masses, std::size_t length, bool distinct,
                   bool multisets)
    : masses_(masses.begin(), masses.end()),
      length_(length),
      distinct_(distinct),
      multisets_(multisets),
      factorial_(length + 1, 1.0) {
  if (masses_.empty()) {
    throw InputError("tuple law over an empty support");
  }
  for (std::size_t j = 2; j <= length_; ++j) factorial_[j] = factorial_[j - 1] * static_cast<double>(j);
  if (distinct_) {
    // length! * e_length(masses), elementary symmetric polynomial by DP
    std::vector<double> e(length_ + 1, 0.0);
    e[0] = 1.0;
    for (const double m : masses_) {
      for (std::size_t j = length_; j >= 1; --j) e[j] += e[j - 1] * m;
    }
    normalizer_ = factorial_[length_] * e[length_];
    if (!(normalizer_ > 0.0)) {
      throw InputError("distinct supersample law needs at least " + std::to_string(length_) +
                       " support points with positive mass");
    }
  }
}

double TupleLaw::term_count() const noexcept {
  return std::pow(static_cast<double>(masses_.size()), static_cast<double>(length_));
}

std::uint64_t TupleLaw::total() const {
  if (term_count() > 9.0e18) {
    throw BudgetError("tuple enumeration", term_count(), 9.0e18);
  }
  std::uint64_t t = 1;
  for (std::size_t i = 0; i < length_; ++i) t *= masses_.size();
  return t;
}

}  // namespace loocmi::kernels
