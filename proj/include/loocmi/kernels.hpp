#pragma once

// Enumeration kernels. Every exact measure is an expectation over index
// tuples (supersamples or training sequences) drawn from a product law, and
// every Monte-Carlo measure is an average over sample indices. Both reduce
// to "visit a range, then merge accumulators".
//
// reduce_serial walks the whole range in order into one accumulator; it is
// the reference. reduce_parallel cuts the range into a fixed number of
// chunks that depends only on the range size, runs chunks under OpenMP and
// merges the chunk accumulators in chunk order, so its result is identical
// for any thread count.

#include <algorithm>
#include <cstdint>
#include <exception>
#include <span>
#include <vector>

#include <omp.h>

namespace loocmi::kernels {

inline constexpr std::uint64_t kDefaultChunks = 256;

enum class Exec { serial, parallel };

template <class Make, class VisitRange>
auto reduce_serial(std::uint64_t total, Make&& make, VisitRange&& visit) {
  auto acc = make();
  if (total > 0) visit(acc, std::uint64_t{0}, total);
  return acc;
}

template <class Make, class VisitRange>
auto reduce_parallel(std::uint64_t total, Make&& make, VisitRange&& visit,
                     std::uint64_t chunks = kDefaultChunks) {
  using Acc = decltype(make());
  chunks = std::max<std::uint64_t>(1, std::min(chunks, total));
  std::vector<Acc> partial;
  partial.reserve(chunks);
  for (std::uint64_t c = 0; c < chunks; ++c) partial.push_back(make());

  const auto bound = [&](std::uint64_t c) {
    return static_cast<std::uint64_t>(static_cast<unsigned __int128>(total) * c / chunks);
  };
  // exceptions cannot leave an OpenMP region; rethrow the first by chunk
  std::vector<std::exception_ptr> failure(chunks);
  const auto n_chunks = static_cast<std::int64_t>(chunks);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t c = 0; c < n_chunks; ++c) {
    const auto begin = bound(static_cast<std::uint64_t>(c));
    const auto end = bound(static_cast<std::uint64_t>(c) + 1);
    try {
      if (begin < end) visit(partial[static_cast<std::size_t>(c)], begin, end);
    } catch (...) {
      failure[static_cast<std::size_t>(c)] = std::current_exception();
    }
  }
  for (const auto& f : failure) {
    if (f) std::rethrow_exception(f);
  }

  Acc result = std::move(partial.front());
  for (std::uint64_t c = 1; c < chunks; ++c) result.merge(partial[c]);
  return result;
}

template <class Make, class VisitRange>
auto reduce(Exec exec, std::uint64_t total, Make&& make, VisitRange&& visit) {
  if (exec == Exec::serial) return reduce_serial(total, make, visit);
  return reduce_parallel(total, make, visit);
}

/// Product law over tuples of support indices: either i.i.d. draws, or
/// i.i.d. draws conditioned on pairwise-distinct indices.
///
/// With `multisets` set, only nondecreasing tuples are visited and each
/// carries the total weight of its rearrangements; for functions that do
/// not depend on order this gives the same expectation from far fewer
/// visits.
class TupleLaw {
 public:
  TupleLaw(std::span<const double> masses, std::size_t length, bool distinct,
           bool multisets = false);

  std::size_t support_size() const noexcept { return masses_.size(); }
  std::size_t length() const noexcept { return length_; }
  bool distinct() const noexcept { return distinct_; }
  bool multisets() const noexcept { return multisets_; }

  /// Number of index tuples scanned (support_size^length), as a double so
  /// the budget check itself cannot overflow.
  double term_count() const noexcept;

  /// Probability that an i.i.d. tuple is pairwise distinct.
  double distinct_probability() const noexcept { return normalizer_; }

  /// Visits tuples with linear index in [begin, end) in lexicographic order
  /// (last coordinate fastest), skipping zero-weight tuples.
  /// visit(std::span<const std::uint32_t> indices, double weight).
  template <class Visit>
  void for_each(std::uint64_t begin, std::uint64_t end, Visit&& visit) const;

  std::uint64_t total() const;

 private:
  std::vector<double> masses_;
  std::size_t length_;
  bool distinct_;
  bool multisets_;
  double normalizer_ = 1.0;
  std::vector<double> factorial_;
};

template <class Visit>
void TupleLaw::for_each(std::uint64_t begin, std::uint64_t end, Visit&& visit) const {
  if (begin >= end || length_ == 0) return;
  const auto k = static_cast<std::uint64_t>(masses_.size());
  std::vector<std::uint32_t> idx(length_);
  std::uint64_t rest = begin;
  for (std::size_t pos = length_; pos-- > 0;) {
    idx[pos] = static_cast<std::uint32_t>(rest % k);
    rest /= k;
  }
  std::vector<std::uint32_t> seen(masses_.size(), 0);
  for (std::uint64_t linear = begin; linear < end; ++linear) {
    bool keep = true;
    double multiplicity = 1.0;
    if (multisets_) {
      // nondecreasing (strictly increasing under distinct); count runs
      std::size_t run = 1;
      for (std::size_t pos = 1; pos < length_ && keep; ++pos) {
        if (idx[pos] < idx[pos - 1] || (distinct_ && idx[pos] == idx[pos - 1])) {
          keep = false;
        } else if (idx[pos] == idx[pos - 1]) {
          ++run;
        } else {
          multiplicity *= factorial_[run];
          run = 1;
        }
      }
      multiplicity = factorial_[length_] / (multiplicity * factorial_[run]);
    } else if (distinct_) {
      for (std::size_t pos = 0; pos < length_ && keep; ++pos) {
        if (seen[idx[pos]]++ != 0) keep = false;
      }
      for (std::size_t pos = 0; pos < length_; ++pos) seen[idx[pos]] = 0;
    }
    if (keep) {
      double weight = 1.0;
      for (const auto i : idx) weight *= masses_[i];
      if (weight > 0.0) {
        visit(std::span<const std::uint32_t>(idx), multiplicity * weight / normalizer_);
      }
    }
    for (std::size_t pos = length_; pos-- > 0;) {
      if (++idx[pos] < k) break;
      idx[pos] = 0;
    }
  }
}

/// Counter-based generator: sample i of a run with seed s always sees the
/// same stream, whichever thread draws it.
class SplitMix64 {
 public:
  SplitMix64(std::uint64_t seed, std::uint64_t stream) noexcept
      : state_(seed ^ (stream * 0xD1B54A32D192ED03ULL + 0x8CB92BA72F3D8DD7ULL)) {}

  std::uint64_t next() noexcept {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t state_;
};

}  // namespace loocmi::kernels
