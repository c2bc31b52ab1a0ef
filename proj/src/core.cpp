#include "loocmi/core.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <set>

#include "loocmi/errors.hpp"
#include "loocmi/kernels.hpp"
#include "loocmi/numeric.hpp"

namespace loocmi {

// ---------------------------------------------------------------------------
// FiniteDomain

FiniteDomain::FiniteDomain(std::vector<double> coordinates) : coords_(std::move(coordinates)) {
  if (coords_.empty()) {
    throw InputError("domain must contain at least one point");
  }
  for (std::size_t i = 1; i < coords_.size(); ++i) {
    if (!(coords_[i - 1] < coords_[i])) {
      throw InputError("domain coordinates must be strictly increasing");
    }
  }
}

FiniteDomain FiniteDomain::integer_range(std::size_t m) {
  std::vector<double> coords(m);
  for (std::size_t i = 0; i < m; ++i) coords[i] = static_cast<double>(i + 1);
  return FiniteDomain(std::move(coords));
}

std::optional<InputId> FiniteDomain::find(double coordinate) const {
  const auto it = std::lower_bound(coords_.begin(), coords_.end(), coordinate);
  if (it == coords_.end() || *it != coordinate) return std::nullopt;
  return static_cast<InputId>(it - coords_.begin());
}

std::string_view to_string(ThresholdConvention c) noexcept {
  return c == ThresholdConvention::upper ? "upper" : "lower";
}

// ---------------------------------------------------------------------------
// HypothesisClass

HypothesisClass::HypothesisClass(DomainPtr domain, std::vector<std::vector<Label>> table,
                                 std::vector<std::string> names)
    : domain_(std::move(domain)), width_(domain_ ? domain_->size() : 0) {
  if (!domain_) throw InputError("hypothesis class needs a domain");
  if (table.empty()) throw InputError("hypothesis class must be nonempty");
  if (!names.empty() && names.size() != table.size()) {
    throw InputError("hypothesis names do not match table rows");
  }
  std::set<std::vector<Label>> seen;
  table_.reserve(table.size() * width_);
  for (std::size_t h = 0; h < table.size(); ++h) {
    const auto& row = table[h];
    if (row.size() != width_) {
      throw InputError("row " + std::to_string(h) + " has " + std::to_string(row.size()) +
                       " entries, domain has " + std::to_string(width_));
    }
    for (const Label y : row) {
      if (!std::isfinite(y)) throw InputError("non-finite label in hypothesis table");
      if (y != 0.0 && y != 1.0) binary_ = false;
    }
    if (!seen.insert(row).second) {
      throw InputError("duplicate hypothesis row " + std::to_string(h));
    }
    table_.insert(table_.end(), row.begin(), row.end());
  }
  if (names.empty()) {
    names.reserve(table.size());
    for (std::size_t h = 0; h < table.size(); ++h) names.push_back("h" + std::to_string(h));
  }
  names_ = std::move(names);
}

HypothesisClass HypothesisClass::thresholds(DomainPtr domain, ThresholdConvention convention) {
  const std::size_t m = domain->size();
  std::vector<std::vector<Label>> table(m + 1, std::vector<Label>(m));
  std::vector<std::string> names;
  for (std::size_t k = 0; k <= m; ++k) {
    for (std::size_t j = 0; j < m; ++j) {
      const bool above = j + 1 > k;
      table[k][j] = convention == ThresholdConvention::upper ? (above ? 1 : 0) : (above ? 0 : 1);
    }
    names.push_back("t" + std::to_string(k));
  }
  return {std::move(domain), std::move(table), std::move(names)};
}

HypothesisClass HypothesisClass::all_labelings(DomainPtr domain) {
  const std::size_t m = domain->size();
  if (m > 20) throw InputError("all_labelings limited to 20 points");
  std::vector<std::vector<Label>> table;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << m); ++mask) {
    std::vector<Label> row(m);
    for (std::size_t j = 0; j < m; ++j) row[j] = static_cast<Label>((mask >> j) & 1U);
    table.push_back(std::move(row));
  }
  return {std::move(domain), std::move(table)};
}

// ---------------------------------------------------------------------------
// FiniteDistribution

FiniteDistribution::FiniteDistribution(std::vector<LabeledExample> support,
                                       std::vector<double> mass)
    : support_(std::move(support)), mass_(std::move(mass)) {
  if (support_.empty()) throw InputError("distribution support is empty");
  if (support_.size() != mass_.size()) {
    throw InputError("distribution support and mass lengths differ");
  }
  CompensatedSum total;
  for (const double m : mass_) {
    if (!(m >= 0.0) || !std::isfinite(m)) throw InputError("distribution mass must be >= 0");
    total.add(m);
  }
  if (std::fabs(total.value() - 1.0) > 1e-12) {
    throw InputError("distribution masses sum to " + format_sig12(total.value()) + ", not 1");
  }
  std::set<LabeledExample> seen;
  for (const auto& z : support_) {
    if (!seen.insert(z).second) throw InputError("duplicate support entry in distribution");
  }
}

FiniteDistribution FiniteDistribution::uniform(std::vector<LabeledExample> support) {
  const auto k = support.size();
  return {std::move(support), std::vector<double>(k, k == 0 ? 0.0 : 1.0 / static_cast<double>(k))};
}

FiniteDistribution FiniteDistribution::mixture(const FiniteDistribution& a,
                                               const FiniteDistribution& b, double weight) {
  if (!(weight >= 0.0 && weight <= 1.0)) throw InputError("mixture weight outside [0, 1]");
  std::map<LabeledExample, CompensatedSum> mass;
  for (std::size_t i = 0; i < a.size(); ++i) mass[a.example(i)].add(weight * a.mass(i));
  for (std::size_t i = 0; i < b.size(); ++i) mass[b.example(i)].add((1.0 - weight) * b.mass(i));
  std::vector<LabeledExample> support;
  std::vector<double> masses;
  for (const auto& [z, m] : mass) {
    support.push_back(z);
    masses.push_back(m.value());
  }
  return {std::move(support), std::move(masses)};
}

FiniteDistribution FiniteDistribution::positive_part() const {
  std::vector<LabeledExample> support;
  std::vector<double> masses;
  CompensatedSum total;
  for (std::size_t i = 0; i < size(); ++i) {
    if (mass_[i] > 0.0) {
      support.push_back(support_[i]);
      masses.push_back(mass_[i]);
      total.add(mass_[i]);
    }
  }
  return {std::move(support), std::move(masses)};
}

bool FiniteDistribution::is_function_labeled() const {
  std::map<InputId, Label> labels;
  for (const auto& z : support_) {
    const auto [it, inserted] = labels.emplace(z.input, z.label);
    if (!inserted && it->second != z.label) return false;
  }
  return true;
}

std::optional<Label> FiniteDistribution::label_of(InputId x) const {
  std::optional<Label> found;
  for (const auto& z : support_) {
    if (z.input != x) continue;
    if (found && *found != z.label) return std::nullopt;
    found = z.label;
  }
  return found;
}

void FiniteDistribution::check_within(const FiniteDomain& domain) const {
  for (const auto& z : support_) {
    if (!domain.contains(z.input)) {
      throw InputError("support input " + std::to_string(z.input) + " outside domain of size " +
                       std::to_string(domain.size()));
    }
  }
}

// ---------------------------------------------------------------------------
// Loss and label laws

double LossFunction::operator()(Label predicted, Label truth) const noexcept {
  switch (kind_) {
    case LossKind::zero_one:
      return predicted == truth ? 0.0 : 1.0;
    case LossKind::sign:
      return predicted * truth < 0.0 ? 1.0 : 0.0;
    case LossKind::absolute:
      return std::min(1.0, std::fabs(predicted - truth));
  }
  return 1.0;
}

LossFunction LossFunction::parse(std::string_view name) {
  if (name == "zero_one") return LossFunction(LossKind::zero_one);
  if (name == "sign") return LossFunction(LossKind::sign);
  if (name == "absolute") return LossFunction(LossKind::absolute);
  throw InputError("unknown loss '" + std::string(name) + "'");
}

std::string_view LossFunction::name() const noexcept {
  switch (kind_) {
    case LossKind::zero_one:
      return "zero_one";
    case LossKind::sign:
      return "sign";
    case LossKind::absolute:
      return "absolute";
  }
  return "?";
}

void LabelLaw::add(Label label, double prob) {
  for (std::size_t i = 0; i < size_; ++i) {
    if (labels_[i] == label) {
      probs_[i] += prob;
      return;
    }
  }
  if (size_ == kCapacity) throw CapabilityError("label law exceeds inline capacity");
  labels_[size_] = label;
  probs_[size_] = prob;
  ++size_;
}

double LabelLaw::prob_of(Label label) const noexcept {
  for (std::size_t i = 0; i < size_; ++i) {
    if (labels_[i] == label) return probs_[i];
  }
  return 0.0;
}

double LabelLaw::expected_loss(const LossFunction& loss, Label truth) const noexcept {
  double total = 0.0;
  for (std::size_t i = 0; i < size_; ++i) total += probs_[i] * loss(labels_[i], truth);
  return total;
}

std::string_view to_string(LearnerKind kind) noexcept {
  switch (kind) {
    case LearnerKind::deterministic_proper:
      return "deterministic-proper";
    case LearnerKind::deterministic_predictor:
      return "deterministic-predictor";
    case LearnerKind::randomized_transductive:
      return "randomized-transductive";
  }
  return "?";
}

void Learner::predict_all(std::span<const LabeledExample> train, std::span<const InputId> xs,
                          std::span<LabelLaw> out) const {
  for (std::size_t i = 0; i < xs.size(); ++i) out[i] = predict(train, xs[i]);
}

std::optional<HypothesisKey> Learner::hypothesis(std::span<const LabeledExample>) const {
  return std::nullopt;
}

std::optional<double> Learner::loo_certificate(std::span<const LabeledExample>) const {
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Operations

namespace {

void check_sample_within(const FiniteDomain& domain, std::span<const LabeledExample> s) {
  for (const auto& z : s) {
    if (!domain.contains(z.input)) {
      throw InputError("sample input " + std::to_string(z.input) + " outside domain");
    }
  }
}

}  // namespace

double empirical_risk(const HypothesisClass& cls, std::size_t h, std::span<const LabeledExample> s,
                      const LossFunction& loss) {
  if (h >= cls.size()) throw InputError("hypothesis index out of range");
  if (s.empty()) throw InputError("empirical risk of an empty sample");
  check_sample_within(cls.domain(), s);
  CompensatedSum total;
  for (const auto& z : s) total.add(loss(cls.predict(h, z.input), z.label));
  return total.value() / static_cast<double>(s.size());
}

double population_risk(const HypothesisClass& cls, std::size_t h, const FiniteDistribution& dist,
                       const LossFunction& loss) {
  if (h >= cls.size()) throw InputError("hypothesis index out of range");
  dist.check_within(cls.domain());
  CompensatedSum total;
  for (std::size_t i = 0; i < dist.size(); ++i) {
    const auto& z = dist.example(i);
    total.add(dist.mass(i) * loss(cls.predict(h, z.input), z.label));
  }
  return total.value();
}

bool is_realizable(const HypothesisClass& cls, const FiniteDistribution& dist) {
  dist.check_within(cls.domain());
  for (std::size_t h = 0; h < cls.size(); ++h) {
    bool fits = true;
    for (std::size_t i = 0; i < dist.size() && fits; ++i) {
      const auto& z = dist.example(i);
      fits = dist.mass(i) == 0.0 || cls.predict(h, z.input) == z.label;
    }
    if (fits) return true;
  }
  return false;
}

bool is_realizable(const HypothesisClass& cls, std::span<const LabeledExample> s) {
  check_sample_within(cls.domain(), s);
  for (std::size_t h = 0; h < cls.size(); ++h) {
    if (std::all_of(s.begin(), s.end(),
                    [&](const LabeledExample& z) { return cls.predict(h, z.input) == z.label; })) {
      return true;
    }
  }
  return false;
}

std::size_t vc_dimension(const HypothesisClass& cls, std::size_t cap) {
  const std::size_t m = cls.domain().size();
  if (m > cap || m > 63) {
    throw BudgetError("vc_dimension subset enumeration over " + std::to_string(m) + " points",
                      std::ldexp(1.0, static_cast<int>(m)), std::ldexp(1.0, static_cast<int>(cap)));
  }
  if (!cls.is_binary()) throw InputError("vc_dimension needs binary labels");

  std::vector<std::uint64_t> rows(cls.size(), 0);
  for (std::size_t h = 0; h < cls.size(); ++h) {
    for (std::size_t j = 0; j < m; ++j) {
      if (cls.predict(h, static_cast<InputId>(j)) == 1.0) rows[h] |= std::uint64_t{1} << j;
    }
  }
  const auto shattered = [&](std::uint64_t subset) {
    const auto k = static_cast<std::size_t>(std::popcount(subset));
    if ((std::uint64_t{1} << k) > rows.size()) return false;
    std::set<std::uint64_t> patterns;
    for (const auto r : rows) patterns.insert(r & subset);
    return patterns.size() == (std::uint64_t{1} << k);
  };

  // shattered sets are closed under taking subsets, so stop at the first
  // size with no shattered set
  std::size_t best = 0;
  const std::uint64_t all = m == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << m);
  for (std::size_t k = 1; k <= m; ++k) {
    if ((std::uint64_t{1} << k) > rows.size()) break;
    bool found = false;
    for (std::uint64_t subset = 0; subset < all && !found; ++subset) {
      if (static_cast<std::size_t>(std::popcount(subset)) == k && shattered(subset)) found = true;
    }
    if (!found) break;
    best = k;
  }
  return best;
}

std::vector<std::vector<Label>> project_dichotomies(const HypothesisClass& cls,
                                                    std::span<const InputId> points) {
  for (const auto x : points) {
    if (!cls.domain().contains(x)) throw InputError("projection point outside domain");
  }
  std::vector<std::vector<Label>> out;
  std::set<std::vector<Label>> seen;
  for (std::size_t h = 0; h < cls.size(); ++h) {
    std::vector<Label> v(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) v[i] = cls.predict(h, points[i]);
    if (seen.insert(v).second) out.push_back(std::move(v));
  }
  return out;
}

Sample leave_one_out(std::span<const LabeledExample> supersample, std::size_t u) {
  if (u >= supersample.size()) throw InputError("held-out index out of range");
  Sample s;
  s.reserve(supersample.size() - 1);
  for (std::size_t i = 0; i < supersample.size(); ++i) {
    if (i != u) s.push_back(supersample[i]);
  }
  return s;
}

bool check_interpolating(const Learner& learner, const FiniteDistribution& dist, std::size_t n,
                         const LossFunction& loss, double budget) {
  if (n == 0) throw InputError("training size must be positive");
  const auto positive = dist.positive_part();
  const kernels::TupleLaw law(positive.masses(), n, false);
  if (law.term_count() > budget) {
    throw BudgetError("check_interpolating", law.term_count(), budget);
  }

  struct Acc {
    bool ok = true;
    void merge(const Acc& other) { ok = ok && other.ok; }
  };
  const auto result = kernels::reduce_parallel(
      law.total(), [] { return Acc{}; },
      [&](Acc& acc, std::uint64_t begin, std::uint64_t end) {
        Sample s(n);
        std::vector<InputId> xs(n);
        std::vector<LabelLaw> laws(n);
        law.for_each(begin, end, [&](std::span<const std::uint32_t> idx, double) {
          if (!acc.ok) return;
          for (std::size_t i = 0; i < n; ++i) {
            s[i] = positive.example(idx[i]);
            xs[i] = s[i].input;
          }
          learner.predict_all(s, xs, laws);
          for (std::size_t i = 0; i < n; ++i) {
            if (laws[i].expected_loss(loss, s[i].label) != 0.0) {
              acc.ok = false;
              return;
            }
          }
        });
      });
  return result.ok;
}

}  // namespace loocmi
