#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace loocmi {

using Label = double;
using InputId = std::uint32_t;

/// Ordered finite input space. Points are identified by their index; each
/// carries a coordinate, and coordinates are strictly increasing so index
/// order and coordinate order agree.
class FiniteDomain {
 public:
  explicit FiniteDomain(std::vector<double> coordinates);

  /// Points 1, 2, ..., m.
  static FiniteDomain integer_range(std::size_t m);

  std::size_t size() const noexcept { return coords_.size(); }
  bool contains(InputId x) const noexcept { return x < coords_.size(); }
  double coordinate(InputId x) const { return coords_.at(x); }
  const std::vector<double>& coordinates() const noexcept { return coords_; }

  /// Index of the point with exactly this coordinate.
  std::optional<InputId> find(double coordinate) const;

 private:
  std::vector<double> coords_;
};

using DomainPtr = std::shared_ptr<const FiniteDomain>;

struct LabeledExample {
  InputId input = 0;
  Label label = 0;

  friend auto operator<=>(const LabeledExample&, const LabeledExample&) = default;
};

using Sample = std::vector<LabeledExample>;

enum class ThresholdConvention {
  upper,  // h_k(x) = 1[x > k]
  lower,  // h_k(x) = 1[x <= k]
};

std::string_view to_string(ThresholdConvention c) noexcept;

/// Explicit prediction table: one row per hypothesis, one column per domain
/// point. Rows are pairwise distinct.
class HypothesisClass {
 public:
  HypothesisClass(DomainPtr domain, std::vector<std::vector<Label>> table,
                  std::vector<std::string> names = {});

  /// The m+1 thresholds k = 0..m over an m-point domain, where k counts the
  /// points on the low side.
  static HypothesisClass thresholds(DomainPtr domain, ThresholdConvention convention);

  /// Every binary labeling of the domain (domain size at most 20).
  static HypothesisClass all_labelings(DomainPtr domain);

  std::size_t size() const noexcept { return names_.size(); }
  const FiniteDomain& domain() const noexcept { return *domain_; }
  const DomainPtr& domain_ptr() const noexcept { return domain_; }

  Label predict(std::size_t h, InputId x) const { return table_[h * width_ + x]; }
  std::span<const Label> row(std::size_t h) const {
    return {table_.data() + h * width_, width_};
  }
  const std::string& name(std::size_t h) const { return names_.at(h); }
  bool is_binary() const noexcept { return binary_; }

 private:
  DomainPtr domain_;
  std::size_t width_ = 0;
  std::vector<Label> table_;
  std::vector<std::string> names_;
  bool binary_ = true;
};

/// Probability mass function over labeled examples.
class FiniteDistribution {
 public:
  FiniteDistribution(std::vector<LabeledExample> support, std::vector<double> mass);

  static FiniteDistribution uniform(std::vector<LabeledExample> support);

  /// weight * a + (1 - weight) * b over the union of supports.
  static FiniteDistribution mixture(const FiniteDistribution& a, const FiniteDistribution& b,
                                    double weight);

  std::size_t size() const noexcept { return support_.size(); }
  const LabeledExample& example(std::size_t i) const { return support_.at(i); }
  double mass(std::size_t i) const { return mass_.at(i); }
  std::span<const LabeledExample> support() const noexcept { return support_; }
  std::span<const double> masses() const noexcept { return mass_; }

  /// Same law with zero-mass entries removed.
  FiniteDistribution positive_part() const;

  /// True when no input appears with two different labels.
  bool is_function_labeled() const;

  /// Label of x on the support, if x is in the support and unambiguous.
  std::optional<Label> label_of(InputId x) const;

  /// Throws InputError if a support input lies outside the domain.
  void check_within(const FiniteDomain& domain) const;

 private:
  std::vector<LabeledExample> support_;
  std::vector<double> mass_;
};

enum class LossKind {
  zero_one,  // 1[prediction != label]
  sign,      // 1[prediction * label < 0]
  absolute,  // min(1, |prediction - label|)
};

class LossFunction {
 public:
  constexpr LossFunction() = default;
  constexpr explicit LossFunction(LossKind kind) : kind_(kind) {}

  double operator()(Label predicted, Label truth) const noexcept;
  LossKind kind() const noexcept { return kind_; }

  /// Values restricted to {0, 1}.
  bool binary_valued() const noexcept { return kind_ != LossKind::absolute; }

  static LossFunction parse(std::string_view name);
  std::string_view name() const noexcept;

 private:
  LossKind kind_ = LossKind::zero_one;
};

/// Exact law of a single predicted label. Learners in this library never
/// randomize over more than a handful of labels, so storage is inline.
class LabelLaw {
 public:
  static constexpr std::size_t kCapacity = 4;

  static LabelLaw point(Label label) {
    LabelLaw law;
    law.add(label, 1.0);
    return law;
  }

  /// Adds mass to a label, merging with an existing entry.
  void add(Label label, double prob);

  std::size_t size() const noexcept { return size_; }
  Label label(std::size_t i) const noexcept { return labels_[i]; }
  double prob(std::size_t i) const noexcept { return probs_[i]; }
  double prob_of(Label label) const noexcept;
  bool is_point_mass() const noexcept { return size_ == 1; }

  /// Expected loss against a true label.
  double expected_loss(const LossFunction& loss, Label truth) const noexcept;

 private:
  std::array<Label, kCapacity> labels_{};
  std::array<double, kCapacity> probs_{};
  std::uint8_t size_ = 0;
};

/// Identity of a proper learner's output representation. Two outputs with
/// the same predictions but different representations have different keys.
struct HypothesisKey {
  double value = 0;
  friend auto operator<=>(const HypothesisKey&, const HypothesisKey&) = default;
};

enum class LearnerKind {
  deterministic_proper,     // outputs a hypothesis with a key
  deterministic_predictor,  // deterministic, but exposes only predictions
  randomized_transductive,  // per-input label law given the training sequence
};

std::string_view to_string(LearnerKind kind) noexcept;

/// A learning rule that exposes the exact law of its predictions.
class Learner {
 public:
  virtual ~Learner() = default;

  virtual std::string_view name() const = 0;
  virtual LearnerKind kind() const = 0;

  /// Law of the label predicted at `x` after training on `train`.
  virtual LabelLaw predict(std::span<const LabeledExample> train, InputId x) const = 0;

  /// Predictions at several inputs for one training sequence. The joint law
  /// is the product of the returned marginals.
  virtual void predict_all(std::span<const LabeledExample> train, std::span<const InputId> xs,
                           std::span<LabelLaw> out) const;

  /// Output representation; only deterministic-proper learners have one.
  virtual std::optional<HypothesisKey> hypothesis(std::span<const LabeledExample> train) const;

  /// A supersample-measurable theta with R_loo(z) <= theta / (n + 1), for
  /// learners that certify one (support-vector count, VC dimension).
  virtual std::optional<double> loo_certificate(std::span<const LabeledExample> supersample) const;

  /// Predictions depend on the training sequence only through its multiset.
  /// Enumerations then visit multisets instead of ordered tuples.
  virtual bool symmetric() const { return false; }

  bool is_proper() const { return kind() == LearnerKind::deterministic_proper; }
};

/// n^-1 sum_i loss(h, s_i).
double empirical_risk(const HypothesisClass& cls, std::size_t h, std::span<const LabeledExample> s,
                      const LossFunction& loss);

/// sum_z D(z) loss(h, z).
double population_risk(const HypothesisClass& cls, std::size_t h, const FiniteDistribution& dist,
                       const LossFunction& loss);

/// Some row of the table has zero population risk under zero-one loss.
bool is_realizable(const HypothesisClass& cls, const FiniteDistribution& dist);

/// Some row labels every example of s correctly.
bool is_realizable(const HypothesisClass& cls, std::span<const LabeledExample> s);

inline constexpr std::size_t kDefaultVcCap = 20;

/// Largest shattered subset size, by subset enumeration. Binary classes only.
std::size_t vc_dimension(const HypothesisClass& cls, std::size_t cap = kDefaultVcCap);

/// Distinct restrictions of the rows to `points`, in first-appearance order.
std::vector<std::vector<Label>> project_dichotomies(const HypothesisClass& cls,
                                                    std::span<const InputId> points);

/// Training sequence: the supersample with index u removed, order preserved.
Sample leave_one_out(std::span<const LabeledExample> supersample, std::size_t u);

inline constexpr double kDefaultBudget = 1e8;

/// True iff every positive-probability training sequence of length n is
/// fitted with zero loss, with probability one over the learner's randomness.
bool check_interpolating(const Learner& learner, const FiniteDistribution& dist, std::size_t n,
                         const LossFunction& loss, double budget = kDefaultBudget);

}  // namespace loocmi
