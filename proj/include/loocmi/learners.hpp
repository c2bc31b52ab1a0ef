#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "loocmi/core.hpp"

namespace loocmi {

/// x* = largest coordinate carrying label 1, predicts 1 iff x <= x*.
/// With no 1-labeled point, x* = -inf and the output is constant 0.
class Fig1ThresholdLearner final : public Learner {
 public:
  explicit Fig1ThresholdLearner(DomainPtr domain);

  std::string_view name() const override { return "fig1"; }
  LearnerKind kind() const override { return LearnerKind::deterministic_proper; }
  bool symmetric() const override { return true; }
  LabelLaw predict(std::span<const LabeledExample> train, InputId x) const override;
  void predict_all(std::span<const LabeledExample> train, std::span<const InputId> xs,
                   std::span<LabelLaw> out) const override;
  std::optional<HypothesisKey> hypothesis(std::span<const LabeledExample> train) const override;

  double x_star(std::span<const LabeledExample> train) const;

 private:
  DomainPtr domain_;
};

/// Empirical risk minimizer over a finite table; ties go to the lowest row.
class ErmLearner final : public Learner {
 public:
  ErmLearner(HypothesisClass cls, LossFunction loss = {});

  std::string_view name() const override { return "erm"; }
  LearnerKind kind() const override { return LearnerKind::deterministic_proper; }
  bool symmetric() const override { return true; }
  LabelLaw predict(std::span<const LabeledExample> train, InputId x) const override;
  void predict_all(std::span<const LabeledExample> train, std::span<const InputId> xs,
                   std::span<LabelLaw> out) const override;
  std::optional<HypothesisKey> hypothesis(std::span<const LabeledExample> train) const override;

  std::size_t select(std::span<const LabeledExample> train) const;
  const HypothesisClass& hypothesis_class() const noexcept { return cls_; }

 private:
  HypothesisClass cls_;
  LossFunction loss_;
};

struct MarginFit {
  double theta = 0;                   // may be +-inf for one-sided samples
  std::size_t support_vectors = 0;    // distinct support-vector coordinates, <= 2
};

/// 1-D hard-margin classifier: threshold at the midpoint of the gap between
/// the two classes. Upper convention predicts 1 iff x > theta, lower
/// predicts 1 iff x <= theta.
class MaxMarginThreshold final : public Learner {
 public:
  MaxMarginThreshold(DomainPtr domain, ThresholdConvention convention);

  std::string_view name() const override { return "max_margin"; }
  LearnerKind kind() const override { return LearnerKind::deterministic_proper; }
  bool symmetric() const override { return true; }
  LabelLaw predict(std::span<const LabeledExample> train, InputId x) const override;
  void predict_all(std::span<const LabeledExample> train, std::span<const InputId> xs,
                   std::span<LabelLaw> out) const override;
  std::optional<HypothesisKey> hypothesis(std::span<const LabeledExample> train) const override;

  /// N_SV of the fit on the whole supersample.
  std::optional<double> loo_certificate(std::span<const LabeledExample> supersample) const override;

  /// Throws InfeasibleError if the sample is not separable in this convention.
  MarginFit fit(std::span<const LabeledExample> s) const;

  Label classify(double theta, InputId x) const;

 private:
  DomainPtr domain_;
  ThresholdConvention convention_;
};

struct EncoderParams {
  double margin_low = 0;    // open interval (margin_low, margin_high)
  double margin_high = 0;   // separates the two label classes
  double resolution = 0;
  ThresholdConvention convention = ThresholdConvention::upper;
};

/// Interpolating threshold whose exact position inside the margin encodes
/// the whole training multiset. Payload = rank of the sorted multiset of
/// support indices among all C(G+n-1, n) multisets; theta = low +
/// (payload + 1) * resolution.
class EncoderLearner final : public Learner {
 public:
  /// `support` lists the possible training examples. Throws InfeasibleError
  /// when the margin is too narrow for the payload.
  EncoderLearner(DomainPtr domain, std::vector<LabeledExample> support, std::size_t n,
                 EncoderParams params);

  std::string_view name() const override { return "encoder"; }
  LearnerKind kind() const override { return LearnerKind::deterministic_proper; }
  bool symmetric() const override { return true; }
  LabelLaw predict(std::span<const LabeledExample> train, InputId x) const override;
  void predict_all(std::span<const LabeledExample> train, std::span<const InputId> xs,
                   std::span<LabelLaw> out) const override;
  std::optional<HypothesisKey> hypothesis(std::span<const LabeledExample> train) const override;

  std::uint64_t capacity() const noexcept { return capacity_; }
  double required_width() const noexcept { return static_cast<double>(capacity_) * params_.resolution; }

  std::uint64_t encode(std::span<const LabeledExample> train) const;
  double theta(std::span<const LabeledExample> train) const;

  /// Sorted support indices of the training multiset behind a payload.
  std::vector<std::uint32_t> decode(std::uint64_t payload) const;

  /// Held-out position recovered from theta and the supersample; nullopt
  /// when no single deletion matches.
  std::optional<std::size_t> decode_heldout(double theta,
                                            std::span<const LabeledExample> supersample) const;

 private:
  std::uint32_t support_index(const LabeledExample& z) const;

  DomainPtr domain_;
  std::vector<LabeledExample> support_;
  std::size_t n_;
  EncoderParams params_;
  std::uint64_t capacity_ = 0;
};

/// Predicts the stored label on training inputs and the input's own
/// coordinate elsewhere. Duplicated training inputs with different labels
/// predict each stored label with its multiplicity.
class CopyInputLearner final : public Learner {
 public:
  explicit CopyInputLearner(DomainPtr domain);

  std::string_view name() const override { return "copy_input"; }
  LearnerKind kind() const override { return LearnerKind::deterministic_predictor; }
  bool symmetric() const override { return true; }
  LabelLaw predict(std::span<const LabeledExample> train, InputId x) const override;

 private:
  DomainPtr domain_;
};

/// Memorizes the training sample and predicts the flipped true label
/// everywhere else. Needs a function-labeled distribution as label oracle.
class AlwaysErrLearner final : public Learner {
 public:
  AlwaysErrLearner(DomainPtr domain, const FiniteDistribution& labeling);

  std::string_view name() const override { return "always_err"; }
  LearnerKind kind() const override { return LearnerKind::deterministic_proper; }
  bool symmetric() const override { return true; }
  LabelLaw predict(std::span<const LabeledExample> train, InputId x) const override;
  std::optional<HypothesisKey> hypothesis(std::span<const LabeledExample> train) const override;

 private:
  DomainPtr domain_;
  std::vector<std::optional<Label>> truth_;
};

class ConstantLearner final : public Learner {
 public:
  explicit ConstantLearner(Label label) : label_(label) {}

  std::string_view name() const override { return "constant"; }
  LearnerKind kind() const override { return LearnerKind::deterministic_proper; }
  bool symmetric() const override { return true; }
  LabelLaw predict(std::span<const LabeledExample>, InputId) const override {
    return LabelLaw::point(label_);
  }
  std::optional<HypothesisKey> hypothesis(std::span<const LabeledExample>) const override {
    return HypothesisKey{label_};
  }

 private:
  Label label_;
};

}  // namespace loocmi
