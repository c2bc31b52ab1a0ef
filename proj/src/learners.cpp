#include "loocmi/learners.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "loocmi/errors.hpp"
#include "loocmi/numeric.hpp"

namespace loocmi {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_domain(const DomainPtr& domain) {
  if (!domain) throw InputError("learner needs a domain");
}

void check_input(const FiniteDomain& domain, InputId x) {
  if (!domain.contains(x)) throw InputError("input " + std::to_string(x) + " outside the domain");
}

}  // namespace

// ---------------------------------------------------------------------------

Fig1ThresholdLearner::Fig1ThresholdLearner(DomainPtr domain) : domain_(std::move(domain)) {
  require_domain(domain_);
}

double Fig1ThresholdLearner::x_star(std::span<const LabeledExample> train) const {
  double best = -kInf;
  for (const auto& z : train) {
    check_input(*domain_, z.input);
    if (z.label == 1.0) best = std::max(best, domain_->coordinate(z.input));
  }
  return best;
}

LabelLaw Fig1ThresholdLearner::predict(std::span<const LabeledExample> train, InputId x) const {
  check_input(*domain_, x);
  return LabelLaw::point(domain_->coordinate(x) <= x_star(train) ? 1.0 : 0.0);
}

void Fig1ThresholdLearner::predict_all(std::span<const LabeledExample> train,
                                       std::span<const InputId> xs, std::span<LabelLaw> out) const {
  const double t = x_star(train);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    check_input(*domain_, xs[i]);
    out[i] = LabelLaw::point(domain_->coordinate(xs[i]) <= t ? 1.0 : 0.0);
  }
}

std::optional<HypothesisKey> Fig1ThresholdLearner::hypothesis(
    std::span<const LabeledExample> train) const {
  return HypothesisKey{x_star(train)};
}

// ---------------------------------------------------------------------------

ErmLearner::ErmLearner(HypothesisClass cls, LossFunction loss)
    : cls_(std::move(cls)), loss_(loss) {}

std::size_t ErmLearner::select(std::span<const LabeledExample> train) const {
  std::size_t best = 0;
  double best_loss = kInf;
  for (std::size_t h = 0; h < cls_.size(); ++h) {
    double total = 0.0;
    for (const auto& z : train) total += loss_(cls_.predict(h, z.input), z.label);
    if (total < best_loss) {
      best_loss = total;
      best = h;
      if (total == 0.0) break;
    }
  }
  return best;
}

LabelLaw ErmLearner::predict(std::span<const LabeledExample> train, InputId x) const {
  check_input(cls_.domain(), x);
  return LabelLaw::point(cls_.predict(select(train), x));
}

void ErmLearner::predict_all(std::span<const LabeledExample> train, std::span<const InputId> xs,
                             std::span<LabelLaw> out) const {
  const auto h = select(train);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    check_input(cls_.domain(), xs[i]);
    out[i] = LabelLaw::point(cls_.predict(h, xs[i]));
  }
}

std::optional<HypothesisKey> ErmLearner::hypothesis(std::span<const LabeledExample> train) const {
  return HypothesisKey{static_cast<double>(select(train))};
}

// ---------------------------------------------------------------------------

MaxMarginThreshold::MaxMarginThreshold(DomainPtr domain, ThresholdConvention convention)
    : domain_(std::move(domain)), convention_(convention) {
  require_domain(domain_);
}

MarginFit MaxMarginThreshold::fit(std::span<const LabeledExample> s) const {
  // Upper convention: ones sit on the right. Lower: on the left. Work with
  // "low side" / "high side" classes and translate at the end.
  const Label low_label = convention_ == ThresholdConvention::upper ? 0.0 : 1.0;
  double low_max = -kInf;   // largest coordinate on the low side
  double high_min = kInf;   // smallest coordinate on the high side
  for (const auto& z : s) {
    check_input(*domain_, z.input);
    if (z.label != 0.0 && z.label != 1.0) throw InputError("max-margin needs binary labels");
    const double c = domain_->coordinate(z.input);
    if (z.label == low_label) {
      low_max = std::max(low_max, c);
    } else {
      high_min = std::min(high_min, c);
    }
  }
  if (s.empty()) throw InputError("max-margin fit on an empty sample");
  if (!(low_max < high_min)) throw InfeasibleError("sample is not separable by a threshold");

  MarginFit fit;
  if (std::isinf(low_max)) {
    fit.theta = -kInf;
    fit.support_vectors = 1;
  } else if (std::isinf(high_min)) {
    fit.theta = kInf;
    fit.support_vectors = 1;
  } else {
    fit.theta = 0.5 * (low_max + high_min);
    fit.support_vectors = 2;
  }
  return fit;
}

Label MaxMarginThreshold::classify(double theta, InputId x) const {
  const double c = domain_->coordinate(x);
  if (convention_ == ThresholdConvention::upper) return c > theta ? 1.0 : 0.0;
  return c <= theta ? 1.0 : 0.0;
}

LabelLaw MaxMarginThreshold::predict(std::span<const LabeledExample> train, InputId x) const {
  check_input(*domain_, x);
  return LabelLaw::point(classify(fit(train).theta, x));
}

void MaxMarginThreshold::predict_all(std::span<const LabeledExample> train,
                                     std::span<const InputId> xs, std::span<LabelLaw> out) const {
  const double theta = fit(train).theta;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    check_input(*domain_, xs[i]);
    out[i] = LabelLaw::point(classify(theta, xs[i]));
  }
}

std::optional<HypothesisKey> MaxMarginThreshold::hypothesis(
    std::span<const LabeledExample> train) const {
  return HypothesisKey{fit(train).theta};
}

std::optional<double> MaxMarginThreshold::loo_certificate(
    std::span<const LabeledExample> supersample) const {
  return static_cast<double>(fit(supersample).support_vectors);
}

// ---------------------------------------------------------------------------

EncoderLearner::EncoderLearner(DomainPtr domain, std::vector<LabeledExample> support,
                               std::size_t n, EncoderParams params)
    : domain_(std::move(domain)), support_(std::move(support)), n_(n), params_(params) {
  require_domain(domain_);
  if (n_ == 0) throw InputError("encoder needs n >= 1");
  if (support_.empty()) throw InputError("encoder needs a nonempty support");
  if (!(params_.resolution > 0.0)) throw InputError("encoder resolution must be positive");
  if (!(params_.margin_low < params_.margin_high)) throw InputError("encoder margin is empty");
  std::sort(support_.begin(), support_.end());
  if (std::adjacent_find(support_.begin(), support_.end()) != support_.end()) {
    throw InputError("encoder support has duplicates");
  }
  const bool upper = params_.convention == ThresholdConvention::upper;
  for (const auto& z : support_) {
    check_input(*domain_, z.input);
    const double c = domain_->coordinate(z.input);
    const bool high_side = (z.label == 1.0) == upper;
    if (z.label != 0.0 && z.label != 1.0) throw InputError("encoder needs binary labels");
    if (high_side ? c < params_.margin_high : c > params_.margin_low) {
      throw InputError("support point at " + format_sig12(c) + " lies inside or across the margin");
    }
  }
  const auto g = static_cast<std::uint64_t>(support_.size());
  capacity_ = binomial(g + n_ - 1, n_);
  const double width = params_.margin_high - params_.margin_low;
  if (required_width() >= width) {
    throw InfeasibleError("encoder margin too narrow: payload needs width > " +
                          format_sig12(required_width()) + ", margin is " + format_sig12(width));
  }
}

std::uint32_t EncoderLearner::support_index(const LabeledExample& z) const {
  const auto it = std::lower_bound(support_.begin(), support_.end(), z);
  if (it == support_.end() || *it != z) throw InputError("training example outside encoder support");
  return static_cast<std::uint32_t>(it - support_.begin());
}

std::uint64_t EncoderLearner::encode(std::span<const LabeledExample> train) const {
  if (train.size() != n_) throw InputError("encoder was built for a different n");
  std::vector<std::uint32_t> idx(train.size());
  for (std::size_t i = 0; i < train.size(); ++i) idx[i] = support_index(train[i]);
  std::sort(idx.begin(), idx.end());
  // multiset c_1 <= ... <= c_n  ->  set c_i + i (0-based) of a (G+n-1)-set;
  // colex rank in the combinatorial number system
  std::uint64_t rank = 0;
  for (std::size_t i = 0; i < idx.size(); ++i) rank += binomial(idx[i] + i, i + 1);
  return rank;
}

std::vector<std::uint32_t> EncoderLearner::decode(std::uint64_t payload) const {
  if (payload >= capacity_) throw InputError("payload out of range");
  std::vector<std::uint32_t> idx(n_);
  std::uint64_t rest = payload;
  std::uint64_t top = support_.size() + n_ - 1;
  for (std::size_t k = n_; k-- > 0;) {
    std::uint64_t c = k;
    while (c + 1 < top && binomial(c + 1, k + 1) <= rest) ++c;
    rest -= binomial(c, k + 1);
    idx[k] = static_cast<std::uint32_t>(c - k);
    top = c;
  }
  return idx;
}

double EncoderLearner::theta(std::span<const LabeledExample> train) const {
  return params_.margin_low + static_cast<double>(encode(train) + 1) * params_.resolution;
}

LabelLaw EncoderLearner::predict(std::span<const LabeledExample> train, InputId x) const {
  LabelLaw out;
  predict_all(train, std::span<const InputId>(&x, 1), std::span<LabelLaw>(&out, 1));
  return out;
}

void EncoderLearner::predict_all(std::span<const LabeledExample> train,
                                 std::span<const InputId> xs, std::span<LabelLaw> out) const {
  const double t = theta(train);
  const bool upper = params_.convention == ThresholdConvention::upper;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    check_input(*domain_, xs[i]);
    const double c = domain_->coordinate(xs[i]);
    out[i] = LabelLaw::point((upper ? c > t : c <= t) ? 1.0 : 0.0);
  }
}

std::optional<HypothesisKey> EncoderLearner::hypothesis(std::span<const LabeledExample> train) const {
  return HypothesisKey{theta(train)};
}

std::optional<std::size_t> EncoderLearner::decode_heldout(
    double theta_value, std::span<const LabeledExample> supersample) const {
  if (supersample.size() != n_ + 1) throw InputError("supersample has wrong length");
  const double steps = std::round((theta_value - params_.margin_low) / params_.resolution);
  if (steps < 1.0 || steps > static_cast<double>(capacity_)) return std::nullopt;
  const auto target = decode(static_cast<std::uint64_t>(steps) - 1);
  std::optional<std::size_t> found;
  std::vector<std::uint32_t> idx;
  for (std::size_t u = 0; u < supersample.size(); ++u) {
    idx.clear();
    for (std::size_t i = 0; i < supersample.size(); ++i) {
      if (i != u) idx.push_back(support_index(supersample[i]));
    }
    std::sort(idx.begin(), idx.end());
    if (idx == target) {
      if (found) return std::nullopt;  // ambiguous: repeated entries
      found = u;
    }
  }
  return found;
}

// ---------------------------------------------------------------------------

CopyInputLearner::CopyInputLearner(DomainPtr domain) : domain_(std::move(domain)) {
  require_domain(domain_);
}

LabelLaw CopyInputLearner::predict(std::span<const LabeledExample> train, InputId x) const {
  check_input(*domain_, x);
  std::size_t hits = 0;
  for (const auto& z : train) hits += z.input == x;
  if (hits == 0) return LabelLaw::point(domain_->coordinate(x));
  LabelLaw law;
  for (const auto& z : train) {
    if (z.input == x) law.add(z.label, 1.0 / static_cast<double>(hits));
  }
  return law;
}

// ---------------------------------------------------------------------------

AlwaysErrLearner::AlwaysErrLearner(DomainPtr domain, const FiniteDistribution& labeling)
    : domain_(std::move(domain)) {
  require_domain(domain_);
  if (domain_->size() > 52) throw InputError("always_err keys need a domain of at most 52 points");
  if (!labeling.is_function_labeled()) {
    throw InputError("always_err needs a function-labeled distribution");
  }
  labeling.check_within(*domain_);
  truth_.resize(domain_->size());
  for (InputId x = 0; x < domain_->size(); ++x) truth_[x] = labeling.label_of(x);
}

LabelLaw AlwaysErrLearner::predict(std::span<const LabeledExample> train, InputId x) const {
  check_input(*domain_, x);
  for (const auto& z : train) {
    if (z.input == x) return LabelLaw::point(z.label);
  }
  if (!truth_[x]) throw InputError("always_err queried off the labeling support");
  return LabelLaw::point(1.0 - *truth_[x]);
}

std::optional<HypothesisKey> AlwaysErrLearner::hypothesis(
    std::span<const LabeledExample> train) const {
  // the output is determined by which inputs were memorized
  std::uint64_t mask = 0;
  for (const auto& z : train) mask |= std::uint64_t{1} << z.input;
  return HypothesisKey{static_cast<double>(mask)};
}

}  // namespace loocmi
