#include "loocmi/infotheory.hpp"

#include <algorithm>
#include <cmath>

#include "loocmi/bounds.hpp"
#include "loocmi/errors.hpp"

namespace loocmi {

// ---------------------------------------------------------------------------
// Elementary quantities

void Pmf::validate() const {
  if (probabilities.empty()) throw InputError("empty pmf");
  if (!outcomes.empty() && outcomes.size() != probabilities.size()) {
    throw InputError("pmf outcome names do not match probabilities");
  }
  CompensatedSum total;
  for (const double p : probabilities) {
    if (!(p >= 0.0) || !std::isfinite(p)) throw InputError("pmf entries must be >= 0");
    total.add(p);
  }
  if (std::fabs(total.value() - 1.0) > 1e-12) {
    throw InputError("pmf sums to " + format_sig12(total.value()));
  }
}

double entropy_of(std::span<const double> probabilities) {
  CompensatedSum h;
  for (const double p : probabilities) {
    if (p > 0.0) h.add(-p * std::log(p));
  }
  return std::max(0.0, h.value());
}

double entropy(const Pmf& p) {
  p.validate();
  return entropy_of(p.probabilities);
}

double binary_entropy(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw InputError("binary entropy argument outside [0, 1]");
  if (p == 0.0 || p == 1.0) return 0.0;
  return -p * std::log(p) - (1.0 - p) * std::log1p(-p);
}

double kl_divergence(const Pmf& q, const Pmf& p) {
  q.validate();
  p.validate();
  if (q.probabilities.size() != p.probabilities.size() || q.outcomes != p.outcomes) {
    throw InputError("kl_divergence outcome sets are not aligned");
  }
  CompensatedSum total;
  for (std::size_t i = 0; i < q.probabilities.size(); ++i) {
    const double qi = q.probabilities[i];
    const double pi = p.probabilities[i];
    if (qi == 0.0) continue;
    if (pi == 0.0) return kInfinity;
    total.add(qi * std::log(qi / pi));
  }
  return std::max(0.0, total.value());
}

double mutual_information_uniform(std::span<const double> conditional, std::size_t rows,
                                  std::size_t cols) {
  if (conditional.size() != rows * cols) throw InputError("conditional table has wrong size");
  const double w = 1.0 / static_cast<double>(cols);
  CompensatedSum total;
  for (std::size_t r = 0; r < rows; ++r) {
    const auto row = conditional.subspan(r * cols, cols);
    CompensatedSum marginal;
    for (const double p : row) marginal.add(p);
    const double mean = marginal.value() * w;
    if (mean <= 0.0) continue;
    for (const double p : row) {
      if (p > 0.0) total.add(w * p * std::log(p / mean));
    }
  }
  return std::max(0.0, total.value());
}

std::string_view to_string(SupersampleLaw law) noexcept {
  return law == SupersampleLaw::iid ? "iid" : "distinct";
}

// ---------------------------------------------------------------------------
// Profile laws

void ProfileLaw::add(std::span<const double> profile, double prob) {
  if (profile.size() != width_) throw InputError("profile width mismatch");
  for (std::size_t i = 0; i < probs_.size(); ++i) {
    if (std::equal(profile.begin(), profile.end(), values_.begin() + i * width_)) {
      probs_[i] += prob;
      return;
    }
  }
  values_.insert(values_.end(), profile.begin(), profile.end());
  probs_.push_back(prob);
}

double ProfileLaw::prob_of(std::span<const double> profile) const {
  for (std::size_t i = 0; i < probs_.size(); ++i) {
    if (std::equal(profile.begin(), profile.end(), values_.begin() + i * width_)) return probs_[i];
  }
  return 0.0;
}

namespace {

constexpr std::size_t kMaxJointOutcomes = 4096;

/// Rows are outcome profiles, columns are held-out indices.
class OutcomeTable {
 public:
  void reset(std::size_t width, std::size_t cols) {
    width_ = width;
    cols_ = cols;
    keys_.clear();
    mass_.clear();
    rows_ = 0;
  }

  void add(std::span<const double> key, std::size_t col, double p) {
    std::size_t r = 0;
    for (; r < rows_; ++r) {
      if (std::equal(key.begin(), key.end(), keys_.begin() + r * width_)) break;
    }
    if (r == rows_) {
      keys_.insert(keys_.end(), key.begin(), key.end());
      mass_.resize(mass_.size() + cols_, 0.0);
      ++rows_;
    }
    mass_[r * cols_ + col] += p;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::span<const double> key(std::size_t r) const { return {keys_.data() + r * width_, width_}; }
  double at(std::size_t r, std::size_t c) const { return mass_[r * cols_ + c]; }
  std::span<const double> masses() const noexcept { return mass_; }

  double mutual_information() const { return mutual_information_uniform(mass_, rows_, cols_); }

  double marginal_entropy() const {
    CompensatedSum h;
    const double w = 1.0 / static_cast<double>(cols_);
    for (std::size_t r = 0; r < rows_; ++r) {
      CompensatedSum m;
      for (std::size_t c = 0; c < cols_; ++c) m.add(mass_[r * cols_ + c]);
      const double p = m.value() * w;
      if (p > 0.0) h.add(-p * std::log(p));
    }
    return std::max(0.0, h.value());
  }

 private:
  std::size_t width_ = 0;
  std::size_t cols_ = 0;
  std::size_t rows_ = 0;
  std::vector<double> keys_;
  std::vector<double> mass_;
};

struct Analysis {
  double mi_L = 0;
  double entropy_L = 0;
  double mi_Y = 0;
  std::optional<double> mi_hyp;
  double rloo = 0;
  double train_loss = 0;
  bool interpolating = true;
  std::optional<double> theta;
};

/// Exact per-supersample computation with reusable scratch space.
class SupersampleAnalyzer {
 public:
  SupersampleAnalyzer(const Learner& learner, const LossFunction& loss, std::size_t width)
      : learner_(learner),
        loss_(loss),
        width_(width),
        train_(width - 1),
        inputs_(width),
        laws_(width),
        prediction_(width),
        losses_(width),
        kappa_(width) {}

  const Analysis& analyze(std::span<const LabeledExample> z) {
    if (z.size() != width_) throw InputError("supersample has wrong length");
    const std::size_t n = width_ - 1;
    for (std::size_t i = 0; i <= n; ++i) inputs_[i] = z[i].input;
    loss_table_.reset(width_, width_);
    prediction_table_.reset(width_, width_);
    hyp_table_.reset(1, width_);
    const bool proper = learner_.is_proper();

    result_ = Analysis{};
    CompensatedSum rloo;
    CompensatedSum train_total;
    for (std::size_t u = 0; u <= n; ++u) {
      for (std::size_t i = 0, j = 0; i <= n; ++i) {
        if (i != u) train_[j++] = z[i];
      }
      learner_.predict_all(train_, inputs_, laws_);
      if (proper) {
        const auto key = learner_.hypothesis(train_);
        if (!key) throw CapabilityError("proper learner returned no hypothesis");
        const double k = key->value;
        hyp_table_.add(std::span<const double>(&k, 1), u, 1.0);
      }
      expand(z, u);
      rloo.add(kappa_[u]);
      train_total.add(train_mean_);
    }

    const double cols = static_cast<double>(width_);
    result_.rloo = rloo.value() / cols;
    result_.train_loss = train_total.value() / cols;
    result_.mi_L = loss_table_.mutual_information();
    result_.entropy_L = loss_table_.marginal_entropy();
    result_.mi_Y = prediction_table_.mutual_information();
    if (proper) result_.mi_hyp = hyp_table_.mutual_information();
    result_.theta = learner_.loo_certificate(z);
    return result_;
  }

  const OutcomeTable& loss_table() const noexcept { return loss_table_; }
  std::span<const double> kappa() const noexcept { return kappa_; }

 private:
  // Product expansion of the per-coordinate prediction laws for held-out u.
  void expand(std::span<const LabeledExample> z, std::size_t u) {
    const std::size_t n = width_ - 1;
    random_.clear();
    std::size_t combos = 1;
    for (std::size_t i = 0; i <= n; ++i) {
      if (!laws_[i].is_point_mass()) {
        random_.push_back(i);
        combos *= laws_[i].size();
        if (combos > kMaxJointOutcomes) {
          throw CapabilityError("prediction profile law exceeds " +
                                std::to_string(kMaxJointOutcomes) + " outcomes");
        }
      }
      prediction_[i] = laws_[i].label(0);
    }
    digits_.assign(random_.size(), 0);

    kappa_[u] = 0.0;
    train_mean_ = 0.0;
    for (std::size_t c = 0; c < combos; ++c) {
      double p = 1.0;
      for (std::size_t r = 0; r < random_.size(); ++r) {
        const auto& law = laws_[random_[r]];
        prediction_[random_[r]] = law.label(digits_[r]);
        p *= law.prob(digits_[r]);
      }
      double train_loss = 0.0;
      for (std::size_t i = 0; i <= n; ++i) {
        losses_[i] = loss_(prediction_[i], z[i].label);
        if (i != u) train_loss += losses_[i];
      }
      if (p > 0.0) {
        loss_table_.add(losses_, u, p);
        prediction_table_.add(prediction_, u, p);
        kappa_[u] += p * losses_[u];
        train_mean_ += p * train_loss / static_cast<double>(n);
        if (train_loss > 0.0) result_.interpolating = false;
      }
      for (std::size_t r = 0; r < random_.size(); ++r) {
        if (++digits_[r] < laws_[random_[r]].size()) break;
        digits_[r] = 0;
      }
    }
  }

  const Learner& learner_;
  LossFunction loss_;
  std::size_t width_;
  Sample train_;
  std::vector<InputId> inputs_;
  std::vector<LabelLaw> laws_;
  std::vector<double> prediction_;
  std::vector<double> losses_;
  std::vector<double> kappa_;
  std::vector<std::size_t> random_;
  std::vector<std::size_t> digits_;
  double train_mean_ = 0.0;
  OutcomeTable loss_table_;
  OutcomeTable prediction_table_;
  OutcomeTable hyp_table_;
  Analysis result_;
};

void check_setting(const MeasureSetting& s) {
  if (s.n == 0) throw InputError("training size n must be positive");
  if (!(s.budget > 0.0)) throw InputError("budget must be positive");
}

kernels::TupleLaw tuple_law(const FiniteDistribution& positive, std::size_t length,
                            SupersampleLaw law, bool multisets = false) {
  return kernels::TupleLaw(positive.masses(), length, law == SupersampleLaw::distinct, multisets);
}

struct SpanLess {
  using is_transparent = void;
  bool operator()(std::span<const double> a, std::span<const double> b) const {
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
  }
  bool operator()(const std::vector<double>& a, const std::vector<double>& b) const {
    return (*this)(std::span<const double>(a), std::span<const double>(b));
  }
  bool operator()(const std::vector<double>& a, std::span<const double> b) const {
    return (*this)(std::span<const double>(a), b);
  }
  bool operator()(std::span<const double> a, const std::vector<double>& b) const {
    return (*this)(a, std::span<const double>(b));
  }
};

using JointLaw = std::map<std::vector<double>, std::vector<CompensatedSum>, SpanLess>;

double joint_mutual_information(const JointLaw& joint, std::size_t cols) {
  std::vector<CompensatedSum> col_sum(cols);
  std::vector<double> row_mass;
  row_mass.reserve(joint.size());
  for (const auto& [key, row] : joint) {
    CompensatedSum r;
    for (std::size_t u = 0; u < cols; ++u) {
      r.add(row[u].value());
      col_sum[u].add(row[u].value());
    }
    row_mass.push_back(r.value());
  }
  CompensatedSum total;
  std::size_t i = 0;
  for (const auto& [key, row] : joint) {
    const double pl = row_mass[i++];
    for (std::size_t u = 0; u < cols; ++u) {
      const double p = row[u].value();
      const double pu = col_sum[u].value();
      if (p > 0.0) total.add(p * std::log(p / (pl * pu)));
    }
  }
  return std::max(0.0, total.value());
}

// For symmetric learners the joint law of (L, U) is invariant under
// permuting coordinates of L together with U, so it is enough to accumulate
// mass per orbit: H = -sum_O M_O ln(M_O / |O|).
using OrbitMass = std::map<std::vector<double>, CompensatedSum, SpanLess>;

double log_factorial(std::size_t k) { return std::lgamma(static_cast<double>(k) + 1.0); }

// ln of the number of distinct arrangements of a sorted vector
double log_arrangements(std::span<const double> sorted) {
  double out = log_factorial(sorted.size());
  std::size_t run = 1;
  for (std::size_t i = 1; i <= sorted.size(); ++i) {
    if (i < sorted.size() && sorted[i] == sorted[i - 1]) {
      ++run;
    } else {
      out -= log_factorial(run);
      run = 1;
    }
  }
  return out;
}

double orbit_entropy(const OrbitMass& orbits, bool with_index) {
  CompensatedSum h;
  for (const auto& [key, mass] : orbits) {
    const double m = mass.value();
    if (m <= 0.0) continue;
    // key = (l_u, sorted rest) for (L, U) orbits, sorted l for L orbits
    const double log_size =
        with_index ? std::log(static_cast<double>(key.size())) +
                         log_arrangements(std::span<const double>(key).subspan(1))
                   : log_arrangements(key);
    h.add(-m * (std::log(m) - log_size));
  }
  return h.value();
}

struct EnumerationAcc {
  EnumerationAcc(const MeasureSetting& s, bool joint, double float_slack)
      : analyzer(s.learner, s.loss, s.n + 1),
        z(s.n + 1),
        want_joint(joint),
        n(s.n),
        slack(float_slack) {}

  SupersampleAnalyzer analyzer;
  Sample z;
  bool want_joint;
  std::size_t n;
  double slack;

  CompensatedSum weight, loo, mi_y, mi_hyp, entropy_l, heldout, train, theta;
  bool has_hyp = false;
  bool has_theta = true;
  bool any = false;
  std::uint64_t supersamples = 0;
  bool interpolating = true;
  double max_rloo = 0.0;
  double max_mi = 0.0;
  std::uint64_t eb_checked = 0, eb_viol = 0;
  double eb_slack = kInfinity;
  std::uint64_t cert_checked = 0, cert_premise = 0, cert_viol = 0;
  double cert_slack = kInfinity;
  JointLaw joint;
  OrbitMass orbit_l, orbit_lu;
  std::vector<double> key;

  void add_orbits(const OutcomeTable& table, double w) {
    const std::size_t width = n + 1;
    const double scale = w / static_cast<double>(width);
    key.resize(width);
    for (std::size_t r = 0; r < table.rows(); ++r) {
      const auto l = table.key(r);
      CompensatedSum row;
      for (std::size_t u = 0; u < width; ++u) {
        const double p = table.at(r, u);
        if (p <= 0.0) continue;
        row.add(p);
        key[0] = l[u];
        for (std::size_t i = 0, j = 1; i < width; ++i) {
          if (i != u) key[j++] = l[i];
        }
        std::sort(key.begin() + 1, key.end());
        find_or_add(orbit_lu).add(scale * p);
      }
      std::copy(l.begin(), l.end(), key.begin());
      std::sort(key.begin(), key.end());
      find_or_add(orbit_l).add(scale * row.value());
    }
  }

  CompensatedSum& find_or_add(OrbitMass& orbits) {
    auto it = orbits.find(std::span<const double>(key));
    if (it == orbits.end()) it = orbits.emplace(key, CompensatedSum{}).first;
    return it->second;
  }

  void merge(EnumerationAcc& o) {
    weight.merge(o.weight);
    loo.merge(o.loo);
    mi_y.merge(o.mi_y);
    mi_hyp.merge(o.mi_hyp);
    entropy_l.merge(o.entropy_l);
    heldout.merge(o.heldout);
    train.merge(o.train);
    theta.merge(o.theta);
    if (o.any) {
      has_hyp = any ? has_hyp && o.has_hyp : o.has_hyp;
      has_theta = any ? has_theta && o.has_theta : o.has_theta;
      any = true;
    }
    supersamples += o.supersamples;
    interpolating = interpolating && o.interpolating;
    max_rloo = std::max(max_rloo, o.max_rloo);
    max_mi = std::max(max_mi, o.max_mi);
    eb_checked += o.eb_checked;
    eb_viol += o.eb_viol;
    eb_slack = std::min(eb_slack, o.eb_slack);
    cert_checked += o.cert_checked;
    cert_premise += o.cert_premise;
    cert_viol += o.cert_viol;
    cert_slack = std::min(cert_slack, o.cert_slack);
    for (auto& [k, row] : o.joint) {
      auto [it, inserted] = joint.try_emplace(k, row.size());
      for (std::size_t u = 0; u < row.size(); ++u) it->second[u].merge(row[u]);
    }
    for (auto& [k, m] : o.orbit_l) orbit_l[k].merge(m);
    for (auto& [k, m] : o.orbit_lu) orbit_lu[k].merge(m);
  }
};

}  // namespace

ProfileLaw conditional_prediction_law(const Learner& learner, std::span<const LabeledExample> z,
                                      std::size_t u) {
  if (z.size() < 2) throw InputError("supersample needs at least two entries");
  const auto train = leave_one_out(z, u);
  std::vector<InputId> inputs(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) inputs[i] = z[i].input;
  std::vector<LabelLaw> laws(z.size());
  learner.predict_all(train, inputs, laws);

  ProfileLaw out(z.size());
  std::vector<double> profile(z.size());
  std::vector<std::size_t> digits(z.size(), 0);
  std::size_t combos = 1;
  for (const auto& law : laws) {
    combos *= law.size();
    if (combos > kMaxJointOutcomes) throw CapabilityError("prediction profile law too large");
  }
  for (std::size_t c = 0; c < combos; ++c) {
    double p = 1.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
      profile[i] = laws[i].label(digits[i]);
      p *= laws[i].prob(digits[i]);
    }
    if (p > 0.0) out.add(profile, p);
    for (std::size_t i = 0; i < z.size(); ++i) {
      if (++digits[i] < laws[i].size()) break;
      digits[i] = 0;
    }
  }
  return out;
}

ProfileLaw conditional_loss_law(const Learner& learner, const LossFunction& loss,
                                std::span<const LabeledExample> z, std::size_t u) {
  const auto predictions = conditional_prediction_law(learner, z, u);
  ProfileLaw out(z.size());
  std::vector<double> profile(z.size());
  for (std::size_t k = 0; k < predictions.size(); ++k) {
    const auto yhat = predictions.outcome(k);
    for (std::size_t i = 0; i < z.size(); ++i) profile[i] = loss(yhat[i], z[i].label);
    out.add(profile, predictions.prob(k));
  }
  return out;
}

DisintegratedReport disintegrated_mi_L_U(const Learner& learner, const LossFunction& loss,
                                         std::span<const LabeledExample> z) {
  if (z.size() < 2) throw InputError("supersample needs at least two entries");
  SupersampleAnalyzer analyzer(learner, loss, z.size());
  const auto& a = analyzer.analyze(z);
  DisintegratedReport r;
  r.supersample.assign(z.begin(), z.end());
  r.mi_L_U = a.mi_L;
  r.entropy_L = a.entropy_L;
  r.mi_Yhat_U = a.mi_Y;
  r.mi_hyp_U = a.mi_hyp;
  r.rloo = a.rloo;
  r.kappa.assign(analyzer.kappa().begin(), analyzer.kappa().end());
  r.train_loss = a.train_loss;
  r.interpolating = a.interpolating;
  r.theta = a.theta;
  return r;
}

EnumerationSummary enumerate_supersamples(const MeasureSetting& setting,
                                          const EnumerationOptions& options, Exec exec) {
  check_setting(setting);
  const auto positive = setting.distribution.positive_part();
  const bool multisets = setting.multisets();
  const auto law = tuple_law(positive, setting.n + 1, setting.law, multisets);
  if (law.term_count() > setting.budget) {
    throw BudgetError("supersample enumeration", law.term_count(), setting.budget);
  }
  const std::size_t width = setting.n + 1;
  const double log_n1 = std::log(static_cast<double>(width));
  const bool binary = setting.loss.binary_valued();

  auto make = [&] {
    return EnumerationAcc(setting, options.joint, options.slack);
  };
  auto visit = [&](EnumerationAcc& acc, std::uint64_t begin, std::uint64_t end) {
    law.for_each(begin, end, [&](std::span<const std::uint32_t> idx, double w) {
      for (std::size_t i = 0; i < width; ++i) acc.z[i] = positive.example(idx[i]);
      const auto& a = acc.analyzer.analyze(acc.z);
      acc.weight.add(w);
      acc.loo.add(w * a.mi_L);
      acc.mi_y.add(w * a.mi_Y);
      acc.entropy_l.add(w * a.entropy_L);
      acc.heldout.add(w * a.rloo);
      acc.train.add(w * a.train_loss);
      if (!acc.any) {
        acc.has_hyp = a.mi_hyp.has_value();
        acc.has_theta = a.theta.has_value();
        acc.any = true;
      }
      if (a.mi_hyp) acc.mi_hyp.add(w * *a.mi_hyp);
      acc.has_hyp = acc.has_hyp && a.mi_hyp.has_value();
      acc.has_theta = acc.has_theta && a.theta.has_value();
      ++acc.supersamples;
      acc.interpolating = acc.interpolating && a.interpolating;
      acc.max_rloo = std::max(acc.max_rloo, a.rloo);
      acc.max_mi = std::max(acc.max_mi, a.mi_L);

      if (binary && a.interpolating) {
        const double slack = bound_thm31_pointwise(std::min(1.0, a.rloo), acc.n) - a.entropy_L;
        ++acc.eb_checked;
        if (slack < -acc.slack) ++acc.eb_viol;
        acc.eb_slack = std::min(acc.eb_slack, slack);
      }
      if (a.theta) {
        acc.theta.add(w * *a.theta);
        ++acc.cert_checked;
        if (a.rloo > *a.theta / static_cast<double>(width) + 1e-12) ++acc.cert_premise;
        const double slack = bound_cor32(*a.theta, acc.n) - a.mi_L;
        if (slack < -acc.slack) ++acc.cert_viol;
        acc.cert_slack = std::min(acc.cert_slack, slack);
      }
      if (acc.want_joint && multisets) {
        acc.add_orbits(acc.analyzer.loss_table(), w);
      } else if (acc.want_joint) {
        const auto& table = acc.analyzer.loss_table();
        const double scale = w / static_cast<double>(width);
        for (std::size_t r = 0; r < table.rows(); ++r) {
          const auto key = table.key(r);
          auto it = acc.joint.find(key);
          if (it == acc.joint.end()) {
            it = acc.joint.emplace(std::vector<double>(key.begin(), key.end()),
                                   std::vector<CompensatedSum>(width))
                     .first;
          }
          for (std::size_t u = 0; u < width; ++u) {
            const double p = table.at(r, u);
            if (p > 0.0) it->second[u].add(scale * p);
          }
        }
      }
    });
  };

  auto acc = kernels::reduce(exec, law.total(), make, visit);

  EnumerationSummary s;
  s.total_weight = acc.weight.value();
  s.terms = law.term_count();
  s.supersamples = acc.supersamples;
  s.loo_ecmi = acc.loo.value();
  s.mi_Yhat_U = acc.mi_y.value();
  if (acc.has_hyp) s.mi_hyp_U = acc.mi_hyp.value();
  s.entropy_L = acc.entropy_l.value();
  s.heldout_loss = acc.heldout.value();
  s.train_loss = acc.train.value();
  if (acc.has_theta && acc.any) s.theta_mean = acc.theta.value();
  s.multisets = multisets;
  if (options.joint && multisets) {
    const double h_l = orbit_entropy(acc.orbit_l, false);
    const double h_lu = orbit_entropy(acc.orbit_lu, true);
    s.mi_L_U = std::max(0.0, h_l + log_n1 - h_lu);
  } else if (options.joint) {
    s.mi_L_U = joint_mutual_information(acc.joint, width);
  }
  s.interpolating = acc.interpolating;
  s.max_rloo = acc.max_rloo;
  s.max_disintegrated_mi = acc.max_mi;
  s.entropy_bound_checked = acc.eb_checked;
  s.entropy_bound_violations = acc.eb_viol;
  s.entropy_bound_min_slack = acc.eb_slack;
  s.certificate_checked = acc.cert_checked;
  s.certificate_premise_violations = acc.cert_premise;
  s.certificate_bound_violations = acc.cert_viol;
  s.certificate_min_slack = acc.cert_slack;
  return s;
}

double loo_ecmi_exact(const MeasureSetting& setting, Exec exec) {
  return enumerate_supersamples(setting, {.joint = false}, exec).loo_ecmi;
}

double mi_L_U(const MeasureSetting& setting, Exec exec) {
  return *enumerate_supersamples(setting, {.joint = true}, exec).mi_L_U;
}

double mi_Yhat_U_given_Z(const MeasureSetting& setting, Exec exec) {
  return enumerate_supersamples(setting, {.joint = false}, exec).mi_Yhat_U;
}

double mi_hyp_U_given_Z(const MeasureSetting& setting, Exec exec) {
  if (!setting.learner.is_proper()) {
    throw CapabilityError(std::string(setting.learner.name()) + " does not output a hypothesis");
  }
  return *enumerate_supersamples(setting, {.joint = false}, exec).mi_hyp_U;
}

namespace {

/// Welford accumulator with Chan's pairwise merge; a constant integrand
/// yields exactly that constant and zero variance.
struct MeanVar {
  double count = 0;
  double mean = 0;
  double m2 = 0;

  void add(double x) {
    count += 1;
    const double delta = x - mean;
    mean += delta / count;
    m2 += delta * (x - mean);
  }

  void merge(const MeanVar& o) {
    if (o.count == 0) return;
    if (count == 0) {
      *this = o;
      return;
    }
    const double total = count + o.count;
    const double delta = o.mean - mean;
    mean += delta * (o.count / total);
    m2 += o.m2 + delta * delta * (count * o.count / total);
    count = total;
  }
};

}  // namespace

McEstimate loo_ecmi_mc(const MeasureSetting& setting, std::uint64_t samples, std::uint64_t seed,
                       Exec exec) {
  check_setting(setting);
  if (samples < 2) throw InputError("Monte-Carlo needs at least 2 samples");
  const auto positive = setting.distribution.positive_part();
  const std::size_t width = setting.n + 1;
  const bool distinct = setting.law == SupersampleLaw::distinct;
  if (distinct) tuple_law(positive, width, setting.law);  // validates support size

  std::vector<double> cdf(positive.size());
  {
    CompensatedSum c;
    for (std::size_t i = 0; i < positive.size(); ++i) {
      c.add(positive.mass(i));
      cdf[i] = c.value();
    }
    cdf.back() = 1.0;
  }

  struct Acc {
    SupersampleAnalyzer analyzer;
    Sample z;
    std::vector<std::uint32_t> idx;
    MeanVar stats;
    void merge(const Acc& o) { stats.merge(o.stats); }
  };
  auto make = [&] {
    return Acc{SupersampleAnalyzer(setting.learner, setting.loss, width), Sample(width),
               std::vector<std::uint32_t>(width), {}};
  };
  auto visit = [&](Acc& acc, std::uint64_t begin, std::uint64_t end) {
    for (std::uint64_t s = begin; s < end; ++s) {
      kernels::SplitMix64 rng(seed, s);
      for (std::size_t attempt = 0;; ++attempt) {
        if (attempt > 1000000) throw InputError("could not draw a distinct supersample");
        for (std::size_t i = 0; i < width; ++i) {
          const double r = rng.uniform();
          const auto it = std::upper_bound(cdf.begin(), cdf.end(), r);
          acc.idx[i] = static_cast<std::uint32_t>(
              std::min<std::size_t>(static_cast<std::size_t>(it - cdf.begin()), cdf.size() - 1));
        }
        if (!distinct) break;
        auto sorted = acc.idx;
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end()) break;
      }
      for (std::size_t i = 0; i < width; ++i) acc.z[i] = positive.example(acc.idx[i]);
      acc.stats.add(acc.analyzer.analyze(acc.z).mi_L);
    }
  };
  const auto acc = kernels::reduce(exec, samples, make, visit);
  McEstimate out;
  out.samples = samples;
  out.estimate = acc.stats.mean;
  const double var = acc.stats.m2 / (acc.stats.count - 1);
  out.standard_error = std::sqrt(std::max(0.0, var) / acc.stats.count);
  return out;
}

// Under the distinct law the n training points are what remains of an
// (n+1)-point distinct supersample, so a sequence s carries the extra factor
// P(fresh point avoids s) = 1 - D(s) relative to the n-point distinct law.
static double held_out_room(const FiniteDistribution& positive, std::span<const std::uint32_t> idx) {
  double taken = 0.0;
  for (const auto i : idx) taken += positive.mass(i);
  return 1.0 - taken;
}

double mi_hyp_S(const MeasureSetting& setting, Exec exec) {
  check_setting(setting);
  if (!setting.learner.is_proper()) {
    throw CapabilityError(std::string(setting.learner.name()) + " does not output a hypothesis");
  }
  const auto positive = setting.distribution.positive_part();
  const auto law = tuple_law(positive, setting.n, setting.law, setting.multisets());
  if (law.term_count() > setting.budget) {
    throw BudgetError("training-sequence enumeration", law.term_count(), setting.budget);
  }
  const bool distinct = setting.law == SupersampleLaw::distinct;
  struct Acc {
    Sample s;
    std::map<double, CompensatedSum> mass;
    CompensatedSum total;
    void merge(Acc& o) {
      for (auto& [k, m] : o.mass) mass[k].merge(m);
      total.merge(o.total);
    }
  };
  auto make = [&] { return Acc{Sample(setting.n), {}, {}}; };
  auto visit = [&](Acc& acc, std::uint64_t begin, std::uint64_t end) {
    law.for_each(begin, end, [&](std::span<const std::uint32_t> idx, double w) {
      for (std::size_t i = 0; i < setting.n; ++i) acc.s[i] = positive.example(idx[i]);
      if (distinct) w *= held_out_room(positive, idx);
      acc.mass[setting.learner.hypothesis(acc.s)->value].add(w);
      acc.total.add(w);
    });
  };
  const auto acc = kernels::reduce(exec, law.total(), make, visit);
  // deterministic output: I(A(S); S) = H(A(S))
  const double total = acc.total.value();
  std::vector<double> p;
  p.reserve(acc.mass.size());
  for (const auto& [k, m] : acc.mass) p.push_back(m.value() / total);
  return entropy_of(p);
}

RiskSummary expected_risk(const MeasureSetting& setting, Exec exec) {
  check_setting(setting);
  const auto positive = setting.distribution.positive_part();
  const auto law = tuple_law(positive, setting.n, setting.law, setting.multisets());
  const double terms = law.term_count() * static_cast<double>(positive.size());
  if (terms > setting.budget) {
    throw BudgetError("population-risk enumeration", terms, setting.budget);
  }
  const bool distinct = setting.law == SupersampleLaw::distinct;
  const std::size_t k = positive.size();
  std::vector<InputId> support_inputs(k);
  for (std::size_t j = 0; j < k; ++j) support_inputs[j] = positive.example(j).input;

  struct Acc {
    Sample s;
    std::vector<LabelLaw> laws;
    std::vector<char> in_s;
    CompensatedSum risk, empirical, total;
    void merge(const Acc& o) {
      risk.merge(o.risk);
      empirical.merge(o.empirical);
      total.merge(o.total);
    }
  };
  auto make = [&] {
    return Acc{Sample(setting.n), std::vector<LabelLaw>(k), std::vector<char>(k), {}, {}, {}};
  };
  auto visit = [&](Acc& acc, std::uint64_t begin, std::uint64_t end) {
    law.for_each(begin, end, [&](std::span<const std::uint32_t> idx, double w) {
      for (std::size_t i = 0; i < setting.n; ++i) acc.s[i] = positive.example(idx[i]);
      setting.learner.predict_all(acc.s, support_inputs, acc.laws);

      // test example ~ D, or D restricted to examples outside S when the
      // supersample law forbids repeats
      double excluded = 0.0;
      std::fill(acc.in_s.begin(), acc.in_s.end(), 0);
      if (distinct) {
        for (const auto i : idx) {
          acc.in_s[i] = 1;
          excluded += positive.mass(i);
        }
      }
      const double norm = 1.0 - excluded;
      CompensatedSum risk;
      for (std::size_t j = 0; j < k; ++j) {
        if (acc.in_s[j]) continue;
        const auto& z = positive.example(j);
        risk.add(positive.mass(j) / norm * acc.laws[j].expected_loss(setting.loss, z.label));
      }
      double emp = 0.0;
      for (const auto i : idx) {
        emp += acc.laws[i].expected_loss(setting.loss, positive.example(i).label);
      }
      if (distinct) w *= norm;
      acc.risk.add(w * risk.value());
      acc.empirical.add(w * emp / static_cast<double>(setting.n));
      acc.total.add(w);
    });
  };
  const auto acc = kernels::reduce(exec, law.total(), make, visit);
  const double total = acc.total.value();
  RiskSummary out;
  out.risk = acc.risk.value() / total;
  out.empirical_risk = acc.empirical.value() / total;
  out.ege = out.risk - out.empirical_risk;
  out.terms = terms;
  return out;
}

bool ChainReport::pass() const {
  return std::all_of(pair_pass.begin(), pair_pass.end(),
                     [](const std::optional<bool>& p) { return !p || *p; });
}

ChainReport chain_report(const MeasureSetting& setting, double tolerance, Exec exec) {
  const auto summary = enumerate_supersamples(setting, {.joint = true}, exec);
  ChainReport r;
  r.tolerance = tolerance;
  r.values[0] = summary.mi_L_U;
  r.values[1] = summary.loo_ecmi;
  r.values[2] = summary.mi_Yhat_U;
  r.values[3] = summary.mi_hyp_U;
  if (setting.learner.is_proper()) r.values[4] = mi_hyp_S(setting, exec);
  for (std::size_t i = 0; i + 1 < r.values.size(); ++i) {
    if (r.values[i] && r.values[i + 1]) r.pair_pass[i] = *r.values[i] <= *r.values[i + 1] + tolerance;
  }
  return r;
}

}  // namespace loocmi
