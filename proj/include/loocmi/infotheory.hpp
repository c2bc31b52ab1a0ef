#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "loocmi/core.hpp"
#include "loocmi/kernels.hpp"
#include "loocmi/numeric.hpp"

namespace loocmi {

using kernels::Exec;

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Probabilities over opaque outcomes; outcome names are optional.
struct Pmf {
  std::vector<double> probabilities;
  std::vector<std::string> outcomes;

  /// Throws InputError unless entries are >= 0 and sum to 1 within 1e-12.
  void validate() const;
};

/// -sum p ln p in nats, with 0 ln 0 = 0.
double entropy(const Pmf& p);

/// Same as entropy(), without validation.
double entropy_of(std::span<const double> probabilities);

double binary_entropy(double p);

/// sum q ln(q/p); +infinity when q is not absolutely continuous w.r.t. p.
double kl_divergence(const Pmf& q, const Pmf& p);

/// Mutual information between a row variable X and U uniform over the
/// columns, given the table p(x | u) stored row-major (rows x cols).
double mutual_information_uniform(std::span<const double> conditional, std::size_t rows,
                                  std::size_t cols);

enum class SupersampleLaw {
  iid,       // D^{n+1}
  distinct,  // D^{n+1} conditioned on pairwise-distinct entries
};

std::string_view to_string(SupersampleLaw law) noexcept;

/// Everything an exact measure needs: learner, data law, n, loss, budget.
struct MeasureSetting {
  const Learner& learner;
  const FiniteDistribution& distribution;
  std::size_t n;
  LossFunction loss{};
  SupersampleLaw law = SupersampleLaw::iid;
  double budget = kDefaultBudget;
  // visit multisets instead of ordered tuples when the learner is symmetric
  bool use_symmetry = true;

  bool multisets() const { return use_symmetry && learner.symmetric(); }
};

/// Law over fixed-width real vectors (loss or prediction profiles).
class ProfileLaw {
 public:
  explicit ProfileLaw(std::size_t width = 0) : width_(width) {}

  void add(std::span<const double> profile, double prob);

  std::size_t width() const noexcept { return width_; }
  std::size_t size() const noexcept { return probs_.size(); }
  std::span<const double> outcome(std::size_t i) const {
    return {values_.data() + i * width_, width_};
  }
  double prob(std::size_t i) const { return probs_[i]; }
  double prob_of(std::span<const double> profile) const;
  void clear() noexcept {
    values_.clear();
    probs_.clear();
  }

 private:
  std::size_t width_;
  std::vector<double> values_;
  std::vector<double> probs_;
};

/// Exact law of the loss profile L given (Z = z, U = u).
ProfileLaw conditional_loss_law(const Learner& learner, const LossFunction& loss,
                                std::span<const LabeledExample> z, std::size_t u);

/// Exact law of the prediction profile Yhat given (Z = z, U = u).
ProfileLaw conditional_prediction_law(const Learner& learner, std::span<const LabeledExample> z,
                                      std::size_t u);

/// Per-supersample quantities.
struct DisintegratedReport {
  Sample supersample;
  double mi_L_U = 0;          // I^z(L; U)
  double entropy_L = 0;       // H^z(L)
  double mi_Yhat_U = 0;       // I^z(Yhat; U)
  std::optional<double> mi_hyp_U;
  double rloo = 0;            // (n+1)^-1 sum_i kappa_i
  std::vector<double> kappa;  // E[L_i | z, U = i]
  double train_loss = 0;      // mean over u of the training-coordinate mean loss
  bool interpolating = true;  // training coordinates have zero loss a.s.
  std::optional<double> theta;
};

DisintegratedReport disintegrated_mi_L_U(const Learner& learner, const LossFunction& loss,
                                         std::span<const LabeledExample> z);

/// Aggregates of a full supersample enumeration.
struct EnumerationSummary {
  double total_weight = 0;
  double terms = 0;               // index tuples scanned
  std::uint64_t supersamples = 0; // positive-weight supersamples visited
  bool multisets = false;         // visited unordered supersamples

  double loo_ecmi = 0;            // E I^Z(L; U)
  double mi_Yhat_U = 0;           // E I^Z(Yhat; U)
  std::optional<double> mi_hyp_U; // E I^Z(A; U)
  double entropy_L = 0;           // E H^Z(L)
  double heldout_loss = 0;        // E L_U
  double train_loss = 0;          // E n^-1 sum_{i != U} L_i
  std::optional<double> mi_L_U;   // I(L; U) from the joint law
  std::optional<double> theta_mean;

  bool interpolating = true;
  double max_rloo = 0;
  double max_disintegrated_mi = 0;

  // Pointwise entropy bound H^z(L) <= h_b(R) + R ln(n+1), on interpolating
  // supersamples with {0,1}-valued loss.
  std::uint64_t entropy_bound_checked = 0;
  std::uint64_t entropy_bound_violations = 0;
  double entropy_bound_min_slack = kInfinity;

  // Certificate checks: R_loo(z) <= theta/(n+1) and the corresponding
  // disintegrated-MI bound.
  std::uint64_t certificate_checked = 0;
  std::uint64_t certificate_premise_violations = 0;
  std::uint64_t certificate_bound_violations = 0;
  double certificate_min_slack = kInfinity;
};

struct EnumerationOptions {
  bool joint = true;         // accumulate the (L, U) joint law for I(L; U)
  double slack = 1e-9;       // float slack on the pointwise checks
};

EnumerationSummary enumerate_supersamples(const MeasureSetting& setting,
                                          const EnumerationOptions& options = {},
                                          Exec exec = Exec::parallel);

double loo_ecmi_exact(const MeasureSetting& setting, Exec exec = Exec::parallel);

struct McEstimate {
  double estimate = 0;
  double standard_error = 0;
  std::uint64_t samples = 0;
};

/// Monte-Carlo over the outer expectation; inner disintegrated MI exact.
McEstimate loo_ecmi_mc(const MeasureSetting& setting, std::uint64_t samples, std::uint64_t seed,
                       Exec exec = Exec::parallel);

double mi_L_U(const MeasureSetting& setting, Exec exec = Exec::parallel);
double mi_Yhat_U_given_Z(const MeasureSetting& setting, Exec exec = Exec::parallel);
double mi_hyp_U_given_Z(const MeasureSetting& setting, Exec exec = Exec::parallel);

/// I(A(S); S) with S distributed as the training sequence Z_{-U}.
double mi_hyp_S(const MeasureSetting& setting, Exec exec = Exec::parallel);

/// Expected risk by the population route: enumerate training sequences,
/// then weight every possible test example by its probability. Independent
/// of the supersample/joint-law machinery.
struct RiskSummary {
  double risk = 0;            // E R_D(A(S))
  double empirical_risk = 0;  // E R_S(A(S))
  double ege = 0;             // risk - empirical_risk
  double terms = 0;
};

RiskSummary expected_risk(const MeasureSetting& setting, Exec exec = Exec::parallel);

/// The five measures of the chain, smallest first.
struct ChainReport {
  static constexpr std::array<const char*, 5> kNames = {
      "mi_L_U", "loo_ecmi", "mi_Yhat_U_given_Z", "mi_hyp_U_given_Z", "mi_hyp_S"};

  std::array<std::optional<double>, 5> values{};
  std::array<std::optional<bool>, 4> pair_pass{};  // nullopt when unavailable
  double tolerance = 1e-9;

  bool pass() const;
};

ChainReport chain_report(const MeasureSetting& setting, double tolerance = 1e-9,
                         Exec exec = Exec::parallel);

}  // namespace loocmi
