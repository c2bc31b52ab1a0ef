#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "loocmi/infotheory.hpp"

namespace loocmi {

class OigLearner;

// ---------------------------------------------------------------------------
// Bound formulas. All values in nats unless stated.

/// Risk bound for interpolating learners: loocmi / ln(n+1).
double bound_thm21(double loocmi, std::size_t n);

/// Generalization-gap bound for [0,1] losses: sqrt(2 loocmi).
double bound_thm23(double loocmi);

/// Per-supersample entropy bound h_b(R) + R ln(n+1).
double bound_thm31_pointwise(double rloo, std::size_t n);

/// Disintegrated-MI bound when R_loo <= theta/(n+1).
double bound_cor32(double theta, std::size_t n);

/// One-inclusion-graph bound (d/(n+1)) (2 ln(n+1) + 1), for 1 <= d <= n.
double bound_thm41(std::size_t d, std::size_t n);

/// Support-vector bound (E[N_SV]/(n+1)) (2 ln(n+1) + 1).
double bound_support_vectors(double mean_support_vectors, std::size_t n);

// ---------------------------------------------------------------------------
// Verification

inline constexpr double kInequalityTolerance = 1e-9;
inline constexpr double kIdentityTolerance = 1e-10;

/// One theorem check. pass <=> lhs <= rhs + tolerance, or for identities
/// |lhs - rhs| <= tolerance. Skipped checks carry the reason in `note`.
struct BoundReport {
  std::string theorem;
  std::string claim;
  double lhs = 0;
  double rhs = 0;
  double slack = 0;  // rhs - lhs, or -|lhs - rhs| for identities
  bool identity = false;
  bool pass = false;
  bool skipped = false;
  double tolerance = kInequalityTolerance;
  std::string fingerprint;
  std::string note;

  static BoundReport inequality(std::string theorem, std::string claim, double lhs, double rhs,
                                double tolerance = kInequalityTolerance);
  static BoundReport equality(std::string theorem, std::string claim, double lhs, double rhs,
                              double tolerance = kIdentityTolerance);
  static BoundReport skip(std::string theorem, std::string claim, std::string reason);
};

/// Everything the theorem checks need, computed once per setting.
struct MeasureBundle {
  std::size_t n = 0;
  bool binary_loss = true;
  bool interpolating = false;  // checked over all training sequences
  EnumerationSummary summary;
  RiskSummary risk;
  std::optional<double> mi_hyp_S;
};

MeasureBundle compute_bundle(const MeasureSetting& setting, Exec exec = Exec::parallel);

/// Risk <= loocmi/ln(n+1), and loocmi/ln(n+1) <= 1.
std::vector<BoundReport> verify_thm21(const MeasureBundle& m);

/// |EGE| <= sqrt(2 loocmi).
BoundReport verify_thm23(const MeasureBundle& m);

/// Pointwise entropy bound on every enumerated supersample.
BoundReport verify_thm31_pointwise(const MeasureBundle& m);

/// Disintegrated bound on every supersample with a certificate.
BoundReport verify_cor32(const MeasureBundle& m);

/// R_loo(z) <= theta(z)/(n+1) on every supersample (exact count).
BoundReport verify_certificate_premise(const MeasureBundle& m);

/// Risk ln(n+1) <= loocmi <= h_b(Risk) + Risk ln(n+1).
std::pair<BoundReport, BoundReport> verify_sandwich_thm33(const MeasureBundle& m);
std::pair<BoundReport, BoundReport> verify_sandwich_thm33(const MeasureSetting& setting);

/// Risk = I(L;U)/ln(n+1), both sides independently enumerated.
BoundReport verify_thm51(const MeasureBundle& m);
BoundReport verify_thm51(const MeasureSetting& setting);

/// Adjacent pairs of the five-measure chain.
std::vector<BoundReport> verify_chain(const MeasureBundle& m, double tolerance = kInequalityTolerance);
std::vector<BoundReport> verify_chain(const MeasureSetting& setting,
                                      double tolerance = kInequalityTolerance);

/// loocmi <= (E[N_SV]/(n+1)) (2 ln(n+1) + 1) for certificate-carrying learners.
BoundReport verify_support_vector_bound(const MeasureBundle& m);

/// One-inclusion-graph checks: out-degree, density, per-supersample R_loo,
/// the loocmi bound and the risk bound d/(n+1).
std::vector<BoundReport> verify_thm41(const MeasureBundle& m, const OigLearner& learner);

/// Finite-n ratio (loocmi / ln(n+1)) / Risk; a diagnostic, never a verdict.
struct RateDiagnostic {
  std::size_t n = 0;
  double risk = 0;
  double ratio = 0;  // NaN when risk == 0
  double constant = 4.0;
  bool within = true;
};

RateDiagnostic rate_diagnostic(const MeasureBundle& m, double constant = 4.0);

/// The threshold counterexample: posterior of U given L = all-zeros.
struct CounterexampleReport {
  Sample supersample;
  std::vector<double> posterior;     // P[U = u | L = 0, z], u = 1..n+1
  double prob_all_zero = 0;          // P[L = 0 | z]
  double conditional_entropy = 0;    // H^z(U | L = 0)
  double log_n_plus_1 = 0;
  std::size_t flagged_index = 3;     // 1-based index expected to have zero posterior
  bool posterior_zero_at_flagged = false;
  bool entropy_below_log = false;
  bool pass() const { return posterior_zero_at_flagged && entropy_below_log; }
};

/// Requires n + 1 = 5 distinct threshold-ordered points labeled (1,1,1,0,0).
CounterexampleReport counterexample_fig1(const Learner& learner, const LossFunction& loss,
                                         std::span<const LabeledExample> supersample);

}  // namespace loocmi
