#include "loocmi/bounds.hpp"

#include <algorithm>
#include <cmath>

#include "loocmi/errors.hpp"
#include "loocmi/oig.hpp"

namespace loocmi {

namespace {

double log_n1(std::size_t n) {
  if (n < 1) throw InputError("n must be at least 1");
  return std::log(static_cast<double>(n) + 1.0);
}

}  // namespace

double bound_thm21(double loocmi, std::size_t n) {
  const double l = log_n1(n);
  if (!(loocmi >= 0.0)) throw InputError("loocmi must be >= 0");
  return loocmi / l;
}

double bound_thm23(double loocmi) {
  if (!(loocmi >= 0.0)) throw InputError("loocmi must be >= 0");
  return std::sqrt(2.0 * loocmi);
}

double bound_thm31_pointwise(double rloo, std::size_t n) {
  const double l = log_n1(n);
  if (!(rloo >= 0.0 && rloo <= 1.0)) throw InputError("R_loo must lie in [0, 1]");
  return binary_entropy(rloo) + rloo * l;
}

double bound_cor32(double theta, std::size_t n) {
  const double l = log_n1(n);
  if (!(theta >= 0.0) || std::isinf(theta)) throw InputError("theta must be finite and >= 0");
  const double n1 = static_cast<double>(n) + 1.0;
  if (theta / n1 >= 0.5) return 1.0 + theta * l / n1;
  return 2.0 * theta * l / n1 + (theta + std::exp(-1.0)) / n1;
}

double bound_thm41(std::size_t d, std::size_t n) {
  const double l = log_n1(n);
  if (d < 1 || d > n) throw InputError("need 1 <= d <= n");
  return static_cast<double>(d) / (static_cast<double>(n) + 1.0) * (2.0 * l + 1.0);
}

double bound_support_vectors(double mean_support_vectors, std::size_t n) {
  const double l = log_n1(n);
  if (!(mean_support_vectors >= 0.0)) throw InputError("support-vector count must be >= 0");
  return mean_support_vectors / (static_cast<double>(n) + 1.0) * (2.0 * l + 1.0);
}

// ---------------------------------------------------------------------------

BoundReport BoundReport::inequality(std::string theorem, std::string claim, double lhs,
                                    double rhs, double tolerance) {
  BoundReport r;
  r.theorem = std::move(theorem);
  r.claim = std::move(claim);
  r.lhs = lhs;
  r.rhs = rhs;
  r.slack = rhs - lhs;
  r.tolerance = tolerance;
  r.pass = lhs <= rhs + tolerance;
  return r;
}

BoundReport BoundReport::equality(std::string theorem, std::string claim, double lhs, double rhs,
                                  double tolerance) {
  BoundReport r;
  r.theorem = std::move(theorem);
  r.claim = std::move(claim);
  r.lhs = lhs;
  r.rhs = rhs;
  r.slack = -std::fabs(lhs - rhs);
  r.identity = true;
  r.tolerance = tolerance;
  r.pass = std::fabs(lhs - rhs) <= tolerance;
  return r;
}

BoundReport BoundReport::skip(std::string theorem, std::string claim, std::string reason) {
  BoundReport r;
  r.theorem = std::move(theorem);
  r.claim = std::move(claim);
  r.skipped = true;
  r.pass = true;
  r.note = std::move(reason);
  return r;
}

MeasureBundle compute_bundle(const MeasureSetting& setting, Exec exec) {
  MeasureBundle m;
  m.n = setting.n;
  m.binary_loss = setting.loss.binary_valued();
  m.summary = enumerate_supersamples(setting, {.joint = true}, exec);
  m.interpolating = m.summary.interpolating;
  m.risk = expected_risk(setting, exec);
  if (setting.learner.is_proper()) m.mi_hyp_S = mi_hyp_S(setting, exec);
  return m;
}

std::vector<BoundReport> verify_thm21(const MeasureBundle& m) {
  const double bound = bound_thm21(m.summary.loo_ecmi, m.n);
  std::vector<BoundReport> out;
  if (m.interpolating && m.binary_loss) {
    out.push_back(BoundReport::inequality("thm21", "risk <= loo_ecmi / ln(n+1)", m.risk.risk, bound));
  } else {
    out.push_back(BoundReport::skip("thm21", "risk <= loo_ecmi / ln(n+1)",
                                    "learner is not interpolating with {0,1} loss"));
  }
  out.push_back(BoundReport::inequality("thm21_unit", "loo_ecmi / ln(n+1) <= 1", bound, 1.0, 1e-12));
  return out;
}

BoundReport verify_thm23(const MeasureBundle& m) {
  return BoundReport::inequality("thm23", "|EGE| <= sqrt(2 loo_ecmi)", std::fabs(m.risk.ege),
                                 bound_thm23(m.summary.loo_ecmi));
}

BoundReport verify_thm31_pointwise(const MeasureBundle& m) {
  const auto& s = m.summary;
  const std::string claim = "H_z(L) <= h_b(R_loo(z)) + R_loo(z) ln(n+1) for every z";
  if (s.entropy_bound_checked == 0) {
    return BoundReport::skip("thm31", claim, "no interpolating supersample with {0,1} loss");
  }
  // worst supersample: lhs = max_z (H_z(L) - bound(z)) against 0
  auto r = BoundReport::inequality("thm31", claim, 0.0 - s.entropy_bound_min_slack, 0.0);
  r.note = std::to_string(s.entropy_bound_checked) + " supersamples checked, " +
           std::to_string(s.entropy_bound_violations) + " violations";
  return r;
}

BoundReport verify_cor32(const MeasureBundle& m) {
  const auto& s = m.summary;
  const std::string claim = "I_z(L;U) <= cor32(theta(z)) whenever R_loo(z) <= theta(z)/(n+1)";
  if (s.certificate_checked == 0) return BoundReport::skip("cor32", claim, "learner has no certificate");
  if (!m.interpolating || !m.binary_loss) {
    return BoundReport::skip("cor32", claim, "learner is not interpolating with {0,1} loss");
  }
  auto r = BoundReport::inequality("cor32", claim, 0.0 - s.certificate_min_slack, 0.0);
  r.note = std::to_string(s.certificate_checked) + " supersamples checked, " +
           std::to_string(s.certificate_bound_violations) + " bound violations";
  return r;
}

BoundReport verify_certificate_premise(const MeasureBundle& m) {
  const auto& s = m.summary;
  const std::string claim = "R_loo(z) <= theta(z)/(n+1) for every z";
  if (s.certificate_checked == 0) {
    return BoundReport::skip("certificate", claim, "learner has no certificate");
  }
  auto r = BoundReport::inequality("certificate", claim,
                                   static_cast<double>(s.certificate_premise_violations), 0.0, 0.0);
  r.note = std::to_string(s.certificate_checked) + " supersamples checked";
  return r;
}

std::pair<BoundReport, BoundReport> verify_sandwich_thm33(const MeasureBundle& m) {
  const double risk = m.risk.risk;
  const double loo = m.summary.loo_ecmi;
  if (!m.interpolating || !m.binary_loss) {
    const std::string why = "learner is not interpolating with {0,1} loss";
    return {BoundReport::skip("thm33_lower", "risk ln(n+1) <= loo_ecmi", why),
            BoundReport::skip("thm33_upper", "loo_ecmi <= h_b(risk) + risk ln(n+1)", why)};
  }
  const double clipped = std::clamp(risk, 0.0, 1.0);
  return {BoundReport::inequality("thm33_lower", "risk ln(n+1) <= loo_ecmi", risk * log_n1(m.n), loo),
          BoundReport::inequality("thm33_upper", "loo_ecmi <= h_b(risk) + risk ln(n+1)", loo,
                                  bound_thm31_pointwise(clipped, m.n))};
}

namespace {

void require_interpolating(const MeasureSetting& setting, const MeasureBundle& m) {
  if (!setting.loss.binary_valued()) throw InputError("needs a {0,1}-valued loss");
  if (!m.interpolating) throw InputError(std::string(setting.learner.name()) + " is not interpolating");
}

}  // namespace

std::pair<BoundReport, BoundReport> verify_sandwich_thm33(const MeasureSetting& setting) {
  const auto m = compute_bundle(setting);
  require_interpolating(setting, m);
  return verify_sandwich_thm33(m);
}

BoundReport verify_thm51(const MeasureBundle& m) {
  const std::string claim = "risk ln(n+1) = I(L;U)";
  if (!m.interpolating || !m.binary_loss) {
    return BoundReport::skip("thm51", claim, "learner is not interpolating with {0,1} loss");
  }
  if (!m.summary.mi_L_U) return BoundReport::skip("thm51", claim, "joint law not computed");
  return BoundReport::equality("thm51", claim, m.risk.risk * log_n1(m.n), *m.summary.mi_L_U);
}

BoundReport verify_thm51(const MeasureSetting& setting) {
  const auto m = compute_bundle(setting);
  require_interpolating(setting, m);
  return verify_thm51(m);
}

std::vector<BoundReport> verify_chain(const MeasureBundle& m, double tolerance) {
  const std::array<std::optional<double>, 5> values = {
      m.summary.mi_L_U, m.summary.loo_ecmi, m.summary.mi_Yhat_U, m.summary.mi_hyp_U, m.mi_hyp_S};
  const std::array<const char*, 4> ids = {"chain_a", "chain_b", "chain_c", "chain_d"};
  std::vector<BoundReport> out;
  for (std::size_t i = 0; i < 4; ++i) {
    const std::string claim =
        std::string(ChainReport::kNames[i]) + " <= " + ChainReport::kNames[i + 1];
    if (values[i] && values[i + 1]) {
      out.push_back(BoundReport::inequality(ids[i], claim, *values[i], *values[i + 1], tolerance));
    } else {
      out.push_back(BoundReport::skip(ids[i], claim, "learner does not output a hypothesis"));
    }
  }
  return out;
}

std::vector<BoundReport> verify_chain(const MeasureSetting& setting, double tolerance) {
  return verify_chain(compute_bundle(setting), tolerance);
}

BoundReport verify_support_vector_bound(const MeasureBundle& m) {
  const std::string claim = "loo_ecmi <= (E[theta]/(n+1)) (2 ln(n+1) + 1)";
  if (!m.summary.theta_mean) return BoundReport::skip("svm", claim, "learner has no certificate");
  if (!m.interpolating || !m.binary_loss) {
    return BoundReport::skip("svm", claim, "learner is not interpolating with {0,1} loss");
  }
  return BoundReport::inequality("svm", claim, m.summary.loo_ecmi,
                                 bound_support_vectors(*m.summary.theta_mean, m.n));
}

std::vector<BoundReport> verify_thm41(const MeasureBundle& m, const OigLearner& learner) {
  const std::size_t d = learner.d();
  const double n1 = static_cast<double>(m.n) + 1.0;
  std::vector<BoundReport> out;

  double max_out = 0.0;
  Rational max_density(0, 1);
  std::size_t graphs = 0;
  for (const auto& e : learner.cached()) {
    max_out = std::max(max_out, e->assignment.max_out_weight());
    const auto density = max_subgraph_density(e->graph);
    if (density > max_density) max_density = density;
    ++graphs;
  }
  auto degree = BoundReport::inequality("thm41_outdegree", "max out-degree <= d", max_out,
                                        static_cast<double>(d), 0.0);
  degree.note = std::to_string(graphs) + " graphs";
  out.push_back(degree);

  auto density = BoundReport::inequality("thm41_density", "max subgraph density <= d",
                                         max_density.to_double(), static_cast<double>(d), 0.0);
  density.pass = max_density <= Rational(static_cast<std::int64_t>(d), 1);
  density.note = "density " + max_density.str();
  out.push_back(density);

  out.push_back(BoundReport::inequality("thm41_rloo", "R_loo(z) <= d/(n+1) for every z",
                                        m.summary.max_rloo, static_cast<double>(d) / n1, 1e-12));
  if (d >= 1 && d <= m.n) {
    out.push_back(BoundReport::inequality("thm41", "loo_ecmi <= (d/(n+1)) (2 ln(n+1) + 1)",
                                          m.summary.loo_ecmi, bound_thm41(d, m.n)));
  } else {
    out.push_back(BoundReport::skip("thm41", "loo_ecmi <= (d/(n+1)) (2 ln(n+1) + 1)",
                                    "needs 1 <= d <= n"));
  }
  out.push_back(BoundReport::inequality("thm41_risk", "risk <= d/(n+1)", m.risk.risk,
                                        static_cast<double>(d) / n1));
  return out;
}

RateDiagnostic rate_diagnostic(const MeasureBundle& m, double constant) {
  RateDiagnostic r;
  r.n = m.n;
  r.risk = m.risk.risk;
  r.constant = constant;
  if (r.risk > 0.0) {
    r.ratio = bound_thm21(m.summary.loo_ecmi, m.n) / r.risk;
    r.within = r.ratio <= constant;
  } else {
    r.ratio = std::nan("");
    r.within = true;
  }
  return r;
}

CounterexampleReport counterexample_fig1(const Learner& learner, const LossFunction& loss,
                                         std::span<const LabeledExample> supersample) {
  static constexpr std::array<Label, 5> kLabels = {1, 1, 1, 0, 0};
  if (supersample.size() != kLabels.size()) throw InputError("counterexample needs 5 points (n = 4)");
  for (std::size_t i = 0; i < kLabels.size(); ++i) {
    if (supersample[i].label != kLabels[i]) {
      throw InputError("counterexample needs labels (1,1,1,0,0)");
    }
    if (i > 0 && !(supersample[i - 1].input < supersample[i].input)) {
      throw InputError("counterexample needs distinct increasing points");
    }
  }
  CounterexampleReport r;
  r.supersample.assign(supersample.begin(), supersample.end());
  const std::vector<double> zero(supersample.size(), 0.0);
  std::vector<double> likelihood(supersample.size());
  CompensatedSum total;
  for (std::size_t u = 0; u < supersample.size(); ++u) {
    likelihood[u] = conditional_loss_law(learner, loss, supersample, u).prob_of(zero);
    total.add(likelihood[u]);
  }
  r.prob_all_zero = total.value() / static_cast<double>(supersample.size());
  if (!(total.value() > 0.0)) throw InputError("the all-zero loss profile has probability 0");
  r.posterior.resize(supersample.size());
  for (std::size_t u = 0; u < supersample.size(); ++u) {
    r.posterior[u] = likelihood[u] / total.value();
  }
  r.conditional_entropy = entropy_of(r.posterior);
  r.log_n_plus_1 = std::log(static_cast<double>(supersample.size()));
  r.posterior_zero_at_flagged = r.posterior[r.flagged_index - 1] == 0.0;
  r.entropy_below_log = r.conditional_entropy < r.log_n_plus_1 - 1e-6;
  return r;
}

}  // namespace loocmi
