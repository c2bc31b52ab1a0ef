#pragma once

// Brute-force reference for the information measures. Walks every ordered
// supersample, builds each conditional law from single-input predictions
// and applies the textbook formulas. Shares nothing with the library's
// enumeration code beyond the learner and loss interfaces.

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "loocmi/core.hpp"

namespace oracle {

using loocmi::LabeledExample;

struct Result {
  double loo_ecmi = 0;   // E_Z I^Z(L;U)
  double mi_yhat = 0;    // E_Z I^Z(Yhat;U)
  std::optional<double> mi_hyp;  // E_Z I^Z(A;U), proper learners only
  double mi_L_U = 0;     // I(L;U) from the (L,U) joint
  double heldout = 0;    // E L_U
  std::size_t supersamples = 0;
};

inline double plogp(double p) { return p > 0 ? p * std::log(p) : 0.0; }

using Law = std::map<std::vector<double>, double>;

inline double entropy(const Law& law) {
  double h = 0;
  for (const auto& [k, p] : law) h -= plogp(p);
  return h;
}

// I(X;U) for U uniform over the given conditional laws.
inline double mi_uniform(const std::vector<Law>& rows) {
  Law mix;
  double cond = 0;
  const double w = 1.0 / static_cast<double>(rows.size());
  for (const auto& r : rows) {
    cond += w * entropy(r);
    for (const auto& [k, p] : r) mix[k] += w * p;
  }
  return entropy(mix) - cond;
}

// Product law of per-coordinate label laws, mapped through f(label, i).
template <class F>
Law product_law(const std::vector<loocmi::LabelLaw>& marginals, F&& f) {
  Law law;
  law[{}] = 1.0;
  for (std::size_t i = 0; i < marginals.size(); ++i) {
    Law next;
    for (const auto& [prefix, p] : law) {
      for (std::size_t j = 0; j < marginals[i].size(); ++j) {
        auto key = prefix;
        key.push_back(f(marginals[i].label(j), i));
        next[key] += p * marginals[i].prob(j);
      }
    }
    law = std::move(next);
  }
  return law;
}

inline Result enumerate(const loocmi::Learner& learner, const loocmi::FiniteDistribution& dist,
                        std::size_t n, const loocmi::LossFunction& loss, bool distinct = false) {
  const std::size_t k = dist.size();
  const std::size_t len = n + 1;
  Result out;
  std::vector<std::size_t> idx(len, 0);
  std::map<std::pair<std::vector<double>, std::size_t>, double> joint;
  Law loss_marginal;
  double total = 0;
  bool proper = learner.is_proper();
  double hyp_acc = 0;

  bool done = false;
  while (!done) {
    bool ok = true;
    double w = 1;
    for (std::size_t i = 0; i < len; ++i) {
      w *= dist.mass(idx[i]);
      for (std::size_t j = 0; j < i && distinct; ++j) ok = ok && idx[i] != idx[j];
    }
    if (ok && w > 0) {
      std::vector<LabeledExample> z(len);
      for (std::size_t i = 0; i < len; ++i) z[i] = dist.example(idx[i]);
      std::vector<Law> losses(len), preds(len);
      Law keys;
      for (std::size_t u = 0; u < len; ++u) {
        std::vector<LabeledExample> train;
        for (std::size_t i = 0; i < len; ++i) {
          if (i != u) train.push_back(z[i]);
        }
        std::vector<loocmi::LabelLaw> m;
        for (std::size_t i = 0; i < len; ++i) m.push_back(learner.predict(train, z[i].input));
        losses[u] = product_law(m, [&](double y, std::size_t i) { return loss(y, z[i].label); });
        preds[u] = product_law(m, [](double y, std::size_t) { return y; });
        for (const auto& [l, p] : losses[u]) {
          joint[{l, u}] += w * p / static_cast<double>(len);
          loss_marginal[l] += w * p / static_cast<double>(len);
          out.heldout += w * p * l[u] / static_cast<double>(len);
        }
        if (proper) {
          const auto key = learner.hypothesis(train);
          if (!key) {
            proper = false;
          } else {
            keys[{key->value}] += 1.0 / static_cast<double>(len);
          }
        }
      }
      out.loo_ecmi += w * mi_uniform(losses);
      out.mi_yhat += w * mi_uniform(preds);
      if (proper) hyp_acc += w * entropy(keys);
      total += w;
      ++out.supersamples;
    }
    std::size_t pos = len;
    while (true) {
      if (pos == 0) {
        done = true;
        break;
      }
      --pos;
      if (++idx[pos] < k) break;
      idx[pos] = 0;
    }
  }

  out.loo_ecmi /= total;
  out.mi_yhat /= total;
  out.heldout /= total;
  if (proper) out.mi_hyp = hyp_acc / total;
  // I(L;U) = H(L) + H(U) - H(L,U)
  double h_joint = 0;
  for (const auto& [key, p] : joint) h_joint -= plogp(p / total);
  double h_l = 0;
  for (const auto& [key, p] : loss_marginal) h_l -= plogp(p / total);
  out.mi_L_U = h_l + std::log(static_cast<double>(len)) - h_joint;
  return out;
}

}  // namespace oracle
