#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <span>
#include <vector>

#include "loocmi/core.hpp"
#include "loocmi/numeric.hpp"

namespace loocmi {

struct OigEdge {
  std::uint32_t a = 0;  // vertex indices, a < b
  std::uint32_t b = 0;
  std::uint32_t coordinate = 0;
};

/// Vertices are the dichotomies a binary class realizes on a point tuple,
/// stored as bitmasks (bit i = label at point i) in lexicographic order of
/// their label vectors. Edges join vertices at Hamming distance one.
class OneInclusionGraph {
 public:
  static constexpr std::size_t kMaxPoints = 63;

  static OneInclusionGraph build(const HypothesisClass& cls, std::span<const InputId> points);

  const std::vector<InputId>& points() const noexcept { return points_; }
  std::size_t vertex_count() const noexcept { return vertices_.size(); }
  std::size_t edge_count() const noexcept { return edges_.size(); }
  std::uint64_t vertex(std::size_t v) const { return vertices_.at(v); }
  Label label(std::size_t v, std::size_t coordinate) const {
    return static_cast<Label>((vertices_.at(v) >> coordinate) & 1U);
  }
  std::vector<Label> labels(std::size_t v) const;
  const std::vector<OigEdge>& edges() const noexcept { return edges_; }
  std::optional<std::size_t> find(std::uint64_t mask) const;

  /// Edge index joining v and w, if adjacent.
  std::optional<std::size_t> edge_between(std::size_t v, std::size_t w) const;

 private:
  std::vector<InputId> points_;
  std::vector<std::uint64_t> vertices_;
  std::vector<OigEdge> edges_;
  std::map<std::uint64_t, std::uint32_t> index_;
};

/// Integer-capacity flow network; max flow by shortest augmenting paths,
/// scanning arcs in insertion order so the result is deterministic.
class FlowNetwork {
 public:
  explicit FlowNetwork(std::size_t nodes);

  std::size_t add_arc(std::size_t from, std::size_t to, std::int64_t capacity);
  std::int64_t max_flow(std::size_t source, std::size_t sink);

  std::int64_t flow(std::size_t arc) const { return arcs_.at(2 * arc).flow; }
  std::int64_t capacity(std::size_t arc) const { return arcs_.at(2 * arc).capacity; }
  std::size_t node_count() const noexcept { return adjacency_.size(); }
  std::size_t arc_count() const noexcept { return arcs_.size() / 2; }

 private:
  struct Arc {
    std::size_t to;
    std::int64_t capacity;
    std::int64_t flow;
  };
  std::vector<Arc> arcs_;  // arc 2k is forward, 2k+1 its residual twin
  std::vector<std::vector<std::size_t>> adjacency_;
};

/// P(a,b) per edge; P(b,a) = 1 - P(a,b), zero off edges.
class ProbabilityAssignment {
 public:
  ProbabilityAssignment(const OneInclusionGraph& g, std::vector<double> forward);

  double forward(std::size_t edge) const { return forward_.at(edge); }
  double operator()(std::size_t v, std::size_t w) const;
  double out_weight(std::size_t v) const { return out_weight_.at(v); }
  const std::vector<double>& out_weights() const noexcept { return out_weight_; }
  double max_out_weight() const;

 private:
  std::vector<OigEdge> edges_;
  std::vector<double> forward_;
  std::vector<double> out_weight_;
};

/// Integral assignment with out-degree <= d via max flow. Throws
/// InfeasibleError when the flow cannot route every edge.
ProbabilityAssignment orient_bounded(const OneInclusionGraph& g, std::size_t d);

/// Vertices agreeing with `labels` on every coordinate except `test`.
/// Throws RealizabilityError when there is none.
std::vector<std::size_t> consistent_vertices(const OneInclusionGraph& g,
                                             std::span<const Label> labels, std::size_t test);

/// Law of the label at `test`: with completions v, w it is w's label with
/// probability P(v, w) and v's label with probability P(w, v).
LabelLaw oig_predict(const OneInclusionGraph& g, const ProbabilityAssignment& p,
                     std::span<const Label> labels, std::size_t test);

/// Out-weight of v_star over the number of points.
double oig_loo_error(const OneInclusionGraph& g, const ProbabilityAssignment& p,
                     std::size_t v_star);

enum class DensityMethod { automatic, enumeration, flow };

inline constexpr std::size_t kDensityEnumerationCap = 20;

/// max over nonempty vertex subsets W of |E(W)| / |W|.
Rational max_subgraph_density(const OneInclusionGraph& g,
                              DensityMethod method = DensityMethod::automatic,
                              std::size_t cap = kDensityEnumerationCap);

struct OigEntry {
  OneInclusionGraph graph;
  ProbabilityAssignment assignment;
};

/// The one-inclusion graph algorithm as a transductive learner. Graph and
/// orientation depend only on the sorted multiset of unlabeled points, and
/// are memoized per multiset.
class OigLearner final : public Learner {
 public:
  /// d defaults to the VC dimension of the class.
  explicit OigLearner(HypothesisClass cls, std::optional<std::size_t> d = std::nullopt);

  std::string_view name() const override { return "oig"; }
  LearnerKind kind() const override { return LearnerKind::randomized_transductive; }
  bool symmetric() const override { return true; }
  LabelLaw predict(std::span<const LabeledExample> train, InputId x) const override;
  std::optional<double> loo_certificate(std::span<const LabeledExample> supersample) const override;

  std::size_t d() const noexcept { return d_; }
  const HypothesisClass& hypothesis_class() const noexcept { return cls_; }

  /// Graph and orientation on the sorted multiset of `points`.
  std::shared_ptr<const OigEntry> entry(std::span<const InputId> points) const;

  /// Every memoized entry, ordered by point multiset.
  std::vector<std::shared_ptr<const OigEntry>> cached() const;

 private:
  HypothesisClass cls_;
  std::size_t d_;
  mutable std::shared_mutex mutex_;
  mutable std::map<std::vector<InputId>, std::shared_ptr<const OigEntry>> memo_;
};

}  // namespace loocmi
