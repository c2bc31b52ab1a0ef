#include "loocmi/oig.hpp"

#include <algorithm>
#include <bit>
#include <deque>
#include <limits>
#include <mutex>

#include "loocmi/errors.hpp"

namespace loocmi {

// ---------------------------------------------------------------------------
// Graph

OneInclusionGraph OneInclusionGraph::build(const HypothesisClass& cls,
                                           std::span<const InputId> points) {
  if (!cls.is_binary()) throw InputError("one-inclusion graphs need a binary class");
  if (points.size() > kMaxPoints) throw InputError("too many points for a one-inclusion graph");
  for (const auto x : points) {
    if (!cls.domain().contains(x)) throw InputError("point outside the domain");
  }
  auto dichotomies = project_dichotomies(cls, points);
  std::sort(dichotomies.begin(), dichotomies.end());

  OneInclusionGraph g;
  g.points_.assign(points.begin(), points.end());
  g.vertices_.reserve(dichotomies.size());
  for (const auto& labels : dichotomies) {
    std::uint64_t mask = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] != 0.0) mask |= std::uint64_t{1} << i;
    }
    g.index_.emplace(mask, static_cast<std::uint32_t>(g.vertices_.size()));
    g.vertices_.push_back(mask);
  }
  for (std::uint32_t v = 0; v < g.vertices_.size(); ++v) {
    for (std::uint32_t i = 0; i < points.size(); ++i) {
      const auto it = g.index_.find(g.vertices_[v] ^ (std::uint64_t{1} << i));
      if (it != g.index_.end() && it->second > v) g.edges_.push_back({v, it->second, i});
    }
  }
  return g;
}

std::vector<Label> OneInclusionGraph::labels(std::size_t v) const {
  std::vector<Label> out(points_.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = label(v, i);
  return out;
}

std::optional<std::size_t> OneInclusionGraph::find(std::uint64_t mask) const {
  const auto it = index_.find(mask);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::size_t> OneInclusionGraph::edge_between(std::size_t v, std::size_t w) const {
  if (v > w) std::swap(v, w);
  const std::uint64_t diff = vertex(v) ^ vertex(w);
  if (std::popcount(diff) != 1) return std::nullopt;
  const auto it = std::lower_bound(edges_.begin(), edges_.end(), v,
                                   [](const OigEdge& e, std::size_t a) { return e.a < a; });
  for (auto e = it; e != edges_.end() && e->a == v; ++e) {
    if (e->b == w) return static_cast<std::size_t>(e - edges_.begin());
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Max flow

FlowNetwork::FlowNetwork(std::size_t nodes) : adjacency_(nodes) {}

std::size_t FlowNetwork::add_arc(std::size_t from, std::size_t to, std::int64_t capacity) {
  if (from >= adjacency_.size() || to >= adjacency_.size()) throw InputError("arc endpoint out of range");
  if (capacity < 0) throw InputError("negative arc capacity");
  const std::size_t id = arcs_.size() / 2;
  adjacency_[from].push_back(arcs_.size());
  arcs_.push_back({to, capacity, 0});
  adjacency_[to].push_back(arcs_.size());
  arcs_.push_back({from, 0, 0});
  return id;
}

std::int64_t FlowNetwork::max_flow(std::size_t source, std::size_t sink) {
  std::int64_t total = 0;
  std::vector<std::size_t> parent_arc(adjacency_.size());
  std::vector<char> seen(adjacency_.size());
  std::deque<std::size_t> queue;
  while (true) {
    std::fill(seen.begin(), seen.end(), 0);
    seen[source] = 1;
    queue.assign(1, source);
    while (!queue.empty() && !seen[sink]) {
      const auto u = queue.front();
      queue.pop_front();
      for (const auto a : adjacency_[u]) {
        const auto& arc = arcs_[a];
        if (!seen[arc.to] && arc.capacity - arc.flow > 0) {
          seen[arc.to] = 1;
          parent_arc[arc.to] = a;
          queue.push_back(arc.to);
        }
      }
    }
    if (!seen[sink]) return total;
    std::int64_t push = std::numeric_limits<std::int64_t>::max();
    for (auto v = sink; v != source; v = arcs_[parent_arc[v] ^ 1].to) {
      const auto& arc = arcs_[parent_arc[v]];
      push = std::min(push, arc.capacity - arc.flow);
    }
    for (auto v = sink; v != source; v = arcs_[parent_arc[v] ^ 1].to) {
      arcs_[parent_arc[v]].flow += push;
      arcs_[parent_arc[v] ^ 1].flow -= push;
    }
    total += push;
  }
}

// ---------------------------------------------------------------------------
// Assignments

ProbabilityAssignment::ProbabilityAssignment(const OneInclusionGraph& g, std::vector<double> forward)
    : edges_(g.edges()), forward_(std::move(forward)), out_weight_(g.vertex_count(), 0.0) {
  if (forward_.size() != edges_.size()) throw InputError("assignment needs one weight per edge");
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    const double p = forward_[e];
    if (!(p >= 0.0 && p <= 1.0)) throw InputError("assignment weight outside [0, 1]");
    out_weight_[edges_[e].a] += p;
    out_weight_[edges_[e].b] += 1.0 - p;
  }
}

double ProbabilityAssignment::operator()(std::size_t v, std::size_t w) const {
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    if (edges_[e].a == v && edges_[e].b == w) return forward_[e];
    if (edges_[e].b == v && edges_[e].a == w) return 1.0 - forward_[e];
  }
  return 0.0;
}

double ProbabilityAssignment::max_out_weight() const {
  return out_weight_.empty() ? 0.0 : *std::max_element(out_weight_.begin(), out_weight_.end());
}

namespace {

// source, one node per edge, one per vertex, sink
struct OrientationNetwork {
  FlowNetwork net;
  std::size_t source, sink;
  std::vector<std::size_t> to_a;  // arc edge -> endpoint a

  OrientationNetwork(const OneInclusionGraph& g, std::int64_t edge_cap, std::int64_t vertex_cap)
      : net(g.edge_count() + g.vertex_count() + 2),
        source(0),
        sink(g.edge_count() + g.vertex_count() + 1) {
    const std::size_t vbase = g.edge_count() + 1;
    to_a.reserve(g.edge_count());
    for (std::size_t e = 0; e < g.edge_count(); ++e) net.add_arc(source, 1 + e, edge_cap);
    for (std::size_t e = 0; e < g.edge_count(); ++e) {
      to_a.push_back(net.add_arc(1 + e, vbase + g.edges()[e].a, edge_cap));
      net.add_arc(1 + e, vbase + g.edges()[e].b, edge_cap);
    }
    for (std::size_t v = 0; v < g.vertex_count(); ++v) net.add_arc(vbase + v, sink, vertex_cap);
  }
};

}  // namespace

ProbabilityAssignment orient_bounded(const OneInclusionGraph& g, std::size_t d) {
  OrientationNetwork on(g, 1, static_cast<std::int64_t>(d));
  const auto flow = on.net.max_flow(on.source, on.sink);
  if (flow < static_cast<std::int64_t>(g.edge_count())) {
    throw InfeasibleError("no orientation with out-degree <= " + std::to_string(d) + ": routed " +
                          std::to_string(flow) + " of " + std::to_string(g.edge_count()) +
                          " edges");
  }
  // an edge routed to its endpoint v counts toward v's out-degree: P(v, w) = 1
  std::vector<double> forward(g.edge_count());
  for (std::size_t e = 0; e < g.edge_count(); ++e) {
    forward[e] = on.net.flow(on.to_a[e]) == 1 ? 1.0 : 0.0;
  }
  return ProbabilityAssignment(g, std::move(forward));
}

std::vector<std::size_t> consistent_vertices(const OneInclusionGraph& g,
                                             std::span<const Label> labels, std::size_t test) {
  if (labels.size() != g.points().size()) throw InputError("label vector has wrong length");
  if (test >= labels.size()) throw InputError("test coordinate out of range");
  std::uint64_t target = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (i == test) continue;
    if (labels[i] != 0.0 && labels[i] != 1.0) {
      throw RealizabilityError("non-binary label on a one-inclusion graph");
    }
    if (labels[i] == 1.0) target |= std::uint64_t{1} << i;
  }
  std::vector<std::size_t> out;
  for (const std::uint64_t candidate : {target, target | (std::uint64_t{1} << test)}) {
    if (const auto v = g.find(candidate)) out.push_back(*v);
  }
  if (out.empty()) throw RealizabilityError("training labels are not realized by the class");
  return out;
}

LabelLaw oig_predict(const OneInclusionGraph& g, const ProbabilityAssignment& p,
                     std::span<const Label> labels, std::size_t test) {
  const auto vs = consistent_vertices(g, labels, test);
  if (vs.size() == 1) return LabelLaw::point(g.label(vs[0], test));
  const std::size_t v = vs[0];
  const std::size_t w = vs[1];
  LabelLaw law;
  const double to_w = p(v, w);
  if (to_w > 0.0) law.add(g.label(w, test), to_w);
  if (to_w < 1.0) law.add(g.label(v, test), 1.0 - to_w);
  return law;
}

double oig_loo_error(const OneInclusionGraph& g, const ProbabilityAssignment& p,
                     std::size_t v_star) {
  if (v_star >= g.vertex_count()) throw InputError("v_star is not a vertex");
  return p.out_weight(v_star) / static_cast<double>(g.points().size());
}

// ---------------------------------------------------------------------------
// Density

namespace {

Rational density_by_enumeration(const OneInclusionGraph& g) {
  const std::size_t nv = g.vertex_count();
  std::vector<std::uint32_t> adj(nv, 0);
  for (const auto& e : g.edges()) {
    adj[e.a] |= 1U << e.b;
    adj[e.b] |= 1U << e.a;
  }
  Rational best(0, 1);
  for (std::uint32_t w = 1; w < (1U << nv); ++w) {
    std::int64_t twice_edges = 0;
    for (std::uint32_t rest = w; rest != 0; rest &= rest - 1) {
      twice_edges += std::popcount(adj[std::countr_zero(rest)] & w);
    }
    const Rational r(twice_edges / 2, std::popcount(w));
    if (r > best) best = r;
  }
  return best;
}

// density <= p/q iff the network saturates every source arc
bool density_at_most(const OneInclusionGraph& g, std::int64_t p, std::int64_t q) {
  OrientationNetwork on(g, q, p);
  return on.net.max_flow(on.source, on.sink) == q * static_cast<std::int64_t>(g.edge_count());
}

Rational density_by_flow(const OneInclusionGraph& g) {
  const auto ne = static_cast<std::int64_t>(g.edge_count());
  const auto nv = static_cast<std::int64_t>(g.vertex_count());
  if (ne == 0) return Rational(0, 1);
  std::vector<Rational> candidates;
  for (std::int64_t b = 1; b <= nv; ++b) {
    for (std::int64_t a = 0; a <= ne; ++a) candidates.emplace_back(a, b);
  }
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
  // smallest candidate the density does not exceed
  std::size_t lo = 0;
  std::size_t hi = candidates.size() - 1;
  while (lo < hi) {
    const std::size_t mid = (lo + hi) / 2;
    if (density_at_most(g, candidates[mid].num(), candidates[mid].den())) {
      hi = mid;
    } else {
      lo = mid + 1;
    }
  }
  return candidates[lo];
}

}  // namespace

Rational max_subgraph_density(const OneInclusionGraph& g, DensityMethod method, std::size_t cap) {
  if (g.vertex_count() == 0) return Rational(0, 1);
  if (method == DensityMethod::automatic) {
    method = g.vertex_count() <= cap ? DensityMethod::enumeration : DensityMethod::flow;
  }
  if (method == DensityMethod::enumeration) {
    if (g.vertex_count() > std::min<std::size_t>(cap, 31)) {
      throw BudgetError("subset enumeration for subgraph density",
                        static_cast<double>(g.vertex_count()), static_cast<double>(cap));
    }
    return density_by_enumeration(g);
  }
  return density_by_flow(g);
}

// ---------------------------------------------------------------------------
// Learner

OigLearner::OigLearner(HypothesisClass cls, std::optional<std::size_t> d)
    : cls_(std::move(cls)), d_(d ? *d : vc_dimension(cls_)) {
  if (!cls_.is_binary()) throw InputError("the one-inclusion graph learner needs a binary class");
}

std::shared_ptr<const OigEntry> OigLearner::entry(std::span<const InputId> points) const {
  std::vector<InputId> key(points.begin(), points.end());
  std::sort(key.begin(), key.end());
  {
    std::shared_lock lock(mutex_);
    const auto it = memo_.find(key);
    if (it != memo_.end()) return it->second;
  }
  auto graph = OneInclusionGraph::build(cls_, key);
  auto assignment = orient_bounded(graph, d_);
  auto built = std::make_shared<const OigEntry>(OigEntry{std::move(graph), std::move(assignment)});
  std::unique_lock lock(mutex_);
  return memo_.try_emplace(std::move(key), std::move(built)).first->second;
}

std::vector<std::shared_ptr<const OigEntry>> OigLearner::cached() const {
  std::shared_lock lock(mutex_);
  std::vector<std::shared_ptr<const OigEntry>> out;
  out.reserve(memo_.size());
  for (const auto& [key, e] : memo_) out.push_back(e);
  return out;
}

LabelLaw OigLearner::predict(std::span<const LabeledExample> train, InputId x) const {
  std::vector<InputId> points(train.size() + 1);
  for (std::size_t i = 0; i < train.size(); ++i) points[i] = train[i].input;
  points.back() = x;
  std::sort(points.begin(), points.end());
  const auto e = entry(points);

  // align training labels with the sorted points; x takes its first slot
  Sample sorted(train.begin(), train.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<Label> labels(points.size(), 0.0);
  std::size_t test = points.size();
  for (std::size_t i = 0, j = 0; i < points.size(); ++i) {
    if (test == points.size() && points[i] == x) {
      test = i;
    } else {
      labels[i] = sorted[j++].label;
    }
  }
  return oig_predict(e->graph, e->assignment, labels, test);
}

std::optional<double> OigLearner::loo_certificate(std::span<const LabeledExample>) const {
  return static_cast<double>(d_);
}

}  // namespace loocmi
