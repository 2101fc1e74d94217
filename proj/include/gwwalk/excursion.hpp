#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "gwwalk/error.hpp"
#include "gwwalk/marked_tree.hpp"
#include "gwwalk/rng.hpp"
#include "gwwalk/walk.hpp"

namespace gwwalk {

inline constexpr std::uint64_t kInversionThreshold = 64;

/// Number of failures before the k-th success of Bernoulli(p_success) trials.
template <class Gen>
std::uint64_t sample_negative_binomial(std::uint64_t k, double p_success, Gen& g) {
  if (p_success >= 1.0 || k == 0) return 0;
  if (k <= kInversionThreshold) {
    const double log_fail = std::log1p(-p_success);
    std::uint64_t total = 0;
    for (std::uint64_t i = 0; i < k; ++i)
      total += static_cast<std::uint64_t>(std::floor(std::log(uniform_open0(g)) / log_fail));
    return total;
  }
  std::gamma_distribution<double> gamma(static_cast<double>(k), (1.0 - p_success) / p_success);
  double rate = gamma(g);
  if (rate <= 0.0) return 0;
  return std::poisson_distribution<std::uint64_t>(rate)(g);
}

/// Children edge counts below a vertex crossed k times: the total is negative
/// binomial (k, p_back), then split multinomially in proportion to p_children.
template <class Gen>
void sample_children_counts(std::uint64_t k, double p_back, std::span<const double> p_children, Gen& g,
                            std::vector<std::uint64_t>& out) {
  out.assign(p_children.size(), 0);
  if (p_children.empty()) return;
  std::uint64_t remaining = sample_negative_binomial(k, p_back, g);
  double mass = 0.0;
  for (double q : p_children) mass += q;
  for (std::size_t i = 0; i + 1 < p_children.size() && remaining > 0; ++i) {
    double q = mass > 0.0 ? std::clamp(p_children[i] / mass, 0.0, 1.0) : 0.0;
    std::uint64_t ki = q >= 1.0 ? remaining : std::binomial_distribution<std::uint64_t>(remaining, q)(g);
    out[i] = ki;
    remaining -= ki;
    mass -= p_children[i];
  }
  out.back() += remaining;
}

struct ExcursionNode {
  NodeId env = kRoot;
  std::uint64_t count = 0;
  std::uint32_t parent = std::numeric_limits<std::uint32_t>::max();
  std::uint32_t first_child = 0;
  std::uint32_t n_children = 0;
  std::uint32_t depth = 0;
  bool expanded = false;
};

/// Visited part of the environment after tau^p with its edge counts N_x^{tau^p}.
/// Node 0 is the root with count p; children of a node are contiguous and in
/// child-index order. Unexpanded nodes (truncated exploration) have no children
/// recorded even if the walk went below them.
struct ExcursionTree {
  std::uint64_t p = 0;
  std::vector<ExcursionNode> nodes;

  std::uint64_t total_below_root() const {
    std::uint64_t s = 0;
    for (std::size_t i = 1; i < nodes.size(); ++i) s += nodes[i].count;
    return s;
  }
  /// tau^p = 2 sum_{x != e} N_x + 2p, valid for a fully expanded tree.
  std::uint64_t tau() const { return 2 * total_below_root() + 2 * p; }
  bool fully_expanded() const {
    return std::all_of(nodes.begin(), nodes.end(), [](const ExcursionNode& n) { return n.expanded; });
  }
};

struct ExcursionOptions {
  /// When set to l, vertices deeper than l with count 1 are kept but not expanded.
  std::optional<std::uint32_t> truncate_below;
  /// Vertices at this depth are kept but not expanded; counts above it are exact.
  std::uint32_t max_depth = std::numeric_limits<std::uint32_t>::max();
  std::size_t max_nodes = std::size_t{1} << 28;
};

namespace detail {
inline bool should_expand(const ExcursionNode& n, const ExcursionOptions& opt) {
  if (n.depth >= opt.max_depth) return false;
  if (!opt.truncate_below) return true;
  return n.depth <= *opt.truncate_below || n.count >= 2;
}
}  // namespace detail

/// Direct sampler of the multi-type Galton-Watson excursion tree started from
/// type p at the root, growing the environment lazily. Each vertex draws its
/// children counts from its own substream (one draw of g, keyed by the vertex),
/// so a truncated exploration is an exact sub-tree of the full one.
template <class Gen>
ExcursionTree sample_excursion_tree(MarkedTree& tree, std::uint64_t p, Gen& g, const ExcursionOptions& opt = {}) {
  ExcursionTree ex;
  ex.p = p;
  ExcursionNode root;
  root.count = p;
  ex.nodes.push_back(root);
  std::vector<std::uint32_t> stack{0};
  std::vector<std::uint64_t> counts;
  std::vector<double> probs;
  const std::uint64_t base = g();
  while (!stack.empty()) {
    std::uint32_t i = stack.back();
    stack.pop_back();
    if (!detail::should_expand(ex.nodes[i], opt)) continue;
    const NodeId xe = ex.nodes[i].env;
    auto kids = tree.grow(xe);
    ex.nodes[i].expanded = true;
    if (kids.size() == 0) continue;
    probs.resize(kids.size());
    for (std::uint32_t c = 0; c < kids.size(); ++c) probs[c] = tree.prob_to_child(xe, c);
    SplitMix64 local(combine_keys(base, tree.node(xe).key));
    sample_children_counts(ex.nodes[i].count, tree.prob_to_parent(xe), probs, local, counts);
    auto first = static_cast<std::uint32_t>(ex.nodes.size());
    std::uint32_t n = 0;
    for (std::uint32_t c = 0; c < kids.size(); ++c) {
      if (counts[c] == 0) continue;
      ExcursionNode child;
      child.env = kids.first + c;
      child.count = counts[c];
      child.parent = i;
      child.depth = ex.nodes[i].depth + 1;
      ex.nodes.push_back(child);
      ++n;
    }
    if (ex.nodes.size() > opt.max_nodes)
      throw Error(ErrorCode::StepBudgetExceeded, "excursion tree exceeded " + std::to_string(opt.max_nodes) + " nodes");
    ex.nodes[i].first_child = first;
    ex.nodes[i].n_children = n;
    for (std::uint32_t c = n; c-- > 0;) stack.push_back(first + c);
  }
  return ex;
}

struct ExcursionSummary {
  std::uint64_t p = 0;
  std::uint64_t sum_counts = 0;  // sum_{x != e} N_x^{tau^p}
  std::uint64_t visited = 1;     // R_{tau^p}, the root included
  std::uint64_t tau() const { return 2 * sum_counts + 2 * p; }
};

/// Same law and coupling as sample_excursion_tree, keeping only the totals
/// (memory is the DFS stack rather than the tree).
template <class Gen>
ExcursionSummary sample_excursion_summary(MarkedTree& tree, std::uint64_t p, Gen& g,
                                          std::uint64_t max_sum = std::numeric_limits<std::uint64_t>::max()) {
  ExcursionSummary s;
  s.p = p;
  struct Item {
    NodeId env;
    std::uint64_t count;
  };
  std::vector<Item> stack{{kRoot, p}};
  std::vector<std::uint64_t> counts;
  std::vector<double> probs;
  const std::uint64_t base = g();
  while (!stack.empty()) {
    Item it = stack.back();
    stack.pop_back();
    auto kids = tree.grow(it.env);
    if (kids.size() == 0) continue;
    probs.resize(kids.size());
    for (std::uint32_t c = 0; c < kids.size(); ++c) probs[c] = tree.prob_to_child(it.env, c);
    SplitMix64 local(combine_keys(base, tree.node(it.env).key));
    sample_children_counts(it.count, tree.prob_to_parent(it.env), probs, local, counts);
    for (std::uint32_t c = 0; c < kids.size(); ++c) {
      if (counts[c] == 0) continue;
      s.sum_counts += counts[c];
      ++s.visited;
      stack.push_back({kids.first + c, counts[c]});
    }
    if (s.sum_counts > max_sum) throw Error(ErrorCode::StepBudgetExceeded, "excursion exceeded the count budget");
  }
  return s;
}

/// Excursion tree read off a walk stopped at tau^p.
inline ExcursionTree excursion_from_walk(const MarkedTree& tree, const WalkRecord& r) {
  ExcursionTree ex;
  ex.p = r.down_at(kRoot);
  ExcursionNode root;
  root.count = ex.p;
  ex.nodes.push_back(root);
  for (std::uint32_t i = 0; i < ex.nodes.size(); ++i) {
    const NodeId xe = ex.nodes[i].env;
    ex.nodes[i].expanded = true;
    if (!tree.grown(xe)) continue;
    auto first = static_cast<std::uint32_t>(ex.nodes.size());
    std::uint32_t n = 0;
    for (NodeId c : tree.children(xe)) {
      if (r.down_at(c) == 0) continue;
      ExcursionNode child;
      child.env = c;
      child.count = r.down_at(c);
      child.parent = i;
      child.depth = ex.nodes[i].depth + 1;
      ex.nodes.push_back(child);
      ++n;
    }
    ex.nodes[i].first_child = first;
    ex.nodes[i].n_children = n;
  }
  return ex;
}

/// Regeneration set B^p_l: vertices x with |x| > l, N_x = 1 and N >= 2 at every
/// ancestor strictly between generation l and x.
struct RegenSet {
  std::vector<NodeId> members;  // environment node ids
  std::vector<std::uint32_t> indices;  // positions in the excursion tree
  std::size_t size() const noexcept { return members.size(); }
};

inline RegenSet extract_regen(const ExcursionTree& ex, std::uint32_t level) {
  RegenSet out;
  struct Item {
    std::uint32_t i;
    bool ok;
  };
  std::vector<Item> stack{{0, true}};
  while (!stack.empty()) {
    auto [i, ok] = stack.back();
    stack.pop_back();
    const ExcursionNode& n = ex.nodes[i];
    if (n.depth > level && n.count == 1 && ok) {
      out.members.push_back(n.env);
      out.indices.push_back(i);
      continue;
    }
    bool child_ok = ok && (n.depth <= level || n.count >= 2);
    if (!child_ok) continue;
    for (std::uint32_t c = n.n_children; c-- > 0;) stack.push_back({n.first_child + c, true});
  }
  return out;
}

inline RegenSet extract_regen(const MarkedTree& tree, const WalkRecord& r, std::uint32_t level) {
  return extract_regen(excursion_from_walk(tree, r), level);
}

/// Predicate applied to every node with an explicit ancestor scan.
inline std::vector<std::uint32_t> naive_regen_filter(const ExcursionTree& ex, std::uint32_t level) {
  std::vector<std::uint32_t> out;
  for (std::uint32_t i = 0; i < ex.nodes.size(); ++i) {
    const ExcursionNode& n = ex.nodes[i];
    if (n.depth <= level || n.count != 1) continue;
    bool ok = true;
    for (std::uint32_t a = n.parent; a != std::numeric_limits<std::uint32_t>::max(); a = ex.nodes[a].parent)
      if (ex.nodes[a].depth > level && ex.nodes[a].count < 2) ok = false;
    if (ok) out.push_back(i);
  }
  return out;
}

inline bool is_antichain(const ExcursionTree& ex, const RegenSet& s) {
  std::unordered_set<std::uint32_t> members(s.indices.begin(), s.indices.end());
  for (std::uint32_t i : s.indices)
    for (std::uint32_t a = ex.nodes[i].parent; a != std::numeric_limits<std::uint32_t>::max();
         a = ex.nodes[a].parent)
      if (members.count(a)) return false;
  return true;
}

/// Newick-like dump: "(child,child)label[N=..,V=..];" with label "x<env id>".
inline std::string to_newick(const ExcursionTree& ex, const MarkedTree& tree) {
  std::ostringstream os;
  os.precision(17);
  struct Frame {
    std::uint32_t i;
    std::uint32_t next_child;
  };
  std::vector<Frame> stack{{0, 0}};
  while (!stack.empty()) {
    Frame& f = stack.back();
    const ExcursionNode& n = ex.nodes[f.i];
    if (f.next_child < n.n_children) {
      os << (f.next_child == 0 ? '(' : ',');
      std::uint32_t c = n.first_child + f.next_child++;
      stack.push_back({c, 0});
      continue;
    }
    if (n.n_children > 0) os << ')';
    os << 'x' << n.env << "[N=" << n.count << ",V=" << tree.potential(n.env) << ']';
    stack.pop_back();
  }
  os << ';';
  return os.str();
}

/// Fraction of walks on a frozen environment for which B^p_l is contained in
/// B^{p+1}_l for every p < p_max.
template <class Gen>
double regen_monotonicity_diag(MarkedTree& tree, std::size_t p_max, std::uint32_t level, std::size_t walks,
                               Gen& g, std::uint64_t budget = kDefaultStepBudget) {
  std::size_t monotone = 0;
  for (std::size_t w = 0; w < walks; ++w) {
    WalkRecord r;
    std::vector<NodeId> prev;
    bool ok = true;
    for (std::size_t p = 1; p <= p_max; ++p) {
      run_until_tau(tree, r, p, g, budget);
      auto cur = extract_regen(tree, r, level).members;
      std::sort(cur.begin(), cur.end());
      if (!std::includes(cur.begin(), cur.end(), prev.begin(), prev.end())) ok = false;
      prev = std::move(cur);
    }
    monotone += ok;
  }
  return static_cast<double>(monotone) / static_cast<double>(walks);
}

struct RegenDensityRow {
  std::uint64_t n = 0;
  std::uint32_t level = 0;
  double mean_sup_deviation = 0.0;
  double se = 0.0;
  std::size_t environments = 0;
};

/// Mean over environments of sup_alpha |B^{floor(alpha n^r)}_l / n^r - alpha W|
/// with l = ceil((log n)^2) and W the pruned depth-20 proxy. Each alpha uses an
/// independent excursion tree on the same environment.
inline std::vector<RegenDensityRow> regen_density_diag(const MarkLaw& law, double r,
                                                       const std::vector<double>& alphas,
                                                       const std::vector<std::uint64_t>& ns,
                                                       std::size_t environments, std::uint64_t seed) {
  std::vector<RegenDensityRow> rows;
  for (std::uint64_t n : ns) {
    RegenDensityRow row;
    row.n = n;
    row.level = static_cast<std::uint32_t>(std::ceil(std::pow(std::log(static_cast<double>(n)), 2.0)));
    double s = 0.0, s2 = 0.0;
    const double scale = std::pow(static_cast<double>(n), r);
    for (std::size_t e = 0; e < environments; ++e) {
      MarkedTree tree(law, substream_seed(seed, "regen-density", e, StreamRole::Environment));
      const double w = tree.w_infinity_proxy(20, 1e-3);
      SplitMix64 g(substream_seed(seed, "regen-density", e * 1000003 + n, StreamRole::Walk));
      ExcursionOptions opt;
      opt.truncate_below = row.level;
      double sup = 0.0;
      for (double a : alphas) {
        auto p = static_cast<std::uint64_t>(std::max(1.0, std::floor(a * scale)));
        auto ex = sample_excursion_tree(tree, p, g, opt);
        double b = static_cast<double>(extract_regen(ex, row.level).size());
        sup = std::max(sup, std::abs(b / scale - a * w));
      }
      s += sup;
      s2 += sup * sup;
    }
    row.environments = environments;
    row.mean_sup_deviation = s / environments;
    row.se = environments > 1 ? std::sqrt(std::max(0.0, s2 / environments - row.mean_sup_deviation * row.mean_sup_deviation) /
                                          (environments - 1))
                              : 0.0;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace gwwalk
