#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "gwwalk/error.hpp"
#include "gwwalk/marked_tree.hpp"
#include "gwwalk/rng.hpp"

namespace gwwalk {

inline constexpr std::uint64_t kDefaultStepBudget = 10'000'000'000ULL;

/// Streaming bookkeeping of one walk path started at X_0 = e.
///
/// Counters are dense vectors indexed by node id; they grow with the explored
/// part of the environment, which is proportional to the range.
struct WalkRecord {
  std::uint64_t time = 0;
  NodeId position = kRoot;
  /// tau[j]: j-th crossing time of (e*, e); tau[0] = 0.
  std::vector<std::uint64_t> tau{0};
  /// Literal j-th hitting time of e*.
  std::vector<std::uint64_t> hit_literal{0};
  /// T^j on the clock that skips the forced e* -> e steps: T^j = tau^j - j.
  std::vector<std::uint64_t> hit{0};
  /// R at the j-th hit of e*.
  std::vector<std::uint64_t> range_at_hit{1};
  /// Local time at e*, counting X_1..X_m.
  std::uint64_t estar_local = 0;
  std::uint64_t range = 1;
  /// Visits X_1..X_m to each site.
  std::vector<std::uint32_t> local;
  /// N_x^m: crossings x* -> x (for the root, e* -> e).
  std::vector<std::uint32_t> down;
  /// Crossings x -> x*.
  std::vector<std::uint32_t> up;

  void reset() {
    time = 0;
    position = kRoot;
    tau.assign(1, 0);
    hit_literal.assign(1, 0);
    hit.assign(1, 0);
    range_at_hit.assign(1, 1);
    estar_local = 0;
    range = 1;
    local.clear();
    down.clear();
    up.clear();
  }

  std::size_t completed_excursions() const noexcept { return tau.size() - 1; }
  std::size_t hits() const noexcept { return hit.size() - 1; }

  std::uint32_t down_at(NodeId x) const { return x < down.size() ? down[x] : 0; }
  std::uint32_t up_at(NodeId x) const { return x < up.size() ? up[x] : 0; }
  std::uint32_t local_at(NodeId x) const { return x < local.size() ? local[x] : 0; }

  bool operator==(const WalkRecord&) const = default;
};

namespace detail {
inline void fit_counters(WalkRecord& r, std::size_t n) {
  if (r.down.size() < n) {
    std::size_t cap = std::max(n, r.down.size() * 3 / 2);
    r.local.resize(cap, 0);
    r.down.resize(cap, 0);
    r.up.resize(cap, 0);
  }
}
}  // namespace detail

/// One step of the quenched walk; grows the environment on demand.
template <class Gen>
inline void step(MarkedTree& tree, WalkRecord& r, Gen& g) {
  detail::fit_counters(r, tree.size());
  if (r.position == kEStar) {
    ++r.time;
    r.position = kRoot;
    r.tau.push_back(r.time);
    ++r.down[kRoot];
    ++r.local[kRoot];
    return;
  }
  const NodeId x = r.position;
  if (!tree.grown(x)) {
    tree.grow(x);
    detail::fit_counters(r, tree.size());
  }
  const auto w = tree.cumulative_weights(x);
  const double u = uniform01(g);
  ++r.time;
  if (u < w[0]) {
    ++r.up[x];
    if (x == kRoot) {
      r.position = kEStar;
      ++r.estar_local;
      r.hit_literal.push_back(r.time);
      const std::uint64_t j = r.hit_literal.size() - 1;
      r.hit.push_back(r.time + 1 - j);
      r.range_at_hit.push_back(r.range);
    } else {
      r.position = tree.parent(x);
      ++r.local[r.position];
    }
    return;
  }
  std::size_t i = 1;
  while (i + 1 < w.size() && w[i] <= u) ++i;
  const NodeId y = tree.node(x).first_child + static_cast<NodeId>(i - 1);
  if (r.down[y]++ == 0) ++r.range;
  ++r.local[y];
  r.position = y;
}

/// Advances until tau^p is recorded.
template <class Gen>
inline void run_until_tau(MarkedTree& tree, WalkRecord& r, std::size_t p, Gen& g,
                          std::uint64_t budget = kDefaultStepBudget) {
  while (r.completed_excursions() < p) {
    if (r.time >= budget)
      throw Error(ErrorCode::StepBudgetExceeded, "walk exceeded " + std::to_string(budget) + " steps");
    step(tree, r, g);
  }
}

/// Advances until the p-th hit of e* (the walk then sits at e*).
template <class Gen>
inline void run_until_hit(MarkedTree& tree, WalkRecord& r, std::size_t p, Gen& g,
                          std::uint64_t budget = kDefaultStepBudget) {
  while (r.hits() < p) {
    if (r.time >= budget)
      throw Error(ErrorCode::StepBudgetExceeded, "walk exceeded " + std::to_string(budget) + " steps");
    step(tree, r, g);
  }
}

/// Advances exactly to step m.
template <class Gen>
inline void run_until_time(MarkedTree& tree, WalkRecord& r, std::uint64_t m, Gen& g,
                           std::uint64_t budget = kDefaultStepBudget) {
  if (m > budget)
    throw Error(ErrorCode::StepBudgetExceeded, "horizon " + std::to_string(m) + " exceeds the budget");
  while (r.time < m) step(tree, r, g);
}

/// Exact per-path identities. Returns human-readable violations (empty when
/// the record is consistent).
inline std::vector<std::string> check_walk_invariants(const WalkRecord& r) {
  std::vector<std::string> bad;
  auto fail = [&](std::string s) { bad.push_back(std::move(s)); };
  if (r.tau[0] != 0 || r.hit[0] != 0) fail("tau^0 or T^0 is not 0");
  for (std::size_t j = 1; j < r.tau.size(); ++j)
    if (r.tau[j] <= r.tau[j - 1]) fail("tau not strictly increasing at " + std::to_string(j));
  for (std::size_t j = 1; j < r.hit.size(); ++j)
    if (r.hit[j] <= r.hit[j - 1]) fail("T not strictly increasing at " + std::to_string(j));
  for (std::size_t p = 1; p <= r.completed_excursions() && p < r.hit.size(); ++p)
    if (r.hit[p] != r.tau[p] - p) fail("T^p != tau^p - p at p=" + std::to_string(p));
  for (std::size_t p = 1; p < r.hit_literal.size() && p < r.tau.size(); ++p)
    if (r.tau[p] != r.hit_literal[p] + 1) fail("tau^p != literal T^p + 1 at p=" + std::to_string(p));
  // L^m at e* equals the (e*, e) crossings up to m + 1.
  std::uint64_t crossings = r.completed_excursions() + (r.position == kEStar ? 1 : 0);
  if (r.estar_local != crossings) fail("L^m != crossings of (e*,e) up to m+1");
  std::uint64_t visits = r.estar_local, edges = 0, visited = 1;
  for (std::size_t x = 0; x < r.local.size(); ++x) {
    visits += r.local[x];
    edges += std::uint64_t{r.down[x]} + r.up[x];
    if (x != kRoot && r.down[x] > 0) ++visited;
  }
  if (visits != r.time) fail("site local times do not sum to m");
  if (edges != r.time) fail("edge crossings do not sum to m");
  if (visited != r.range) fail("range does not match the visited set");
  for (std::size_t j = 1; j < r.range_at_hit.size(); ++j)
    if (r.range_at_hit[j] < r.range_at_hit[j - 1]) fail("R decreased");
  return bad;
}

/// Extra identities valid right after run_until_tau(p): N_e = p, the walk is
/// at e, and every edge below e was crossed as often up as down.
inline std::vector<std::string> check_excursion_closure(const WalkRecord& r, std::size_t p) {
  std::vector<std::string> bad = check_walk_invariants(r);
  if (r.position != kRoot) bad.emplace_back("walk not at e after tau^p");
  if (r.down_at(kRoot) != p) bad.emplace_back("N_e != p");
  if (r.tau.size() != p + 1 || r.tau.back() != r.time) bad.emplace_back("tau^p is not the current time");
  for (std::size_t x = 1; x < r.down.size(); ++x)
    if (r.down[x] != r.up[x]) bad.emplace_back("unbalanced edge at node " + std::to_string(x));
  std::uint64_t below = 0;
  for (std::size_t x = 1; x < r.down.size(); ++x) below += r.down[x];
  if (r.time != 2 * below + 2 * p) bad.emplace_back("tau^p != 2 sum N_x + 2p");
  return bad;
}

struct TimeSnapshot {
  std::uint64_t m, local_estar, range;
};

struct ExcursionSnapshot {
  std::uint64_t p, tau, hit, range_at_hit;
};

inline ExcursionSnapshot excursion_snapshot(const WalkRecord& r, std::size_t p) {
  return {p, p < r.tau.size() ? r.tau[p] : 0, r.hit.at(p), r.range_at_hit.at(p)};
}

inline void write_trajectory_header(std::ostream& os) { os << "trial,seed,m_or_p,L,R,tau,T\n"; }

inline void write_time_row(std::ostream& os, std::uint64_t trial, std::uint64_t seed, const TimeSnapshot& s) {
  os << trial << ',' << seed << ',' << s.m << ',' << s.local_estar << ',' << s.range << ",,\n";
}

inline void write_excursion_row(std::ostream& os, std::uint64_t trial, std::uint64_t seed,
                                const ExcursionSnapshot& s) {
  os << trial << ',' << seed << ',' << s.p << ",," << s.range_at_hit << ',' << s.tau << ',' << s.hit << '\n';
}

}  // namespace gwwalk
