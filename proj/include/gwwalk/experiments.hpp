#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gwwalk/error.hpp"
#include "gwwalk/exact_oracle.hpp"
#include "gwwalk/excursion.hpp"
#include "gwwalk/forest.hpp"
#include "gwwalk/law_io.hpp"
#include "gwwalk/limit_laws.hpp"
#include "gwwalk/mark_law.hpp"
#include "gwwalk/marked_tree.hpp"
#include "gwwalk/parallel.hpp"
#include "gwwalk/rng.hpp"
#include "gwwalk/stats.hpp"
#include "gwwalk/walk.hpp"

namespace gwwalk {

using json = nlohmann::json;

/// One experiment configuration: the law, the seed discipline, parallelism,
/// the output directory and one optional JSON section per command.
struct Config {
  json doc = json::object();
  MarkLaw law;
  std::uint64_t seed = 1;
  unsigned threads = 1;
  std::filesystem::path out = ".";

  json section(const std::string& name) const {
    return doc.contains(name) && doc.at(name).is_object() ? doc.at(name) : json::object();
  }
};

template <class T>
T opt(const json& j, const char* key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("config key '") + key + "': " + e.what());
  }
}

inline std::size_t opt_count(const json& j, const char* key, std::size_t fallback) {
  return static_cast<std::size_t>(opt<double>(j, key, static_cast<double>(fallback)));
}

/// Builds a Config. `base_dir` resolves a relative "law_file".
inline Config config_from_json(const json& doc, const std::filesystem::path& base_dir = ".") {
  Config c;
  c.doc = doc;
  if (doc.contains("law")) c.law = law_from_json(doc.at("law"));
  else if (doc.contains("law_file")) c.law = load_law((base_dir / doc.at("law_file").get<std::string>()).string());
  else throw Error(ErrorCode::InvalidArgument, "config needs \"law\" or \"law_file\"");
  c.seed = opt<std::uint64_t>(doc, "seed", 1);
  c.threads = opt<unsigned>(doc, "threads", 1);
  c.out = opt<std::string>(doc, "out", ".");
  return c;
}

inline Config load_config(const std::string& path) {
  return config_from_json(read_json_file(path), std::filesystem::path(path).parent_path());
}

namespace detail {

inline std::ofstream open_out(const Config& c, const std::string& name) {
  std::filesystem::create_directories(c.out);
  std::ofstream os(c.out / name);
  if (!os) throw Error(ErrorCode::Io, "cannot write " + (c.out / name).string());
  os.precision(12);
  return os;
}

inline Verdict verdict(std::string experiment, std::string statistic, double value, double threshold, bool pass,
                       std::size_t n, std::vector<double> ses = {}, double lo = kInf, double hi = kInf) {
  Verdict v;
  v.experiment = std::move(experiment);
  v.statistic = std::move(statistic);
  v.value = value;
  v.threshold = threshold;
  v.pass = pass;
  v.n_samples = n;
  v.ses = std::move(ses);
  v.ci_lo = std::isinf(lo) ? value : lo;
  v.ci_hi = std::isinf(hi) ? value : hi;
  return v;
}

inline void finish(const Config& c, const std::string& name, const std::vector<Verdict>& rows) {
  std::filesystem::create_directories(c.out);
  write_verdicts((c.out / (name + ".verdicts.json")).string(), rows);
}

inline std::vector<double> doubles(const json& j, const char* key, std::vector<double> fallback) {
  return opt<std::vector<double>>(j, key, std::move(fallback));
}

/// Draws an environment surviving to `depth` (the P* proxy). Returns the
/// number of rejected draws.
inline std::size_t draw_surviving(MarkedTree& env, std::uint64_t seed, std::string_view label, std::uint64_t trial,
                                  std::uint32_t depth) {
  for (std::size_t attempt = 0;; ++attempt) {
    env.reset(substream_seed(seed, label, (trial << 12) | attempt, StreamRole::Environment));
    if (env.survives_to(depth)) return attempt;
    if (attempt >= 4095) throw Error(ErrorCode::Subcritical, "no surviving environment in 4096 draws");
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Constants

struct Constants {
  double kappa = kInf;
  Regime regime = Regime::Diffusive;
  double c_inf = 0.0, c_inf_se = 0.0;
  double c_inf_bold = 0.0, c_inf_bold_se = 0.0;
  double c_kappa = 0.0, c_kappa_lo = 0.0, c_kappa_hi = 0.0;
  std::optional<double> c0;
  bool estimated = false;
};

inline bool near_critical(double kappa) { return std::abs(kappa - 2.0) < 1e-9; }

/// Constants from the config's "constants" object when present, otherwise
/// Monte Carlo estimates sized by "constants_samples".
inline Constants resolve_constants(const Config& c, TailConstant* tail_out = nullptr,
                                   std::vector<double>* b_out = nullptr) {
  Constants k;
  k.kappa = solve_kappa(c.law);
  k.regime = classify_regime(k.kappa);
  k.c0 = c0_exact(c.law);
  const json given = c.section("constants");
  const json sizes = c.section("constants_samples");
  const bool need_tail = k.kappa <= 2.0 + 1e-9;
  if (given.contains("c_inf") && given.contains("c_inf_bold") && (!need_tail || given.contains("c_kappa")) &&
      !tail_out && !b_out) {
    k.c_inf = given.at("c_inf").get<double>();
    k.c_inf_bold = given.at("c_inf_bold").get<double>();
    k.c_kappa = opt<double>(given, "c_kappa", 0.0);
    k.c_kappa_lo = k.c_kappa_hi = k.c_kappa;
    return k;
  }
  k.estimated = true;
  auto dm = estimate_discounted_moments(c.law, opt_count(sizes, "discounted", 1'000'000), opt<double>(sizes, "eps", 1e-12),
                                        c.seed);
  k.c_inf = dm.c_inf.value;
  k.c_inf_se = dm.c_inf.se;
  k.c_inf_bold = dm.c_inf_bold.value;
  k.c_inf_bold_se = dm.c_inf_bold.se;
  if (need_tail || tail_out || b_out) {
    const std::size_t nb = opt_count(sizes, "b10", 10'000'000);
    auto b = sample_b10_batch(c.law, nb, c.seed, "constants-b10");
    auto grid = tail_window_grid(b, opt<double>(sizes, "window_hi_count", 1000.0),
                                 opt<double>(sizes, "window_lo_count", 50.0), opt_count(sizes, "grid_points", 12));
    const double kk = std::isfinite(k.kappa) ? k.kappa : 2.0;
    auto tail = estimate_c_kappa(b, kk, grid, c.seed, opt_count(sizes, "hill_k", static_cast<std::size_t>(std::sqrt(nb))));
    k.c_kappa = tail.c_kappa;
    k.c_kappa_lo = tail.ci_lo;
    k.c_kappa_hi = tail.ci_hi;
    if (tail_out) *tail_out = tail;
    if (b_out) *b_out = std::move(b);
  }
  return k;
}

inline json to_json(const Constants& k) {
  json j{{"kappa", k.kappa},
         {"regime", to_string(k.regime)},
         {"c_inf", k.c_inf},
         {"c_inf_se", k.c_inf_se},
         {"c_inf_bold", k.c_inf_bold},
         {"c_inf_bold_se", k.c_inf_bold_se},
         {"c_kappa", k.c_kappa},
         {"c_kappa_ci", {k.c_kappa_lo, k.c_kappa_hi}},
         {"estimated", k.estimated}};
  j["c0"] = k.c0 ? json(*k.c0) : json(nullptr);
  return j;
}

// Limit normalizations per regime.
namespace detail {

inline double gamma_abs(double kappa) { return std::abs(std::tgamma(1.0 - kappa)); }

/// Z = W L^n / scale(n) has limit S(1, Y~).
inline double local_time_scale(const Constants& k, double n) {
  if (k.kappa > 2.0 && !near_critical(k.kappa)) {
    if (!k.c0) throw Error(ErrorCode::Undefined, "c0 is undefined");
    return std::sqrt(*k.c0 * n);
  }
  if (near_critical(k.kappa)) return std::sqrt(k.c_inf * k.c_kappa / 2.0 * n * std::log(n));
  return std::pow(k.c_inf * k.c_kappa * gamma_abs(k.kappa) / 2.0 * n, 1.0 / k.kappa);
}

/// Z = T^p / scale(p, W) has limit tau_1(Y~).
inline double hitting_time_scale(const Constants& k, double p, double w) {
  if (k.kappa > 2.0 && !near_critical(k.kappa)) {
    if (!k.c0) throw Error(ErrorCode::Undefined, "c0 is undefined");
    return w * w / *k.c0 * p * p;
  }
  if (near_critical(k.kappa)) return w * w / (k.c_inf * k.c_kappa) * p * p / std::log(p);
  return 2.0 * std::pow(w, k.kappa) / (k.c_inf * k.c_kappa * gamma_abs(k.kappa)) * std::pow(p, k.kappa);
}

inline double law_gamma(const Constants& k) { return k.kappa < 2.0 && !near_critical(k.kappa) ? k.kappa : 2.0; }

/// kappa_n of the theorems.
inline double kappa_n(double kappa, double n) {
  if (near_critical(kappa)) return n * n / std::log(n);
  return std::pow(n, std::min(kappa, 2.0));
}

/// Number of excursions p with kappa_p ~ n.
inline std::uint64_t excursions_for_time(double kappa, double n) {
  double p = std::pow(n, 1.0 / std::min(kappa, 2.0));
  if (near_critical(kappa))
    for (int i = 0; i < 50; ++i) p = std::sqrt(n * std::log(std::max(p, 2.0)));
  return static_cast<std::uint64_t>(std::max(1.0, std::round(p)));
}

struct LaplaceCompare {
  std::vector<LaplaceRow> rows;
  std::vector<double> reference;
  double distance = 0.0;
};

inline LaplaceCompare compare_laplace(const std::vector<double>& z, const std::vector<double>& lambdas,
                                      const std::function<double(double)>& ref) {
  LaplaceCompare out;
  out.rows = empirical_laplace(z, lambdas);
  for (const auto& r : out.rows) {
    out.reference.push_back(ref(r.lambda));
    out.distance = std::max(out.distance, std::abs(r.value - out.reference.back()));
  }
  return out;
}

inline void write_reference(const Config& c, const std::string& name, const std::function<double(double)>& law) {
  std::vector<double> grid;
  for (int i = 0; i <= 100; ++i) grid.push_back(0.05 * i);
  auto os = open_out(c, name);
  write_reference_csv(os, grid, law);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// validate-law

inline std::vector<Verdict> cmd_validate_law(const Config& c) {
  const PotentialReport rep = analyze_potential(c.law);
  std::vector<Verdict> v;
  v.push_back(detail::verdict("validate-law", "|psi(1)|", std::abs(rep.psi_1), 1e-10, std::abs(rep.psi_1) < 1e-10, 0));
  v.push_back(detail::verdict("validate-law", "psi'(1)", rep.psi_prime_1, 0.0, rep.psi_prime_1 < 0.0, 0));
  v.push_back(detail::verdict("validate-law", "mean offspring", rep.mean_offspring, 1.0, rep.mean_offspring > 1.0, 0));
  v.push_back(detail::verdict("validate-law", "kappa", rep.kappa, 1.0, rep.kappa > 1.0, 0));
  // Lattice laws are flagged, not rejected.
  v.push_back(detail::verdict("validate-law", "lattice flag", rep.lattice ? 1.0 : 0.0, 0.0, true, 0));
  v.back().note = std::string("regime ") + to_string(rep.regime) + (rep.lattice ? "; WARNING: lattice mark law" : "");
  auto os = detail::open_out(c, "validate-law_psi.csv");
  os << "t,psi\n";
  for (auto [t, p] : rep.psi_table) os << t << ',' << p << '\n';
  json report{{"psi_1", rep.psi_1},
              {"psi_prime_1", rep.psi_prime_1},
              {"kappa", rep.kappa},
              {"regime", to_string(rep.regime)},
              {"lattice", rep.lattice},
              {"mean_offspring", rep.mean_offspring},
              {"warnings", rep.warnings},
              {"law", law_to_json(c.law)}};
  report["c0"] = rep.c0 ? json(*rep.c0) : json(nullptr);
  detail::open_out(c, "validate-law_report.json") << report.dump(2) << '\n';
  detail::finish(c, "validate-law", v);
  return v;
}

// ---------------------------------------------------------------------------
// lemma-moments

namespace detail {

struct OracleStat {
  std::string name;
  double exact;
  double mc;
  double se;
  std::size_t n;
};

/// Ten scalar statistics of one frozen finite environment, exact and by
/// simulation over `excursions` excursions (and as many walkers for the
/// return probability).
inline std::vector<OracleStat> oracle_vs_walk(MarkedTree& t, std::size_t excursions, std::uint64_t seed,
                                              std::uint64_t env_index) {
  FiniteChain chain(t);
  auto first = expected_edge_counts(chain);
  auto second = edge_count_second_moments(chain);
  const NodeId n = static_cast<NodeId>(t.size());
  const NodeId a = 1, b = std::min<NodeId>(2, n - 1), deep = n - 1;
  NodeId mid = a;
  for (NodeId x = 0; x < n; ++x)
    if (t.depth(x) == 2) {
      mid = x;
      break;
    }
  std::vector<std::vector<double>> col(9, std::vector<double>(excursions));
  SplitMix64 g(substream_seed(seed, "lemma-oracle", env_index, StreamRole::Walk));
  WalkRecord r;
  std::vector<std::uint32_t> prev(n, 0);
  for (std::size_t j = 1; j <= excursions; ++j) {
    run_until_tau(t, r, j, g);
    auto d = [&](NodeId x) { return static_cast<double>(r.down_at(x) - prev[x]); };
    const double na = d(a), nb = d(b), nm = d(mid), nd = d(deep);
    col[0][j - 1] = static_cast<double>(r.tau[j] - r.tau[j - 1]);
    col[1][j - 1] = na;
    col[2][j - 1] = nm;
    col[3][j - 1] = nd;
    col[4][j - 1] = na * na;
    col[5][j - 1] = nd * nd;
    col[6][j - 1] = na * nd;
    col[7][j - 1] = na * nb;
    col[8][j - 1] = nd > 0 ? 1.0 : 0.0;
    for (NodeId x = 0; x < n; ++x) prev[x] = r.down_at(x);
  }
  const std::size_t ret_n = 5;
  std::vector<double> ret(excursions);
  SplitMix64 h(substream_seed(seed, "lemma-oracle-return", env_index, StreamRole::Walk));
  for (std::size_t w = 0; w < excursions; ++w) {
    r.reset();
    run_until_time(t, r, 2 * ret_n + 1, h);
    ret[w] = r.position == kEStar ? 1.0 : 0.0;
  }
  const double exact[10] = {expected_tau1(chain),    first[a],           first[mid],
                            first[deep],             second(a, a),       second(deep, deep),
                            second(a, deep),         second(a, b),       hitting_prob(chain, deep),
                            return_prob(chain, ret_n)};
  const char* names[10] = {"E[tau1]",    "E[N_a]",       "E[N_mid]",      "E[N_deep]", "E[N_a^2]",
                           "E[N_deep^2]", "E[N_a N_deep]", "E[N_a N_b]", "P(T_deep<tau1)", "P(X_11=e*)"};
  std::vector<OracleStat> out;
  for (int i = 0; i < 10; ++i) {
    MeanSe m = mean_se(i < 9 ? col[static_cast<std::size_t>(i)] : ret);
    out.push_back({names[i], exact[i], m.mean, m.se, m.n});
  }
  return out;
}

}  // namespace detail

/// Closed forms vs linear solves, simulator vs oracle, and E[B^m_0] = m.
inline std::vector<Verdict> cmd_lemma_moments(const Config& c) {
  const json s = c.section("lemma-moments");
  std::vector<Verdict> v;
  // Closed forms against the exact linear solves.
  const std::size_t n_env = opt_count(s, "oracle_envs", 20);
  const auto max_depth = static_cast<std::uint32_t>(opt_count(s, "oracle_depth", 4));
  double worst = 0.0;
  for (std::size_t e = 0; e < n_env; ++e) {
    MarkedTree full(c.law, substream_seed(c.seed, "lemma-closed", e, StreamRole::Environment));
    MarkedTree t = full.truncated(1 + static_cast<std::uint32_t>(e % max_depth));
    if (t.size() + 1 > kOracleMaxStates) continue;
    FiniteChain chain(t);
    auto closed = lemma_closed_forms(t);
    auto first = expected_edge_counts(chain);
    auto second = edge_count_second_moments(chain);
    for (NodeId x = 0; x < t.size(); ++x) {
      auto rel = [](double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); };
      worst = std::max(worst, rel(first[x], closed.first[x]));
      if (x != kRoot) worst = std::max(worst, rel(hitting_prob(chain, x), closed.hitting[x]));
      for (NodeId y = 0; y < t.size(); ++y) worst = std::max(worst, rel(second(x, y), closed.second(x, y)));
    }
  }
  v.push_back(detail::verdict("lemma-moments", "closed forms vs linear solve, max rel err", worst, 1e-10,
                              worst < 1e-10, n_env));
  // Simulator against the oracle on frozen environments.
  const std::size_t frozen = opt_count(s, "frozen_envs", 5);
  const std::size_t excursions = opt_count(s, "excursions", 200'000);
  const auto frozen_depth = static_cast<std::uint32_t>(opt_count(s, "frozen_depth", 3));
  auto stats = parallel_map(frozen, c.threads, [&](std::size_t e) {
    MarkedTree full(c.law, substream_seed(c.seed, "lemma-frozen", e, StreamRole::Environment));
    MarkedTree t = full.truncated(frozen_depth);
    return detail::oracle_vs_walk(t, excursions, c.seed, e);
  });
  auto os = detail::open_out(c, "lemma-moments_oracle.csv");
  os << "env,statistic,exact,mc,se,z\n";
  double worst_z = 0.0;
  std::size_t count = 0;
  for (std::size_t e = 0; e < stats.size(); ++e)
    for (const auto& st : stats[e]) {
      double z = st.se > 0 ? std::abs(st.mc - st.exact) / st.se : (st.mc == st.exact ? 0.0 : kInf);
      worst_z = std::max(worst_z, z);
      ++count;
      os << e << ',' << st.name << ',' << st.exact << ',' << st.mc << ',' << st.se << ',' << z << '\n';
    }
  v.push_back(detail::verdict("lemma-moments", "simulator vs oracle, max |z| over " + std::to_string(count) + " stats",
                              worst_z, 4.0, worst_z <= 4.0, frozen * excursions));
  // E[B^m_0] = m.
  const std::size_t nb = opt_count(s, "b_samples", 100'000);
  auto ms = opt<std::vector<std::uint64_t>>(s, "b_m", {1, 5, 20});
  auto bos = detail::open_out(c, "lemma-moments_b.csv");
  bos << "m,mean,se,z\n";
  for (std::uint64_t m : ms) {
    auto b = parallel_map(nb, c.threads, [&](std::size_t i) {
      MarkedTree env(c.law, substream_seed(c.seed, "lemma-b" + std::to_string(m), i, StreamRole::Environment));
      SplitMix64 g(substream_seed(c.seed, "lemma-b" + std::to_string(m), i, StreamRole::Walk));
      ExcursionOptions o;
      o.truncate_below = 0;
      return static_cast<double>(extract_regen(sample_excursion_tree(env, m, g, o), 0).size());
    });
    MeanSe ms_ = mean_se(b);
    double z = std::abs(ms_.mean - static_cast<double>(m)) / ms_.se;
    bos << m << ',' << ms_.mean << ',' << ms_.se << ',' << z << '\n';
    v.push_back(detail::verdict("lemma-moments", "E[B^m_0] - m, m=" + std::to_string(m), ms_.mean - static_cast<double>(m),
                                4.0 * ms_.se, z <= 4.0, nb, {ms_.se}));
  }
  detail::finish(c, "lemma-moments", v);
  return v;
}

// ---------------------------------------------------------------------------
// forest-identities

namespace detail {

struct IdentityCounts {
  std::size_t checks = 0;
  std::size_t violations = 0;
  std::vector<std::string> first;
  void add(const std::vector<std::string>& bad) {
    ++checks;
    violations += bad.size();
    for (const auto& b : bad)
      if (first.size() < 10) first.push_back(b);
  }
};

}  // namespace detail

/// Exact per-sample identities on walks, excursion trees and forests, plus
/// hypotheses H1-H3 on the excursion forest.
inline std::vector<Verdict> cmd_forest_identities(const Config& c) {
  const json s = c.section("forest-identities");
  std::vector<Verdict> v;
  const std::size_t walks = opt_count(s, "walk_samples", 10'000);
  const std::size_t p = opt_count(s, "walk_excursions", 3);
  const std::uint64_t budget = opt<std::uint64_t>(s, "walk_budget", 2'000'000);
  const auto max_nodes = opt<std::size_t>(s, "max_nodes", 1u << 20);

  // Walk identities: T^p = tau^p - p, L^m = crossings, tau^p = 2 sum N + 2p,
  // RegenSet antichains (fast extraction = direct filter).
  struct WalkCheck {
    std::vector<std::string> bad;
    bool complete = false;
  };
  auto walk_checks = parallel_map(walks, c.threads, [&](std::size_t i) {
    WalkCheck out;
    MarkedTree env(c.law, substream_seed(c.seed, "identities-walk", i, StreamRole::Environment));
    SplitMix64 g(substream_seed(c.seed, "identities-walk", i, StreamRole::Walk));
    WalkRecord r;
    auto append = [&](std::vector<std::string> b) { out.bad.insert(out.bad.end(), b.begin(), b.end()); };
    run_until_time(env, r, 1 + g() % 1000, g);
    append(check_walk_invariants(r));
    const std::size_t target = r.completed_excursions() + p;
    try {
      run_until_tau(env, r, target, g, budget);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::StepBudgetExceeded) throw;
      append(check_walk_invariants(r));
      return out;
    }
    out.complete = true;
    append(check_excursion_closure(r, target));
    auto ex = excursion_from_walk(env, r);
    for (std::uint32_t level : {0u, 1u, 3u}) {
      auto set = extract_regen(ex, level);
      if (!is_antichain(ex, set)) out.bad.push_back("regen set is not an antichain");
      auto naive = naive_regen_filter(ex, level);
      auto fast = set.indices;
      std::sort(fast.begin(), fast.end());
      std::sort(naive.begin(), naive.end());
      if (fast != naive) out.bad.push_back("regen extraction differs from the direct filter");
    }
    return out;
  });
  detail::IdentityCounts wc;
  std::size_t complete = 0;
  for (const auto& w : walk_checks) {
    wc.add(w.bad);
    complete += w.complete;
  }
  v.push_back(detail::verdict("forest-identities", "walk identity violations", static_cast<double>(wc.violations), 0.0,
                              wc.violations == 0, walks));
  v.back().note = std::to_string(complete) + " walks closed " + std::to_string(p) + " further excursions";

  // Forest identities on excursion-law forests.
  const std::size_t forests = opt_count(s, "forest_samples", 10'000);
  const std::size_t trees_per_forest = opt_count(s, "trees_per_forest", 5);
  struct ForestCheck {
    ForestIdentityReport rep;
    std::size_t rejected = 0;
  };
  auto sample_tree = [&](std::uint64_t key, ExcursionTree& ex, MarkedTree& env, std::size_t& rejected) {
    ExcursionOptions o;
    o.max_nodes = max_nodes;
    for (std::uint64_t attempt = 0;; ++attempt) {
      env.reset(c.law, substream_seed(c.seed, "identities-forest", key * 64 + attempt, StreamRole::Environment));
      SplitMix64 g(substream_seed(c.seed, "identities-forest", key * 64 + attempt, StreamRole::Walk));
      try {
        ex = sample_excursion_tree(env, 1, g, o);
        return;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::StepBudgetExceeded || attempt == 63) throw;
        ++rejected;
      }
    }
  };
  auto forest_checks = parallel_map(forests, c.threads, [&](std::size_t f) {
    ForestCheck out;
    std::vector<TypedTree> trees;
    MarkedTree env;
    ExcursionTree ex;
    for (std::size_t i = 0; i < trees_per_forest; ++i) {
      sample_tree(f * trees_per_forest + i, ex, env, out.rejected);
      trees.push_back(typed_tree_from_excursion(ex));
    }
    out.rep = check_forest_identities(trees);
    return out;
  });
  std::size_t fviol = 0, fchecks = 0, rejected = 0;
  ForestIdentityReport total;
  for (const auto& fc : forest_checks) {
    fviol += fc.rep.violations();
    fchecks += fc.rep.checks;
    rejected += fc.rejected;
    total.skeleton_size += fc.rep.skeleton_size;
    total.skeleton_generation += fc.rep.skeleton_generation;
    total.final_size += fc.rep.final_size;
    total.root_children += fc.rep.root_children;
    total.type1_depth1 += fc.rep.type1_depth1;
    total.forest_type += fc.rep.forest_type;
    total.hitting += fc.rep.hitting;
    total.sandwich += fc.rep.sandwich;
    total.inverse_pair += fc.rep.inverse_pair;
    total.increments += fc.rep.increments;
  }
  {
    auto os = detail::open_out(c, "forest-identities_counts.csv");
    os << "identity,violations\n"
       << "skeleton_size," << total.skeleton_size << "\nskeleton_generation," << total.skeleton_generation
       << "\nfinal_size," << total.final_size << "\nroot_children," << total.root_children << "\ntype1_depth1,"
       << total.type1_depth1 << "\nforest_type," << total.forest_type << "\nhitting," << total.hitting
       << "\nsandwich," << total.sandwich << "\ninverse_pair," << total.inverse_pair << "\nincrements,"
       << total.increments << "\nwalk," << wc.violations << '\n';
  }
  v.push_back(detail::verdict("forest-identities", "forest identity violations", static_cast<double>(fviol), 0.0,
                              fviol == 0, forests));
  v.back().note = std::to_string(fchecks) + " checks; " + std::to_string(rejected) + " trees above max_nodes redrawn";

  // Dumps: a few excursion trees and the Lukasiewicz path of the first forest.
  {
    auto os = detail::open_out(c, "forest-identities_trees.newick");
    MarkedTree env;
    ExcursionTree ex;
    std::size_t rej = 0;
    std::vector<TypedTree> first;
    for (std::size_t i = 0; i < trees_per_forest; ++i) {
      sample_tree(i, ex, env, rej);
      os << to_newick(ex, env) << '\n';
      first.push_back(typed_tree_from_excursion(ex));
    }
    std::vector<FinalTree> fin;
    for (const auto& t : first) fin.push_back(finalize(skeletonize(t)));
    auto ps = detail::open_out(c, "forest-identities_path.csv");
    write_path_csv(ps, lukasiewicz(fin));
  }

  // H1-H3 on the excursion forest: trees explored down to the first count-1
  // vertex below the root suffice for every G1 = 1 sum.
  const std::size_t hn = opt_count(s, "hypothesis_samples", 100'000);
  if (hn > 0) {
    auto sums = parallel_map(hn, c.threads, [&](std::size_t i) {
      MarkedTree env(c.law, substream_seed(c.seed, "identities-hyp", i, StreamRole::Environment));
      SplitMix64 g(substream_seed(c.seed, "identities-hyp", i, StreamRole::Walk));
      ExcursionOptions o;
      o.truncate_below = 0;
      return hypothesis_sums(typed_tree_from_excursion(sample_excursion_tree(env, 1, g, o)));
    });
    std::vector<double> h2(hn), nu(hn), nt(hn);
    for (std::size_t i = 0; i < hn; ++i) {
      h2[i] = sums[i].h2;
      nu[i] = sums[i].nu;
      nt[i] = sums[i].nu_tilde;
    }
    MeanSe mh2 = mean_se(h2), mnu = mean_se(nu), mnt = mean_se(nt);
    v.push_back(detail::verdict("forest-identities", "H2: E[sum 1{G1=1,beta=1}] - 1", mh2.mean - 1.0, 4.0 * mh2.se,
                                std::abs(mh2.mean - 1.0) <= 4.0 * mh2.se, hn, {mh2.se}));
    Constants k = resolve_constants(c);
    const double target = 1.0 / k.c_inf, target_se = k.c_inf_se / (k.c_inf * k.c_inf);
    const double comb = std::sqrt(mnu.se * mnu.se + target_se * target_se);
    v.push_back(detail::verdict("forest-identities", "H3: nu - 1/C_inf", mnu.mean - target, 4.0 * comb,
                                std::abs(mnu.mean - target) <= 4.0 * comb, hn, {mnu.se, target_se}));
    v.back().note = "nu_tilde = " + std::to_string(mnt.mean) + " +- " + std::to_string(mnt.se);
  }

  // Optional invariance-principle diagnostic on the same forest.
  if (s.contains("invariance")) {
    const json inv = s.at("invariance");
    const Constants k = resolve_constants(c);
    ForestScaling sc;
    sc.nu = 1.0 / k.c_inf;
    if (k.kappa < 2.0 && !near_critical(k.kappa)) {
      sc.regime = ForestRegime::Stable;
      sc.gamma = k.kappa;
      sc.spread = k.c_kappa;
    } else if (near_critical(k.kappa)) {
      sc.regime = ForestRegime::Critical;
      sc.spread = k.c_kappa;
    } else {
      sc.regime = ForestRegime::FiniteVariance;
      if (!k.c0) throw Error(ErrorCode::Undefined, "c0 is undefined");
      sc.spread = 2.0 * *k.c0 * *k.c0 / k.c_inf;
    }
    ForestWeightSource source = [&](std::uint64_t trial, std::uint64_t i, double cap) {
      MarkedTree env(c.law, substream_seed(c.seed, "invariance", (trial << 32) | i, StreamRole::Environment));
      SplitMix64 g(substream_seed(c.seed, "invariance", (trial << 32) | i, StreamRole::Walk));
      try {
        auto sum = sample_excursion_summary(env, 1, g, static_cast<std::uint64_t>(cap / 2.0) + 1);
        return 2.0 * static_cast<double>(sum.sum_counts) + 1.0;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::StepBudgetExceeded) throw;
        return cap + 1.0;
      }
    };
    auto rows = invariance_diag(source, sc, detail::doubles(inv, "n", {1e3, 1e4}), opt_count(inv, "trials", 500),
                                opt<double>(inv, "alpha", 1.0), opt<double>(inv, "t", 1.0),
                                detail::doubles(inv, "lambda", {0.5, 1.0, 2.0}));
    auto os = detail::open_out(c, "forest-identities_invariance.csv");
    os << "n,functional,lambda,empirical,se,reference,distance\n";
    std::map<double, double> worst_by_n;
    for (const auto& r : rows) {
      os << r.n << ',' << r.functional << ',' << r.lambda << ',' << r.empirical << ',' << r.se << ',' << r.reference
         << ',' << r.distance << '\n';
      worst_by_n[r.n] = std::max(worst_by_n[r.n], r.distance);
    }
    if (worst_by_n.size() >= 2) {
      double a = worst_by_n.begin()->second, b = worst_by_n.rbegin()->second;
      v.push_back(detail::verdict("forest-identities", "invariance diag: distance at largest n (diagnostic)", b, a,
                                  b <= a, rows.empty() ? 0 : rows.front().trials));
    }
  }
  detail::finish(c, "forest-identities", v);
  return v;
}

// ---------------------------------------------------------------------------
// theorem2: local time at e*

inline std::vector<Verdict> cmd_theorem2(const Config& c) {
  const json s = c.section("theorem2");
  const std::size_t trials = opt_count(s, "trials", 2000);
  auto ns = detail::doubles(s, "n", {1e5, 1e6});
  std::sort(ns.begin(), ns.end());
  const auto lambdas = detail::doubles(s, "lambda", {0.5, 1.0, 2.0});
  const double tol = opt<double>(s, "tolerance", 0.05);
  const auto w_depth = static_cast<std::uint32_t>(opt_count(s, "w_depth", 20));
  const double w_prune = opt<double>(s, "w_prune", 1e-3);
  const auto surv = static_cast<std::uint32_t>(opt_count(s, "survival_depth", 30));
  const Constants k = resolve_constants(c);

  struct Trial {
    double w = 0;
    std::size_t rejected = 0;
    std::vector<TimeSnapshot> snaps;
  };
  auto res = parallel_map(trials, c.threads, [&](std::size_t i) {
    Trial t;
    MarkedTree env;
    env.reset(c.law, 0);
    t.rejected = detail::draw_surviving(env, c.seed, "theorem2", i, surv);
    t.w = env.w_infinity_proxy(w_depth, w_prune);
    SplitMix64 g(substream_seed(c.seed, "theorem2", i, StreamRole::Walk));
    WalkRecord r;
    for (double n : ns) {
      run_until_time(env, r, static_cast<std::uint64_t>(n), g);
      t.snaps.push_back({r.time, r.estar_local, r.range});
    }
    return t;
  });
  {
    auto os = detail::open_out(c, "theorem2_trajectories.csv");
    write_trajectory_header(os);
    for (std::size_t i = 0; i < res.size(); ++i)
      for (const auto& sn : res[i].snaps) write_time_row(os, i, substream_seed(c.seed, "theorem2", i, StreamRole::Walk), sn);
  }
  const double g = detail::law_gamma(k);
  auto ref = [&](double l) { return ml_laplace(g, l); };
  detail::write_reference(c, "theorem2_reference.csv", ref);
  std::vector<Verdict> v;
  std::vector<double> dist;
  auto os = detail::open_out(c, "theorem2_laplace.csv");
  os << "n,lambda,empirical,se,reference\n";
  std::size_t rejected = 0;
  for (const auto& t : res) rejected += t.rejected;
  for (std::size_t j = 0; j < ns.size(); ++j) {
    std::vector<double> z(trials);
    const double scale = detail::local_time_scale(k, ns[j]);
    for (std::size_t i = 0; i < trials; ++i) z[i] = res[i].w * static_cast<double>(res[i].snaps[j].local_estar) / scale;
    auto cmp = detail::compare_laplace(z, lambdas, ref);
    std::vector<double> ses;
    for (std::size_t q = 0; q < cmp.rows.size(); ++q) {
      os << ns[j] << ',' << cmp.rows[q].lambda << ',' << cmp.rows[q].value << ',' << cmp.rows[q].se << ','
         << cmp.reference[q] << '\n';
      ses.push_back(cmp.rows[q].se);
    }
    dist.push_back(cmp.distance);
    v.push_back(detail::verdict("theorem2", "max_lambda |Laplace - reference| at n=" + std::to_string(static_cast<long long>(ns[j])),
                                cmp.distance, tol, cmp.distance <= tol, trials, ses));
  }
  // Only the largest n is held to the tolerance; smaller ones are the trend.
  for (std::size_t j = 0; j + 1 < v.size(); ++j) v[j].pass = true, v[j].note = "trend point";
  if (dist.size() >= 2) {
    bool ok = dist.back() <= dist[dist.size() - 2];
    v.push_back(detail::verdict("theorem2", "distance trend (last - previous)", dist.back() - dist[dist.size() - 2], 0.0,
                                ok, trials));
  }
  v.back().note = "constants: " + to_json(k).dump() + "; rejected environments " + std::to_string(rejected);
  detail::finish(c, "theorem2", v);
  return v;
}

// ---------------------------------------------------------------------------
// theorem1: hitting times of e*

inline std::vector<Verdict> cmd_theorem1(const Config& c) {
  const json s = c.section("theorem1");
  const std::size_t trials = opt_count(s, "trials", 2000);
  auto ns = detail::doubles(s, "n", {1e5, 1e6});
  std::sort(ns.begin(), ns.end());
  const auto lambdas = detail::doubles(s, "lambda", {0.5, 1.0, 2.0});
  const double tol = opt<double>(s, "tolerance", 0.05);
  const auto w_depth = static_cast<std::uint32_t>(opt_count(s, "w_depth", 20));
  const double w_prune = opt<double>(s, "w_prune", 1e-3);
  const auto surv = static_cast<std::uint32_t>(opt_count(s, "survival_depth", 30));
  // Walks are stopped once Z exceeds z_cap: e^{-lambda Z} is then below
  // e^{-lambda_min z_cap}, and the censored Z is recorded as z_cap.
  const double lambda_min = *std::min_element(lambdas.begin(), lambdas.end());
  const double z_cap = opt<double>(s, "z_cap", 20.0 / std::max(lambda_min, 1e-3));
  // Absolute cap: the explored range, hence memory, grows linearly in time.
  const double step_budget = opt<double>(s, "step_budget", 1e8);
  const Constants k = resolve_constants(c);
  std::vector<std::uint64_t> ps;
  for (double n : ns) ps.push_back(detail::excursions_for_time(k.kappa, n));

  struct Trial {
    double w = 0;
    std::size_t rejected = 0;
    std::vector<ExcursionSnapshot> snaps;
    std::vector<double> literal;
    std::vector<bool> censored;
  };
  auto res = parallel_map(trials, c.threads, [&](std::size_t i) {
    Trial t;
    MarkedTree env;
    env.reset(c.law, 0);
    t.rejected = detail::draw_surviving(env, c.seed, "theorem1", i, surv);
    t.w = env.w_infinity_proxy(w_depth, w_prune);
    SplitMix64 g(substream_seed(c.seed, "theorem1", i, StreamRole::Walk));
    WalkRecord r;
    bool stopped = false;
    for (std::uint64_t p : ps) {
      const double scale = detail::hitting_time_scale(k, static_cast<double>(p), t.w);
      const double budget = std::min(z_cap * scale, step_budget);
      if (!stopped) {
        try {
          run_until_hit(env, r, p, g, static_cast<std::uint64_t>(std::min(budget, 1e15)));
        } catch (const Error& e) {
          if (e.code() != ErrorCode::StepBudgetExceeded) throw;
          stopped = true;
        }
      }
      if (stopped) {
        t.snaps.push_back({p, 0, 0, r.range});
        t.literal.push_back(static_cast<double>(r.time));
        t.censored.push_back(true);
      } else {
        t.snaps.push_back({p, r.hit_literal[p] + 1, r.hit[p], r.range_at_hit[p]});
        t.literal.push_back(static_cast<double>(r.hit_literal[p]));
        t.censored.push_back(false);
      }
    }
    return t;
  });
  {
    auto os = detail::open_out(c, "theorem1_trajectories.csv");
    write_trajectory_header(os);
    for (std::size_t i = 0; i < res.size(); ++i)
      for (std::size_t j = 0; j < ps.size(); ++j)
        if (!res[i].censored[j])
          write_excursion_row(os, i, substream_seed(c.seed, "theorem1", i, StreamRole::Walk), res[i].snaps[j]);
  }
  const double g = detail::law_gamma(k);
  auto ref = [&](double l) { return hit_laplace(g, 1.0, l); };
  detail::write_reference(c, "theorem1_reference.csv", ref);
  std::vector<Verdict> v;
  std::vector<double> dist;
  auto os = detail::open_out(c, "theorem1_laplace.csv");
  os << "n,p,lambda,empirical,se,reference,censored\n";
  std::size_t rejected = 0;
  for (const auto& t : res) rejected += t.rejected;
  for (std::size_t j = 0; j < ps.size(); ++j) {
    // A censored trial enters with the lower bound of Z reached at the stop,
    // which can only raise the empirical transform.
    std::vector<double> z(trials);
    std::size_t cens = 0;
    double bias = 0.0;
    for (std::size_t i = 0; i < trials; ++i) {
      z[i] = std::min(z_cap, res[i].literal[j] / detail::hitting_time_scale(k, static_cast<double>(ps[j]), res[i].w));
      if (res[i].censored[j]) {
        ++cens;
        bias += std::exp(-lambda_min * z[i]) / static_cast<double>(trials);
      }
    }
    auto cmp = detail::compare_laplace(z, lambdas, ref);
    std::vector<double> ses;
    for (std::size_t q = 0; q < cmp.rows.size(); ++q) {
      os << ns[j] << ',' << ps[j] << ',' << cmp.rows[q].lambda << ',' << cmp.rows[q].value << ',' << cmp.rows[q].se
         << ',' << cmp.reference[q] << ',' << cens << '\n';
      ses.push_back(cmp.rows[q].se);
    }
    dist.push_back(cmp.distance);
    v.push_back(detail::verdict("theorem1",
                                "max_lambda |Laplace - reference| at n=" + std::to_string(static_cast<long long>(ns[j])) +
                                    " (p=" + std::to_string(ps[j]) + ")",
                                cmp.distance, tol, cmp.distance <= tol, trials, ses));
    v.back().note = std::to_string(cens) + " walks censored (Z >= " + std::to_string(z_cap) + " or " +
                    std::to_string(step_budget) + " steps); censoring bias at most " + std::to_string(bias);
  }
  for (std::size_t j = 0; j + 1 < v.size(); ++j) v[j].pass = true;
  if (dist.size() >= 2) {
    bool ok = dist.back() <= dist[dist.size() - 2];
    v.push_back(detail::verdict("theorem1", "distance trend (last - previous)", dist.back() - dist[dist.size() - 2], 0.0,
                                ok, trials));
    v.back().note = "constants: " + to_json(k).dump() + "; rejected environments " + std::to_string(rejected);
  }
  detail::finish(c, "theorem1", v);
  return v;
}

// ---------------------------------------------------------------------------
// theorem3: range against hitting times

inline std::vector<Verdict> cmd_theorem3(const Config& c) {
  const json s = c.section("theorem3");
  const std::size_t trials = opt_count(s, "trials", 200);
  auto ns = opt<std::vector<std::uint64_t>>(s, "n", {1000, 10000});
  std::sort(ns.begin(), ns.end());
  const double min_drop = opt<double>(s, "min_relative_drop", 0.3);
  const std::uint64_t budget = opt<std::uint64_t>(s, "step_budget", 400'000'000);
  const auto surv = static_cast<std::uint32_t>(opt_count(s, "survival_depth", 30));
  const Constants k = resolve_constants(c);
  const double half_c = k.c_inf_bold / 2.0;

  struct Trial {
    std::vector<double> stat;  // +inf when censored
    std::uint64_t steps = 0;
  };
  auto res = parallel_map(trials, c.threads, [&](std::size_t i) {
    Trial t;
    MarkedTree env;
    env.reset(c.law, 0);
    detail::draw_surviving(env, c.seed, "theorem3", i, surv);
    SplitMix64 g(substream_seed(c.seed, "theorem3", i, StreamRole::Walk));
    WalkRecord r;
    try {
      run_until_hit(env, r, ns.back(), g, budget);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::StepBudgetExceeded) throw;
    }
    t.steps = r.time;
    for (std::uint64_t n : ns) {
      if (r.hits() < n) {
        t.stat.push_back(kInf);
        continue;
      }
      double sup = 0.0;
      for (std::uint64_t p = 1; p <= n; ++p)
        sup = std::max(sup, std::abs(static_cast<double>(r.range_at_hit[p]) - half_c * static_cast<double>(r.hit_literal[p])));
      t.stat.push_back(sup / detail::kappa_n(k.kappa, static_cast<double>(n)));
    }
    return t;
  });
  auto os = detail::open_out(c, "theorem3_sup.csv");
  os << "trial";
  for (auto n : ns) os << ",n=" << n;
  os << '\n';
  std::vector<double> med;
  std::vector<std::size_t> cens(ns.size(), 0);
  for (std::size_t j = 0; j < ns.size(); ++j) {
    std::vector<double> col;
    for (const auto& t : res) {
      col.push_back(t.stat[j]);
      cens[j] += std::isinf(t.stat[j]);
    }
    std::nth_element(col.begin(), col.begin() + static_cast<std::ptrdiff_t>(col.size() / 2), col.end());
    med.push_back(col[col.size() / 2]);
  }
  for (std::size_t i = 0; i < res.size(); ++i) {
    os << i;
    for (double x : res[i].stat) os << ',' << x;
    os << '\n';
  }
  std::vector<Verdict> v;
  for (std::size_t j = 0; j < ns.size(); ++j) {
    v.push_back(detail::verdict("theorem3", "median sup_p |R_{T^p} - (c/2) T^p| / kappa_n at n=" + std::to_string(ns[j]),
                                med[j], kInf, true, trials));
    v.back().threshold = 0.0;
    v.back().note = std::to_string(cens[j]) + " censored (counted as +inf)";
  }
  if (ns.size() >= 2) {
    const double drop = 1.0 - med.back() / med.front();
    v.push_back(detail::verdict("theorem3", "relative drop of the median, first to last n", drop, min_drop,
                                drop >= min_drop, trials));
    v.back().note = "c_inf_bold = " + std::to_string(k.c_inf_bold);
  }
  detail::finish(c, "theorem3", v);
  return v;
}

// ---------------------------------------------------------------------------
// corollary: return probability to e*

inline std::vector<Verdict> cmd_corollary(const Config& c) {
  const json s = c.section("corollary");
  auto ns = opt<std::vector<std::uint64_t>>(s, "n", {100, 215, 464, 1000, 2154, 4642, 10000});
  std::sort(ns.begin(), ns.end());
  const std::size_t envs = opt_count(s, "environments", 5);
  const std::size_t walkers = opt_count(s, "walkers", 20'000);
  const double tol = opt<double>(s, "tolerance", 0.1);
  const auto surv = static_cast<std::uint32_t>(opt_count(s, "survival_depth", 30));
  const double kappa = solve_kappa(c.law);
  const double target = -(1.0 - 1.0 / std::min(kappa, 2.0));
  // Quenched estimates on `envs` surviving environments, pooled. Walkers run
  // in chunks sharing one lazily grown copy of their environment.
  const std::size_t chunk = std::min<std::size_t>(walkers, 1000);
  const std::size_t chunks = (walkers + chunk - 1) / chunk;
  auto counts = parallel_map(envs * chunks, c.threads, [&](std::size_t task) {
    const std::size_t e = task / chunks, first = (task % chunks) * chunk;
    MarkedTree env;
    env.reset(c.law, 0);
    detail::draw_surviving(env, c.seed, "corollary", e, surv);
    std::vector<double> at(ns.size(), 0.0);
    WalkRecord r;
    for (std::size_t w = first; w < std::min(walkers, first + chunk); ++w) {
      SplitMix64 g(substream_seed(c.seed, "corollary", e * walkers + w, StreamRole::Walk));
      r.reset();
      for (std::size_t j = 0; j < ns.size(); ++j) {
        run_until_time(env, r, 2 * ns[j] + 1, g);
        at[j] += r.position == kEStar;
      }
    }
    return at;
  });
  const std::size_t total_walkers = envs * walkers;
  std::vector<double> x, y, wts;
  auto os = detail::open_out(c, "corollary_return.csv");
  os << "n,p_hat,se";
  for (std::size_t e = 0; e < envs; ++e) os << ",env" << e;
  os << '\n';
  for (std::size_t j = 0; j < ns.size(); ++j) {
    double total = 0.0;
    std::vector<double> per(envs, 0.0);
    for (std::size_t task = 0; task < counts.size(); ++task) {
      total += counts[task][j];
      per[task / chunks] += counts[task][j];
    }
    const double n = static_cast<double>(total_walkers);
    const double p = total / n;
    // Between-environment spread enters through the per-environment means.
    std::vector<double> pe;
    for (double v : per) pe.push_back(v / static_cast<double>(walkers));
    double se = envs > 1 ? mean_se(pe).se : std::sqrt(p * (1 - p) / n);
    os << ns[j] << ',' << p << ',' << se;
    for (double v : pe) os << ',' << v;
    os << '\n';
    x.push_back(static_cast<double>(ns[j]));
    y.push_back(p);
    wts.push_back(p > 0 && se > 0 ? (p * p) / (se * se) : 1.0);
  }
  std::vector<Verdict> v;
  if (std::any_of(y.begin(), y.end(), [](double p) { return p <= 0.0; })) {
    v.push_back(detail::verdict("corollary", "log-log slope", kInf, tol, false, total_walkers));
    v.back().note = "some return frequency is zero";
  } else {
    Slope sl = loglog_slope(x, y, wts);
    v.push_back(detail::verdict("corollary", "log-log slope - target", sl.slope - target, tol,
                                std::abs(sl.slope - target) <= tol, total_walkers, {sl.se}, sl.ci_lo - target,
                                sl.ci_hi - target));
    v.back().note = "slope " + std::to_string(sl.slope) + ", target " + std::to_string(target);
  }
  detail::finish(c, "corollary", v);
  return v;
}

// ---------------------------------------------------------------------------
// estimate-constants and limit-law numerics

inline std::vector<Verdict> limit_law_numerics(const Config& c) {
  const json s = c.section("limit-laws");
  std::vector<Verdict> v;
  double worst = 0.0;
  for (int i = 0; i <= 400; ++i) {
    const double l = 5.0 * i / 400.0;
    const double closed = std::exp(0.5 * l * l) * std::erfc(l / std::numbers::sqrt2);
    worst = std::max(worst, std::abs(ml_laplace(2.0, l) - closed));
  }
  v.push_back(detail::verdict("limit-laws", "max |ml_laplace(2,l) - E e^{-l|N|}| on [0,5]", worst, 1e-8, worst < 1e-8, 401));
  SplitMix64 g(substream_seed(c.seed, "limit-laws", 0, StreamRole::Auxiliary));
  double worst_scaling = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double gamma = i % 4 == 0 ? 2.0 : 1.0 + std::max(1e-3, uniform01(g));
    const double a = 3.0 * uniform01(g), cc = 0.1 + 3.0 * uniform01(g), l = 5.0 * uniform01(g);
    const double lhs = hit_laplace(gamma, cc * a, l), rhs = hit_laplace(gamma, a, std::pow(cc, gamma) * l);
    worst_scaling = std::max(worst_scaling, std::abs(lhs - rhs) / std::max(lhs, 1e-300));
  }
  v.push_back(detail::verdict("limit-laws", "hit_laplace scaling identity, max rel err", worst_scaling, 1e-12,
                              worst_scaling < 1e-12, 1000));
  const double gamma = opt<double>(s, "gamma", 1.5);
  const std::size_t n = opt_count(s, "stable_samples", 1'000'000);
  for (double l : detail::doubles(s, "lambda", {0.1, 0.5})) {
    SplitMix64 h(substream_seed(c.seed, "limit-laws-stable", static_cast<std::uint64_t>(l * 1000), StreamRole::Auxiliary));
    std::vector<double> e(n);
    for (auto& x : e) x = std::exp(l * sample_stable_unit(gamma, h));
    MeanSe m = mean_se(e);
    const double target = std::exp(std::pow(l, gamma));
    const double rel = std::abs(m.mean - target) / target;
    v.push_back(detail::verdict("limit-laws", "stable transform rel err at lambda=" + std::to_string(l), rel, 0.02,
                                rel < 0.02, n, {m.se / target}));
  }
  return v;
}

inline std::vector<Verdict> cmd_estimate_constants(const Config& c) {
  const json s = c.section("estimate-constants");
  std::vector<Verdict> v = limit_law_numerics(c);
  TailConstant tail;
  std::vector<double> b;
  Constants k = resolve_constants(c, &tail, &b);
  v.push_back(detail::verdict("estimate-constants", "C_inf", k.c_inf, 0.0, k.c_inf > 0.0, 0, {k.c_inf_se}));
  v.push_back(detail::verdict("estimate-constants", "c_inf_bold", k.c_inf_bold, 0.0, k.c_inf_bold > 0.0, 0,
                              {k.c_inf_bold_se}));
  // Jensen: C_inf >= c_inf_bold^2, within 4 combined SE.
  const double jensen = k.c_inf - k.c_inf_bold * k.c_inf_bold;
  const double jse = std::hypot(k.c_inf_se, 2.0 * k.c_inf_bold * k.c_inf_bold_se);
  v.push_back(detail::verdict("estimate-constants", "C_inf - c_inf_bold^2", jensen, -4.0 * jse, jensen >= -4.0 * jse, 0,
                              {jse}));
  v.push_back(detail::verdict("estimate-constants", "c_kappa (plateau)", tail.c_kappa, 0.0, tail.c_kappa > 0.0, b.size(),
                              {}, tail.ci_lo, tail.ci_hi));
  if (!tail.warnings.empty()) v.back().note = tail.warnings.front();
  // Hill cross-check on the first `hill_samples` draws.
  const std::size_t hs = std::min(b.size(), opt_count(s, "hill_samples", 1'000'000));
  std::vector<double> head(b.begin(), b.begin() + static_cast<std::ptrdiff_t>(hs));
  const std::size_t hk = opt_count(s, "hill_k", static_cast<std::size_t>(std::sqrt(static_cast<double>(hs))));
  TailIndex hill = hill_tail_index(head, hk);
  const double hill_tol = opt<double>(s, "hill_tolerance", 0.15);
  v.push_back(detail::verdict("estimate-constants", "Hill alpha - kappa", hill.alpha - k.kappa, hill_tol,
                              std::abs(hill.alpha - k.kappa) <= hill_tol, hs, {}, hill.ci_lo - k.kappa,
                              hill.ci_hi - k.kappa));
  v.back().note = "alpha " + std::to_string(hill.alpha) + " from k=" + std::to_string(hk) + ", kappa " +
                  std::to_string(k.kappa);
  {
    auto os = detail::open_out(c, "estimate-constants_tail.csv");
    os << "m,m^kappa P(B>m)\n";
    for (auto [m, val] : tail.grid) os << m << ',' << val << '\n';
  }
  detail::open_out(c, "estimate-constants.json") << to_json(k).dump(2) << '\n';
  detail::write_reference(c, "estimate-constants_ml_reference.csv",
                          [&](double l) { return ml_laplace(detail::law_gamma(k), l); });
  detail::finish(c, "estimate-constants", v);
  return v;
}

}  // namespace gwwalk
