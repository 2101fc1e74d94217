#include <cstdint>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "gwwalk/experiments.hpp"

using namespace gwwalk;

namespace {

using Command = std::vector<Verdict> (*)(const Config&);

const std::map<std::string, std::pair<Command, std::string>>& commands() {
  static const std::map<std::string, std::pair<Command, std::string>> table{
      {"validate-law", {cmd_validate_law, "check normalization, drift, kappa and lattice of a mark law"}},
      {"lemma-moments", {cmd_lemma_moments, "edge-count moments: closed forms, exact oracle, simulator"}},
      {"theorem1", {cmd_theorem1, "scaled hitting times of e* against the stable hitting law"}},
      {"theorem2", {cmd_theorem2, "scaled local time at e* against the Mittag-Leffler law"}},
      {"theorem3", {cmd_theorem3, "range at hitting times against (c/2) T^p"}},
      {"corollary", {cmd_corollary, "log-log slope of the return probability to e*"}},
      {"forest-identities", {cmd_forest_identities, "per-sample forest identities and hypotheses H1-H3"}},
      {"estimate-constants", {cmd_estimate_constants, "C_inf, c_inf, c_kappa, c0 and limit-law numerics"}},
  };
  return table;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Randomly biased walks on marked Galton-Watson trees"};
  app.require_subcommand(1, 1);
  std::string config_path;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  std::string out;
  for (const auto& [name, entry] : commands()) {
    auto* sub = app.add_subcommand(name, entry.second);
    sub->add_option("--config", config_path, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "master seed (overrides the config)");
    sub->add_option("--threads", threads, "worker threads (overrides the config)")->check(CLI::PositiveNumber);
    sub->add_option("--out", out, "output directory (overrides the config)");
  }
  CLI11_PARSE(app, argc, argv);
  const std::string name = app.get_subcommands().front()->get_name();
  const auto* sub = app.get_subcommands().front();
  try {
    Config c = load_config(config_path);
    if (sub->count("--seed")) c.seed = seed;
    if (sub->count("--threads")) c.threads = threads;
    if (sub->count("--out")) c.out = out;
    auto rows = commands().at(name).first(c);
    bool ok = true;
    for (const auto& v : rows) {
      std::cout << (v.pass ? "PASS " : "FAIL ") << v.experiment << ": " << v.statistic << " = " << v.value << '\n';
      ok = ok && v.pass;
    }
    std::cout << "verdicts: " << (c.out / (name + ".verdicts.json")).string() << '\n';
    return ok ? 0 : 1;
  } catch (const Error& e) {
    std::cerr << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
