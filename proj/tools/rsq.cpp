// rsq: run verification experiments and inspect bound provenance.

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "rsq/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Quantitative Robbins-Siegmund bounds and their Monte-Carlo certification"};
  app.require_subcommand(1);

  rsq::Overrides ov;
  std::string config;
  std::uint64_t seed = 0;
  std::size_t paths = 0, horizon = 0, emit = 0;
  unsigned threads = 0;
  std::string out_dir;
  bool emit_flag = false;

  auto* run = app.add_subcommand("run", "run every claim of a config and write reports");
  run->add_option("config", config, "experiment config (JSON)")->required();
  auto* o_seed = run->add_option("--seed", seed, "override the base seed");
  auto* o_paths = run->add_option("--paths", paths, "override the number of paths");
  auto* o_horizon = run->add_option("--horizon", horizon, "override the horizon");
  auto* o_threads = run->add_option("--threads", threads, "worker threads for Monte-Carlo loops");
  auto* o_out = run->add_option("--out", out_dir, "output directory (default: $RSQ_OUTPUT_DIR or ./rsq_out)");
  auto* o_emit = run->add_flag("--emit-traces", emit_flag, "write per-path trace CSVs");
  auto* o_emit_n = run->add_option("--trace-count", emit, "number of traces written by --emit-traces");

  std::string claim;
  std::string explain_config;
  auto* explain = app.add_subcommand("explain", "print the provenance tree of a claim's bound");
  explain->add_option("claim", claim, "claim identifier, e.g. rs.chi")->required();
  auto* o_cfg = explain->add_option("--config", explain_config, "take family and claim options from a config");

  auto* families = app.add_subcommand("list-families", "list the built-in process families");
  auto* claims = app.add_subcommand("list-claims", "list the claim identifiers");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  if (run->parsed()) {
    if (*o_seed) ov.seed = seed;
    if (*o_paths) ov.n_paths = paths;
    if (*o_horizon) ov.horizon = horizon;
    if (*o_threads) ov.threads = threads;
    if (*o_out) ov.output_dir = out_dir;
    if (*o_emit) ov.emit_traces = *o_emit_n ? emit : 10;
    return rsq::run_experiment(config, ov, std::cout, std::cerr);
  }
  if (explain->parsed()) {
    std::optional<std::string> cfg;
    if (*o_cfg) cfg = explain_config;
    return rsq::explain_claim(claim, cfg, std::cout, std::cerr);
  }
  if (families->parsed()) {
    rsq::list_families(std::cout);
    return 0;
  }
  if (claims->parsed()) {
    for (const auto& [id, desc] : rsq::claim_catalog()) std::cout << id << "  " << desc << '\n';
    return 0;
  }
  return 1;
}
