// pie-sim: run the four-group exploration experiment, recompute metrics from
// a log, or inspect PPR similarity for one creator.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pie/pie.hpp"

namespace {

pie::ExperimentConfig config_or_default(const std::string& path) {
  return path.empty() ? pie::ExperimentConfig{} : pie::load_config(path);
}

int cmd_run(const std::string& config_path, int n_seeds, const std::string& out_dir) {
  const pie::ExperimentConfig cfg = config_or_default(config_path);
  std::vector<std::uint64_t> seeds;
  for (int i = 0; i < n_seeds; ++i) seeds.push_back(cfg.world.global_seed + static_cast<std::uint64_t>(i));
  for (const auto& w : pie::config_warnings(cfg)) std::cerr << "warning: " << w << '\n';
  const auto result = pie::run_experiment(cfg, seeds);
  pie::emit_report(result, out_dir);
  std::cout << pie::summary_table(result.report);
  return 0;
}

// Events before the configured epoch are history; the rest is measured.
int cmd_metrics(const std::string& logs_path, const std::string& config_path) {
  const pie::ExperimentConfig cfg = config_or_default(config_path);
  std::ifstream in(logs_path);
  if (!in) throw std::runtime_error("cannot open log file '" + logs_path + "'");
  const pie::EventLog log = pie::parse_log(in);

  const std::int32_t epoch = cfg.epoch_day();
  std::vector<pie::EngagementEvent> history, measured;
  std::int32_t last = epoch;
  for (const auto& e : log.events) {
    if (e.day < epoch) {
      history.push_back(e);
    } else {
      measured.push_back(e);
      last = std::max(last, e.day);
    }
  }
  pie::MetricReport report = pie::compute_report(measured, history, cfg.scc, epoch, last, epoch);

  // Topic histograms need ground truth, available when the log's creators
  // belong to the world this config generates.
  const pie::World world = pie::generate_world(cfg.world);
  bool resolvable = true;
  for (std::uint32_t c = 0; c < log.creators.size() && resolvable; ++c)
    resolvable = world.creators.contains(log.creators.name(pie::CreatorId(c)));
  if (resolvable) {
    std::vector<pie::EngagementEvent> remapped = measured;
    for (auto& e : remapped) e.creator = world.creators.at(log.creators.name(e.creator));
    report.histogram = pie::interest_histograms(remapped, world.truth, cfg.log_base);
  } else {
    std::cerr << "note: log creators are not part of the configured world; histogram skipped\n";
  }
  std::cout << pie::to_json(report).dump(2) << '\n';
  return 0;
}

int cmd_ppr(const std::string& graph_path, const std::string& seed_name,
            const std::string& config_path) {
  const pie::ExperimentConfig cfg = config_or_default(config_path);
  std::ifstream in(graph_path);
  if (!in) throw std::runtime_error("cannot open graph file '" + graph_path + "'");
  const pie::GraphFile file = pie::read_graph_csv(in);
  if (!file.creators.contains(seed_name))
    throw std::invalid_argument("seed creator '" + seed_name + "' is not in the graph");
  const pie::CreatorId seed = file.creators.at(seed_name);
  const pie::SimilarCreators sims = pie::similar_creators(file.graph, seed, cfg.ppr);
  if (!sims.converged) std::cerr << "warning: PPR did not converge within max_iterations\n";
  pie::SimilarityMap map;
  map.emplace(seed, sims);
  pie::write_similarity_csv(std::cout, map, file.creators);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exploration pipeline simulator"};
  app.require_subcommand(1);

  std::string config_path, out_dir, logs_path, graph_path, seed_creator;
  int n_seeds = 1;

  auto* run = app.add_subcommand("run", "Run the four-group experiment and write reports");
  run->add_option("--config", config_path, "JSON config file (defaults when omitted)")
      ->check(CLI::ExistingFile);
  run->add_option("--seeds", n_seeds, "Number of seeds, starting at world.global_seed")
      ->check(CLI::Range(1, 1000000));
  run->add_option("--out", out_dir, "Output directory")->required();

  auto* metrics = app.add_subcommand("metrics", "Recompute metrics from a JSONL event log");
  metrics->add_option("--logs", logs_path, "JSONL event log")->required()->check(CLI::ExistingFile);
  metrics->add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);

  auto* ppr = app.add_subcommand("ppr", "Print PPR similar creators for one seed creator");
  ppr->add_option("--graph", graph_path, "Edge-list CSV (user_id,creator_id,weight)")
      ->required()
      ->check(CLI::ExistingFile);
  ppr->add_option("--seed-creator", seed_creator, "Creator id")->required();
  ppr->add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // --help and --version land here with a zero code.
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (*run) return cmd_run(config_path, n_seeds, out_dir);
    if (*metrics) return cmd_metrics(logs_path, config_path);
    if (*ppr) return cmd_ppr(graph_path, seed_creator, config_path);
  } catch (const pie::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
