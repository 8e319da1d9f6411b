// Experiment CLI: `idex run` trains one condition over a seed list and
// writes CSV/JSON/SVG artifacts; `idex summarize` ranks completed runs.

#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "idex/idex.hpp"

namespace {

std::vector<std::uint64_t> parse_seed_list(const std::string& csv) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    seeds.push_back(std::stoull(item));
  }
  return seeds;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exploration-bonus actor-critic experiments"};
  app.require_subcommand(1);

  // --- run ---
  auto* run = app.add_subcommand("run", "Train one condition and write artifacts");
  std::string config_path, env_id, mode_str, seeds_str, out_dir, consensus_str;
  int episodes = -1, eval_episodes = -1, workers = -1;
  double noise = -1.0, lambda = -1.0;
  run->add_option("--config", config_path, "JSON config file (flags override it)");
  run->add_option("--env", env_id, "Environment id: chain|pointmass|pendulum-dense|pendulum-sparse");
  run->add_option("--mode", mode_str, "Bonus mode: vanilla|dfs|bfs|scheduled|mean|sum");
  run->add_option("--seeds", seeds_str, "Comma-separated seed list, e.g. 1,2,3");
  run->add_option("--episodes", episodes, "Training episodes per seed");
  run->add_option("--eval-episodes", eval_episodes, "Deterministic evaluation episodes");
  run->add_option("--noise", noise, "Observation noise scale");
  run->add_option("--out", out_dir, "Output directory root");
  run->add_option("--consensus", consensus_str, "Ensemble consensus: median|mean");
  run->add_option("--workers", workers, "Parallel seed workers (default: hardware)");
  run->add_option("--lambda", lambda, "Base bonus gain");

  // --- summarize ---
  auto* summ = app.add_subcommand("summarize", "Rank completed runs per environment");
  std::vector<std::string> dirs;
  std::string json_out;
  summ->add_option("dirs", dirs, "Run output directories")->required();
  summ->add_option("--json", json_out, "Also write the table as JSON");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      idex::RunConfig config;
      if (!config_path.empty()) config = idex::load_run_config(config_path);
      if (!env_id.empty()) config.env_id = env_id;
      if (!mode_str.empty()) {
        const auto m = idex::parse_bonus_mode(mode_str);
        if (!m) throw std::invalid_argument("unknown mode '" + mode_str + "'");
        config.mode = *m;
      }
      if (!seeds_str.empty()) config.seeds = parse_seed_list(seeds_str);
      if (episodes >= 0) config.episodes = episodes;
      if (eval_episodes >= 0) config.eval_episodes = eval_episodes;
      if (noise >= 0.0) config.noise = noise;
      if (!out_dir.empty()) config.out_dir = out_dir;
      if (workers >= 0) config.workers = workers;
      if (lambda >= 0.0) config.agent.bonus.lambda = lambda;
      if (!consensus_str.empty()) {
        if (consensus_str == "median") config.agent.consensus = idex::ConsensusOp::Median;
        else if (consensus_str == "mean") config.agent.consensus = idex::ConsensusOp::Mean;
        else throw std::invalid_argument("consensus must be median|mean");
      }

      const idex::RunResult result = idex::execute_run(config);
      const auto dir = idex::write_run_artifacts(result);
      int failed = 0;
      for (const auto& s : result.seeds) failed += s.failed ? 1 : 0;
      std::printf("%s %s: final eval %.4g (SD %.4g) over %d episodes",
                  config.env_id.c_str(), idex::condition_label(config).c_str(),
                  result.final_mean, result.final_sd, result.final_count);
      if (failed > 0) std::printf(", %d seed(s) failed", failed);
      std::printf("\n  artifacts: %s\n", dir.string().c_str());
      return 0;
    }

    if (summ->parsed()) {
      const auto rows = idex::summarize(dirs);
      if (rows.empty()) {
        std::fprintf(stderr, "no summary.json found under the given directories\n");
        return 1;
      }
      std::cout << idex::render_summary_table(rows);
      if (!json_out.empty()) {
        std::ofstream out(json_out);
        if (!out) throw std::runtime_error("cannot write " + json_out);
        out << idex::summary_to_json(rows).dump(2) << "\n";
      }
      return 0;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
