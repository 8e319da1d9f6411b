#pragma once

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "idex/agent.hpp"
#include "idex/env.hpp"
#include "idex/robust.hpp"

namespace idex {

/// Fixed training-log schema. Column order is part of the interface.
inline constexpr const char* kEpisodeCsvHeader =
    "seed,episode,return,zeta_mean,rd_mean,rb_mean,kappa_d,kappa_b,"
    "actor_loss,critic_loss,skips";
inline constexpr const char* kEvalCsvHeader = "seed,episode,return";

struct RunConfig {
  std::string env_id = "chain";
  BonusMode mode = BonusMode::Scheduled;
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5, 6, 7, 8};
  int episodes = 0;  // 0 = per-environment default
  int eval_episodes = 100;
  double noise = 0.0;
  AgentConfig agent{};
  std::string out_dir = "runs";
  int workers = 0;  // 0 = hardware concurrency
};

/// Episode budgets sized so that a full six-condition, eight-seed chain
/// sweep stays in the minutes range on a laptop.
inline int default_episodes(const std::string& env_id) {
  if (env_id == "chain") return 300;
  if (env_id == "pointmass") return 300;
  if (env_id == "pendulum-dense") return 150;
  if (env_id == "pendulum-sparse") return 300;
  return 300;
}

inline int resolved_episodes(const RunConfig& c) {
  return c.episodes > 0 ? c.episodes : default_episodes(c.env_id);
}

inline void validate(const RunConfig& c) {
  make_environment(c.env_id, c.noise);  // throws on unknown id / bad noise
  if (c.seeds.empty())
    throw std::invalid_argument("config: at least one seed is required");
  if (resolved_episodes(c) < 1)
    throw std::invalid_argument("config: episodes must be >= 1");
  if (c.eval_episodes < 0)
    throw std::invalid_argument("config: eval_episodes must be >= 0");
  if (c.agent.bonus.lambda < 0.0)
    throw std::invalid_argument("config: lambda must be >= 0");
}

// ---------------------------------------------------------------------------
// JSON config file
// ---------------------------------------------------------------------------

inline RunConfig parse_run_config(const nlohmann::json& j,
                                  RunConfig base = {}) {
  RunConfig c = std::move(base);
  static const std::vector<std::string> known = {
      "env", "mode", "seeds", "episodes", "eval_episodes", "noise", "out",
      "workers", "lambda", "eta_d", "nu_d", "eta_b", "nu_b", "gamma",
      "kappa_init", "kappa_lr_ratio", "learning_rate", "hidden",
      "ensemble_size", "prior_scale", "consensus", "bootstrap",
      "replay_capacity", "batch_size", "batches_per_episode"};
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw std::invalid_argument("config: unknown key '" + key + "'");
  }
  if (j.contains("env")) c.env_id = j.at("env").get<std::string>();
  if (j.contains("mode")) {
    const auto m = parse_bonus_mode(j.at("mode").get<std::string>());
    if (!m)
      throw std::invalid_argument("config: unknown mode '" +
                                  j.at("mode").get<std::string>() + "'");
    c.mode = *m;
  }
  if (j.contains("seeds"))
    c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  if (j.contains("episodes")) c.episodes = j.at("episodes").get<int>();
  if (j.contains("eval_episodes"))
    c.eval_episodes = j.at("eval_episodes").get<int>();
  if (j.contains("noise")) c.noise = j.at("noise").get<double>();
  if (j.contains("out")) c.out_dir = j.at("out").get<std::string>();
  if (j.contains("workers")) c.workers = j.at("workers").get<int>();
  if (j.contains("lambda")) c.agent.bonus.lambda = j.at("lambda").get<double>();
  if (j.contains("eta_d"))
    c.agent.bonus.dfs.relative_ratio = j.at("eta_d").get<double>();
  if (j.contains("nu_d")) c.agent.bonus.dfs.power = j.at("nu_d").get<double>();
  if (j.contains("eta_b"))
    c.agent.bonus.bfs.behavior_ratio = j.at("eta_b").get<double>();
  if (j.contains("nu_b")) c.agent.bonus.bfs.power = j.at("nu_b").get<double>();
  if (j.contains("gamma")) c.agent.discount = j.at("gamma").get<double>();
  if (j.contains("kappa_init"))
    c.agent.kappa_init = j.at("kappa_init").get<double>();
  if (j.contains("kappa_lr_ratio"))
    c.agent.kappa_lr_ratio = j.at("kappa_lr_ratio").get<double>();
  if (j.contains("learning_rate"))
    c.agent.optimizer.learning_rate = j.at("learning_rate").get<double>();
  if (j.contains("hidden"))
    c.agent.hidden = j.at("hidden").get<std::vector<int>>();
  if (j.contains("ensemble_size"))
    c.agent.ensemble_size = j.at("ensemble_size").get<int>();
  if (j.contains("prior_scale"))
    c.agent.prior_scale = j.at("prior_scale").get<double>();
  if (j.contains("consensus")) {
    const std::string s = j.at("consensus").get<std::string>();
    if (s == "median") c.agent.consensus = ConsensusOp::Median;
    else if (s == "mean") c.agent.consensus = ConsensusOp::Mean;
    else throw std::invalid_argument("config: consensus must be median|mean");
  }
  if (j.contains("bootstrap")) {
    const std::string s = j.at("bootstrap").get<std::string>();
    if (s == "per-head") c.agent.bootstrap = BootstrapMode::PerHead;
    else if (s == "consensus") c.agent.bootstrap = BootstrapMode::Consensus;
    else throw std::invalid_argument("config: bootstrap must be per-head|consensus");
  }
  if (j.contains("replay_capacity"))
    c.agent.replay_capacity = j.at("replay_capacity").get<std::size_t>();
  if (j.contains("batch_size"))
    c.agent.batch_size = j.at("batch_size").get<int>();
  if (j.contains("batches_per_episode"))
    c.agent.batches_per_episode = j.at("batches_per_episode").get<int>();
  return c;
}

inline RunConfig load_run_config(const std::string& path, RunConfig base = {}) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot open " + path);
  nlohmann::json j;
  in >> j;
  return parse_run_config(j, std::move(base));
}

// ---------------------------------------------------------------------------
// Run execution
// ---------------------------------------------------------------------------

struct SeedOutcome {
  std::uint64_t seed = 0;
  std::vector<EpisodeStats> episodes;
  std::vector<double> eval_returns;
  double eval_mean = 0.0;
  double eval_sd = 0.0;
  long clamp_events = 0;
  long skips = 0;
  bool failed = false;
  std::string error;
};

struct RunResult {
  RunConfig config;
  std::vector<SeedOutcome> seeds;
  double final_mean = 0.0;  // pooled over all eval episodes of healthy seeds
  double final_sd = 0.0;
  int final_count = 0;
};

namespace detail {

inline SeedOutcome run_one_seed(const RunConfig& c, std::uint64_t seed) {
  SeedOutcome out;
  out.seed = seed;
  try {
    auto env = make_environment(c.env_id, c.noise);
    AgentConfig ac = c.agent;
    ac.mode = c.mode;
    Agent agent(env->spec(), ac, seed);
    const int episodes = resolved_episodes(c);
    out.episodes.reserve(static_cast<std::size_t>(episodes));
    for (int e = 0; e < episodes; ++e) {
      EpisodeStats st = agent.train_episode(*env);
      out.clamp_events += st.clamp_events;
      out.skips += st.skips;
      out.episodes.push_back(st);
    }
    const Agent::EvalResult ev = agent.evaluate(*env, c.eval_episodes);
    out.eval_returns = ev.returns;
    out.eval_mean = ev.mean;
    out.eval_sd = ev.sd;
  } catch (const std::exception& e) {
    out.failed = true;
    out.error = e.what();
  }
  return out;
}

// Shortest round-trip formatting: parsing the text back yields the exact
// double, so statistics recomputed from the CSVs match the JSON summary.
inline std::string format_double(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace detail

/// Trains every seed (in parallel workers) and aggregates the final
/// evaluation statistics. A numeric failure in one seed marks that seed
/// failed and leaves the others untouched.
inline RunResult execute_run(const RunConfig& config) {
  validate(config);
  RunResult result;
  result.config = config;
  result.seeds.resize(config.seeds.size());

  int workers = config.workers > 0
                    ? config.workers
                    : static_cast<int>(std::thread::hardware_concurrency());
  workers = std::max(1, std::min<int>(workers,
                                      static_cast<int>(config.seeds.size())));
  std::atomic<std::size_t> next{0};
  auto work = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= config.seeds.size()) return;
      result.seeds[i] = detail::run_one_seed(config, config.seeds[i]);
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }

  std::vector<double> pooled;
  for (const auto& s : result.seeds)
    if (!s.failed)
      pooled.insert(pooled.end(), s.eval_returns.begin(), s.eval_returns.end());
  if (!pooled.empty()) {
    result.final_mean = mean(pooled);
    result.final_sd = stddev(pooled);
    result.final_count = static_cast<int>(pooled.size());
  }
  return result;
}

// ---------------------------------------------------------------------------
// Artifacts: CSV, JSON summary, SVG plots
// ---------------------------------------------------------------------------

namespace detail {

struct Series {
  std::string name;
  std::vector<double> values;  // x is the index
};

/// Minimal hand-rolled polyline chart; enough for learning curves and
/// mixing-weight traces without a plotting dependency.
inline std::string render_line_chart(const std::string& title,
                                     const std::string& y_label,
                                     const std::vector<Series>& series) {
  const int width = 720, height = 420;
  const int left = 64, right = 24, top = 40, bottom = 44;
  const int plot_w = width - left - right;
  const int plot_h = height - top - bottom;

  std::size_t n = 0;
  double y_min = 0.0, y_max = 1.0;
  bool have = false;
  for (const auto& s : series) {
    n = std::max(n, s.values.size());
    for (double v : s.values) {
      if (!std::isfinite(v)) continue;
      if (!have) {
        y_min = y_max = v;
        have = true;
      } else {
        y_min = std::min(y_min, v);
        y_max = std::max(y_max, v);
      }
    }
  }
  if (!have) { y_min = 0.0; y_max = 1.0; }
  if (y_max - y_min < 1e-12) { y_min -= 1.0; y_max += 1.0; }
  const double pad = 0.05 * (y_max - y_min);
  y_min -= pad;
  y_max += pad;

  auto x_of = [&](std::size_t i) {
    const double denom = n > 1 ? static_cast<double>(n - 1) : 1.0;
    return left + plot_w * (static_cast<double>(i) / denom);
  };
  auto y_of = [&](double v) {
    return top + plot_h * (1.0 - (v - y_min) / (y_max - y_min));
  };

  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                  "#9467bd", "#8c564b"};
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << width / 2 << "\" y=\"22\" text-anchor=\"middle\" "
         "font-family=\"sans-serif\" font-size=\"15\">" << title << "</text>\n";
  // axes
  svg << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left
      << "\" y2=\"" << top + plot_h << "\" stroke=\"black\"/>\n"
      << "<line x1=\"" << left << "\" y1=\"" << top + plot_h << "\" x2=\""
      << left + plot_w << "\" y2=\"" << top + plot_h << "\" stroke=\"black\"/>\n";
  for (int tick = 0; tick <= 4; ++tick) {
    const double v = y_min + (y_max - y_min) * tick / 4.0;
    const double y = y_of(v);
    svg << "<line x1=\"" << left - 4 << "\" y1=\"" << y << "\" x2=\"" << left
        << "\" y2=\"" << y << "\" stroke=\"black\"/>\n"
        << "<text x=\"" << left - 8 << "\" y=\"" << y + 4
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
           "font-size=\"11\">" << format_double(v) << "</text>\n";
    const std::size_t xi =
        n > 0 ? static_cast<std::size_t>((n - 1) * tick / 4) : 0;
    const double x = x_of(xi);
    svg << "<line x1=\"" << x << "\" y1=\"" << top + plot_h << "\" x2=\"" << x
        << "\" y2=\"" << top + plot_h + 4 << "\" stroke=\"black\"/>\n"
        << "<text x=\"" << x << "\" y=\"" << top + plot_h + 18
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"11\">" << xi + 1 << "</text>\n";
  }
  svg << "<text x=\"" << width / 2 << "\" y=\"" << height - 8
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"12\">episode</text>\n"
      << "<text x=\"16\" y=\"" << top + plot_h / 2
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\""
         " transform=\"rotate(-90 16 " << top + plot_h / 2 << ")\">" << y_label
      << "</text>\n";
  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    const char* color = palette[si % 6];
    svg << "<polyline fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < s.values.size(); ++i) {
      if (!std::isfinite(s.values[i])) continue;
      svg << format_double(x_of(i)) << "," << format_double(y_of(s.values[i]))
          << " ";
    }
    svg << "\"/>\n";
    svg << "<text x=\"" << left + plot_w - 4 << "\" y=\""
        << top + 14 + 16 * static_cast<int>(si)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\""
           " fill=\"" << color << "\">" << s.name << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

inline void write_file(const std::filesystem::path& path,
                       const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

/// Median across seeds, episode by episode, of one EpisodeStats field.
template <typename Getter>
std::vector<double> median_curve(const std::vector<SeedOutcome>& seeds,
                                 Getter get) {
  std::size_t episodes = 0;
  for (const auto& s : seeds)
    if (!s.failed) episodes = std::max(episodes, s.episodes.size());
  std::vector<double> curve;
  curve.reserve(episodes);
  std::vector<double> column;
  for (std::size_t e = 0; e < episodes; ++e) {
    column.clear();
    for (const auto& s : seeds)
      if (!s.failed && e < s.episodes.size()) column.push_back(get(s.episodes[e]));
    curve.push_back(column.empty() ? std::nan("") : median(column));
  }
  return curve;
}

}  // namespace detail

/// Condition label used in summaries: the bonus mode, annotated when the
/// non-default mean consensus is in play so study variants stay distinct.
inline std::string condition_label(const RunConfig& c) {
  std::string label = to_string(c.mode);
  if (c.agent.consensus == ConsensusOp::Mean) label += "+mean-consensus";
  return label;
}

/// Writes <out>/<mode>/<seed>.csv, <out>/<mode>/<seed>_eval.csv,
/// <out>/<mode>/summary.json and <out>/plots/<mode>_{return,zeta}.svg.
/// Returns the run directory. The summary's statistics are recomputed from
/// the rows that went into the CSVs, so CSV and JSON always agree.
inline std::filesystem::path write_run_artifacts(const RunResult& result) {
  namespace fs = std::filesystem;
  const RunConfig& c = result.config;
  const fs::path run_dir = fs::path(c.out_dir) / condition_label(c);
  const fs::path plot_dir = fs::path(c.out_dir) / "plots";
  fs::create_directories(run_dir);
  fs::create_directories(plot_dir);

  for (const auto& s : result.seeds) {
    std::ostringstream csv;
    csv << kEpisodeCsvHeader << "\n";
    for (std::size_t e = 0; e < s.episodes.size(); ++e) {
      const EpisodeStats& st = s.episodes[e];
      csv << s.seed << "," << e + 1 << "," << detail::format_double(st.task_return)
          << "," << detail::format_double(st.zeta_mean) << ","
          << detail::format_double(st.dfs_bonus_mean) << ","
          << detail::format_double(st.bfs_bonus_mean) << ","
          << detail::format_double(st.kappa_d) << ","
          << detail::format_double(st.kappa_b) << ","
          << detail::format_double(st.actor_loss) << ","
          << detail::format_double(st.critic_loss) << "," << st.skips << "\n";
    }
    detail::write_file(run_dir / (std::to_string(s.seed) + ".csv"), csv.str());

    std::ostringstream eval_csv;
    eval_csv << kEvalCsvHeader << "\n";
    for (std::size_t e = 0; e < s.eval_returns.size(); ++e)
      eval_csv << s.seed << "," << e + 1 << ","
               << detail::format_double(s.eval_returns[e]) << "\n";
    detail::write_file(run_dir / (std::to_string(s.seed) + "_eval.csv"),
                       eval_csv.str());
  }

  nlohmann::ordered_json summary;
  summary["env"] = c.env_id;
  summary["mode"] = to_string(c.mode);
  summary["condition"] = condition_label(c);
  summary["consensus"] =
      c.agent.consensus == ConsensusOp::Median ? "median" : "mean";
  summary["episodes"] = resolved_episodes(c);
  summary["eval_episodes"] = c.eval_episodes;
  summary["noise"] = c.noise;
  summary["lambda"] = c.agent.bonus.lambda;
  summary["seeds"] = c.seeds;
  nlohmann::ordered_json per_seed = nlohmann::ordered_json::array();
  long clamp_total = 0, skip_total = 0;
  for (const auto& s : result.seeds) {
    nlohmann::ordered_json js;
    js["seed"] = s.seed;
    js["failed"] = s.failed;
    if (s.failed) {
      js["error"] = s.error;
    } else {
      js["eval_mean"] = s.eval_mean;
      js["eval_sd"] = s.eval_sd;
    }
    js["clamp_events"] = s.clamp_events;
    js["skips"] = s.skips;
    clamp_total += s.clamp_events;
    skip_total += s.skips;
    per_seed.push_back(js);
  }
  summary["per_seed"] = per_seed;
  summary["clamp_events"] = clamp_total;
  summary["skips"] = skip_total;
  summary["final_eval"] = {{"mean", result.final_mean},
                           {"sd", result.final_sd},
                           {"count", result.final_count}};
  detail::write_file(run_dir / "summary.json", summary.dump(2) + "\n");

  const std::string label = condition_label(c);
  detail::write_file(
      plot_dir / (label + "_return.svg"),
      detail::render_line_chart(
          c.env_id + " / " + label + ": median return across seeds", "return",
          {{label, detail::median_curve(result.seeds, [](const EpisodeStats& e) {
              return e.task_return;
            })}}));
  detail::write_file(
      plot_dir / (label + "_zeta.svg"),
      detail::render_line_chart(
          c.env_id + " / " + label + ": median zeta across seeds", "zeta",
          {{label, detail::median_curve(result.seeds, [](const EpisodeStats& e) {
              return e.zeta_mean;
            })}}));
  return run_dir;
}

// ---------------------------------------------------------------------------
// Cross-run summary
// ---------------------------------------------------------------------------

struct ConditionSummary {
  std::string env;
  std::string condition;
  double mean = 0.0;
  double sd = 0.0;
  int count = 0;
  int rank = 0;       // 1 = best within its environment; 0 if absent
  bool absent = false;
  std::string source;
};

/// Collects every summary.json below the given directories and ranks the
/// conditions per environment by final-eval mean (ties broken by lower SD).
/// Runs whose seeds all failed are listed as absent and receive no rank.
inline std::vector<ConditionSummary> summarize(
    const std::vector<std::string>& dirs) {
  namespace fs = std::filesystem;
  std::vector<ConditionSummary> rows;
  for (const auto& d : dirs) {
    if (!fs::exists(d)) continue;
    std::vector<fs::path> files;
    if (fs::is_regular_file(d) && fs::path(d).filename() == "summary.json") {
      files.push_back(d);
    } else if (fs::is_directory(d)) {
      for (const auto& entry : fs::recursive_directory_iterator(d))
        if (entry.is_regular_file() && entry.path().filename() == "summary.json")
          files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      ConditionSummary cs;
      cs.source = f.string();
      try {
        std::ifstream in(f);
        nlohmann::json j;
        in >> j;
        cs.env = j.at("env").get<std::string>();
        cs.condition = j.contains("condition")
                           ? j.at("condition").get<std::string>()
                           : j.at("mode").get<std::string>();
        cs.count = j.at("final_eval").at("count").get<int>();
        if (cs.count > 0) {
          cs.mean = j.at("final_eval").at("mean").get<double>();
          cs.sd = j.at("final_eval").at("sd").get<double>();
        } else {
          cs.absent = true;
        }
      } catch (const std::exception&) {
        cs.absent = true;
        if (cs.condition.empty()) cs.condition = f.parent_path().filename().string();
        if (cs.env.empty()) cs.env = "?";
      }
      rows.push_back(std::move(cs));
    }
  }

  std::map<std::string, std::vector<ConditionSummary*>> by_env;
  for (auto& r : rows)
    if (!r.absent) by_env[r.env].push_back(&r);
  for (auto& [env, group] : by_env) {
    (void)env;
    std::sort(group.begin(), group.end(),
              [](const ConditionSummary* a, const ConditionSummary* b) {
                if (a->mean != b->mean) return a->mean > b->mean;
                if (a->sd != b->sd) return a->sd < b->sd;  // tie: lower SD wins
                return a->condition < b->condition;
              });
    for (std::size_t i = 0; i < group.size(); ++i)
      group[i]->rank = static_cast<int>(i) + 1;
  }
  std::sort(rows.begin(), rows.end(),
            [](const ConditionSummary& a, const ConditionSummary& b) {
              if (a.env != b.env) return a.env < b.env;
              if (a.absent != b.absent) return !a.absent;
              if (a.rank != b.rank) return a.rank < b.rank;
              return a.condition < b.condition;
            });
  return rows;
}

inline std::string render_summary_table(
    const std::vector<ConditionSummary>& rows) {
  std::ostringstream out;
  std::string env;
  for (const auto& r : rows) {
    if (r.env != env) {
      env = r.env;
      out << "env: " << env << "\n";
      out << "  rank  condition                 mean (SD)\n";
    }
    char line[160];
    if (r.absent) {
      std::snprintf(line, sizeof(line), "  %-5s %-25s absent\n", "-",
                    r.condition.c_str());
    } else {
      std::snprintf(line, sizeof(line), "  %-5d %-25s %.4g (%.4g)\n", r.rank,
                    r.condition.c_str(), r.mean, r.sd);
    }
    out << line;
  }
  return out.str();
}

inline nlohmann::ordered_json summary_to_json(
    const std::vector<ConditionSummary>& rows) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& r : rows) {
    nlohmann::ordered_json row;
    row["condition"] = r.condition;
    if (r.absent) {
      row["absent"] = true;
    } else {
      row["mean"] = r.mean;
      row["sd"] = r.sd;
      row["count"] = r.count;
      row["rank"] = r.rank;
    }
    row["source"] = r.source;
    j[r.env].push_back(row);
  }
  return j;
}

}  // namespace idex
