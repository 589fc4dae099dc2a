// Copyright 2026 The CLUB Auction Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command-line front end: run, sweep, plot.

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "club/harness.hpp"
#include "club/report.hpp"
#include "club/unknown.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;

fs::path output_dir(const club::ExperimentConfig& cfg) {
  if (const char* env = std::getenv("CLUB_OUT_DIR"); env != nullptr && *env != '\0') return env;
  return cfg.out_dir;
}

std::ofstream open_out(const fs::path& p) {
  fs::create_directories(p.parent_path().empty() ? fs::path(".") : p.parent_path());
  std::ofstream os(p, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + p.string());
  return os;
}

void write_text(const fs::path& p, const std::string& text) {
  auto os = open_out(p);
  os << text;
}

std::vector<long> parse_k_list(const std::string& text) {
  std::vector<long> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    long k = 0;
    try {
      k = std::stol(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size() || item.empty() || k < 1) throw club::ConfigError("bad K value '" + item + "'");
    out.push_back(k);
  }
  return out;
}

// "10" means seeds 1..10; "3,5,8" lists them.
std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> out;
  if (text.find(',') == std::string::npos) {
    const auto ks = parse_k_list(text);
    for (long s = 1; s <= ks.at(0); ++s) out.push_back(static_cast<std::uint64_t>(s));
    return out;
  }
  for (long s : parse_k_list(text)) out.push_back(static_cast<std::uint64_t>(s));
  return out;
}

void write_run(const fs::path& dir, const std::string& stem, const club::RunResult& r) {
  {
    auto os = open_out(dir / (stem + ".csv"));
    club::write_ledger_csv(os, r.rows);
  }
  for (const auto& p : r.policies) {
    write_text(dir / "policies" / (stem + "_policy_" + std::to_string(p.id) + ".json"),
               club::policy_to_json(p).dump(2) + "\n");
  }
  for (const auto& [id, fhat] : r.noise_estimates) {
    auto os = open_out(dir / "fhat" / (stem + "_fhat_" + std::to_string(id) + ".csv"));
    club::write_fhat_csv(os, fhat);
  }
}

int cmd_run(const std::string& config_path, std::uint64_t seed) {
  const auto cfg = club::load_config(config_path);
  const fs::path dir = output_dir(cfg);
  const auto result = club::run_experiment(cfg, seed);
  const std::string stem = "run_seed" + std::to_string(seed);
  write_run(dir, stem, result);
  write_text(dir / ("summary_seed" + std::to_string(seed) + ".json"),
             club::summary_to_json(result.summary).dump(2) + "\n");
  write_text(dir / "env.json", club::env_to_json(cfg.build_env()).dump(2) + "\n");
  write_text(dir / "config.json", club::config_to_json(cfg).dump(2) + "\n");
  std::printf("seed %llu  K %ld  regret %.6f  updates %d  buffers %d\n", static_cast<unsigned long long>(seed),
              result.summary.K, result.summary.final_regret, result.summary.update_count,
              result.summary.buffer_count);
  return kExitOk;
}

int cmd_sweep(const std::string& config_path, const std::string& k_text, const std::string& seed_text, int jobs) {
  const auto cfg = club::load_config(config_path);
  const auto Ks = k_text.empty() ? cfg.k_grid : parse_k_list(k_text);
  const auto seeds = seed_text.empty() ? cfg.seeds : parse_seeds(seed_text);
  const fs::path dir = output_dir(cfg);
  auto sink = [&](const club::ExperimentConfig& c, std::uint64_t seed, const club::RunResult& r) {
    write_run(dir / "runs", "K" + std::to_string(c.K) + "_seed" + std::to_string(seed), r);
    std::printf("K %ld  seed %llu  regret %.6f\n", c.K, static_cast<unsigned long long>(seed),
                r.summary.final_regret);
    std::fflush(stdout);
  };
  const auto result = club::sweep(cfg, Ks, seeds, club::run_experiment, sink, jobs);
  {
    auto os = open_out(dir / "sweep.csv");
    club::write_sweep_csv(os, result);
  }
  write_text(dir / "sweep_summary.json", club::sweep_to_json(result).dump(2) + "\n");
  club::PlotSeries series;
  for (std::size_t t = 0; t < result.Ks.size(); ++t) {
    series.x.push_back(static_cast<double>(result.Ks[t]));
    series.y.push_back(result.median_regret[t]);
  }
  write_text(dir / "sweep.svg", club::render_loglog_svg(series, result.fit, "median cumulative regret", "K",
                                                        "regret"));
  std::printf("slope %.4f  r2 %.4f  sublinearity %.4f\n", result.fit.alpha, result.fit.r2,
              result.sublinearity_ratio);
  return kExitOk;
}

int cmd_plot(const std::string& in_dir, const std::string& out_path) {
  const fs::path dir(in_dir);
  club::PlotSeries series;
  std::optional<club::SlopeFit> fit;
  std::string title, xlabel;
  if (fs::exists(dir / "sweep.csv")) {
    std::ifstream is(dir / "sweep.csv");
    std::map<long, std::vector<double>> by_k;
    for (const auto& [k, r] : club::read_sweep_regrets(is)) by_k[k].push_back(r);
    for (auto& [k, rs] : by_k) {
      series.x.push_back(static_cast<double>(k));
      series.y.push_back(club::median(rs));
    }
    if (series.x.size() >= 2) {
      try {
        fit = club::slope_fit(series.x, series.y);
      } catch (const std::exception&) {
        fit.reset();
      }
    }
    title = "median cumulative regret";
    xlabel = "K";
  } else {
    std::vector<fs::path> runs;
    for (const auto& e : fs::directory_iterator(dir)) {
      const auto name = e.path().filename().string();
      if (name.rfind("run_seed", 0) == 0 && e.path().extension() == ".csv") runs.push_back(e.path());
    }
    if (runs.empty()) throw std::runtime_error("no sweep.csv or run_seed*.csv in " + in_dir);
    std::sort(runs.begin(), runs.end());
    std::ifstream is(runs.front());
    for (const auto& row : club::read_ledger_csv(is)) {
      series.x.push_back(static_cast<double>(row.episode));
      series.y.push_back(row.cum_regret);
    }
    title = "cumulative regret, " + runs.front().filename().string();
    xlabel = "episode";
  }
  write_text(out_path, club::render_loglog_svg(series, fit, title, xlabel, "regret"));
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"CLUB reserve-price learning experiments"};
  app.require_subcommand(1);

  std::string config_path, k_text, seed_text, in_dir, out_path;
  std::uint64_t seed = 1;
  int jobs = 1;

  auto* run = app.add_subcommand("run", "simulate one (config, seed) pair");
  run->add_option("--config", config_path, "flat JSON experiment config")->required();
  run->add_option("--seed", seed, "run seed")->required();

  auto* sw = app.add_subcommand("sweep", "run every (K, seed) pair and fit the regret slope");
  sw->add_option("--config", config_path, "flat JSON experiment config")->required();
  sw->add_option("--k", k_text, "comma-separated horizons, e.g. 500,1000,2000,4000");
  sw->add_option("--seeds", seed_text, "seed count n (seeds 1..n) or a comma-separated list");
  sw->add_option("--jobs", jobs, "parallel runs")->check(CLI::PositiveNumber);

  auto* plot = app.add_subcommand("plot", "render a log-log regret plot");
  plot->add_option("--in", in_dir, "directory holding sweep.csv or run_seed*.csv")->required();
  plot->add_option("--out", out_path, "output SVG path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*run) return cmd_run(config_path, seed);
    if (*sw) return cmd_sweep(config_path, k_text, seed_text, jobs);
    if (*plot) return cmd_plot(in_dir, out_path);
  } catch (const club::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitRuntime;
  }
  return kExitRuntime;
}
