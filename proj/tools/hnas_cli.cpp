// Copyright 2026 The hnas Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command-line front end over the C API.

#include <csignal>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hnas/hnas.h"

namespace {

// Exit codes: 0 ok, 1 usage, otherwise 1 + the hnas_status code.
int report(hnas_status status) {
  if (status == HNAS_OK) return 0;
  std::fprintf(stderr, "error: %s: %s\n", hnas_status_string(status), hnas_last_error());
  return 1 + static_cast<int>(status);
}

extern "C" void on_sigint(int) { hnas_request_stop(); }

struct ConfigSource {
  std::string path;
  std::string preset;
};

hnas_status open_config(const ConfigSource& src, hnas_config** out) {
  if (!src.preset.empty()) return hnas_config_preset(src.preset.c_str(), out);
  return hnas_config_load(src.path.c_str(), out);
}

void add_config_options(CLI::App* cmd, ConfigSource& src) {
  auto* config = cmd->add_option("--config", src.path, "experiment config (JSON)");
  auto* preset = cmd->add_option("--preset", src.preset, "built-in config: fmnist-surrogate, nasbench");
  config->excludes(preset);
  preset->excludes(config);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hierarchical architecture search"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(hnas_version()));

  ConfigSource run_src;
  std::uint64_t run_seed = 0;
  std::string run_out;
  int stop_after = -1;
  int run_generations = 0;
  auto* run_cmd = app.add_subcommand("run", "run a search, one directory per seed");
  add_config_options(run_cmd, run_src);
  auto* seed_opt = run_cmd->add_option("--seed", run_seed, "run only this seed");
  run_cmd->add_option("--out", run_out, "output directory (default: the config's output_dir)");
  run_cmd->add_option("--stop-after", stop_after, "stop after this many generations")
      ->check(CLI::NonNegativeNumber);
  run_cmd->add_option("--generations", run_generations, "override the generation count")
      ->check(CLI::PositiveNumber);

  ConfigSource cmp_src;
  int cmp_seeds = 10;
  std::string cmp_out;
  auto* cmp_cmd = app.add_subcommand("compare", "search versus random baseline over seeds");
  add_config_options(cmp_cmd, cmp_src);
  cmp_cmd->add_option("--seeds", cmp_seeds, "number of seeds (>= 5), starting at the first seed")
      ->check(CLI::Range(5, 100000));
  cmp_cmd->add_option("--out", cmp_out, "directory for compare.csv and compare_summary.json");

  std::string exp_checkpoint, exp_format = "json", exp_out;
  auto* exp_cmd = app.add_subcommand("export", "write the best phenotype of a checkpoint");
  exp_cmd->add_option("--checkpoint", exp_checkpoint, "checkpoint file")->required();
  exp_cmd->add_option("--format", exp_format, "json or dot")
      ->check(CLI::IsMember({"json", "dot"}));
  exp_cmd->add_option("--out", exp_out, "output file (default: stdout)");

  std::string res_checkpoint, res_out;
  auto* res_cmd = app.add_subcommand("resume", "continue a checkpointed run");
  res_cmd->add_option("--checkpoint", res_checkpoint, "checkpoint file")->required();
  res_cmd->add_option("--out", res_out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // Help and version requests exit 0; every parse error is a usage error.
    return app.exit(e) == 0 ? 0 : 1;
  }
  std::signal(SIGINT, on_sigint);

  if (*run_cmd || *cmp_cmd) {
    const ConfigSource& src = *run_cmd ? run_src : cmp_src;
    if (src.path.empty() && src.preset.empty()) {
      std::fprintf(stderr, "error: one of --config or --preset is required\n");
      return 1;
    }
    hnas_config* config = nullptr;
    if (const hnas_status s = open_config(src, &config); s != HNAS_OK) return report(s);
    int code = 0;
    if (*run_cmd) {
      if (*seed_opt) code = report(hnas_config_set_seed(config, run_seed));
      if (code == 0 && run_generations > 0) {
        code = report(hnas_config_set_generations(config, run_generations));
      }
      if (code == 0) {
        code = report(
            hnas_run(config, run_out.empty() ? nullptr : run_out.c_str(), stop_after));
      }
    } else {
      std::uint64_t first = 0;
      code = report(hnas_config_seed_at(config, 0, &first));
      std::vector<std::uint64_t> seeds;
      for (int i = 0; i < cmp_seeds; ++i) seeds.push_back(first + static_cast<std::uint64_t>(i));
      hnas_compare_summary summary{};
      if (code == 0) {
        code = report(hnas_compare(config, seeds.data(), seeds.size(),
                                   cmp_out.empty() ? nullptr : cmp_out.c_str(), &summary));
      }
      if (code == 0) {
        std::printf("seeds: %d\n", summary.seeds);
        std::printf("final best, search > random: %d/%d\n", summary.final_best_wins,
                    summary.seeds);
        std::printf("generation %d, search mean > random best: %d/%d\n",
                    summary.early_generation, summary.early_mean_wins, summary.seeds);
        std::printf("wilcoxon one-sided p: %.6g\n", summary.wilcoxon_p_value);
      }
    }
    hnas_config_free(config);
    return code;
  }

  if (*exp_cmd) {
    char* text = nullptr;
    const hnas_status s = hnas_export(exp_checkpoint.c_str(),
                                      exp_format == "dot" ? HNAS_EXPORT_DOT : HNAS_EXPORT_JSON,
                                      &text);
    if (s != HNAS_OK) return report(s);
    int code = 0;
    if (exp_out.empty()) {
      std::fputs(text, stdout);
    } else {
      std::ofstream out(exp_out, std::ios::binary | std::ios::trunc);
      out << text;
      if (!out) {
        std::fprintf(stderr, "error: cannot write %s\n", exp_out.c_str());
        code = 1 + HNAS_ERR_IO;
      }
    }
    hnas_string_free(text);
    return code;
  }

  return report(hnas_resume(res_checkpoint.c_str(), res_out.c_str()));
}
