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

#include "hnas/hnas.h"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <new>
#include <optional>
#include <string>

#include "hnas/error.hpp"
#include "hnas/runner.hpp"

struct hnas_config {
  hnas::ExperimentConfig config;
};

struct hnas_experiment {
  explicit hnas_experiment(hnas::Experiment e) : experiment(std::move(e)) {}
  hnas::Experiment experiment;
};

namespace {

thread_local std::string g_last_error;

hnas_status fail(hnas_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

// Maps exceptions to status codes.
template <typename F>
hnas_status guarded(F&& body) {
  g_last_error.clear();
  try {
    body();
    return HNAS_OK;
  } catch (const hnas::ConfigError& e) {
    return fail(HNAS_ERR_CONFIG, e.what());
  } catch (const hnas::EmptyLayerSet& e) {
    return fail(HNAS_ERR_CONFIG, e.what());
  } catch (const hnas::TableLoadError& e) {
    return fail(HNAS_ERR_TABLE_LOAD, e.what());
  } catch (const hnas::CorruptCheckpoint& e) {
    return fail(HNAS_ERR_CORRUPT_CHECKPOINT, e.what());
  } catch (const hnas::IoError& e) {
    return fail(HNAS_ERR_IO, e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(HNAS_ERR_IO, e.what());
  } catch (const std::bad_alloc&) {
    return fail(HNAS_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(HNAS_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(HNAS_ERR_INTERNAL, "unknown error");
  }
}

char* copy_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void fill_stats(const hnas::GenerationStats& s, hnas_generation_stats* out) {
  out->generation = s.generation;
  out->best_fitness = s.best_fitness;
  out->mean_fitness = s.mean_fitness;
  out->notable_size = s.notable_size;
  out->candidate_size = s.candidate_size;
  out->banned_size = s.banned_size;
  out->promotions = s.promotions;
  out->bans = s.bans;
  out->evaluations = s.evaluations;
}

}  // namespace

extern "C" {

const char* hnas_last_error(void) { return g_last_error.c_str(); }

const char* hnas_status_string(hnas_status status) {
  switch (status) {
    case HNAS_OK:
      return "ok";
    case HNAS_ERR_INVALID_ARGUMENT:
      return "invalid argument";
    case HNAS_ERR_CONFIG:
      return "configuration error";
    case HNAS_ERR_IO:
      return "i/o error";
    case HNAS_ERR_TABLE_LOAD:
      return "benchmark table error";
    case HNAS_ERR_CORRUPT_CHECKPOINT:
      return "corrupt checkpoint";
    case HNAS_ERR_INTERNAL:
      return "internal error";
  }
  return "unknown status";
}

const char* hnas_version(void) { return "1.0.0"; }

hnas_status hnas_config_load(const char* path, hnas_config** out) {
  if (path == nullptr || out == nullptr) return fail(HNAS_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] { *out = new hnas_config{hnas::load_config(path)}; });
}

hnas_status hnas_config_preset(const char* name, hnas_config** out) {
  if (name == nullptr || out == nullptr) return fail(HNAS_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] { *out = new hnas_config{hnas::preset(name)}; });
}

hnas_status hnas_config_set_seed(hnas_config* config, uint64_t seed) {
  if (config == nullptr) return fail(HNAS_ERR_INVALID_ARGUMENT, "null config");
  return guarded([&] {
    config->config.evolution.rng_seed = seed;
    config->config.seeds = {seed};
  });
}

hnas_status hnas_config_set_generations(hnas_config* config, int generations) {
  if (config == nullptr) return fail(HNAS_ERR_INVALID_ARGUMENT, "null config");
  if (generations < 1) return fail(HNAS_ERR_CONFIG, "generations must be >= 1");
  return guarded([&] { config->config.generations = generations; });
}

hnas_status hnas_config_set_output_dir(hnas_config* config, const char* dir) {
  if (config == nullptr || dir == nullptr) return fail(HNAS_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] { config->config.output_dir = dir; });
}

hnas_status hnas_config_seeds(const hnas_config* config, size_t* count) {
  if (config == nullptr || count == nullptr) return fail(HNAS_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] { *count = config->config.effective_seeds().size(); });
}

hnas_status hnas_config_seed_at(const hnas_config* config, size_t index, uint64_t* seed) {
  if (config == nullptr || seed == nullptr) return fail(HNAS_ERR_INVALID_ARGUMENT, "null argument");
  const auto seeds = config->config.effective_seeds();
  if (index >= seeds.size()) return fail(HNAS_ERR_INVALID_ARGUMENT, "seed index out of range");
  *seed = seeds[index];
  g_last_error.clear();
  return HNAS_OK;
}

hnas_status hnas_config_to_json(const hnas_config* config, char** out) {
  if (config == nullptr || out == nullptr) return fail(HNAS_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] { *out = copy_string(hnas::config_to_json(config->config).dump(2)); });
}

void hnas_config_free(hnas_config* config) { delete config; }

hnas_status hnas_experiment_create(const hnas_config* config, uint64_t seed,
                                   hnas_experiment** out) {
  if (config == nullptr || out == nullptr) return fail(HNAS_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    config->config.validate();
    *out = new hnas_experiment(hnas::Experiment(config->config, seed));
  });
}

hnas_status hnas_experiment_load_checkpoint(const char* path, hnas_experiment** out) {
  if (path == nullptr || out == nullptr) return fail(HNAS_ERR_INVALID_ARGUMENT, "null argument");
  return guarded(
      [&] { *out = new hnas_experiment(hnas::Experiment::from_checkpoint_file(path)); });
}

hnas_status hnas_experiment_step(hnas_experiment* experiment, hnas_generation_stats* stats) {
  if (experiment == nullptr) return fail(HNAS_ERR_INVALID_ARGUMENT, "null experiment");
  return guarded([&] {
    const hnas::GenerationStats s = experiment->experiment.step();
    if (stats != nullptr) fill_stats(s, stats);
  });
}

hnas_status hnas_experiment_finished(const hnas_experiment* experiment, int* finished) {
  if (experiment == nullptr || finished == nullptr) {
    return fail(HNAS_ERR_INVALID_ARGUMENT, "null argument");
  }
  *finished = experiment->experiment.finished() ? 1 : 0;
  g_last_error.clear();
  return HNAS_OK;
}

hnas_status hnas_experiment_save_checkpoint(const hnas_experiment* experiment, const char* path) {
  if (experiment == nullptr || path == nullptr) {
    return fail(HNAS_ERR_INVALID_ARGUMENT, "null argument");
  }
  return guarded([&] {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw hnas::IoError(std::string("cannot write ") + path);
    out << experiment->experiment.checkpoint().dump() << "\n";
    out.flush();
    if (!out) throw hnas::IoError(std::string("write failed: ") + path);
  });
}

void hnas_experiment_free(hnas_experiment* experiment) { delete experiment; }

hnas_status hnas_run(const hnas_config* config, const char* out_dir, int stop_after) {
  if (config == nullptr) return fail(HNAS_ERR_INVALID_ARGUMENT, "null config");
  return guarded([&] {
    const std::string dir = out_dir != nullptr ? out_dir : config->config.output_dir;
    hnas::run(config->config, dir,
              stop_after < 0 ? std::nullopt : std::optional<int>(stop_after));
  });
}

hnas_status hnas_resume(const char* checkpoint_path, const char* out_dir) {
  if (checkpoint_path == nullptr || out_dir == nullptr) {
    return fail(HNAS_ERR_INVALID_ARGUMENT, "null argument");
  }
  return guarded([&] { hnas::resume(checkpoint_path, out_dir); });
}

hnas_status hnas_compare(const hnas_config* config, const uint64_t* seeds, size_t seed_count,
                         const char* out_dir, hnas_compare_summary* summary) {
  if (config == nullptr || (seeds == nullptr && seed_count > 0)) {
    return fail(HNAS_ERR_INVALID_ARGUMENT, "null argument");
  }
  return guarded([&] {
    const std::vector<std::uint64_t> list(seeds, seeds + seed_count);
    const hnas::ComparisonReport r =
        hnas::compare(config->config, list, out_dir != nullptr ? out_dir : "");
    if (summary != nullptr) {
      summary->seeds = static_cast<int>(r.seeds.size());
      summary->final_best_wins = r.final_best_wins;
      summary->early_generation = r.early_generation;
      summary->early_mean_wins = r.early_mean_wins;
      summary->wilcoxon_p_value = r.wilcoxon_p_value;
    }
  });
}

hnas_status hnas_export(const char* checkpoint_path, hnas_export_format format, char** out) {
  if (checkpoint_path == nullptr || out == nullptr) {
    return fail(HNAS_ERR_INVALID_ARGUMENT, "null argument");
  }
  if (format != HNAS_EXPORT_JSON && format != HNAS_EXPORT_DOT) {
    return fail(HNAS_ERR_INVALID_ARGUMENT, "unknown export format");
  }
  return guarded([&] {
    std::ifstream in(checkpoint_path, std::ios::binary);
    if (!in) throw hnas::IoError(std::string("cannot open ") + checkpoint_path);
    nlohmann::json cp;
    try {
      cp = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw hnas::CorruptCheckpoint(std::string("cannot parse checkpoint: ") + e.what());
    }
    *out = copy_string(hnas::export_best(
        cp, format == HNAS_EXPORT_DOT ? hnas::ExportFormat::kDot : hnas::ExportFormat::kJson));
  });
}

void hnas_string_free(char* s) { delete[] s; }

void hnas_request_stop(void) { hnas::request_stop(); }
void hnas_clear_stop(void) { hnas::clear_stop(); }

}  // extern "C"
