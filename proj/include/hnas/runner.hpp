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

// Experiment orchestration: configuration, seeded runs with per-generation
// CSV and checkpoints, resume, the search-versus-random comparison and
// phenotype export.

#ifndef HNAS_RUNNER_HPP_
#define HNAS_RUNNER_HPP_

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hnas/evaluation.hpp"
#include "hnas/evolution.hpp"
#include "json.hpp"

namespace hnas {

inline constexpr int kConfigSchemaVersion = 1;
inline constexpr int kCheckpointSchemaVersion = 1;
inline constexpr char kStatsHeader[] =
    "generation,best_fitness,mean_fitness,notable_size,candidate_size,banned_size,promotions,"
    "bans,evaluations";

enum class EvaluatorType { kSurrogate, kTabular, kRandom };

struct EvaluatorSpec {
  EvaluatorType type = EvaluatorType::kSurrogate;
  std::string table_path;  // tabular
  double constant = 0.5;   // random
  SurrogateParams surrogate;
};

struct ExperimentConfig {
  EvolutionConfig evolution;
  std::vector<LayerOp> operations;
  EvaluatorSpec evaluator;
  std::optional<CellConstraints> constraints;
  int generations = 20;
  std::string output_dir = "runs";
  std::vector<std::uint64_t> seeds;

  // Throws ConfigError.
  void validate() const;
  // Seeds to run: `seeds` if set, otherwise the single rng_seed.
  std::vector<std::uint64_t> effective_seeds() const;
};

// Relative table paths are resolved against `base_dir`. Throws ConfigError.
ExperimentConfig config_from_json(const nlohmann::json& j, const std::string& base_dir = "");
nlohmann::json config_to_json(const ExperimentConfig& config);
ExperimentConfig load_config(const std::string& path);

// "fmnist-surrogate" or "nasbench". Throws ConfigError for other names.
ExperimentConfig preset(const std::string& name);

// Throws TableLoadError for a missing or malformed table.
std::shared_ptr<const Evaluator> make_evaluator(const ExperimentConfig& config);

// One seed of one experiment.
class Experiment {
 public:
  Experiment(ExperimentConfig config, std::uint64_t seed);
  Experiment(ExperimentConfig config, std::uint64_t seed,
             std::shared_ptr<const Evaluator> evaluator);

  // Throws CorruptCheckpoint.
  static Experiment from_checkpoint(const nlohmann::json& checkpoint);
  static Experiment from_checkpoint_file(const std::string& path);

  GenerationStats step();
  bool finished() const { return search_.generation() >= config_.generations; }

  nlohmann::json checkpoint() const;

  const ExperimentConfig& config() const { return config_; }
  std::uint64_t seed() const { return seed_; }
  const Search& search() const { return search_; }
  const std::vector<GenerationStats>& history() const { return history_; }
  const Evaluator& evaluator() const { return *evaluator_; }

 private:
  struct Restored {};
  Experiment(Restored, ExperimentConfig config, std::uint64_t seed,
             std::shared_ptr<const Evaluator> evaluator);

  ExperimentConfig config_;
  std::uint64_t seed_;
  std::shared_ptr<const Evaluator> evaluator_;
  Search search_;
  std::vector<GenerationStats> history_;
};

std::string format_stats_row(const GenerationStats& stats);
std::string stats_csv(const std::vector<GenerationStats>& history);

struct SeedReport {
  std::uint64_t seed = 0;
  std::string directory;
  std::vector<GenerationStats> history;
  double best_fitness = 0.0;
  bool completed = false;
};

struct ExperimentReport {
  std::vector<SeedReport> seeds;
  // Per generation, averaged over seeds that reached it.
  std::vector<double> mean_best;
  std::vector<double> mean_mean;
};

// Runs every seed into <out_dir>/seed_<seed>/ with config.json, stats.csv,
// checkpoints/gen_NNNN.json, checkpoint.json, best.json and best.dot, and
// writes <out_dir>/summary.csv. With a tabular evaluator best.json also
// carries the best cell's validation and test accuracy. stop_after limits the number of generations
// executed in this call (the checkpoint can be resumed later).
ExperimentReport run(const ExperimentConfig& config, const std::string& out_dir,
                     std::optional<int> stop_after = std::nullopt);

// Continues a checkpointed seed to its configured generation count, writing
// the same files as run() into out_dir.
SeedReport resume(const std::string& checkpoint_path, const std::string& out_dir);

struct ComparisonReport {
  std::vector<std::uint64_t> seeds;
  // [seed][generation]
  std::vector<std::vector<GenerationStats>> search;
  std::vector<std::vector<GenerationStats>> random;
  int final_best_wins = 0;      // search final best > random final best
  int early_mean_wins = 0;      // search mean > random best at early_generation
  int early_generation = 10;
  double wilcoxon_p_value = 1.0;  // one-sided, search > random on final best
};

// Both arms per seed: the configured evaluator drives the search arm; the
// random arm uses a constant fitness for selection and lists while reporting
// the configured evaluator's fitness. Needs at least five seeds. Writes
// compare.csv and compare_summary.json when out_dir is non-empty.
ComparisonReport compare(const ExperimentConfig& config, const std::vector<std::uint64_t>& seeds,
                         const std::string& out_dir = "");

// Exact one-sided Wilcoxon signed-rank p-value for H1: x > y (paired).
// Zero differences are dropped and tied ranks averaged; the null
// distribution is computed exactly for any sample size.
double wilcoxon_signed_rank_greater(const std::vector<double>& x, const std::vector<double>& y);

enum class ExportFormat { kJson, kDot };

// Best phenotype and its hierarchy from a checkpoint. Throws
// CorruptCheckpoint.
std::string export_best(const nlohmann::json& checkpoint, ExportFormat format);

// Cooperative cancellation for long runs; checked between generations.
void request_stop();
void clear_stop();
bool stop_requested();

}  // namespace hnas

#endif  // HNAS_RUNNER_HPP_
