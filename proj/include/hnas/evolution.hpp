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

#ifndef HNAS_EVOLUTION_HPP_
#define HNAS_EVOLUTION_HPP_

#include <optional>
#include <string>
#include <vector>

#include "hnas/evaluation.hpp"
#include "hnas/module_graph.hpp"
#include "hnas/registry.hpp"
#include "hnas/rng.hpp"

namespace hnas {

struct EvolutionConfig {
  int population_size = 20;
  int notable_max = 10;
  int base_ttl = 4;
  int min_observations = 2;
  double replace_fraction = 0.4;
  double p_node_mut = 0.15;
  double p_edge_mut = 0.55;
  // Node count of generated module graphs, uniform on [min, max].
  int gen_graph_nodes_min = 2;
  int gen_graph_nodes_max = 2;
  int max_epochs = 10;
  std::uint64_t rng_seed = 0;
  // Probability of each forward edge in a freshly generated graph.
  double p_edge_gen = 0.5;
  int edge_retries = 10;
  double prior_fitness = 0.5;
  double failure_fitness = 0.0;
  // Record a member's fitness once per occurrence of a module instead of
  // once per distinct module.
  bool per_occurrence_fitness = false;

  RegistryParams registry_params() const;
  // Throws ConfigError describing the first invalid field.
  void validate() const;
};

struct PopulationMember {
  ModuleId root;
  std::optional<double> fitness;           // selection fitness
  std::optional<double> reported_fitness;  // statistics fitness
  bool dirty = true;
  int age = 0;
};

struct GenerationStats {
  int generation = 0;
  double best_fitness = 0.0;
  double mean_fitness = 0.0;
  int notable_size = 0;
  int candidate_size = 0;
  int banned_size = 0;
  int promotions = 0;
  int bans = 0;
  int evaluations = 0;
};

// max(1, min(floor(complexity / max(ln(generation + 1), 1)), max_epochs))
int training_epochs(int complexity, int generation, int max_epochs);

// Samples n_nodes ids from the notable list and wires them into a random
// DAG: each forward pair (i -> j, i < j) gets an edge with probability
// p_edge_gen, then nodes without predecessors are fed from INPUT and nodes
// without successors drain into OUTPUT. A sampled single-layer module
// becomes a layer node. The result is inserted into the state's store.
ModuleDef generate_module(ListsState& state, int n_nodes, double p_edge_gen, Rng& rng);

enum class MutationKind { kNone, kNode, kEdge };

std::string_view to_string(MutationKind kind);

// Maps s in [0, 1) to node mutation below p_node, edge mutation below
// p_node + p_edge, and no mutation otherwise.
MutationKind mutation_kind(double s, double p_node, double p_edge);

// Picks a computational node; a layer node is replaced by a reference to a
// freshly generated module, a module node recurses into the referenced
// module. The edited module is swapped in for every reference to it inside
// this hierarchy. Returns the new root id.
ModuleId mutate_node(const ModuleId& root, ListsState& state, Rng& rng,
                     const EvolutionConfig& config);

// Chooses uniformly among this module and its module-referencing nodes
// (recursing into the latter), then tries up to `retries` random node pairs
// for an absent edge that keeps the graph acyclic. Returns `root` unchanged
// when none is found.
ModuleId mutate_edge(const ModuleId& root, ListsState& state, Rng& rng, int retries);

struct MutationOutcome {
  MutationKind kind = MutationKind::kNone;
  bool changed = false;
};

// At most one mutation per call. Mutated members get a new root id and are
// marked dirty.
MutationOutcome mutate(PopulationMember& member, ListsState& state, Rng& rng,
                       const EvolutionConfig& config);

// Ids that share a member's fitness: the root, every module it references
// and the seed module of every layer. One entry per distinct id, or one per
// occurrence when per_occurrence is set.
std::vector<ModuleId> fitness_recipients(const ModuleId& root, const ModuleStore& store,
                                         bool per_occurrence);

void propagate_fitness(const PopulationMember& member, double fitness, ListsState& state,
                       bool per_occurrence = false);

// Population, lists and RNG of one search run.
class Search {
 public:
  Search(EvolutionConfig config, std::vector<LayerOp> layers);

  // Seeds the lists and generates the initial population.
  void initialize();

  // One generation: evaluate dirty members, share their fitness, adjudicate
  // the lists, replace the worst fraction, mutate the survivors.
  GenerationStats step(const Evaluator& evaluator);

  int generation() const { return generation_; }
  const EvolutionConfig& config() const { return config_; }
  const std::vector<LayerOp>& layers() const { return layers_; }
  const std::vector<PopulationMember>& population() const { return population_; }
  const ListsState& lists() const { return lists_; }
  ListsState& lists() { return lists_; }
  Rng& rng() { return rng_; }
  const Rng& rng() const { return rng_; }

  // Best evaluated member seen so far, by reported fitness.
  const std::optional<PopulationMember>& best() const { return best_; }

  // Checkpoint restore.
  void restore(int generation, std::vector<PopulationMember> population, ListsState lists,
               const std::string& rng_state, std::optional<PopulationMember> best);

  // Roots whose definitions must be kept: population, best, lists.
  std::vector<ModuleId> live_roots() const;

 private:
  int replacement_count() const;

  EvolutionConfig config_;
  std::vector<LayerOp> layers_;
  ListsState lists_;
  std::vector<PopulationMember> population_;
  std::optional<PopulationMember> best_;
  Rng rng_;
  int generation_ = 0;
};

}  // namespace hnas

#endif  // HNAS_EVOLUTION_HPP_
