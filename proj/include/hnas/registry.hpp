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

#ifndef HNAS_REGISTRY_HPP_
#define HNAS_REGISTRY_HPP_

#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "hnas/module_graph.hpp"
#include "hnas/rng.hpp"

namespace hnas {

struct FitnessRecord {
  double fitness_sum = 0.0;
  int observation_count = 0;
  int ttl_remaining = 0;  // candidates only

  std::optional<double> average() const {
    if (observation_count == 0) return std::nullopt;
    return fitness_sum / observation_count;
  }
};

struct RegistryParams {
  int notable_max = 10;
  int base_ttl = 4;
  int min_observations = 2;
  double prior_fitness = 0.5;
  double weight_floor = 1e-6;
};

struct GenerationVerdicts {
  std::vector<ModuleId> promotions;
  std::vector<ModuleId> bans;  // includes notables evicted by a promotion
};

// Notable, candidate and banned module lists.
//
// Every module seen in an evaluated hierarchy lands in exactly one list. New
// modules start as candidates; at each generation boundary a candidate with
// enough observations is either promoted into the notable list or banned,
// and one that runs out of TTL first is banned. Banned is absorbing.
//
// Single writer. The lists are ordered maps so iteration order, and with it
// every RNG-consuming operation, is reproducible.
class ListsState {
 public:
  ListsState() = default;
  explicit ListsState(RegistryParams params) : params_(params) {}

  // Seeds the notable list with one single-layer module per op, each holding
  // one observation of prior_fitness. Throws EmptyLayerSet.
  static ListsState initialize(const std::vector<LayerOp>& layers, RegistryParams params);

  // Adds one observation. Unseen ids become candidates with the base TTL;
  // observations of banned ids are dropped. The id's definition is expected
  // to be in store() already.
  void record_fitness(const ModuleId& id, double fitness);

  // Ages candidates by one generation and adjudicates them.
  GenerationVerdicts end_of_generation();

  // n ids drawn with replacement, proportional to
  // max(average, weight_floor). Throws EmptyNotableList.
  std::vector<ModuleId> sample_notables(int n, Rng& rng) const;

  // Lowest average; ties go to the smallest id.
  std::optional<std::pair<ModuleId, double>> worst_notable() const;

  bool is_notable(const ModuleId& id) const { return notable_.count(id) != 0; }
  bool is_candidate(const ModuleId& id) const { return candidate_.count(id) != 0; }
  bool is_banned(const ModuleId& id) const { return banned_.count(id) != 0; }

  const std::map<ModuleId, FitnessRecord>& notable() const { return notable_; }
  const std::map<ModuleId, FitnessRecord>& candidate() const { return candidate_; }
  const std::set<ModuleId>& banned() const { return banned_; }
  const RegistryParams& params() const { return params_; }

  ModuleStore& store() { return store_; }
  const ModuleStore& store() const { return store_; }

  // Returns a description of the first broken invariant, or nullopt.
  std::optional<std::string> check_invariants() const;

  // Restores lists verbatim (checkpoint loading). No validation beyond
  // check_invariants(), which the caller should run.
  void restore(std::map<ModuleId, FitnessRecord> notable,
               std::map<ModuleId, FitnessRecord> candidate, std::set<ModuleId> banned) {
    notable_ = std::move(notable);
    candidate_ = std::move(candidate);
    banned_ = std::move(banned);
  }

 private:
  RegistryParams params_;
  std::map<ModuleId, FitnessRecord> notable_;
  std::map<ModuleId, FitnessRecord> candidate_;
  std::set<ModuleId> banned_;
  ModuleStore store_;
};

}  // namespace hnas

#endif  // HNAS_REGISTRY_HPP_
