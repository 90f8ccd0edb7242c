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

#include "hnas/registry.hpp"

#include <algorithm>
#include <tuple>

#include "hnas/error.hpp"

namespace hnas {

ListsState ListsState::initialize(const std::vector<LayerOp>& layers, RegistryParams params) {
  if (layers.empty()) throw EmptyLayerSet();
  if (static_cast<int>(layers.size()) > params.notable_max) {
    throw ConfigError("layer set larger than the notable list capacity");
  }
  ListsState state(params);
  for (const LayerOp& op : layers) {
    const ModuleId& id = state.store_.insert(ModuleDef::single_layer(op));
    state.notable_[id] = FitnessRecord{params.prior_fitness, 1, 0};
  }
  return state;
}

void ListsState::record_fitness(const ModuleId& id, double fitness) {
  if (banned_.count(id) != 0) return;
  if (auto it = notable_.find(id); it != notable_.end()) {
    it->second.fitness_sum += fitness;
    ++it->second.observation_count;
    return;
  }
  auto [it, inserted] = candidate_.try_emplace(id, FitnessRecord{0.0, 0, params_.base_ttl});
  it->second.fitness_sum += fitness;
  ++it->second.observation_count;
}

GenerationVerdicts ListsState::end_of_generation() {
  GenerationVerdicts verdicts;

  std::vector<std::pair<ModuleId, double>> ready;
  for (auto& [id, record] : candidate_) {
    if (record.ttl_remaining > 0) --record.ttl_remaining;
    if (record.observation_count >= params_.min_observations) {
      ready.emplace_back(id, *record.average());
    }
  }
  // Strongest challengers are adjudicated first.
  std::sort(ready.begin(), ready.end(), [](const auto& a, const auto& b) {
    return std::tie(b.second, a.first) < std::tie(a.second, b.first);
  });

  for (const auto& [id, avg] : ready) {
    const auto worst = worst_notable();
    const bool has_room = static_cast<int>(notable_.size()) < params_.notable_max;
    bool promote;
    if (!worst) {
      promote = has_room;
    } else if (has_room) {
      promote = avg >= worst->second;
    } else {
      promote = avg > worst->second;
    }

    auto node = candidate_.extract(id);
    if (!promote) {
      banned_.insert(id);
      verdicts.bans.push_back(id);
      continue;
    }
    if (!has_room) {
      notable_.erase(worst->first);
      banned_.insert(worst->first);
      verdicts.bans.push_back(worst->first);
    }
    FitnessRecord record = node.mapped();
    record.ttl_remaining = 0;
    notable_.emplace(id, record);
    verdicts.promotions.push_back(id);
  }

  for (auto it = candidate_.begin(); it != candidate_.end();) {
    if (it->second.ttl_remaining == 0) {
      banned_.insert(it->first);
      verdicts.bans.push_back(it->first);
      it = candidate_.erase(it);
    } else {
      ++it;
    }
  }
  return verdicts;
}

std::vector<ModuleId> ListsState::sample_notables(int n, Rng& rng) const {
  if (notable_.empty()) throw EmptyNotableList();
  std::vector<const ModuleId*> ids;
  std::vector<double> cumulative;
  ids.reserve(notable_.size());
  cumulative.reserve(notable_.size());
  double total = 0.0;
  for (const auto& [id, record] : notable_) {
    total += std::max(record.average().value_or(0.0), params_.weight_floor);
    ids.push_back(&id);
    cumulative.push_back(total);
  }
  std::vector<ModuleId> out;
  out.reserve(n);
  for (int k = 0; k < n; ++k) {
    const double target = rng.uniform() * total;
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), target);
    if (it == cumulative.end()) --it;
    out.push_back(*ids[it - cumulative.begin()]);
  }
  return out;
}

std::optional<std::pair<ModuleId, double>> ListsState::worst_notable() const {
  std::optional<std::pair<ModuleId, double>> worst;
  // Map order is ascending by id, so strict < keeps the smallest id on ties.
  for (const auto& [id, record] : notable_) {
    const double avg = record.average().value_or(0.0);
    if (!worst || avg < worst->second) worst.emplace(id, avg);
  }
  return worst;
}

std::optional<std::string> ListsState::check_invariants() const {
  for (const auto& [id, record] : notable_) {
    if (candidate_.count(id) != 0) return "id in notable and candidate: " + id.to_hex();
    if (banned_.count(id) != 0) return "id in notable and banned: " + id.to_hex();
    if (!store_.contains(id)) return "notable without definition: " + id.to_hex();
  }
  for (const auto& [id, record] : candidate_) {
    if (banned_.count(id) != 0) return "id in candidate and banned: " + id.to_hex();
    if (!store_.contains(id)) return "candidate without definition: " + id.to_hex();
  }
  if (static_cast<int>(notable_.size()) > params_.notable_max) {
    return "notable list over capacity";
  }
  return std::nullopt;
}

}  // namespace hnas
