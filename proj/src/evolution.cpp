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

#include "hnas/evolution.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <tuple>
#include <unordered_set>

#include "hnas/error.hpp"

namespace hnas {
namespace {

int sample_graph_nodes(const EvolutionConfig& config, Rng& rng) {
  if (config.gen_graph_nodes_max <= config.gen_graph_nodes_min) return config.gen_graph_nodes_min;
  const auto span =
      static_cast<std::uint64_t>(config.gen_graph_nodes_max - config.gen_graph_nodes_min + 1);
  return config.gen_graph_nodes_min + static_cast<int>(rng.below(span));
}

bool reaches(const ModuleDef& module, Vertex from, Vertex to) {
  std::vector<Vertex> stack{from};
  std::unordered_set<Vertex> seen{from};
  while (!stack.empty()) {
    const Vertex v = stack.back();
    stack.pop_back();
    if (v == to) return true;
    // Edges are sorted by source, so the successors of v are contiguous.
    auto it = std::lower_bound(module.edges().begin(), module.edges().end(),
                               Edge{v, std::numeric_limits<Vertex>::min()});
    for (; it != module.edges().end() && it->first == v; ++it) {
      if (seen.insert(it->second).second) stack.push_back(it->second);
    }
  }
  return false;
}

ModuleId seed_id(const LayerOp& op) { return ModuleDef::single_layer(op).id(); }

}  // namespace

RegistryParams EvolutionConfig::registry_params() const {
  RegistryParams p;
  p.notable_max = notable_max;
  p.base_ttl = base_ttl;
  p.min_observations = min_observations;
  p.prior_fitness = prior_fitness;
  return p;
}

void EvolutionConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ConfigError(what);
  };
  require(population_size >= 1, "population_size must be >= 1");
  require(notable_max >= 1, "notable_max must be >= 1");
  require(base_ttl >= 1, "base_ttl must be >= 1");
  require(min_observations >= 1, "min_observations must be >= 1");
  require(replace_fraction >= 0.0 && replace_fraction <= 1.0, "replace_fraction must be in [0, 1]");
  require(p_node_mut >= 0.0 && p_edge_mut >= 0.0 && p_node_mut + p_edge_mut <= 1.0,
          "p_node_mut and p_edge_mut must be non-negative with sum <= 1");
  require(gen_graph_nodes_min >= 1 && gen_graph_nodes_max >= gen_graph_nodes_min,
          "gen_graph_nodes must be >= 1 with min <= max");
  require(max_epochs >= 1, "max_epochs must be >= 1");
  require(p_edge_gen >= 0.0 && p_edge_gen <= 1.0, "p_edge_gen must be in [0, 1]");
  require(edge_retries >= 1, "edge_retries must be >= 1");
}

int training_epochs(int complexity, int generation, int max_epochs) {
  const double denominator = std::max(std::log(static_cast<double>(generation) + 1.0), 1.0);
  const double quotient = std::floor(static_cast<double>(complexity) / denominator);
  const double clamped = std::min(quotient, static_cast<double>(max_epochs));
  return std::max(1, static_cast<int>(clamped));
}

ModuleDef generate_module(ListsState& state, int n_nodes, double p_edge_gen, Rng& rng) {
  const std::vector<ModuleId> picks = state.sample_notables(n_nodes, rng);
  std::vector<NodeRef> nodes;
  nodes.reserve(picks.size());
  for (const ModuleId& id : picks) {
    const ModuleDef& def = state.store().at(id);
    if (def.is_single_layer()) {
      nodes.emplace_back(std::get<LayerRef>(def.nodes()[0]));
    } else {
      nodes.emplace_back(ModuleRef{id});
    }
  }

  std::vector<Edge> edges;
  std::vector<int> indegree(n_nodes, 0), outdegree(n_nodes, 0);
  for (int i = 0; i < n_nodes; ++i) {
    for (int j = i + 1; j < n_nodes; ++j) {
      if (rng.bernoulli(p_edge_gen)) {
        edges.emplace_back(i, j);
        ++outdegree[i];
        ++indegree[j];
      }
    }
  }
  for (int i = 0; i < n_nodes; ++i) {
    if (indegree[i] == 0) edges.emplace_back(kInput, i);
    if (outdegree[i] == 0) edges.emplace_back(i, kOutput);
  }
  ModuleDef module(std::move(nodes), std::move(edges));
  state.store().insert(module);
  return module;
}

std::string_view to_string(MutationKind kind) {
  switch (kind) {
    case MutationKind::kNone:
      return "none";
    case MutationKind::kNode:
      return "node";
    case MutationKind::kEdge:
      return "edge";
  }
  return "none";
}

MutationKind mutation_kind(double s, double p_node, double p_edge) {
  if (s < p_node) return MutationKind::kNode;
  if (s < p_node + p_edge) return MutationKind::kEdge;
  return MutationKind::kNone;
}

ModuleId mutate_node(const ModuleId& root, ListsState& state, Rng& rng,
                     const EvolutionConfig& config) {
  ModuleStore& store = state.store();
  ModuleId target = root;
  int slot = 0;
  while (true) {
    const ModuleDef& def = store.at(target);
    slot = rng.index(def.nodes().size());
    const auto* ref = std::get_if<ModuleRef>(&def.nodes()[slot]);
    if (ref == nullptr) break;
    target = ref->id;
  }

  const ModuleDef fresh =
      generate_module(state, sample_graph_nodes(config, rng), config.p_edge_gen, rng);
  const ModuleDef& def = store.at(target);
  std::vector<NodeRef> nodes = def.nodes();
  nodes[slot] = ModuleRef{fresh.id()};
  const ModuleDef edited(std::move(nodes), def.edges());
  return replace_module(root, target, edited, store);
}

ModuleId mutate_edge(const ModuleId& root, ListsState& state, Rng& rng, int retries) {
  ModuleStore& store = state.store();
  ModuleId target = root;
  while (true) {
    const ModuleDef& def = store.at(target);
    std::vector<ModuleId> children;
    for (const NodeRef& ref : def.nodes()) {
      if (const auto* m = std::get_if<ModuleRef>(&ref)) children.push_back(m->id);
    }
    const int choice = rng.index(children.size() + 1);
    if (choice == 0) break;
    target = children[choice - 1];
  }

  const ModuleDef& def = store.at(target);
  const int n = def.size();
  for (int attempt = 0; attempt < retries; ++attempt) {
    // Sources range over INPUT and the nodes, destinations over the nodes
    // and OUTPUT.
    const int s = rng.index(n + 1);
    const int d = rng.index(n + 1);
    const Vertex from = s == 0 ? kInput : s - 1;
    const Vertex to = d == n ? kOutput : d;
    if (from == to || def.has_edge(from, to) || reaches(def, to, from)) continue;
    std::vector<Edge> edges = def.edges();
    edges.emplace_back(from, to);
    const ModuleDef edited(def.nodes(), std::move(edges));
    return replace_module(root, target, edited, store);
  }
  return root;
}

MutationOutcome mutate(PopulationMember& member, ListsState& state, Rng& rng,
                       const EvolutionConfig& config) {
  MutationOutcome outcome;
  outcome.kind = mutation_kind(rng.uniform(), config.p_node_mut, config.p_edge_mut);
  ModuleId next = member.root;
  if (outcome.kind == MutationKind::kNode) {
    next = mutate_node(member.root, state, rng, config);
  } else if (outcome.kind == MutationKind::kEdge) {
    next = mutate_edge(member.root, state, rng, config.edge_retries);
  }
  outcome.changed = next != member.root;
  if (outcome.changed) {
    member.root = next;
    member.dirty = true;
    member.fitness.reset();
    member.reported_fitness.reset();
  }
  return outcome;
}

std::vector<ModuleId> fitness_recipients(const ModuleId& root, const ModuleStore& store,
                                         bool per_occurrence) {
  std::vector<ModuleId> out;
  std::unordered_set<ModuleId, ModuleIdHash> seen;
  auto emit = [&](const ModuleId& id) {
    if (per_occurrence || seen.insert(id).second) out.push_back(id);
  };
  std::function<void(const ModuleId&)> visit = [&](const ModuleId& id) {
    const bool first = seen.count(id) == 0;
    emit(id);
    if (!per_occurrence && !first) return;
    for (const NodeRef& ref : store.at(id).nodes()) {
      if (const auto* layer = std::get_if<LayerRef>(&ref)) {
        emit(seed_id(layer->op));
      } else {
        visit(std::get<ModuleRef>(ref).id);
      }
    }
  };
  visit(root);
  return out;
}

void propagate_fitness(const PopulationMember& member, double fitness, ListsState& state,
                       bool per_occurrence) {
  for (const ModuleId& id : fitness_recipients(member.root, state.store(), per_occurrence)) {
    state.record_fitness(id, fitness);
  }
}

Search::Search(EvolutionConfig config, std::vector<LayerOp> layers)
    : config_(std::move(config)), layers_(std::move(layers)), rng_(config_.rng_seed) {
  config_.validate();
  if (layers_.empty()) throw EmptyLayerSet();
}

void Search::initialize() {
  lists_ = ListsState::initialize(layers_, config_.registry_params());
  population_.clear();
  for (int i = 0; i < config_.population_size; ++i) {
    PopulationMember member;
    member.root =
        generate_module(lists_, sample_graph_nodes(config_, rng_), config_.p_edge_gen, rng_).id();
    population_.push_back(member);
  }
  best_.reset();
  generation_ = 0;
}

int Search::replacement_count() const {
  const int size = static_cast<int>(population_.size());
  const int wanted = static_cast<int>(std::ceil(config_.replace_fraction * size - 1e-9));
  return std::clamp(wanted, 0, std::max(size - 1, 0));
}

GenerationStats Search::step(const Evaluator& evaluator) {
  GenerationStats stats;
  stats.generation = generation_;
  const Resolver resolve = lists_.store().resolver();

  std::vector<std::size_t> evaluated;
  for (std::size_t i = 0; i < population_.size(); ++i) {
    PopulationMember& member = population_[i];
    if (!member.dirty) continue;
    const ModuleDef& root = lists_.store().at(member.root);
    const int epochs = training_epochs(complexity(root), generation_, config_.max_epochs);
    EvaluationResult result;
    try {
      result = evaluator.evaluate(flatten(root, resolve), epochs);
    } catch (const std::exception&) {
      result.fitness = result.reported_fitness = config_.failure_fitness;
      result.status = EvalStatus::kFailed;
    }
    member.fitness = result.fitness;
    member.reported_fitness = result.reported_fitness;
    member.dirty = false;
    evaluated.push_back(i);
  }
  stats.evaluations = static_cast<int>(evaluated.size());

  for (std::size_t i : evaluated) {
    propagate_fitness(population_[i], *population_[i].fitness, lists_,
                      config_.per_occurrence_fitness);
  }

  const GenerationVerdicts verdicts = lists_.end_of_generation();
  stats.promotions = static_cast<int>(verdicts.promotions.size());
  stats.bans = static_cast<int>(verdicts.bans.size());
  stats.notable_size = static_cast<int>(lists_.notable().size());
  stats.candidate_size = static_cast<int>(lists_.candidate().size());
  stats.banned_size = static_cast<int>(lists_.banned().size());

  double sum = 0.0;
  const PopulationMember* top = nullptr;
  for (const PopulationMember& member : population_) {
    const double f = *member.reported_fitness;
    sum += f;
    if (top == nullptr || f > *top->reported_fitness) top = &member;
  }
  stats.best_fitness = *top->reported_fitness;
  stats.mean_fitness = sum / static_cast<double>(population_.size());
  if (!best_ || stats.best_fitness > *best_->reported_fitness) best_ = *top;

  // Worst first: lowest fitness, then oldest, then smallest id.
  std::vector<std::size_t> order(population_.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const PopulationMember& x = population_[a];
    const PopulationMember& y = population_[b];
    return std::make_tuple(*x.fitness, -x.age, x.root) <
           std::make_tuple(*y.fitness, -y.age, y.root);
  });
  const int replaced = replacement_count();
  std::vector<bool> fresh(population_.size(), false);
  for (int k = 0; k < replaced; ++k) {
    PopulationMember member;
    member.root =
        generate_module(lists_, sample_graph_nodes(config_, rng_), config_.p_edge_gen, rng_).id();
    population_[order[k]] = member;
    fresh[order[k]] = true;
  }

  for (std::size_t i = 0; i < population_.size(); ++i) {
    if (fresh[i]) continue;
    ++population_[i].age;
    mutate(population_[i], lists_, rng_, config_);
  }

  ++generation_;
  lists_.store().retain_reachable(live_roots());
  return stats;
}

std::vector<ModuleId> Search::live_roots() const {
  std::vector<ModuleId> roots;
  for (const PopulationMember& m : population_) roots.push_back(m.root);
  if (best_) roots.push_back(best_->root);
  for (const auto& [id, record] : lists_.notable()) roots.push_back(id);
  for (const auto& [id, record] : lists_.candidate()) roots.push_back(id);
  return roots;
}

void Search::restore(int generation, std::vector<PopulationMember> population, ListsState lists,
                     const std::string& rng_state, std::optional<PopulationMember> best) {
  generation_ = generation;
  population_ = std::move(population);
  lists_ = std::move(lists);
  rng_.set_state(rng_state);
  best_ = std::move(best);
}

}  // namespace hnas
