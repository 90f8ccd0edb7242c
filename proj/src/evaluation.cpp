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

#include "hnas/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "hnas/canonical.hpp"
#include "hnas/error.hpp"
#include "json.hpp"

namespace hnas {
namespace {

constexpr char kInputName[] = "input";
constexpr char kOutputName[] = "output";

int dense(Vertex v, int n) {
  if (v == kInput) return 0;
  if (v == kOutput) return n + 1;
  return v + 1;
}

EvaluationResult failure(const FlatGraph& graph, int epochs, EvalStatus status,
                         double failure_fitness) {
  EvaluationResult r;
  r.fitness = r.reported_fitness = failure_fitness;
  r.epochs_used = epochs;
  r.phenotype_stats = flat_stats(graph);
  r.status = status;
  return r;
}

std::vector<std::string> split(std::string_view text, char sep) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = text.find(sep, start);
    parts.emplace_back(text.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

}  // namespace

std::string_view to_string(EvalStatus status) {
  switch (status) {
    case EvalStatus::kOk:
      return "ok";
    case EvalStatus::kConstraintViolation:
      return "constraint_violation";
    case EvalStatus::kLookupMiss:
      return "lookup_miss";
    case EvalStatus::kFailed:
      return "failed";
  }
  return "failed";
}

ConstraintCheck check_constraints(const FlatGraph& graph, const CellConstraints& constraints) {
  const FlatStats stats = flat_stats(graph);
  const int nodes = stats.node_count + (constraints.count_terminals ? 2 : 0);
  if (nodes > constraints.max_nodes) {
    return {ConstraintViolation::kNodes, std::to_string(nodes) + " nodes exceed limit " +
                                             std::to_string(constraints.max_nodes)};
  }
  if (stats.edge_count > constraints.max_edges) {
    return {ConstraintViolation::kEdges, std::to_string(stats.edge_count) +
                                             " edges exceed limit " +
                                             std::to_string(constraints.max_edges)};
  }
  for (const LayerOp& op : graph.nodes) {
    if (constraints.allowed_ops.count(op.label) == 0) {
      return {ConstraintViolation::kOps, "op not allowed: " + op.label};
    }
  }
  return {};
}

SurrogateTerms surrogate_terms(const FlatGraph& graph, int epochs_hint,
                               const SurrogateParams& params) {
  SurrogateTerms t;
  if (!graph.nodes.empty()) {
    double sum = 0.0;
    for (const LayerOp& op : graph.nodes) {
      const auto it = params.op_weights.find(op.label);
      sum += it == params.op_weights.end() ? params.default_op_weight : it->second;
    }
    t.op = sum / static_cast<double>(graph.nodes.size());
  }
  const double gap = static_cast<double>(flat_depth(graph) - params.target_depth);
  t.depth = std::max(0.0, 1.0 - params.depth_penalty * gap * gap);
  const int edges = flat_stats(graph).edge_count;
  t.edges = params.target_edges > 0
                ? static_cast<double>(std::min(edges, params.target_edges)) / params.target_edges
                : 0.0;
  const double weight = params.w_op + params.w_depth + params.w_edges;
  t.raw = weight > 0.0
              ? (params.w_op * t.op + params.w_depth * t.depth + params.w_edges * t.edges) / weight
              : 0.0;
  t.fitness = t.raw * (1.0 - std::exp2(-static_cast<double>(std::max(epochs_hint, 0))));
  return t;
}

EvaluationResult SurrogateEvaluator::evaluate(const FlatGraph& graph, int epochs_hint) const {
  if (constraints_ && !check_constraints(graph, *constraints_).ok()) {
    return failure(graph, epochs_hint, EvalStatus::kConstraintViolation, failure_fitness_);
  }
  EvaluationResult r;
  r.fitness = r.reported_fitness = surrogate_terms(graph, epochs_hint, params_).fitness;
  r.epochs_used = epochs_hint;
  r.phenotype_stats = flat_stats(graph);
  return r;
}

std::string cell_key(const FlatGraph& graph) {
  const int n = static_cast<int>(graph.nodes.size());
  const int v_count = n + 2;
  LabeledDigraph g;
  g.labels.reserve(v_count);
  g.labels.emplace_back("^in");
  for (const LayerOp& op : graph.nodes) g.labels.push_back("L" + op.label);
  g.labels.emplace_back("^out");
  for (const auto& [a, b] : graph.edges) g.edges.emplace_back(dense(a, n), dense(b, n));

  const CanonicalForm form = canonical_form(g);
  std::vector<int> position(v_count);
  for (int k = 0; k < v_count; ++k) position[form.order[k]] = k;

  std::string bits(static_cast<std::size_t>(v_count) * v_count, '0');
  for (const auto& [u, w] : g.edges) bits[position[u] * v_count + position[w]] = '1';

  std::string key = bits + ":";
  for (int k = 0; k < v_count; ++k) {
    const int v = form.order[k];
    if (k > 0) key += ',';
    if (v == 0) {
      key += kInputName;
    } else if (v == n + 1) {
      key += kOutputName;
    } else {
      key += graph.nodes[v - 1].label;
    }
  }
  return key;
}

std::optional<FlatGraph> parse_cell_key(std::string_view key) {
  const std::size_t colon = key.find(':');
  if (colon == std::string_view::npos) return std::nullopt;
  const std::string_view bits = key.substr(0, colon);
  const std::vector<std::string> labels = split(key.substr(colon + 1), ',');
  const int v_count = static_cast<int>(labels.size());
  if (v_count < 2 || bits.size() != static_cast<std::size_t>(v_count) * v_count) {
    return std::nullopt;
  }
  int input = -1, output = -1;
  for (int v = 0; v < v_count; ++v) {
    if (labels[v].empty()) return std::nullopt;
    if (labels[v] == kInputName) {
      if (input >= 0) return std::nullopt;
      input = v;
    } else if (labels[v] == kOutputName) {
      if (output >= 0) return std::nullopt;
      output = v;
    }
  }
  if (input < 0 || output < 0) return std::nullopt;

  FlatGraph graph;
  std::vector<Vertex> vertex(v_count);
  for (int v = 0; v < v_count; ++v) {
    if (v == input) {
      vertex[v] = kInput;
    } else if (v == output) {
      vertex[v] = kOutput;
    } else {
      vertex[v] = static_cast<Vertex>(graph.nodes.size());
      graph.nodes.push_back(LayerOp{labels[v], OpKind::kOther});
    }
  }
  std::vector<std::pair<int, int>> dense_edges;
  for (int u = 0; u < v_count; ++u) {
    for (int w = 0; w < v_count; ++w) {
      const char c = bits[u * v_count + w];
      if (c == '0') continue;
      if (c != '1' || u == w || w == input || u == output) return std::nullopt;
      graph.edges.emplace_back(vertex[u], vertex[w]);
      dense_edges.emplace_back(u, w);
    }
  }
  // Reject cycles: a topological pass must consume every vertex.
  std::vector<int> indegree(v_count, 0);
  for (const auto& e : dense_edges) ++indegree[e.second];
  std::vector<int> ready;
  for (int v = 0; v < v_count; ++v) {
    if (indegree[v] == 0) ready.push_back(v);
  }
  int seen = 0;
  while (!ready.empty()) {
    const int v = ready.back();
    ready.pop_back();
    ++seen;
    for (const auto& [a, b] : dense_edges) {
      if (a == v && --indegree[b] == 0) ready.push_back(b);
    }
  }
  if (seen != v_count) return std::nullopt;
  std::sort(graph.edges.begin(), graph.edges.end());
  return graph;
}

BenchmarkTable BenchmarkTable::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw TableLoadError("cannot open benchmark table: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str(), path);
}

BenchmarkTable BenchmarkTable::parse(std::string_view text, const std::string& source) {
  BenchmarkTable table;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) {
      if (end == text.size()) break;
      continue;
    }
    const std::string where = source + ":" + std::to_string(line_no) + ": ";
    nlohmann::json record;
    try {
      record = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw TableLoadError(where + e.what());
    }
    if (!record.is_object() || !record.contains("key") || !record["key"].is_string() ||
        !record.contains("validation_accuracy") || !record["validation_accuracy"].is_number() ||
        !record.contains("test_accuracy") || !record["test_accuracy"].is_number()) {
      throw TableLoadError(where + "expected {key, validation_accuracy, test_accuracy}");
    }
    BenchmarkEntry entry{record["validation_accuracy"].get<double>(),
                         record["test_accuracy"].get<double>()};
    for (double acc : {entry.validation_accuracy, entry.test_accuracy}) {
      if (!(acc >= 0.0 && acc <= 1.0)) throw TableLoadError(where + "accuracy outside [0, 1]");
    }
    const auto graph = parse_cell_key(record["key"].get<std::string>());
    if (!graph) throw TableLoadError(where + "malformed cell key");
    table.insert(*graph, entry);
    if (end == text.size()) break;
  }
  return table;
}

void BenchmarkTable::insert(const FlatGraph& graph, BenchmarkEntry entry) {
  entries_.try_emplace(cell_key(graph), entry);
}

const BenchmarkEntry* BenchmarkTable::find(const FlatGraph& graph) const {
  return find_key(cell_key(graph));
}

const BenchmarkEntry* BenchmarkTable::find_key(const std::string& canonical_key) const {
  const auto it = entries_.find(canonical_key);
  return it == entries_.end() ? nullptr : &it->second;
}

EvaluationResult TabularEvaluator::evaluate(const FlatGraph& graph, int epochs_hint) const {
  if (!check_constraints(graph, constraints_).ok()) {
    return failure(graph, epochs_hint, EvalStatus::kConstraintViolation, failure_fitness_);
  }
  const BenchmarkEntry* entry = table_->find(graph);
  if (entry == nullptr) {
    return failure(graph, epochs_hint, EvalStatus::kLookupMiss, failure_fitness_);
  }
  EvaluationResult r;
  r.fitness = r.reported_fitness = entry->validation_accuracy;
  r.epochs_used = epochs_hint;
  r.phenotype_stats = flat_stats(graph);
  return r;
}

EvaluationResult ConstantEvaluator::evaluate(const FlatGraph& graph, int epochs_hint) const {
  EvaluationResult r;
  r.fitness = constant_;
  r.reported_fitness =
      reporter_ ? reporter_->evaluate(graph, epochs_hint).reported_fitness : constant_;
  r.epochs_used = epochs_hint;
  r.phenotype_stats = flat_stats(graph);
  return r;
}

}  // namespace hnas
