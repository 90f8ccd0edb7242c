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

#ifndef HNAS_EVALUATION_HPP_
#define HNAS_EVALUATION_HPP_

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>

#include "hnas/module_graph.hpp"

namespace hnas {

enum class EvalStatus { kOk, kConstraintViolation, kLookupMiss, kFailed };

std::string_view to_string(EvalStatus status);

struct EvaluationResult {
  // Drives selection and list management.
  double fitness = 0.0;
  // Reported in statistics. Equals fitness except for the constant-fitness
  // baseline, which reports the fitness of a wrapped evaluator.
  double reported_fitness = 0.0;
  int epochs_used = 0;
  FlatStats phenotype_stats;
  EvalStatus status = EvalStatus::kOk;
};

// Implementations are immutable after construction, so concurrent calls on
// distinct graphs are safe.
class Evaluator {
 public:
  virtual ~Evaluator() = default;
  virtual EvaluationResult evaluate(const FlatGraph& graph, int epochs_hint) const = 0;
};

struct CellConstraints {
  int max_nodes = 7;
  int max_edges = 9;
  std::set<std::string> allowed_ops;
  // Count INPUT and OUTPUT towards max_nodes, as the 7x7 cell adjacency
  // matrix does.
  bool count_terminals = true;
};

enum class ConstraintViolation { kNone, kNodes, kEdges, kOps };

struct ConstraintCheck {
  ConstraintViolation violation = ConstraintViolation::kNone;
  std::string detail;

  bool ok() const { return violation == ConstraintViolation::kNone; }
};

ConstraintCheck check_constraints(const FlatGraph& graph, const CellConstraints& constraints);

// Structural stand-in for training accuracy. Every term depends only on the
// phenotype's isomorphism class:
//
//   op     = mean over layer nodes of op_weights[label] (default_op_weight
//            for unlisted labels)
//   depth  = max(0, 1 - depth_penalty * (longest_path - target_depth)^2),
//            longest path counted in layer nodes
//   edges  = min(edge_count, target_edges) / target_edges, terminal wiring
//            included
//   raw    = (w_op*op + w_depth*depth + w_edges*edges) / (w_op+w_depth+w_edges)
//   fitness = raw * (1 - 2^-epochs)
struct SurrogateParams {
  std::map<std::string, double> op_weights;
  double default_op_weight = 0.0;
  int target_depth = 6;
  double depth_penalty = 1.0 / 36.0;
  int target_edges = 16;
  double w_op = 0.4;
  double w_depth = 0.4;
  double w_edges = 0.2;
};

struct SurrogateTerms {
  double op = 0.0;
  double depth = 0.0;
  double edges = 0.0;
  double raw = 0.0;
  double fitness = 0.0;
};

SurrogateTerms surrogate_terms(const FlatGraph& graph, int epochs_hint,
                               const SurrogateParams& params);

class SurrogateEvaluator : public Evaluator {
 public:
  explicit SurrogateEvaluator(SurrogateParams params,
                              std::optional<CellConstraints> constraints = std::nullopt,
                              double failure_fitness = 0.0)
      : params_(std::move(params)),
        constraints_(std::move(constraints)),
        failure_fitness_(failure_fitness) {}

  EvaluationResult evaluate(const FlatGraph& graph, int epochs_hint) const override;

  const SurrogateParams& params() const { return params_; }

 private:
  SurrogateParams params_;
  std::optional<CellConstraints> constraints_;
  double failure_fitness_;
};

struct BenchmarkEntry {
  double validation_accuracy = 0.0;
  double test_accuracy = 0.0;
};

// Canonical cell key: the row-major adjacency matrix over (INPUT, layers...,
// OUTPUT) in canonical order as a '0'/'1' string, then ':' and the
// comma-separated labels in the same order with terminals written as
// "input" and "output". Isomorphic cells share a key.
std::string cell_key(const FlatGraph& graph);

// Parses a key in the format above (any vertex order) back into a graph.
// Returns nullopt if the key is malformed.
std::optional<FlatGraph> parse_cell_key(std::string_view key);

// Lookup table from canonical cell key to accuracies.
//
// File format: one JSON object per line,
//   {"key": "...", "validation_accuracy": x, "test_accuracy": y}
// Keys are re-canonicalized on load, so any vertex order is accepted. Blank
// lines are skipped. Throws TableLoadError on malformed lines, accuracies
// outside [0, 1], or malformed keys.
class BenchmarkTable {
 public:
  static BenchmarkTable load(const std::string& path);
  static BenchmarkTable parse(std::string_view text, const std::string& source = "<memory>");

  void insert(const FlatGraph& graph, BenchmarkEntry entry);
  const BenchmarkEntry* find(const FlatGraph& graph) const;
  const BenchmarkEntry* find_key(const std::string& canonical_key) const;
  std::size_t size() const { return entries_.size(); }

 private:
  std::unordered_map<std::string, BenchmarkEntry> entries_;
};

class TabularEvaluator : public Evaluator {
 public:
  TabularEvaluator(std::shared_ptr<const BenchmarkTable> table, CellConstraints constraints,
                   double failure_fitness = 0.0)
      : table_(std::move(table)),
        constraints_(std::move(constraints)),
        failure_fitness_(failure_fitness) {}

  EvaluationResult evaluate(const FlatGraph& graph, int epochs_hint) const override;

  const BenchmarkTable& table() const { return *table_; }

 private:
  std::shared_ptr<const BenchmarkTable> table_;
  CellConstraints constraints_;
  double failure_fitness_;
};

// Random-search control: the same fitness for every topology, so list
// promotion depends only on occurrence counts, TTL and capacity. An optional
// reporter supplies the fitness shown in statistics.
class ConstantEvaluator : public Evaluator {
 public:
  explicit ConstantEvaluator(double constant = 0.5,
                             std::shared_ptr<const Evaluator> reporter = nullptr)
      : constant_(constant), reporter_(std::move(reporter)) {}

  EvaluationResult evaluate(const FlatGraph& graph, int epochs_hint) const override;

 private:
  double constant_;
  std::shared_ptr<const Evaluator> reporter_;
};

}  // namespace hnas

#endif  // HNAS_EVALUATION_HPP_
