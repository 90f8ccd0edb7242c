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

// Hierarchical genotype: modules whose computational nodes reference either
// a primitive layer or another module, plus flattening into a layer-only
// phenotype and content-derived module identity.

#ifndef HNAS_MODULE_GRAPH_HPP_
#define HNAS_MODULE_GRAPH_HPP_

#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

namespace hnas {

enum class OpKind { kConvolution, kPooling, kOther };

std::string_view to_string(OpKind kind);
std::optional<OpKind> op_kind_from_string(std::string_view name);

// A primitive layer. The label is opaque to the search.
struct LayerOp {
  std::string label;
  OpKind kind = OpKind::kOther;

  friend bool operator==(const LayerOp&, const LayerOp&) = default;
};

// 128-bit content digest of a module's canonical form.
struct ModuleId {
  std::uint64_t hi = 0;
  std::uint64_t lo = 0;

  std::string to_hex() const;
  static std::optional<ModuleId> from_hex(std::string_view hex);

  friend auto operator<=>(const ModuleId&, const ModuleId&) = default;
};

struct ModuleIdHash {
  std::size_t operator()(const ModuleId& id) const noexcept {
    return static_cast<std::size_t>(id.lo ^ (id.hi * 0x9e3779b97f4a7c15ULL));
  }
};

// Endpoints of module and phenotype edges. Computational nodes are numbered
// from 0; the two terminals use the negative sentinels.
using Vertex = std::int32_t;
inline constexpr Vertex kInput = -1;
inline constexpr Vertex kOutput = -2;
using Edge = std::pair<Vertex, Vertex>;

struct LayerRef {
  LayerOp op;
  friend bool operator==(const LayerRef&, const LayerRef&) = default;
};

struct ModuleRef {
  ModuleId id;
  friend bool operator==(const ModuleRef&, const ModuleRef&) = default;
};

using NodeRef = std::variant<LayerRef, ModuleRef>;

// An immutable module genotype. The id is derived from the canonical form at
// construction, so structurally identical modules compare equal by id no
// matter how their nodes are numbered. Child modules enter the canonical form
// through their ids.
class ModuleDef {
 public:
  ModuleDef(std::vector<NodeRef> nodes, std::vector<Edge> edges);

  const ModuleId& id() const { return id_; }
  const std::vector<NodeRef>& nodes() const { return nodes_; }
  // Sorted, without duplicates.
  const std::vector<Edge>& edges() const { return edges_; }
  int size() const { return static_cast<int>(nodes_.size()); }

  bool has_edge(Vertex from, Vertex to) const;

  // Single layer wired INPUT -> 0 -> OUTPUT; the seed module for that layer.
  bool is_single_layer() const;

  static ModuleDef single_layer(const LayerOp& op);

 private:
  std::vector<NodeRef> nodes_;
  std::vector<Edge> edges_;
  ModuleId id_;
};

using Resolver = std::function<const ModuleDef*(const ModuleId&)>;

// Owns every module definition reachable from the search state, keyed by id.
class ModuleStore {
 public:
  const ModuleDef* find(const ModuleId& id) const;
  // Throws UnresolvedReference.
  const ModuleDef& at(const ModuleId& id) const;
  const ModuleId& insert(ModuleDef def);
  bool contains(const ModuleId& id) const { return defs_.count(id) != 0; }
  std::size_t size() const { return defs_.size(); }

  // Keeps only the given roots and everything they reference.
  void retain_reachable(const std::vector<ModuleId>& roots);

  Resolver resolver() const;

  template <typename F>
  void for_each(F&& fn) const {
    for (const auto& [id, def] : defs_) fn(def);
  }

 private:
  std::unordered_map<ModuleId, ModuleDef, ModuleIdHash> defs_;
};

enum class Violation {
  kNone,
  kEmptyModule,
  kBadEndpoint,
  kSelfLoop,
  kInputHasIncoming,
  kOutputHasOutgoing,
  kCycle,
  kDisconnected,
  kUnresolvedReference,
  kRecursiveReference,
};

std::string_view to_string(Violation violation);

struct ValidationResult {
  Violation violation = Violation::kNone;
  std::optional<Edge> edge;
  std::optional<Vertex> node;
  std::string detail;

  bool ok() const { return violation == Violation::kNone; }
  explicit operator bool() const { return ok(); }
};

// Checks the module's own graph: non-empty, endpoints in range, no self
// loops, terminal directions, acyclic, and every node on an INPUT->OUTPUT
// path. Reports the first violation found.
ValidationResult validate(const ModuleDef& module);

// validate() on every module of the hierarchy plus reference resolution and
// acyclicity of the module-reference relation.
ValidationResult validate_hierarchy(const ModuleDef& root, const Resolver& resolve);

// Layer-level phenotype. Node indices refer to `nodes`; terminals use the
// kInput/kOutput sentinels. Nodes are in a deterministic topological order.
struct FlatGraph {
  std::vector<LayerOp> nodes;
  std::vector<Edge> edges;  // sorted, no duplicates
};

struct FlatStats {
  int node_count = 0;  // layer nodes only
  int edge_count = 0;  // every edge, terminal wiring included
  friend bool operator==(const FlatStats&, const FlatStats&) = default;
};

// Recursively substitutes each module reference with the referenced graph.
// A child's INPUT/OUTPUT become wiring: the node's predecessors connect to
// the child's entry nodes and the child's exit nodes to the node's
// successors. Each occurrence expands independently.
//
// Throws UnresolvedReference or RecursiveReference.
FlatGraph flatten(const ModuleDef& module, const Resolver& resolve);

// Recomputes the id bottom-up from the definitions the resolver returns.
// Equals module.id() whenever the stored child ids are consistent.
ModuleId canonical_hash(const ModuleDef& module, const Resolver& resolve);

// Number of computational nodes in the module's own graph.
inline int complexity(const ModuleDef& module) { return module.size(); }

FlatStats flat_stats(const FlatGraph& graph);

// Longest INPUT->OUTPUT path counted in layer nodes.
int flat_depth(const FlatGraph& graph);

// Rewrites every reference to `target` inside the hierarchy of `root` so it
// points at `replacement`, creating new parent modules as needed. Returns the
// new root id. All new definitions are inserted into `store`.
ModuleId replace_module(const ModuleId& root, const ModuleId& target,
                        const ModuleDef& replacement, ModuleStore& store);

// Sizes of a hierarchy, by distinct id and by occurrence in the expansion.
struct HierarchySummary {
  int distinct_modules = 0;  // root included
  int module_occurrences = 0;
  int distinct_layers = 0;
  int layer_occurrences = 0;
  int depth = 0;  // 1 for a module made only of layers
};

HierarchySummary summarize(const ModuleDef& root, const Resolver& resolve);

// Distinct module ids in the hierarchy, root first, then in depth-first
// discovery order. Layer nodes are not included.
std::vector<ModuleId> hierarchy_modules(const ModuleDef& root, const Resolver& resolve);

}  // namespace hnas

#endif  // HNAS_MODULE_GRAPH_HPP_
