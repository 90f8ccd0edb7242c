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

#include "hnas/module_graph.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <cstdio>
#include <map>
#include <set>
#include <unordered_set>

#include "hnas/canonical.hpp"
#include "hnas/error.hpp"

namespace hnas {
namespace {

constexpr char kInputLabel[] = "^in";
constexpr char kOutputLabel[] = "^out";

ModuleId digest(const std::string& text) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  EVP_Digest(text.data(), text.size(), md.data(), &len, EVP_sha256(), nullptr);
  ModuleId id;
  for (int i = 0; i < 8; ++i) id.hi = (id.hi << 8) | md[i];
  for (int i = 8; i < 16; ++i) id.lo = (id.lo << 8) | md[i];
  return id;
}

bool in_range(Vertex v, int n) { return v == kInput || v == kOutput || (v >= 0 && v < n); }

// Dense numbering used by graph algorithms: INPUT = 0, node i = i + 1,
// OUTPUT = n + 1.
int dense(Vertex v, int n) {
  if (v == kInput) return 0;
  if (v == kOutput) return n + 1;
  return v + 1;
}

std::string node_label(const NodeRef& ref) {
  if (const auto* layer = std::get_if<LayerRef>(&ref)) return "L" + layer->op.label;
  return "M" + std::get<ModuleRef>(ref).id.to_hex();
}

ModuleId compute_id(const std::vector<NodeRef>& nodes, const std::vector<Edge>& edges) {
  const int n = static_cast<int>(nodes.size());
  LabeledDigraph graph;
  graph.labels.reserve(n + 2);
  graph.labels.emplace_back(kInputLabel);
  for (const NodeRef& ref : nodes) graph.labels.push_back(node_label(ref));
  graph.labels.emplace_back(kOutputLabel);
  std::string raw;
  for (const auto& [a, b] : edges) {
    if (in_range(a, n) && in_range(b, n)) {
      graph.edges.emplace_back(dense(a, n), dense(b, n));
    } else {
      raw += std::to_string(a) + ">" + std::to_string(b) + ";";
    }
  }
  std::string text = "hnas-module-v1\n" + canonical_form(graph).encoding;
  if (!raw.empty()) text += "\nraw:" + raw;
  return digest(text);
}

struct DenseGraph {
  int vertex_count = 0;
  std::vector<std::vector<int>> out;
  std::vector<std::vector<int>> in;
};

DenseGraph to_dense(const ModuleDef& module) {
  const int n = module.size();
  DenseGraph g{n + 2, std::vector<std::vector<int>>(n + 2), std::vector<std::vector<int>>(n + 2)};
  for (const auto& [a, b] : module.edges()) {
    g.out[dense(a, n)].push_back(dense(b, n));
    g.in[dense(b, n)].push_back(dense(a, n));
  }
  return g;
}

Vertex from_dense(int d, int n) {
  if (d == 0) return kInput;
  if (d == n + 1) return kOutput;
  return d - 1;
}

std::vector<bool> reach(const std::vector<std::vector<int>>& adj, int start) {
  std::vector<bool> seen(adj.size(), false);
  std::vector<int> stack{start};
  seen[start] = true;
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    for (int w : adj[v]) {
      if (!seen[w]) {
        seen[w] = true;
        stack.push_back(w);
      }
    }
  }
  return seen;
}

std::optional<std::pair<int, int>> find_back_edge(const DenseGraph& g) {
  enum Mark { kWhite, kGrey, kBlack };
  std::vector<Mark> mark(g.vertex_count, kWhite);
  struct Frame {
    int v;
    std::size_t next;
  };
  for (int root = 0; root < g.vertex_count; ++root) {
    if (mark[root] != kWhite) continue;
    std::vector<Frame> stack{{root, 0}};
    mark[root] = kGrey;
    while (!stack.empty()) {
      Frame& top = stack.back();
      if (top.next == g.out[top.v].size()) {
        mark[top.v] = kBlack;
        stack.pop_back();
        continue;
      }
      const int w = g.out[top.v][top.next++];
      if (mark[w] == kGrey) return std::make_pair(top.v, w);
      if (mark[w] == kWhite) {
        mark[w] = kGrey;
        stack.push_back({w, 0});
      }
    }
  }
  return std::nullopt;
}

ValidationResult fail(Violation v, std::string detail) {
  ValidationResult r;
  r.violation = v;
  r.detail = std::move(detail);
  return r;
}

std::string edge_text(const Edge& e) {
  auto name = [](Vertex v) {
    if (v == kInput) return std::string("INPUT");
    if (v == kOutput) return std::string("OUTPUT");
    return std::to_string(v);
  };
  return "(" + name(e.first) + "," + name(e.second) + ")";
}

// Phenotype under construction: ops plus wiring vertices that are contracted
// away once expansion finishes.
class FlatBuilder {
 public:
  FlatBuilder(const Resolver& resolve) : resolve_(resolve) {
    add_vertex(Kind::kInput, {});
    add_vertex(Kind::kOutput, {});
  }

  void expand(const ModuleDef& module, int in_vertex, int out_vertex) {
    const int n = module.size();
    std::vector<int> entry(n), exit(n);
    for (int i = 0; i < n; ++i) {
      const NodeRef& ref = module.nodes()[i];
      if (const auto* layer = std::get_if<LayerRef>(&ref)) {
        entry[i] = exit[i] = add_vertex(Kind::kOp, layer->op);
        continue;
      }
      const ModuleId& child_id = std::get<ModuleRef>(ref).id;
      const ModuleDef* child = resolve_(child_id);
      if (child == nullptr) throw UnresolvedReference(child_id.to_hex());
      if (!on_stack_.insert(child_id).second) throw RecursiveReference(child_id.to_hex());
      entry[i] = add_vertex(Kind::kWire, {});
      exit[i] = add_vertex(Kind::kWire, {});
      expand(*child, entry[i], exit[i]);
      on_stack_.erase(child_id);
    }
    for (const auto& [a, b] : module.edges()) {
      const int from = a == kInput ? in_vertex : exit[a];
      const int to = b == kOutput ? out_vertex : entry[b];
      out_[from].insert(to);
      in_[to].insert(from);
    }
  }

  void push_root(const ModuleId& id) { on_stack_.insert(id); }

  FlatGraph finish() {
    for (int w = 0; w < static_cast<int>(kinds_.size()); ++w) {
      if (kinds_[w] != Kind::kWire) continue;
      const std::set<int> preds = std::move(in_[w]);
      const std::set<int> succs = std::move(out_[w]);
      in_[w].clear();
      out_[w].clear();
      for (int p : preds) out_[p].erase(w);
      for (int s : succs) in_[s].erase(w);
      for (int p : preds) {
        for (int s : succs) {
          out_[p].insert(s);
          in_[s].insert(p);
        }
      }
    }

    // Compact to INPUT, ops..., OUTPUT and order deterministically.
    std::vector<int> kept;
    for (int v = 0; v < static_cast<int>(kinds_.size()); ++v) {
      if (kinds_[v] == Kind::kOp) kept.push_back(v);
    }
    const int n = static_cast<int>(kept.size());
    std::vector<int> to_local(kinds_.size(), -1);
    to_local[0] = 0;
    to_local[1] = n + 1;
    for (int k = 0; k < n; ++k) to_local[kept[k]] = k + 1;

    LabeledDigraph local;
    local.labels.resize(n + 2);
    local.labels[0] = kInputLabel;
    local.labels[n + 1] = kOutputLabel;
    for (int k = 0; k < n; ++k) local.labels[k + 1] = "L" + ops_[kept[k]].label;
    for (int v = 0; v < static_cast<int>(kinds_.size()); ++v) {
      if (to_local[v] < 0) continue;
      for (int w : out_[v]) local.edges.emplace_back(to_local[v], to_local[w]);
    }
    const std::vector<int> order = stable_order(local);
    std::vector<int> position(n + 2);
    for (int k = 0; k < n + 2; ++k) position[order[k]] = k;

    FlatGraph graph;
    graph.nodes.resize(n);
    for (int k = 0; k < n; ++k) graph.nodes[position[k + 1] - 1] = ops_[kept[k]];
    graph.edges.reserve(local.edges.size());
    for (const auto& [a, b] : local.edges) {
      graph.edges.emplace_back(from_dense(position[a], n), from_dense(position[b], n));
    }
    std::sort(graph.edges.begin(), graph.edges.end());
    return graph;
  }

 private:
  enum class Kind { kInput, kOutput, kOp, kWire };

  int add_vertex(Kind kind, LayerOp op) {
    kinds_.push_back(kind);
    ops_.push_back(std::move(op));
    out_.emplace_back();
    in_.emplace_back();
    return static_cast<int>(kinds_.size()) - 1;
  }

  const Resolver& resolve_;
  std::vector<Kind> kinds_;
  std::vector<LayerOp> ops_;
  std::vector<std::set<int>> out_;
  std::vector<std::set<int>> in_;
  std::unordered_set<ModuleId, ModuleIdHash> on_stack_;
};

}  // namespace

std::string_view to_string(OpKind kind) {
  switch (kind) {
    case OpKind::kConvolution:
      return "convolution";
    case OpKind::kPooling:
      return "pooling";
    case OpKind::kOther:
      return "other";
  }
  return "other";
}

std::optional<OpKind> op_kind_from_string(std::string_view name) {
  if (name == "convolution") return OpKind::kConvolution;
  if (name == "pooling") return OpKind::kPooling;
  if (name == "other") return OpKind::kOther;
  return std::nullopt;
}

std::string ModuleId::to_hex() const {
  char buf[33];
  std::snprintf(buf, sizeof(buf), "%016llx%016llx", static_cast<unsigned long long>(hi),
                static_cast<unsigned long long>(lo));
  return buf;
}

std::optional<ModuleId> ModuleId::from_hex(std::string_view hex) {
  if (hex.size() != 32) return std::nullopt;
  ModuleId id;
  for (std::size_t i = 0; i < 32; ++i) {
    const char c = hex[i];
    std::uint64_t nibble;
    if (c >= '0' && c <= '9') {
      nibble = static_cast<std::uint64_t>(c - '0');
    } else if (c >= 'a' && c <= 'f') {
      nibble = static_cast<std::uint64_t>(c - 'a' + 10);
    } else {
      return std::nullopt;
    }
    std::uint64_t& word = i < 16 ? id.hi : id.lo;
    word = (word << 4) | nibble;
  }
  return id;
}

ModuleDef::ModuleDef(std::vector<NodeRef> nodes, std::vector<Edge> edges)
    : nodes_(std::move(nodes)), edges_(std::move(edges)) {
  std::sort(edges_.begin(), edges_.end());
  edges_.erase(std::unique(edges_.begin(), edges_.end()), edges_.end());
  id_ = compute_id(nodes_, edges_);
}

bool ModuleDef::has_edge(Vertex from, Vertex to) const {
  return std::binary_search(edges_.begin(), edges_.end(), Edge{from, to});
}

bool ModuleDef::is_single_layer() const {
  return nodes_.size() == 1 && std::holds_alternative<LayerRef>(nodes_[0]) &&
         edges_ == std::vector<Edge>{{kInput, 0}, {0, kOutput}};
}

ModuleDef ModuleDef::single_layer(const LayerOp& op) {
  return ModuleDef({LayerRef{op}}, {{kInput, 0}, {0, kOutput}});
}

const ModuleDef* ModuleStore::find(const ModuleId& id) const {
  const auto it = defs_.find(id);
  return it == defs_.end() ? nullptr : &it->second;
}

const ModuleDef& ModuleStore::at(const ModuleId& id) const {
  const ModuleDef* def = find(id);
  if (def == nullptr) throw UnresolvedReference(id.to_hex());
  return *def;
}

const ModuleId& ModuleStore::insert(ModuleDef def) {
  const ModuleId id = def.id();
  return defs_.try_emplace(id, std::move(def)).first->first;
}

void ModuleStore::retain_reachable(const std::vector<ModuleId>& roots) {
  std::unordered_set<ModuleId, ModuleIdHash> keep;
  std::vector<ModuleId> stack(roots.begin(), roots.end());
  while (!stack.empty()) {
    const ModuleId id = stack.back();
    stack.pop_back();
    const ModuleDef* def = find(id);
    if (def == nullptr || !keep.insert(id).second) continue;
    for (const NodeRef& ref : def->nodes()) {
      if (const auto* m = std::get_if<ModuleRef>(&ref)) stack.push_back(m->id);
    }
  }
  std::erase_if(defs_, [&](const auto& entry) { return keep.count(entry.first) == 0; });
}

Resolver ModuleStore::resolver() const {
  return [this](const ModuleId& id) { return find(id); };
}

std::string_view to_string(Violation violation) {
  switch (violation) {
    case Violation::kNone:
      return "ok";
    case Violation::kEmptyModule:
      return "empty_module";
    case Violation::kBadEndpoint:
      return "bad_endpoint";
    case Violation::kSelfLoop:
      return "self_loop";
    case Violation::kInputHasIncoming:
      return "input_has_incoming";
    case Violation::kOutputHasOutgoing:
      return "output_has_outgoing";
    case Violation::kCycle:
      return "cycle";
    case Violation::kDisconnected:
      return "disconnected";
    case Violation::kUnresolvedReference:
      return "unresolved_reference";
    case Violation::kRecursiveReference:
      return "recursive_reference";
  }
  return "unknown";
}

ValidationResult validate(const ModuleDef& module) {
  const int n = module.size();
  if (n == 0) return fail(Violation::kEmptyModule, "module has no computational nodes");

  for (const Edge& e : module.edges()) {
    const auto& [a, b] = e;
    ValidationResult r;
    if (!in_range(a, n) || !in_range(b, n)) {
      r = fail(Violation::kBadEndpoint, "edge endpoint out of range " + edge_text(e));
    } else if (a == b) {
      r = fail(Violation::kSelfLoop, "self loop " + edge_text(e));
    } else if (b == kInput) {
      r = fail(Violation::kInputHasIncoming, "edge into INPUT " + edge_text(e));
    } else if (a == kOutput) {
      r = fail(Violation::kOutputHasOutgoing, "edge out of OUTPUT " + edge_text(e));
    } else {
      continue;
    }
    r.edge = e;
    return r;
  }

  const DenseGraph g = to_dense(module);
  if (const auto back = find_back_edge(g)) {
    const Edge e{from_dense(back->first, n), from_dense(back->second, n)};
    ValidationResult r = fail(Violation::kCycle, "cycle through edge " + edge_text(e));
    r.edge = e;
    return r;
  }

  const std::vector<bool> from_input = reach(g.out, 0);
  const std::vector<bool> to_output = reach(g.in, n + 1);
  for (int i = 0; i < n; ++i) {
    if (from_input[i + 1] && to_output[i + 1]) continue;
    ValidationResult r =
        fail(Violation::kDisconnected,
             "node " + std::to_string(i) +
                 (from_input[i + 1] ? " has no path to OUTPUT" : " is unreachable from INPUT"));
    r.node = i;
    return r;
  }
  return {};
}

ValidationResult validate_hierarchy(const ModuleDef& root, const Resolver& resolve) {
  std::unordered_set<ModuleId, ModuleIdHash> done;
  std::unordered_set<ModuleId, ModuleIdHash> on_stack;

  // Keyed by the id a module was reached through, which is what the
  // reference relation is made of.
  std::function<ValidationResult(const ModuleDef&, const ModuleId&)> visit =
      [&](const ModuleDef& module, const ModuleId& key) {
        if (ValidationResult r = validate(module); !r) return r;
        on_stack.insert(key);
        for (int i = 0; i < module.size(); ++i) {
          const auto* ref = std::get_if<ModuleRef>(&module.nodes()[i]);
          if (ref == nullptr || done.count(ref->id) != 0) continue;
          if (on_stack.count(ref->id) != 0) {
            ValidationResult r =
                fail(Violation::kRecursiveReference, "recursive reference to " + ref->id.to_hex());
            r.node = i;
            return r;
          }
          const ModuleDef* child = resolve(ref->id);
          if (child == nullptr) {
            ValidationResult r =
                fail(Violation::kUnresolvedReference, "unresolved reference " + ref->id.to_hex());
            r.node = i;
            return r;
          }
          if (ValidationResult r = visit(*child, ref->id); !r) return r;
        }
        on_stack.erase(key);
        done.insert(key);
        return ValidationResult{};
      };
  return visit(root, root.id());
}

FlatGraph flatten(const ModuleDef& module, const Resolver& resolve) {
  FlatBuilder builder(resolve);
  builder.push_root(module.id());
  builder.expand(module, 0, 1);
  return builder.finish();
}

ModuleId canonical_hash(const ModuleDef& module, const Resolver& resolve) {
  std::map<ModuleId, ModuleId> memo;
  std::unordered_set<ModuleId, ModuleIdHash> on_stack;

  std::function<ModuleId(const ModuleDef&)> hash = [&](const ModuleDef& def) {
    if (!on_stack.insert(def.id()).second) throw RecursiveReference(def.id().to_hex());
    std::vector<NodeRef> nodes = def.nodes();
    for (NodeRef& ref : nodes) {
      auto* m = std::get_if<ModuleRef>(&ref);
      if (m == nullptr) continue;
      if (on_stack.count(m->id) != 0) throw RecursiveReference(m->id.to_hex());
      if (const auto it = memo.find(m->id); it != memo.end()) {
        m->id = it->second;
        continue;
      }
      const ModuleDef* child = resolve(m->id);
      if (child == nullptr) throw UnresolvedReference(m->id.to_hex());
      const ModuleId recomputed = hash(*child);
      memo.emplace(m->id, recomputed);
      m->id = recomputed;
    }
    on_stack.erase(def.id());
    return compute_id(nodes, def.edges());
  };
  return hash(module);
}

FlatStats flat_stats(const FlatGraph& graph) {
  return {static_cast<int>(graph.nodes.size()), static_cast<int>(graph.edges.size())};
}

int flat_depth(const FlatGraph& graph) {
  const int n = static_cast<int>(graph.nodes.size());
  std::vector<std::pair<int, int>> edges;
  edges.reserve(graph.edges.size());
  for (const auto& [a, b] : graph.edges) edges.emplace_back(dense(a, n), dense(b, n));
  const std::vector<int> depth = longest_path_depths(n + 2, edges);
  return std::max(0, depth[n + 1] - 1);
}

ModuleId replace_module(const ModuleId& root, const ModuleId& target,
                        const ModuleDef& replacement, ModuleStore& store) {
  std::map<ModuleId, ModuleId> memo;
  std::function<ModuleId(const ModuleId&)> rewrite = [&](const ModuleId& id) -> ModuleId {
    if (id == target) return store.insert(replacement);
    if (const auto it = memo.find(id); it != memo.end()) return it->second;
    const ModuleDef& def = store.at(id);
    std::vector<NodeRef> nodes = def.nodes();
    const std::vector<Edge> edges = def.edges();
    bool changed = false;
    for (NodeRef& ref : nodes) {
      auto* m = std::get_if<ModuleRef>(&ref);
      if (m == nullptr) continue;
      const ModuleId next = rewrite(m->id);
      if (next != m->id) {
        m->id = next;
        changed = true;
      }
    }
    const ModuleId result = changed ? store.insert(ModuleDef(std::move(nodes), edges)) : id;
    memo.emplace(id, result);
    return result;
  };
  return rewrite(root);
}

HierarchySummary summarize(const ModuleDef& root, const Resolver& resolve) {
  struct Counts {
    long long modules = 0;
    long long layers = 0;
    int depth = 0;
  };
  std::map<ModuleId, Counts> memo;
  std::set<ModuleId> modules;
  std::set<std::string> layers;
  std::unordered_set<ModuleId, ModuleIdHash> on_stack;

  std::function<Counts(const ModuleDef&)> visit = [&](const ModuleDef& def) -> Counts {
    if (const auto it = memo.find(def.id()); it != memo.end()) return it->second;
    if (!on_stack.insert(def.id()).second) throw RecursiveReference(def.id().to_hex());
    modules.insert(def.id());
    Counts c{1, 0, 1};
    for (const NodeRef& ref : def.nodes()) {
      if (const auto* layer = std::get_if<LayerRef>(&ref)) {
        layers.insert(layer->op.label);
        ++c.layers;
        continue;
      }
      const ModuleId& id = std::get<ModuleRef>(ref).id;
      const ModuleDef* child = resolve(id);
      if (child == nullptr) throw UnresolvedReference(id.to_hex());
      const Counts sub = visit(*child);
      c.modules += sub.modules;
      c.layers += sub.layers;
      c.depth = std::max(c.depth, sub.depth + 1);
    }
    on_stack.erase(def.id());
    memo.emplace(def.id(), c);
    return c;
  };
  const Counts total = visit(root);
  HierarchySummary s;
  s.distinct_modules = static_cast<int>(modules.size());
  s.module_occurrences = static_cast<int>(total.modules);
  s.distinct_layers = static_cast<int>(layers.size());
  s.layer_occurrences = static_cast<int>(total.layers);
  s.depth = total.depth;
  return s;
}

std::vector<ModuleId> hierarchy_modules(const ModuleDef& root, const Resolver& resolve) {
  std::vector<ModuleId> order{root.id()};
  std::unordered_set<ModuleId, ModuleIdHash> seen{root.id()};
  std::function<void(const ModuleDef&)> visit = [&](const ModuleDef& def) {
    for (const NodeRef& ref : def.nodes()) {
      const auto* m = std::get_if<ModuleRef>(&ref);
      if (m == nullptr || !seen.insert(m->id).second) continue;
      const ModuleDef* child = resolve(m->id);
      if (child == nullptr) throw UnresolvedReference(m->id.to_hex());
      order.push_back(m->id);
      visit(*child);
    }
  };
  visit(root);
  return order;
}

}  // namespace hnas
