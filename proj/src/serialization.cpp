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

#include "hnas/serialization.hpp"

#include <algorithm>
#include <sstream>

#include "hnas/error.hpp"

namespace hnas {
namespace {

using nlohmann::json;

json endpoint_to_json(Vertex v) {
  if (v == kInput) return "input";
  if (v == kOutput) return "output";
  return v;
}

Vertex endpoint_from_json(const json& j) {
  if (j.is_string()) {
    if (j == "input") return kInput;
    if (j == "output") return kOutput;
  } else if (j.is_number_integer()) {
    const auto v = j.get<long long>();
    if (v >= 0 && v < (1LL << 30)) return static_cast<Vertex>(v);
  }
  throw CorruptCheckpoint("bad edge endpoint: " + j.dump());
}

std::string dot_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out;
}

void write_flat_body(std::ostringstream& out, const FlatGraph& graph, const std::string& prefix,
                     const std::string& indent) {
  auto name = [&](Vertex v) {
    if (v == kInput) return prefix + "in";
    if (v == kOutput) return prefix + "out";
    return prefix + "n" + std::to_string(v);
  };
  out << indent << name(kInput) << " [label=\"IN\", shape=box];\n";
  for (std::size_t i = 0; i < graph.nodes.size(); ++i) {
    out << indent << name(static_cast<Vertex>(i)) << " [label=\""
        << dot_escape(graph.nodes[i].label) << "\"];\n";
  }
  out << indent << name(kOutput) << " [label=\"OUT\", shape=box];\n";
  for (const auto& [a, b] : graph.edges) {
    out << indent << name(a) << " -> " << name(b) << ";\n";
  }
}

}  // namespace

json module_to_json(const ModuleDef& module) {
  json nodes = json::array();
  for (const NodeRef& ref : module.nodes()) {
    if (const auto* layer = std::get_if<LayerRef>(&ref)) {
      nodes.push_back({{"layer", layer->op.label}, {"kind", std::string(to_string(layer->op.kind))}});
    } else {
      nodes.push_back({{"module", std::get<ModuleRef>(ref).id.to_hex()}});
    }
  }
  json edges = json::array();
  for (const auto& [a, b] : module.edges()) {
    edges.push_back(json::array({endpoint_to_json(a), endpoint_to_json(b)}));
  }
  return {{"nodes", nodes}, {"edges", edges}};
}

ModuleDef module_from_json(const json& j) {
  if (!j.is_object() || !j.contains("nodes") || !j.contains("edges") || !j["nodes"].is_array() ||
      !j["edges"].is_array()) {
    throw CorruptCheckpoint("module definition needs nodes and edges arrays");
  }
  std::vector<NodeRef> nodes;
  for (const json& node : j["nodes"]) {
    if (node.contains("layer") && node["layer"].is_string()) {
      LayerOp op{node["layer"].get<std::string>(), OpKind::kOther};
      if (node.contains("kind")) {
        const auto kind = op_kind_from_string(node["kind"].get<std::string>());
        if (!kind) throw CorruptCheckpoint("unknown op kind: " + node["kind"].dump());
        op.kind = *kind;
      }
      nodes.emplace_back(LayerRef{std::move(op)});
    } else if (node.contains("module") && node["module"].is_string()) {
      const auto id = ModuleId::from_hex(node["module"].get<std::string>());
      if (!id) throw CorruptCheckpoint("bad module id: " + node["module"].dump());
      nodes.emplace_back(ModuleRef{*id});
    } else {
      throw CorruptCheckpoint("node must be a layer or module reference: " + node.dump());
    }
  }
  std::vector<Edge> edges;
  for (const json& edge : j["edges"]) {
    if (!edge.is_array() || edge.size() != 2) throw CorruptCheckpoint("bad edge: " + edge.dump());
    edges.emplace_back(endpoint_from_json(edge[0]), endpoint_from_json(edge[1]));
  }
  return ModuleDef(std::move(nodes), std::move(edges));
}

json flat_to_json(const FlatGraph& graph) {
  const int n = static_cast<int>(graph.nodes.size());
  json nodes = json::array();
  nodes.push_back({{"id", 0}, {"op", "input"}});
  for (int i = 0; i < n; ++i) {
    nodes.push_back({{"id", i + 1},
                     {"op", graph.nodes[i].label},
                     {"kind", std::string(to_string(graph.nodes[i].kind))}});
  }
  nodes.push_back({{"id", n + 1}, {"op", "output"}});
  auto id = [n](Vertex v) { return v == kInput ? 0 : v == kOutput ? n + 1 : v + 1; };
  json edges = json::array();
  for (const auto& [a, b] : graph.edges) edges.push_back(json::array({id(a), id(b)}));
  return {{"nodes", nodes}, {"edges", edges}};
}

FlatGraph flat_from_json(const json& j) {
  if (!j.is_object() || !j.contains("nodes") || !j.contains("edges")) {
    throw CorruptCheckpoint("flat graph needs nodes and edges");
  }
  const int total = static_cast<int>(j["nodes"].size());
  if (total < 2) throw CorruptCheckpoint("flat graph needs terminals");
  const int n = total - 2;
  FlatGraph graph;
  for (int i = 1; i <= n; ++i) {
    const json& node = j["nodes"][i];
    LayerOp op{node.at("op").get<std::string>(), OpKind::kOther};
    if (node.contains("kind")) op.kind = op_kind_from_string(node["kind"].get<std::string>()).value_or(OpKind::kOther);
    graph.nodes.push_back(std::move(op));
  }
  auto vertex = [n](int id) -> Vertex {
    if (id == 0) return kInput;
    if (id == n + 1) return kOutput;
    if (id < 0 || id > n + 1) throw CorruptCheckpoint("flat edge endpoint out of range");
    return id - 1;
  };
  for (const json& e : j["edges"]) {
    graph.edges.emplace_back(vertex(e.at(0).get<int>()), vertex(e.at(1).get<int>()));
  }
  std::sort(graph.edges.begin(), graph.edges.end());
  return graph;
}

std::string flat_to_dot(const FlatGraph& graph, const std::string& name) {
  std::ostringstream out;
  out << "digraph \"" << dot_escape(name) << "\" {\n  rankdir=TB;\n";
  write_flat_body(out, graph, "", "  ");
  out << "}\n";
  return out.str();
}

std::string hierarchy_to_dot(const ModuleDef& root, const Resolver& resolve) {
  const FlatGraph flat = flatten(root, resolve);
  if (summarize(root, resolve).depth <= 1) return flat_to_dot(flat);

  std::ostringstream out;
  out << "digraph \"hierarchy\" {\n  rankdir=TB;\n  compound=true;\n";
  out << "  subgraph cluster_phenotype {\n    label=\"phenotype\";\n";
  write_flat_body(out, flat, "p_", "    ");
  out << "  }\n";
  int cluster = 0;
  for (const ModuleId& id : hierarchy_modules(root, resolve)) {
    const ModuleDef& def = *resolve(id);
    const std::string prefix = "m" + std::to_string(cluster) + "_";
    out << "  subgraph cluster_m" << cluster++ << " {\n    label=\"module "
        << id.to_hex().substr(0, 8) << "\";\n";
    FlatGraph own;
    for (const NodeRef& ref : def.nodes()) {
      if (const auto* layer = std::get_if<LayerRef>(&ref)) {
        own.nodes.push_back(layer->op);
      } else {
        own.nodes.push_back(LayerOp{"module " + std::get<ModuleRef>(ref).id.to_hex().substr(0, 8),
                                    OpKind::kOther});
      }
    }
    own.edges = def.edges();
    write_flat_body(out, own, prefix, "    ");
    out << "  }\n";
  }
  out << "}\n";
  return out.str();
}

json hierarchy_to_json(const ModuleDef& root, const Resolver& resolve) {
  json modules = json::array();
  for (const ModuleId& id : hierarchy_modules(root, resolve)) {
    modules.push_back({{"id", id.to_hex()}, {"def", module_to_json(*resolve(id))}});
  }
  const HierarchySummary s = summarize(root, resolve);
  const FlatGraph flat = flatten(root, resolve);
  const FlatStats stats = flat_stats(flat);
  return {{"root", root.id().to_hex()},
          {"modules", modules},
          {"flat", flat_to_json(flat)},
          {"summary",
           {{"distinct_modules", s.distinct_modules},
            {"module_occurrences", s.module_occurrences},
            {"distinct_layers", s.distinct_layers},
            {"layer_occurrences", s.layer_occurrences},
            {"depth", s.depth},
            {"flat_nodes", stats.node_count},
            {"flat_edges", stats.edge_count}}}};
}

ModuleId hierarchy_from_json(const json& j, ModuleStore& store) {
  if (!j.is_object() || !j.contains("root") || !j.contains("modules")) {
    throw CorruptCheckpoint("hierarchy needs root and modules");
  }
  for (const json& entry : j["modules"]) {
    const ModuleDef def = module_from_json(entry.at("def"));
    if (def.id().to_hex() != entry.at("id").get<std::string>()) {
      throw CorruptCheckpoint("module id does not match its definition: " + entry["id"].dump());
    }
    store.insert(def);
  }
  const auto root = ModuleId::from_hex(j["root"].get<std::string>());
  if (!root || !store.contains(*root)) throw CorruptCheckpoint("root module missing");
  return *root;
}

}  // namespace hnas
