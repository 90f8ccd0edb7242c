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

// Independent reference implementations used as test oracles, plus small
// random generators. Nothing here calls into the library's graph algorithms;
// the library types are only used as containers.

#ifndef HNAS_TESTS_ORACLES_HPP_
#define HNAS_TESTS_ORACLES_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "hnas/evaluation.hpp"
#include "hnas/module_graph.hpp"

namespace oracle {

// Dense vertex numbering: 0 = INPUT, 1..n = nodes, n + 1 = OUTPUT.
inline int dense(hnas::Vertex v, int n) {
  if (v == hnas::kInput) return 0;
  if (v == hnas::kOutput) return n + 1;
  return v + 1;
}

using Matrix = std::vector<std::vector<bool>>;

inline Matrix adjacency(int n, const std::vector<hnas::Edge>& edges) {
  Matrix m(n + 2, std::vector<bool>(n + 2, false));
  for (const auto& [a, b] : edges) m[dense(a, n)][dense(b, n)] = true;
  return m;
}

// Reachability closure by Floyd-Warshall.
inline Matrix closure(Matrix m) {
  const std::size_t v = m.size();
  for (std::size_t k = 0; k < v; ++k)
    for (std::size_t i = 0; i < v; ++i)
      if (m[i][k])
        for (std::size_t j = 0; j < v; ++j)
          if (m[k][j]) m[i][j] = true;
  return m;
}

inline bool acyclic(const Matrix& m) {
  const Matrix c = closure(m);
  for (std::size_t i = 0; i < c.size(); ++i)
    if (c[i][i]) return false;
  return true;
}

// Every vertex is INPUT, OUTPUT, or reachable from INPUT and reaching OUTPUT.
inline bool all_on_path(const Matrix& m) {
  const Matrix c = closure(m);
  const std::size_t out = m.size() - 1;
  for (std::size_t v = 1; v < out; ++v)
    if (!c[0][v] || !c[v][out]) return false;
  return true;
}

// The four own-graph invariants of a module, checked by brute force. Assumes
// endpoints are in range.
inline bool module_ok(int n, const std::vector<hnas::Edge>& edges) {
  if (n < 1) return false;
  for (const auto& [a, b] : edges) {
    if (a == b) return false;
    if (b == hnas::kInput || a == hnas::kOutput) return false;
  }
  const Matrix m = adjacency(n, edges);
  return acyclic(m) && all_on_path(m);
}

inline bool flat_acyclic(const hnas::FlatGraph& g) {
  return acyclic(adjacency(static_cast<int>(g.nodes.size()), g.edges));
}

// Cycle check for large phenotypes: repeatedly strip vertices that have no
// remaining predecessors. Acyclic iff everything gets stripped.
inline bool acyclic_by_peeling(const hnas::FlatGraph& g) {
  const int n = static_cast<int>(g.nodes.size());
  std::vector<int> indegree(n + 2, 0);
  std::vector<std::vector<int>> succ(n + 2);
  for (const auto& [a, b] : g.edges) {
    succ[dense(a, n)].push_back(dense(b, n));
    ++indegree[dense(b, n)];
  }
  std::vector<int> ready;
  for (int v = 0; v < n + 2; ++v)
    if (indegree[v] == 0) ready.push_back(v);
  int stripped = 0;
  while (!ready.empty()) {
    const int v = ready.back();
    ready.pop_back();
    ++stripped;
    for (int w : succ[v])
      if (--indegree[w] == 0) ready.push_back(w);
  }
  return stripped == n + 2;
}

// training_epochs written out directly from the formula.
inline int epochs(int complexity, int generation, int max_epochs) {
  const double denominator = std::max(std::log(generation + 1.0), 1.0);
  const double quotient = std::floor(complexity / denominator);
  return static_cast<int>(std::max(1.0, std::min(quotient, static_cast<double>(max_epochs))));
}

// Leaf layer occurrences in the fully expanded reference tree.
inline int leaf_count(const hnas::ModuleDef& m, const hnas::Resolver& resolve) {
  int total = 0;
  for (const hnas::NodeRef& ref : m.nodes()) {
    if (std::holds_alternative<hnas::LayerRef>(ref)) {
      ++total;
    } else {
      total += leaf_count(*resolve(std::get<hnas::ModuleRef>(ref).id), resolve);
    }
  }
  return total;
}

// Brute-force labelled isomorphism of two phenotypes (terminals fixed).
inline bool isomorphic(const hnas::FlatGraph& a, const hnas::FlatGraph& b) {
  const int n = static_cast<int>(a.nodes.size());
  if (n != static_cast<int>(b.nodes.size()) || a.edges.size() != b.edges.size()) return false;
  const Matrix ma = adjacency(n, a.edges), mb = adjacency(n, b.edges);
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  do {
    bool same = true;
    for (int i = 0; i < n && same; ++i) same = a.nodes[i].label == b.nodes[perm[i]].label;
    auto map = [&](int v) { return v == 0 ? 0 : v == n + 1 ? n + 1 : perm[v - 1] + 1; };
    for (int u = 0; u < n + 2 && same; ++u)
      for (int w = 0; w < n + 2 && same; ++w) same = ma[u][w] == mb[map(u)][map(w)];
    if (same) return true;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return false;
}

// Minimum number of nodes whose label differs, over all bijections that
// preserve the unlabelled structure. -1 if the structures differ.
inline int label_diff(const hnas::FlatGraph& a, const hnas::FlatGraph& b) {
  const int n = static_cast<int>(a.nodes.size());
  if (n != static_cast<int>(b.nodes.size()) || a.edges.size() != b.edges.size()) return -1;
  const Matrix ma = adjacency(n, a.edges), mb = adjacency(n, b.edges);
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  int best = -1;
  do {
    auto map = [&](int v) { return v == 0 ? 0 : v == n + 1 ? n + 1 : perm[v - 1] + 1; };
    bool same = true;
    for (int u = 0; u < n + 2 && same; ++u)
      for (int w = 0; w < n + 2 && same; ++w) same = ma[u][w] == mb[map(u)][map(w)];
    if (!same) continue;
    int diff = 0;
    for (int i = 0; i < n; ++i) diff += a.nodes[i].label != b.nodes[perm[i]].label;
    if (best < 0 || diff < best) best = diff;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

// Longest INPUT->OUTPUT path counted in layer nodes, by memoised DFS.
inline int depth(const hnas::FlatGraph& g) {
  const int n = static_cast<int>(g.nodes.size());
  const Matrix m = adjacency(n, g.edges);
  std::vector<int> memo(n + 2, -1);
  auto longest = [&](auto&& self, int v) -> int {
    if (v == n + 1) return 0;
    if (memo[v] >= 0) return memo[v];
    int best = -1000000;
    for (int w = 0; w < n + 2; ++w)
      if (m[v][w]) best = std::max(best, self(self, w) + (w == n + 1 ? 0 : 1));
    return memo[v] = best;
  };
  return std::max(0, longest(longest, 0));
}

// Surrogate score recomputed term by term.
inline double surrogate(const hnas::FlatGraph& g, int epochs_hint, const hnas::SurrogateParams& p) {
  double op = 0.0;
  for (const hnas::LayerOp& l : g.nodes) {
    const auto it = p.op_weights.find(l.label);
    op += it == p.op_weights.end() ? p.default_op_weight : it->second;
  }
  if (!g.nodes.empty()) op /= static_cast<double>(g.nodes.size());
  const double gap = depth(g) - p.target_depth;
  const double d = std::max(0.0, 1.0 - p.depth_penalty * gap * gap);
  const double e = std::min<double>(static_cast<double>(g.edges.size()), p.target_edges) /
                   p.target_edges;
  const double raw = (p.w_op * op + p.w_depth * d + p.w_edges * e) / (p.w_op + p.w_depth + p.w_edges);
  return raw * (1.0 - std::pow(2.0, -epochs_hint));
}

// Constraint verdict counted by hand: nodes include terminals when asked.
inline bool within_constraints(const hnas::FlatGraph& g, const hnas::CellConstraints& c) {
  int nodes = 0;
  for (std::size_t i = 0; i < g.nodes.size(); ++i) ++nodes;
  if (c.count_terminals) nodes += 2;
  int edges = 0;
  for (std::size_t i = 0; i < g.edges.size(); ++i) ++edges;
  bool ops = true;
  for (const hnas::LayerOp& l : g.nodes) ops = ops && c.allowed_ops.count(l.label) == 1;
  return nodes <= c.max_nodes && edges <= c.max_edges && ops;
}

// Random valid phenotype: n layer nodes in a random order, forward edges with
// probability p, then terminal repair so every node is on a path.
inline hnas::FlatGraph random_phenotype(std::mt19937_64& gen, int n,
                                        const std::vector<std::string>& labels, double p) {
  hnas::FlatGraph g;
  std::uniform_int_distribution<std::size_t> pick(0, labels.size() - 1);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  for (int i = 0; i < n; ++i) g.nodes.push_back({labels[pick(gen)], hnas::OpKind::kOther});
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), gen);
  std::set<hnas::Edge> edges;
  std::vector<bool> has_in(n, false), has_out(n, false);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (coin(gen) < p) {
        edges.insert({order[i], order[j]});
        has_out[order[i]] = has_in[order[j]] = true;
      }
  for (int v = 0; v < n; ++v) {
    if (!has_in[v]) edges.insert({hnas::kInput, v});
    if (!has_out[v]) edges.insert({v, hnas::kOutput});
  }
  if (n == 0) edges.insert({hnas::kInput, hnas::kOutput});
  g.edges.assign(edges.begin(), edges.end());
  return g;
}

// Same wiring rule for module bodies.
inline std::vector<hnas::Edge> random_module_edges(std::mt19937_64& gen, int n, double p) {
  hnas::FlatGraph g = random_phenotype(gen, n, {"x"}, p);
  return g.edges;
}

// Applies a node permutation to a module (node i moves to perm[i]).
inline hnas::ModuleDef permuted(const hnas::ModuleDef& m, const std::vector<int>& perm) {
  std::vector<hnas::NodeRef> nodes(m.nodes().size(), hnas::LayerRef{});
  for (std::size_t i = 0; i < perm.size(); ++i) nodes[perm[i]] = m.nodes()[i];
  std::vector<hnas::Edge> edges;
  auto map = [&](hnas::Vertex v) { return v < 0 ? v : perm[v]; };
  for (const auto& [a, b] : m.edges()) edges.emplace_back(map(a), map(b));
  return hnas::ModuleDef(std::move(nodes), std::move(edges));
}

inline hnas::FlatGraph permuted(const hnas::FlatGraph& g, const std::vector<int>& perm) {
  hnas::FlatGraph out;
  out.nodes.resize(g.nodes.size());
  for (std::size_t i = 0; i < perm.size(); ++i) out.nodes[perm[i]] = g.nodes[i];
  auto map = [&](hnas::Vertex v) { return v < 0 ? v : perm[v]; };
  for (const auto& [a, b] : g.edges) out.edges.emplace_back(map(a), map(b));
  std::sort(out.edges.begin(), out.edges.end());
  return out;
}

inline std::vector<int> random_perm(std::mt19937_64& gen, int n) {
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), gen);
  return perm;
}

// Random hierarchy: `levels` modules built bottom-up, each with 1..max_nodes
// nodes referencing layers or any module built earlier. Returns the top id.
inline hnas::ModuleId random_hierarchy(std::mt19937_64& gen, hnas::ModuleStore& store,
                                       const std::vector<hnas::LayerOp>& layers, int levels,
                                       int max_nodes) {
  std::vector<hnas::ModuleId> built;
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  for (int level = 0; level < levels; ++level) {
    const int n = std::uniform_int_distribution<int>(1, max_nodes)(gen);
    std::vector<hnas::NodeRef> nodes;
    for (int i = 0; i < n; ++i) {
      // The top module refers to the previous level at least once, so depth
      // equals `levels`.
      if (!built.empty() && (i == 0 || coin(gen) < 0.4)) {
        const std::size_t k = i == 0 ? built.size() - 1
                                     : std::uniform_int_distribution<std::size_t>(
                                           0, built.size() - 1)(gen);
        nodes.emplace_back(hnas::ModuleRef{built[k]});
      } else {
        nodes.emplace_back(hnas::LayerRef{
            layers[std::uniform_int_distribution<std::size_t>(0, layers.size() - 1)(gen)]});
      }
    }
    built.push_back(store.insert(hnas::ModuleDef(nodes, random_module_edges(gen, n, 0.5))));
  }
  return built.back();
}

}  // namespace oracle

#endif  // HNAS_TESTS_ORACLES_HPP_
