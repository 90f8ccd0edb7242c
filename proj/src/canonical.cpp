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

#include "hnas/canonical.hpp"

#include <algorithm>
#include <numeric>
#include <optional>
#include <tuple>

namespace hnas {
namespace {

using Code = std::vector<std::pair<int, int>>;

struct Adjacency {
  std::vector<std::vector<int>> out;
  std::vector<std::vector<int>> in;
};

Adjacency build_adjacency(int n, const std::vector<std::pair<int, int>>& edges) {
  Adjacency adj{std::vector<std::vector<int>>(n), std::vector<std::vector<int>>(n)};
  for (const auto& [u, v] : edges) {
    adj.out[u].push_back(v);
    adj.in[v].push_back(u);
  }
  return adj;
}

// Replaces arbitrary integer colours by dense ranks, preserving order.
int compress(std::vector<int>& colors) {
  std::vector<int> values = colors;
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  for (int& c : colors) {
    c = static_cast<int>(std::lower_bound(values.begin(), values.end(), c) - values.begin());
  }
  return static_cast<int>(values.size());
}

// Colour refinement until the partition is equitable. New colours order
// first by the old colour, so refinement never reorders existing classes.
void refine(const Adjacency& adj, std::vector<int>& colors) {
  const int n = static_cast<int>(colors.size());
  int classes = compress(colors);
  using Signature = std::tuple<int, std::vector<int>, std::vector<int>>;
  std::vector<Signature> signatures(n);
  std::vector<int> idx(n);
  while (true) {
    for (int v = 0; v < n; ++v) {
      std::vector<int> outs, ins;
      outs.reserve(adj.out[v].size());
      ins.reserve(adj.in[v].size());
      for (int w : adj.out[v]) outs.push_back(colors[w]);
      for (int w : adj.in[v]) ins.push_back(colors[w]);
      std::sort(outs.begin(), outs.end());
      std::sort(ins.begin(), ins.end());
      signatures[v] = Signature(colors[v], std::move(outs), std::move(ins));
    }
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(),
              [&](int a, int b) { return signatures[a] < signatures[b]; });
    int rank = 0;
    for (int k = 0; k < n; ++k) {
      if (k > 0 && signatures[idx[k]] != signatures[idx[k - 1]]) ++rank;
      colors[idx[k]] = rank;
    }
    const int next = n == 0 ? 0 : rank + 1;
    if (next == classes) return;
    classes = next;
  }
}

std::vector<int> initial_colors(const LabeledDigraph& graph) {
  const int n = static_cast<int>(graph.labels.size());
  const std::vector<int> depth = longest_path_depths(n, graph.edges);
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  auto key = [&](int v) { return std::tie(depth[v], graph.labels[v]); };
  std::sort(idx.begin(), idx.end(), [&](int a, int b) { return key(a) < key(b); });
  std::vector<int> colors(n);
  int rank = 0;
  for (int k = 0; k < n; ++k) {
    if (k > 0 && key(idx[k]) != key(idx[k - 1])) ++rank;
    colors[idx[k]] = rank;
  }
  return colors;
}

struct Search {
  const LabeledDigraph& graph;
  const Adjacency& adj;
  std::optional<Code> best;
  std::vector<int> best_colors;

  void run(std::vector<int> colors) {
    refine(adj, colors);
    const int n = static_cast<int>(colors.size());
    std::vector<int> sizes(n, 0);
    for (int c : colors) ++sizes[c];
    int target = -1;
    for (int c = 0; c < n; ++c) {
      if (sizes[c] > 1) {
        target = c;
        break;
      }
    }
    if (target < 0) {
      Code code;
      code.reserve(graph.edges.size());
      for (const auto& [u, v] : graph.edges) code.emplace_back(colors[u], colors[v]);
      std::sort(code.begin(), code.end());
      if (!best || code < *best) {
        best = std::move(code);
        best_colors = colors;
      }
      return;
    }
    for (int v = 0; v < n; ++v) {
      if (colors[v] != target) continue;
      std::vector<int> next(n);
      for (int u = 0; u < n; ++u) {
        next[u] = 2 * colors[u] + ((colors[u] == target && u != v) ? 1 : 0);
      }
      compress(next);
      run(std::move(next));
    }
  }
};

}  // namespace

std::vector<int> longest_path_depths(int vertex_count,
                                     const std::vector<std::pair<int, int>>& edges) {
  const Adjacency adj = build_adjacency(vertex_count, edges);
  std::vector<int> indegree(vertex_count, 0);
  for (const auto& e : edges) ++indegree[e.second];
  std::vector<int> ready;
  for (int v = 0; v < vertex_count; ++v) {
    if (indegree[v] == 0) ready.push_back(v);
  }
  std::vector<int> depth(vertex_count, 0);
  int visited = 0;
  while (!ready.empty()) {
    const int v = ready.back();
    ready.pop_back();
    ++visited;
    for (int w : adj.out[v]) {
      depth[w] = std::max(depth[w], depth[v] + 1);
      if (--indegree[w] == 0) ready.push_back(w);
    }
  }
  if (visited != vertex_count) std::fill(depth.begin(), depth.end(), 0);
  return depth;
}

CanonicalForm canonical_form(const LabeledDigraph& graph) {
  const int n = static_cast<int>(graph.labels.size());
  const Adjacency adj = build_adjacency(n, graph.edges);
  Search search{graph, adj, std::nullopt, {}};
  search.run(initial_colors(graph));

  CanonicalForm form;
  form.order.assign(n, 0);
  for (int v = 0; v < n; ++v) form.order[search.best_colors[v]] = v;

  std::string& enc = form.encoding;
  enc += std::to_string(n);
  enc += '|';
  for (int v : form.order) {
    const std::string& label = graph.labels[v];
    enc += std::to_string(label.size());
    enc += ':';
    enc += label;
  }
  enc += '|';
  if (search.best) {
    for (const auto& [u, v] : *search.best) {
      enc += std::to_string(u);
      enc += '>';
      enc += std::to_string(v);
      enc += ';';
    }
  }
  return form;
}

std::vector<int> stable_order(const LabeledDigraph& graph) {
  const int n = static_cast<int>(graph.labels.size());
  const Adjacency adj = build_adjacency(n, graph.edges);
  std::vector<int> colors = initial_colors(graph);
  refine(adj, colors);
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return colors[a] < colors[b]; });
  return order;
}

}  // namespace hnas
