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

#ifndef HNAS_CANONICAL_HPP_
#define HNAS_CANONICAL_HPP_

#include <string>
#include <utility>
#include <vector>

namespace hnas {

// Vertex-labelled digraph over dense vertex ids [0, labels.size()).
struct LabeledDigraph {
  std::vector<std::string> labels;
  std::vector<std::pair<int, int>> edges;
};

struct CanonicalForm {
  // order[k] is the input vertex placed at canonical position k.
  std::vector<int> order;
  // Canonical serialization: equal iff the two graphs are isomorphic as
  // labelled digraphs.
  std::string encoding;
};

// Exact canonical labelling by colour refinement plus individualization.
//
// Initial colours are (longest distance from a source, label), so on a DAG
// the canonical order is also a topological order. Cost grows with the
// number of automorphisms; the graphs handled here (module bodies, cells)
// are small.
CanonicalForm canonical_form(const LabeledDigraph& graph);

// Deterministic ordering by refined colour with ties broken by input index.
// Topological on a DAG; cheap on large graphs, but not isomorphism-invariant
// among colour-equivalent vertices.
std::vector<int> stable_order(const LabeledDigraph& graph);

// Longest path length (in edges) from any source to each vertex. All zeros
// if the graph has a cycle.
std::vector<int> longest_path_depths(int vertex_count,
                                     const std::vector<std::pair<int, int>>& edges);

}  // namespace hnas

#endif  // HNAS_CANONICAL_HPP_
