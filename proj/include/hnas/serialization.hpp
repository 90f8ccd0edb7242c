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

#ifndef HNAS_SERIALIZATION_HPP_
#define HNAS_SERIALIZATION_HPP_

#include <string>

#include "hnas/module_graph.hpp"
#include "json.hpp"

namespace hnas {

// {"nodes": [{"layer": label, "kind": kind} | {"module": hex}],
//  "edges": [[src, dst], ...]} with terminals written as "input"/"output".
nlohmann::json module_to_json(const ModuleDef& module);
// Throws CorruptCheckpoint on malformed input.
ModuleDef module_from_json(const nlohmann::json& j);

// {"nodes": [{"id": 0, "op": "input"}, {"id": 1, "op": label, "kind": kind},
//  ..., {"id": n + 1, "op": "output"}], "edges": [[src, dst], ...]}
// Ids number INPUT as 0, layer i as i + 1 and OUTPUT as n + 1.
nlohmann::json flat_to_json(const FlatGraph& graph);
FlatGraph flat_from_json(const nlohmann::json& j);

std::string flat_to_dot(const FlatGraph& graph, const std::string& name = "phenotype");

// The phenotype plus, when the hierarchy is deeper than one level, one
// cluster per distinct module showing its own graph.
std::string hierarchy_to_dot(const ModuleDef& root, const Resolver& resolve);

// Self-contained description of a hierarchy: the root id, every distinct
// module definition, the flattened phenotype and size summary.
nlohmann::json hierarchy_to_json(const ModuleDef& root, const Resolver& resolve);

// Inverse of hierarchy_to_json: fills `store` with the listed modules and
// returns the root id. Every listed id must match its recomputed canonical
// hash; throws CorruptCheckpoint otherwise.
ModuleId hierarchy_from_json(const nlohmann::json& j, ModuleStore& store);

}  // namespace hnas

#endif  // HNAS_SERIALIZATION_HPP_
