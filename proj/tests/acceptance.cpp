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

// Acceptance gate. Prints one PASS/FAIL line per criterion and exits non-zero
// if any criterion fails.

#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "hnas/evolution.hpp"
#include "hnas/registry.hpp"
#include "hnas/runner.hpp"
#include "json.hpp"
#include "oracles.hpp"

using namespace hnas;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int g_failures = 0;

void criterion(const std::string& name, double limit_seconds, const std::function<Outcome()>& body) {
  const auto start = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (limit_seconds > 0 && secs >= limit_seconds) {
    o.pass = false;
    o.detail += " [over time limit " + std::to_string(limit_seconds) + " s]";
  }
  if (!o.pass) ++g_failures;
  std::printf("%s %s: %s (%.2f s)\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str(),
              secs);
  std::fflush(stdout);
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string source(const std::string& rel) { return std::string(HNAS_SOURCE_DIR) + "/" + rel; }

const std::vector<LayerOp> kLayers{{"conv1x1", OpKind::kConvolution},
                                   {"conv3x3", OpKind::kConvolution},
                                   {"maxpool3x3", OpKind::kPooling}};

Outcome epochs_suite() {
  struct Triple {
    int c, g, m;
  };
  std::vector<Triple> triples{
      {3, 0, 10},   {100, 0, 10}, {9, 99, 10},  {0, 0, 10},   {1, 0, 10},  {10, 0, 10},
      {11, 0, 10},  {10, 1, 10},  {5, 2, 10},   {6, 2, 10},   {7, 5, 10},  {12, 5, 10},
      {20, 6, 10},  {4, 19, 10},  {40, 19, 10}, {2, 1000, 3}, {50, 3, 1},  {0, 50, 5},
      {17, 16, 8},  {30, 20, 25}, {8, 7, 10},   {3, 1, 2},    {100, 99, 50}};
  // Every generation around the e^k - 1 breakpoints, for a range of sizes.
  for (int g : {0, 1, 2, 6, 7, 19, 20, 53, 54})
    for (int c : {0, 1, 2, 3, 9, 10, 11, 30}) triples.push_back({c, g, 10});
  int checked = 0, low = 0, high = 0;
  for (const Triple& t : triples) {
    const int got = training_epochs(t.c, t.g, t.m);
    if (got != oracle::epochs(t.c, t.g, t.m)) {
      return {false, "mismatch at (" + std::to_string(t.c) + "," + std::to_string(t.g) + "," +
                         std::to_string(t.m) + ")"};
    }
    ++checked;
    low += got == 1;
    high += got == t.m;
  }
  const bool examples = training_epochs(3, 0, 10) == 3 && training_epochs(100, 0, 10) == 10 &&
                        training_epochs(9, 99, 10) == 1;
  return {examples && low > 0 && high > 0,
          std::to_string(checked) + " triples exact, " + std::to_string(low) + " at the lower clamp, " +
              std::to_string(high) + " at the upper clamp"};
}

Outcome structural_suite() {
  std::mt19937_64 gen(101);
  EvolutionConfig config;
  config.p_node_mut = 0.5;
  config.p_edge_mut = 0.5;
  int valid = 0, acyclic = 0, mutations = 0;
  const int total = 10000;
  for (int trial = 0; trial < total; ++trial) {
    ListsState lists = ListsState::initialize(kLayers, RegistryParams{});
    ModuleStore& store = lists.store();
    const int levels = std::uniform_int_distribution<int>(1, 5)(gen);
    PopulationMember m;
    m.root = oracle::random_hierarchy(gen, store, kLayers, levels, 6);
    Rng rng(trial);
    const int rounds = std::uniform_int_distribution<int>(1, 3)(gen);
    for (int r = 0; r < rounds; ++r) mutations += mutate(m, lists, rng, config).changed;
    const ModuleDef& root = store.at(m.root);
    valid += validate_hierarchy(root, store.resolver()).ok();
    acyclic += oracle::acyclic_by_peeling(flatten(root, store.resolver()));
  }
  return {valid == total && acyclic == total,
          std::to_string(valid) + "/" + std::to_string(total) + " valid, " +
              std::to_string(acyclic) + "/" + std::to_string(total) + " flattens acyclic, " +
              std::to_string(mutations) + " mutations applied"};
}

Outcome list_suite() {
  RegistryParams p;
  p.notable_max = 8;
  p.base_ttl = 3;
  p.min_observations = 2;
  ListsState lists(p);
  std::mt19937_64 gen(202);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 0.05);

  std::vector<ModuleId> ids;
  std::vector<double> quality;
  std::deque<std::size_t> recent;
  auto fresh = [&] {
    const ModuleId id = lists.store().insert(
        ModuleDef::single_layer({"m" + std::to_string(ids.size()), OpKind::kOther}));
    ids.push_back(id);
    quality.push_back(u(gen));
    recent.push_back(ids.size() - 1);
    if (recent.size() > 12) recent.pop_front();
  };

  long events = 0;
  int promotions = 0, ttl_expiries = 0, violations = 0;
  std::set<ModuleId> banned_before;
  std::size_t banned_size = 0;
  while (events < 150000) {
    ++events;
    if (u(gen) < 0.12) {
      // Candidates that will expire: still short of observations with one
      // TTL tick left.
      std::set<ModuleId> expiring;
      for (const auto& [id, r] : lists.candidate())
        if (r.observation_count < p.min_observations && r.ttl_remaining <= 1) expiring.insert(id);
      const GenerationVerdicts v = lists.end_of_generation();
      promotions += static_cast<int>(v.promotions.size());
      for (const ModuleId& id : v.bans) ttl_expiries += expiring.count(id);
    } else {
      if (recent.empty() || u(gen) < 0.2) fresh();
      const std::size_t k =
          recent[std::uniform_int_distribution<std::size_t>(0, recent.size() - 1)(gen)];
      const double drift = static_cast<double>(events) * 2e-5;
      lists.record_fitness(ids[k], quality[k] + drift + noise(gen));
    }
    // Disjointness and the notable cap, checked directly every event.
    if (static_cast<int>(lists.notable().size()) > p.notable_max) ++violations;
    for (const auto& [id, r] : lists.notable())
      if (lists.is_candidate(id) || lists.is_banned(id)) ++violations;
    for (const auto& [id, r] : lists.candidate())
      if (lists.is_banned(id)) ++violations;
    // Banned is absorbing: it never shrinks and keeps every past member.
    if (lists.banned().size() < banned_size) ++violations;
    banned_size = lists.banned().size();
    if (events % 100 == 0) {
      for (const ModuleId& id : banned_before)
        if (!lists.is_banned(id)) ++violations;
      banned_before = lists.banned();
      if (lists.check_invariants()) ++violations;
    }
  }
  return {violations == 0 && promotions >= 100 && ttl_expiries >= 100,
          std::to_string(events) + " events, " + std::to_string(violations) + " violations, " +
              std::to_string(promotions) + " promotions, " + std::to_string(ttl_expiries) +
              " TTL expiries, " + std::to_string(lists.banned().size()) + " banned"};
}

Outcome controlled_change() {
  ModuleStore store;
  const LayerOp conv1 = kLayers[0], conv3 = kLayers[1], pool = kLayers[2];
  const ModuleDef child({LayerRef{conv1}, LayerRef{conv3}}, {{kInput, 0}, {0, 1}, {1, kOutput}});
  const ModuleId c = store.insert(child);
  // Three references: two in sequence and one in parallel.
  const ModuleId parent = store.insert(ModuleDef(
      {ModuleRef{c}, ModuleRef{c}, ModuleRef{c}},
      {{kInput, 0}, {0, 1}, {1, kOutput}, {kInput, 2}, {2, kOutput}}));
  const ModuleDef edited({LayerRef{conv1}, LayerRef{pool}}, {{kInput, 0}, {0, 1}, {1, kOutput}});
  const ModuleId next = replace_module(parent, c, edited, store);
  const FlatGraph before = flatten(store.at(parent), store.resolver());
  const FlatGraph after = flatten(store.at(next), store.resolver());
  const int diff = oracle::label_diff(before, after);
  return {diff == 3 && before.nodes.size() == 6 && after.nodes.size() == 6,
          "k = 3 references, phenotype label diff = " + std::to_string(diff) + ", structure " +
              (diff >= 0 ? "identical" : "changed")};
}

Outcome search_vs_random() {
  const json fx = json::parse(slurp(source("tests/fixtures/compare_fmnist.json")));
  ExperimentConfig config = preset(fx["preset"]);
  config.generations = fx["generations"];
  config.evolution.population_size = fx["population_size"];
  const std::vector<std::uint64_t> seeds = fx["seeds"];
  const ComparisonReport r = compare(config, seeds);
  const int need_final = fx["min_final_best_wins"], need_early = fx["min_early_mean_wins"];
  const double tol = fx["tolerance"];
  int fixture_mismatches = 0;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    fixture_mismatches +=
        std::abs(r.search[i].back().best_fitness - fx["final_best_search"][i].get<double>()) > tol;
    fixture_mismatches +=
        std::abs(r.random[i].back().best_fitness - fx["final_best_random"][i].get<double>()) > tol;
  }
  char p[32];
  std::snprintf(p, sizeof(p), "%.3g", r.wilcoxon_p_value);
  const int n = static_cast<int>(seeds.size());
  return {r.final_best_wins >= need_final && r.early_mean_wins >= need_early &&
              r.early_generation == fx["early_generation"] && fixture_mismatches == 0,
          "final best " + std::to_string(r.final_best_wins) + "/" + std::to_string(n) +
              " (need " + std::to_string(need_final) + "), generation " +
              std::to_string(r.early_generation) + " mean > random best " +
              std::to_string(r.early_mean_wins) + "/" + std::to_string(n) + " (need " +
              std::to_string(need_early) + "), Wilcoxon p = " + p + ", fixture mismatches " +
              std::to_string(fixture_mismatches)};
}

CellConstraints cell_constraints() {
  CellConstraints c;
  c.max_nodes = 7;
  c.max_edges = 9;
  c.count_terminals = true;
  c.allowed_ops = {"conv1x1-bn-relu", "conv3x3-bn-relu", "maxpool3x3"};
  return c;
}

Outcome constraint_rejection() {
  const CellConstraints c = cell_constraints();
  const auto table = std::make_shared<const BenchmarkTable>(
      BenchmarkTable::load(source("data/nasbench_sample.jsonl")));
  const TabularEvaluator eval(table, c, 0.0);
  std::mt19937_64 gen(303);
  const std::vector<std::string> labels{"conv1x1-bn-relu", "conv3x3-bn-relu", "maxpool3x3",
                                        "avgpool3x3"};
  int over = 0, rejected = 0, false_accepts = 0, false_rejects = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = std::uniform_int_distribution<int>(1, 9)(gen);
    const double p = std::uniform_real_distribution<double>(0.1, 0.7)(gen);
    const FlatGraph g = oracle::random_phenotype(gen, n, labels, p);
    const EvaluationResult r = eval.evaluate(g, 1);
    const bool violates = !oracle::within_constraints(g, c);
    const bool flagged = r.status == EvalStatus::kConstraintViolation;
    over += violates;
    if (violates) {
      if (flagged && r.fitness == 0.0) {
        ++rejected;
      } else {
        ++false_accepts;
      }
    } else if (flagged) {
      ++false_rejects;
    }
  }
  return {false_accepts == 0 && false_rejects == 0 && over > 0,
          std::to_string(over) + "/1000 over limits, " + std::to_string(rejected) +
              " rejected at fitness 0, " + std::to_string(false_accepts) + " false accepts, " +
              std::to_string(false_rejects) + " false rejects"};
}

Outcome tabular_sample() {
  const std::string path = source("data/nasbench_sample.jsonl");
  const auto table = std::make_shared<const BenchmarkTable>(BenchmarkTable::load(path));
  const CellConstraints c = cell_constraints();
  const TabularEvaluator eval(table, c, 0.0);

  struct Row {
    FlatGraph g;
    double acc;
  };
  std::vector<Row> rows;
  std::ifstream in(path);
  for (std::string line; std::getline(in, line);) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    const std::string key = j["key"];
    // Rows list INPUT first and OUTPUT last.
    const std::size_t colon = key.find(':');
    std::vector<std::string> names;
    std::stringstream ss(key.substr(colon + 1));
    for (std::string part; std::getline(ss, part, ',');) names.push_back(part);
    const int v = static_cast<int>(names.size()), n = v - 2;
    auto vertex = [n](int x) -> Vertex { return x == 0 ? kInput : x == n + 1 ? kOutput : x - 1; };
    FlatGraph g;
    for (int i = 1; i <= n; ++i) g.nodes.push_back({names[i], OpKind::kOther});
    for (int a = 0; a < v; ++a)
      for (int b = 0; b < v; ++b)
        if (key[a * v + b] == '1') g.edges.emplace_back(vertex(a), vertex(b));
    std::sort(g.edges.begin(), g.edges.end());
    rows.push_back({g, j["validation_accuracy"]});
  }

  int present_ok = 0;
  std::mt19937_64 gen(404);
  for (const Row& row : rows) {
    const FlatGraph shuffled =
        oracle::permuted(row.g, oracle::random_perm(gen, static_cast<int>(row.g.nodes.size())));
    const EvaluationResult a = eval.evaluate(row.g, 1), b = eval.evaluate(shuffled, 1);
    present_ok += a.status == EvalStatus::kOk && a.fitness == row.acc &&
                  b.status == EvalStatus::kOk && b.fitness == row.acc;
  }

  const std::vector<std::string> ops(c.allowed_ops.begin(), c.allowed_ops.end());
  int absent = 0, absent_ok = 0;
  while (absent < 500) {
    const int n = std::uniform_int_distribution<int>(1, 5)(gen);
    const FlatGraph g = oracle::random_phenotype(gen, n, ops, 0.3);
    if (!oracle::within_constraints(g, c)) continue;
    bool in_table = false;
    for (const Row& row : rows) {
      if (oracle::isomorphic(row.g, g)) {
        in_table = true;
        break;
      }
    }
    if (in_table) continue;
    ++absent;
    absent_ok += eval.evaluate(g, 1).status == EvalStatus::kLookupMiss;
  }
  const int present = static_cast<int>(rows.size());
  return {present == 500 && present_ok == present && absent_ok == absent,
          std::to_string(present_ok) + "/" + std::to_string(present) +
              " present keys exact (any vertex order), " + std::to_string(absent_ok) + "/" +
              std::to_string(absent) + " absent keys lookup_miss"};
}

Outcome determinism() {
  const fs::path tmp = fs::temp_directory_path() / ("hnas_accept_" + std::to_string(::getpid()));
  fs::remove_all(tmp);
  std::string detail;
  bool ok = true;
  for (const auto& [name, config] :
       std::vector<std::pair<std::string, ExperimentConfig>>{
           {"fmnist-surrogate", preset("fmnist-surrogate")},
           {"nasbench", load_config(source("configs/nasbench.json"))}}) {
    ExperimentConfig c = config;
    c.seeds = {7};
    c.generations = 20;
    const fs::path base = tmp / name;
    run(c, (base / "a").string());
    run(c, (base / "b").string());
    run(c, (base / "part").string(), 8);
    resume((base / "part/seed_7/checkpoint.json").string(), (base / "resumed").string());
    const std::string a = slurp(base / "a/seed_7/stats.csv");
    const bool same = a == slurp(base / "b/seed_7/stats.csv");
    const bool resumed = a == slurp(base / "resumed/stats.csv") &&
                         slurp(base / "a/seed_7/checkpoint.json") ==
                             slurp(base / "resumed/checkpoint.json");
    ok = ok && same && resumed && !a.empty();
    detail += name + ": reruns " + (same ? "identical" : "differ") + ", resume " +
              (resumed ? "equal" : "differs") + "; ";
  }
  fs::remove_all(tmp);
  detail.resize(detail.size() - 2);
  return {ok, detail};
}

}  // namespace

int main() {
  criterion("epochs formula oracle", 1.0, epochs_suite);
  criterion("structural properties (10000 hierarchies)", 60.0, structural_suite);
  criterion("list state machine", 30.0, list_suite);
  criterion("controlled change through a shared child", 0.0, controlled_change);
  criterion("search vs random (10 seeds x 20 generations x P=20)", 300.0, search_vs_random);
  criterion("constraint rejection (1000 phenotypes)", 0.0, constraint_rejection);
  criterion("tabular sample lookups", 0.0, tabular_sample);
  criterion("determinism and resume", 0.0, determinism);
  std::printf("%s: %d criteria failed\n", g_failures == 0 ? "ALL PASS" : "FAILURES", g_failures);
  return g_failures == 0 ? 0 : 1;
}
