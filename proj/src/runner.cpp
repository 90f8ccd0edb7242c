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

#include "hnas/runner.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "hnas/error.hpp"
#include "hnas/serialization.hpp"

namespace hnas {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::atomic<bool> g_stop{false};

const std::set<std::string>& known_config_keys() {
  static const std::set<std::string> keys = {
      "schema_version", "population_size", "notable_max", "base_ttl", "min_observations",
      "replace_fraction", "p_node_mut", "p_edge_mut", "gen_graph_nodes", "max_epochs",
      "rng_seed", "p_edge_gen", "edge_retries", "prior_fitness", "failure_fitness",
      "per_occurrence_fitness", "operations", "evaluator", "constraints", "generations",
      "output_dir", "seeds"};
  return keys;
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

SurrogateParams surrogate_from_json(const json& j) {
  SurrogateParams p;
  if (j.contains("op_weights")) {
    if (!j["op_weights"].is_object()) throw ConfigError("surrogate.op_weights must be an object");
    p.op_weights.clear();
    for (const auto& [label, weight] : j["op_weights"].items()) {
      if (!weight.is_number()) throw ConfigError("surrogate.op_weights values must be numbers");
      p.op_weights[label] = weight.get<double>();
    }
  }
  read(j, "default_op_weight", p.default_op_weight);
  read(j, "target_depth", p.target_depth);
  read(j, "depth_penalty", p.depth_penalty);
  read(j, "target_edges", p.target_edges);
  read(j, "w_op", p.w_op);
  read(j, "w_depth", p.w_depth);
  read(j, "w_edges", p.w_edges);
  return p;
}

json surrogate_to_json(const SurrogateParams& p) {
  json weights = json::object();
  for (const auto& [label, w] : p.op_weights) weights[label] = w;
  return {{"op_weights", weights},         {"default_op_weight", p.default_op_weight},
          {"target_depth", p.target_depth}, {"depth_penalty", p.depth_penalty},
          {"target_edges", p.target_edges}, {"w_op", p.w_op},
          {"w_depth", p.w_depth},           {"w_edges", p.w_edges}};
}

std::string evaluator_type_name(EvaluatorType t) {
  switch (t) {
    case EvaluatorType::kSurrogate:
      return "surrogate";
    case EvaluatorType::kTabular:
      return "tabular";
    case EvaluatorType::kRandom:
      return "random";
  }
  return "surrogate";
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  out.flush();
  if (!out) throw IoError("write failed: " + path.string());
}

json stats_to_json(const GenerationStats& s) {
  return {{"generation", s.generation},         {"best_fitness", s.best_fitness},
          {"mean_fitness", s.mean_fitness},     {"notable_size", s.notable_size},
          {"candidate_size", s.candidate_size}, {"banned_size", s.banned_size},
          {"promotions", s.promotions},         {"bans", s.bans},
          {"evaluations", s.evaluations}};
}

GenerationStats stats_from_json(const json& j) {
  GenerationStats s;
  s.generation = j.at("generation").get<int>();
  s.best_fitness = j.at("best_fitness").get<double>();
  s.mean_fitness = j.at("mean_fitness").get<double>();
  s.notable_size = j.at("notable_size").get<int>();
  s.candidate_size = j.at("candidate_size").get<int>();
  s.banned_size = j.at("banned_size").get<int>();
  s.promotions = j.at("promotions").get<int>();
  s.bans = j.at("bans").get<int>();
  s.evaluations = j.at("evaluations").get<int>();
  return s;
}

json optional_double(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> optional_double_from(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

json member_to_json(const PopulationMember& m) {
  return {{"root", m.root.to_hex()},
          {"fitness", optional_double(m.fitness)},
          {"reported_fitness", optional_double(m.reported_fitness)},
          {"dirty", m.dirty},
          {"age", m.age}};
}

ModuleId parse_id(const json& j) {
  const auto id = ModuleId::from_hex(j.get<std::string>());
  if (!id) throw CorruptCheckpoint("bad module id: " + j.dump());
  return *id;
}

PopulationMember member_from_json(const json& j) {
  PopulationMember m;
  m.root = parse_id(j.at("root"));
  m.fitness = optional_double_from(j.at("fitness"));
  m.reported_fitness = optional_double_from(j.at("reported_fitness"));
  m.dirty = j.at("dirty").get<bool>();
  m.age = j.at("age").get<int>();
  if (!m.dirty && (!m.fitness || !m.reported_fitness)) {
    throw CorruptCheckpoint("clean member without fitness");
  }
  return m;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10f", v);
  return buf;
}

// Writes the seed's files, executing at most `budget` generations.
SeedReport drive(Experiment& experiment, const fs::path& dir, std::optional<int> budget) {
  fs::create_directories(dir / "checkpoints");
  json snapshot = config_to_json(experiment.config());
  snapshot["rng_seed"] = experiment.seed();
  snapshot["seeds"] = json::array({experiment.seed()});
  snapshot["stats_schema_version"] = 1;
  write_file(dir / "config.json", snapshot.dump(2) + "\n");

  std::ofstream csv(dir / "stats.csv", std::ios::binary | std::ios::trunc);
  if (!csv) throw IoError("cannot write " + (dir / "stats.csv").string());
  csv << stats_csv(experiment.history());
  csv.flush();

  int executed = 0;
  while (!experiment.finished() && (!budget || executed < *budget) && !stop_requested()) {
    const GenerationStats stats = experiment.step();
    ++executed;
    csv << format_stats_row(stats) << "\n";
    csv.flush();
    const std::string text = experiment.checkpoint().dump() + "\n";
    char name[32];
    std::snprintf(name, sizeof(name), "gen_%04d.json", experiment.search().generation());
    write_file(dir / "checkpoints" / name, text);
    write_file(dir / "checkpoint.json", text);
  }
  if (executed == 0) write_file(dir / "checkpoint.json", experiment.checkpoint().dump() + "\n");

  SeedReport report;
  report.seed = experiment.seed();
  report.directory = dir.string();
  report.history = experiment.history();
  report.completed = experiment.finished();
  if (const auto& best = experiment.search().best()) {
    report.best_fitness = *best->reported_fitness;
    const json cp = experiment.checkpoint();
    json best_json = json::parse(export_best(cp, ExportFormat::kJson));
    if (const auto* tabular = dynamic_cast<const TabularEvaluator*>(&experiment.evaluator())) {
      const ModuleStore& store = experiment.search().lists().store();
      const FlatGraph flat = flatten(store.at(best->root), store.resolver());
      if (const BenchmarkEntry* entry = tabular->table().find(flat)) {
        best_json["validation_accuracy"] = entry->validation_accuracy;
        best_json["test_accuracy"] = entry->test_accuracy;
      }
    }
    write_file(dir / "best.json", best_json.dump(2) + "\n");
    write_file(dir / "best.dot", export_best(cp, ExportFormat::kDot));
  }
  return report;
}

}  // namespace

void request_stop() { g_stop.store(true); }
void clear_stop() { g_stop.store(false); }
bool stop_requested() { return g_stop.load(); }

void ExperimentConfig::validate() const {
  evolution.validate();
  if (generations < 1) throw ConfigError("generations must be >= 1");
  if (operations.empty()) throw ConfigError("operations must not be empty");
  if (static_cast<int>(operations.size()) > evolution.notable_max) {
    throw ConfigError("more operations than notable_max");
  }
  std::set<std::string> labels;
  for (const LayerOp& op : operations) {
    if (op.label.empty()) throw ConfigError("operation label must not be empty");
    if (op.label == "input" || op.label == "output") {
      throw ConfigError("operation labels 'input' and 'output' are reserved");
    }
    if (op.label.find(',') != std::string::npos || op.label.find(':') != std::string::npos) {
      throw ConfigError("operation labels must not contain ',' or ':'");
    }
    if (!labels.insert(op.label).second) throw ConfigError("duplicate operation label: " + op.label);
  }
  if (evaluator.type == EvaluatorType::kTabular) {
    if (evaluator.table_path.empty()) throw ConfigError("tabular evaluator needs a table path");
    if (!fs::exists(evaluator.table_path)) {
      throw ConfigError("benchmark table not found: " + evaluator.table_path);
    }
  }
  if (evaluator.type == EvaluatorType::kTabular && !constraints) {
    throw ConfigError("tabular evaluator needs constraints");
  }
  if (constraints) {
    if (constraints->max_nodes < 1 || constraints->max_edges < 1 ||
        constraints->allowed_ops.empty()) {
      throw ConfigError("constraints need max_nodes >= 1, max_edges >= 1 and allowed_ops");
    }
  }
}

std::vector<std::uint64_t> ExperimentConfig::effective_seeds() const {
  if (!seeds.empty()) return seeds;
  return {evolution.rng_seed};
}

ExperimentConfig config_from_json(const json& j, const std::string& base_dir) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (known_config_keys().count(key) == 0) throw ConfigError("unknown config key: " + key);
  }
  int schema = kConfigSchemaVersion;
  read(j, "schema_version", schema);
  if (schema != kConfigSchemaVersion) {
    throw ConfigError("unsupported config schema_version " + std::to_string(schema));
  }

  ExperimentConfig c;
  EvolutionConfig& e = c.evolution;
  read(j, "population_size", e.population_size);
  read(j, "notable_max", e.notable_max);
  read(j, "base_ttl", e.base_ttl);
  read(j, "min_observations", e.min_observations);
  read(j, "replace_fraction", e.replace_fraction);
  read(j, "p_node_mut", e.p_node_mut);
  read(j, "p_edge_mut", e.p_edge_mut);
  if (j.contains("gen_graph_nodes")) {
    const json& g = j["gen_graph_nodes"];
    if (g.is_number_integer()) {
      e.gen_graph_nodes_min = e.gen_graph_nodes_max = g.get<int>();
    } else if (g.is_array() && g.size() == 2 && g[0].is_number_integer() &&
               g[1].is_number_integer()) {
      e.gen_graph_nodes_min = g[0].get<int>();
      e.gen_graph_nodes_max = g[1].get<int>();
    } else {
      throw ConfigError("gen_graph_nodes must be an integer or [min, max]");
    }
  }
  read(j, "max_epochs", e.max_epochs);
  read(j, "rng_seed", e.rng_seed);
  read(j, "p_edge_gen", e.p_edge_gen);
  read(j, "edge_retries", e.edge_retries);
  read(j, "prior_fitness", e.prior_fitness);
  read(j, "failure_fitness", e.failure_fitness);
  read(j, "per_occurrence_fitness", e.per_occurrence_fitness);
  read(j, "generations", c.generations);
  read(j, "output_dir", c.output_dir);
  read(j, "seeds", c.seeds);

  if (j.contains("operations")) {
    if (!j["operations"].is_array()) throw ConfigError("operations must be an array");
    for (const json& op : j["operations"]) {
      LayerOp layer;
      read(op, "label", layer.label);
      std::string kind = "other";
      read(op, "kind", kind);
      const auto parsed = op_kind_from_string(kind);
      if (!parsed) throw ConfigError("unknown operation kind: " + kind);
      layer.kind = *parsed;
      c.operations.push_back(std::move(layer));
    }
  }

  if (j.contains("evaluator")) {
    const json& ev = j["evaluator"];
    if (!ev.is_object()) throw ConfigError("evaluator must be an object");
    std::string type = "surrogate";
    read(ev, "type", type);
    if (type == "surrogate") {
      c.evaluator.type = EvaluatorType::kSurrogate;
    } else if (type == "tabular") {
      c.evaluator.type = EvaluatorType::kTabular;
    } else if (type == "random") {
      c.evaluator.type = EvaluatorType::kRandom;
    } else {
      throw ConfigError("unknown evaluator type: " + type);
    }
    read(ev, "path", c.evaluator.table_path);
    read(ev, "constant", c.evaluator.constant);
    if (ev.contains("surrogate")) c.evaluator.surrogate = surrogate_from_json(ev["surrogate"]);
    if (!c.evaluator.table_path.empty() && !base_dir.empty() &&
        fs::path(c.evaluator.table_path).is_relative()) {
      c.evaluator.table_path =
          (fs::path(base_dir) / c.evaluator.table_path).lexically_normal().string();
    }
  }

  if (j.contains("constraints") && !j["constraints"].is_null()) {
    const json& cj = j["constraints"];
    CellConstraints cc;
    read(cj, "max_nodes", cc.max_nodes);
    read(cj, "max_edges", cc.max_edges);
    read(cj, "count_terminals", cc.count_terminals);
    std::vector<std::string> ops;
    read(cj, "allowed_ops", ops);
    cc.allowed_ops = std::set<std::string>(ops.begin(), ops.end());
    c.constraints = std::move(cc);
  }

  c.validate();
  return c;
}

json config_to_json(const ExperimentConfig& c) {
  const EvolutionConfig& e = c.evolution;
  json ops = json::array();
  for (const LayerOp& op : c.operations) {
    ops.push_back({{"label", op.label}, {"kind", std::string(to_string(op.kind))}});
  }
  json evaluator = {{"type", evaluator_type_name(c.evaluator.type)},
                    {"surrogate", surrogate_to_json(c.evaluator.surrogate)}};
  if (c.evaluator.type == EvaluatorType::kTabular) evaluator["path"] = c.evaluator.table_path;
  if (c.evaluator.type == EvaluatorType::kRandom) evaluator["constant"] = c.evaluator.constant;

  json constraints = nullptr;
  if (c.constraints) {
    constraints = {{"max_nodes", c.constraints->max_nodes},
                   {"max_edges", c.constraints->max_edges},
                   {"count_terminals", c.constraints->count_terminals},
                   {"allowed_ops", std::vector<std::string>(c.constraints->allowed_ops.begin(),
                                                            c.constraints->allowed_ops.end())}};
  }
  json gen_nodes = e.gen_graph_nodes_min == e.gen_graph_nodes_max
                       ? json(e.gen_graph_nodes_min)
                       : json::array({e.gen_graph_nodes_min, e.gen_graph_nodes_max});
  return {{"schema_version", kConfigSchemaVersion},
          {"population_size", e.population_size},
          {"notable_max", e.notable_max},
          {"base_ttl", e.base_ttl},
          {"min_observations", e.min_observations},
          {"replace_fraction", e.replace_fraction},
          {"p_node_mut", e.p_node_mut},
          {"p_edge_mut", e.p_edge_mut},
          {"gen_graph_nodes", gen_nodes},
          {"max_epochs", e.max_epochs},
          {"rng_seed", e.rng_seed},
          {"p_edge_gen", e.p_edge_gen},
          {"edge_retries", e.edge_retries},
          {"prior_fitness", e.prior_fitness},
          {"failure_fitness", e.failure_fitness},
          {"per_occurrence_fitness", e.per_occurrence_fitness},
          {"operations", ops},
          {"evaluator", evaluator},
          {"constraints", constraints},
          {"generations", c.generations},
          {"output_dir", c.output_dir},
          {"seeds", c.seeds}};
}

ExperimentConfig load_config(const std::string& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw ConfigError("cannot parse " + path + ": " + e.what());
  } catch (const IoError& e) {
    throw ConfigError(e.what());
  }
  return config_from_json(j, fs::path(path).parent_path().string());
}

ExperimentConfig preset(const std::string& name) {
  ExperimentConfig c;
  EvolutionConfig& e = c.evolution;
  e.notable_max = 10;
  e.base_ttl = 4;
  e.min_observations = 2;
  e.replace_fraction = 0.4;
  e.p_node_mut = 0.15;
  e.p_edge_mut = 0.55;
  e.gen_graph_nodes_min = e.gen_graph_nodes_max = 2;
  e.rng_seed = 1;
  if (name == "fmnist-surrogate") {
    e.population_size = 20;
    c.generations = 20;
    c.output_dir = "runs/fmnist-surrogate";
    c.operations = {{"conv1x1_32", OpKind::kConvolution}, {"conv2x2_32", OpKind::kConvolution},
                    {"conv3x3_32", OpKind::kConvolution}, {"maxpool2", OpKind::kPooling},
                    {"maxpool3", OpKind::kPooling},       {"maxpool5", OpKind::kPooling}};
    c.evaluator.type = EvaluatorType::kSurrogate;
    c.evaluator.surrogate.op_weights = {{"conv1x1_32", 0.5}, {"conv2x2_32", 0.7},
                                        {"conv3x3_32", 1.0}, {"maxpool2", 0.3},
                                        {"maxpool3", 0.2},   {"maxpool5", 0.0}};
    c.seeds = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  } else if (name == "nasbench") {
    e.population_size = 10;
    c.generations = 50;
    c.output_dir = "runs/nasbench";
    c.operations = {{"conv1x1-bn-relu", OpKind::kConvolution},
                    {"conv3x3-bn-relu", OpKind::kConvolution},
                    {"maxpool3x3", OpKind::kPooling}};
    c.evaluator.type = EvaluatorType::kTabular;
    c.evaluator.table_path = "data/nasbench_sample.jsonl";
    CellConstraints cc;
    cc.max_nodes = 7;
    cc.max_edges = 9;
    cc.count_terminals = true;
    cc.allowed_ops = {"conv1x1-bn-relu", "conv3x3-bn-relu", "maxpool3x3"};
    c.constraints = cc;
    c.seeds = {1};
  } else {
    throw ConfigError("unknown preset: " + name);
  }
  return c;
}

std::shared_ptr<const Evaluator> make_evaluator(const ExperimentConfig& config) {
  const double failure = config.evolution.failure_fitness;
  switch (config.evaluator.type) {
    case EvaluatorType::kSurrogate:
      return std::make_shared<SurrogateEvaluator>(config.evaluator.surrogate, config.constraints,
                                                  failure);
    case EvaluatorType::kTabular: {
      auto table = std::make_shared<BenchmarkTable>(BenchmarkTable::load(config.evaluator.table_path));
      return std::make_shared<TabularEvaluator>(std::move(table), *config.constraints, failure);
    }
    case EvaluatorType::kRandom: {
      auto reporter = std::make_shared<SurrogateEvaluator>(config.evaluator.surrogate,
                                                           config.constraints, failure);
      return std::make_shared<ConstantEvaluator>(config.evaluator.constant, std::move(reporter));
    }
  }
  throw ConfigError("unknown evaluator type");
}

namespace {
EvolutionConfig seeded(EvolutionConfig e, std::uint64_t seed) {
  e.rng_seed = seed;
  return e;
}
}  // namespace

Experiment::Experiment(ExperimentConfig config, std::uint64_t seed)
    : Experiment(config, seed, make_evaluator(config)) {}

Experiment::Experiment(ExperimentConfig config, std::uint64_t seed,
                       std::shared_ptr<const Evaluator> evaluator)
    : Experiment(Restored{}, std::move(config), seed, std::move(evaluator)) {
  search_.initialize();
}

Experiment::Experiment(Restored, ExperimentConfig config, std::uint64_t seed,
                       std::shared_ptr<const Evaluator> evaluator)
    : config_(std::move(config)),
      seed_(seed),
      evaluator_(std::move(evaluator)),
      search_(seeded(config_.evolution, seed), config_.operations) {
  config_.evolution.rng_seed = seed;
}

GenerationStats Experiment::step() {
  GenerationStats stats = search_.step(*evaluator_);
  history_.push_back(stats);
  return stats;
}

json Experiment::checkpoint() const {
  const ListsState& lists = search_.lists();
  const ModuleStore& store = lists.store();

  std::vector<const ModuleDef*> defs;
  store.for_each([&](const ModuleDef& def) { defs.push_back(&def); });
  std::sort(defs.begin(), defs.end(),
            [](const ModuleDef* a, const ModuleDef* b) { return a->id() < b->id(); });
  json modules = json::array();
  for (const ModuleDef* def : defs) {
    modules.push_back({{"id", def->id().to_hex()}, {"def", module_to_json(*def)}});
  }

  json notable = json::array();
  for (const auto& [id, r] : lists.notable()) {
    notable.push_back({{"id", id.to_hex()},
                       {"def", module_to_json(store.at(id))},
                       {"sum", r.fitness_sum},
                       {"count", r.observation_count}});
  }
  json candidate = json::array();
  for (const auto& [id, r] : lists.candidate()) {
    candidate.push_back({{"id", id.to_hex()},
                         {"def", module_to_json(store.at(id))},
                         {"sum", r.fitness_sum},
                         {"count", r.observation_count},
                         {"ttl", r.ttl_remaining}});
  }
  json banned = json::array();
  for (const ModuleId& id : lists.banned()) banned.push_back(id.to_hex());

  json population = json::array();
  for (const PopulationMember& m : search_.population()) population.push_back(member_to_json(m));

  json history = json::array();
  for (const GenerationStats& s : history_) history.push_back(stats_to_json(s));

  return {{"format", "hnas-checkpoint"},
          {"schema_version", kCheckpointSchemaVersion},
          {"config", config_to_json(config_)},
          {"seed", seed_},
          {"generation", search_.generation()},
          {"rng_state", search_.rng().state()},
          {"modules", modules},
          {"notable", notable},
          {"candidate", candidate},
          {"banned", banned},
          {"population", population},
          {"best", search_.best() ? member_to_json(*search_.best()) : json(nullptr)},
          {"history", history}};
}

Experiment Experiment::from_checkpoint(const json& cp) {
  try {
    if (!cp.is_object() || cp.value("format", "") != "hnas-checkpoint") {
      throw CorruptCheckpoint("not an hnas checkpoint");
    }
    if (cp.at("schema_version").get<int>() != kCheckpointSchemaVersion) {
      throw CorruptCheckpoint("unsupported checkpoint schema_version");
    }
    ExperimentConfig config;
    try {
      config = config_from_json(cp.at("config"));
    } catch (const ConfigError& e) {
      throw CorruptCheckpoint(std::string("embedded config: ") + e.what());
    }
    const auto seed = cp.at("seed").get<std::uint64_t>();
    Experiment exp(Restored{}, config, seed, make_evaluator(config));

    ListsState lists(config.evolution.registry_params());
    for (const json& entry : cp.at("modules")) {
      const ModuleDef def = module_from_json(entry.at("def"));
      if (def.id() != parse_id(entry.at("id"))) {
        throw CorruptCheckpoint("module id does not match its definition: " + entry["id"].dump());
      }
      lists.store().insert(def);
    }
    std::map<ModuleId, FitnessRecord> notable, candidate;
    for (const json& entry : cp.at("notable")) {
      notable[parse_id(entry.at("id"))] =
          FitnessRecord{entry.at("sum").get<double>(), entry.at("count").get<int>(), 0};
    }
    for (const json& entry : cp.at("candidate")) {
      candidate[parse_id(entry.at("id"))] = FitnessRecord{
          entry.at("sum").get<double>(), entry.at("count").get<int>(), entry.at("ttl").get<int>()};
    }
    std::set<ModuleId> banned;
    for (const json& id : cp.at("banned")) banned.insert(parse_id(id));
    lists.restore(std::move(notable), std::move(candidate), std::move(banned));
    if (const auto problem = lists.check_invariants()) throw CorruptCheckpoint(*problem);

    std::vector<PopulationMember> population;
    for (const json& m : cp.at("population")) population.push_back(member_from_json(m));
    if (population.empty()) throw CorruptCheckpoint("empty population");
    std::optional<PopulationMember> best;
    if (!cp.at("best").is_null()) best = member_from_json(cp["best"]);

    const Resolver resolve = lists.store().resolver();
    auto check_root = [&](const ModuleId& id) {
      const ModuleDef* def = resolve(id);
      if (def == nullptr) throw CorruptCheckpoint("missing module " + id.to_hex());
      if (const ValidationResult r = validate_hierarchy(*def, resolve); !r) {
        throw CorruptCheckpoint("invalid module " + id.to_hex() + ": " + r.detail);
      }
    };
    for (const PopulationMember& m : population) check_root(m.root);
    if (best) check_root(best->root);

    exp.search_.restore(cp.at("generation").get<int>(), std::move(population), std::move(lists),
                        cp.at("rng_state").get<std::string>(), std::move(best));
    for (const json& s : cp.at("history")) exp.history_.push_back(stats_from_json(s));
    return exp;
  } catch (const json::exception& e) {
    throw CorruptCheckpoint(std::string("malformed checkpoint: ") + e.what());
  }
}

Experiment Experiment::from_checkpoint_file(const std::string& path) {
  json cp;
  try {
    cp = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw CorruptCheckpoint("cannot parse " + path + ": " + e.what());
  } catch (const IoError& e) {
    throw CorruptCheckpoint(e.what());
  }
  return from_checkpoint(cp);
}

std::string format_stats_row(const GenerationStats& s) {
  return std::to_string(s.generation) + "," + format_double(s.best_fitness) + "," +
         format_double(s.mean_fitness) + "," + std::to_string(s.notable_size) + "," +
         std::to_string(s.candidate_size) + "," + std::to_string(s.banned_size) + "," +
         std::to_string(s.promotions) + "," + std::to_string(s.bans) + "," +
         std::to_string(s.evaluations);
}

std::string stats_csv(const std::vector<GenerationStats>& history) {
  std::string out = std::string(kStatsHeader) + "\n";
  for (const GenerationStats& s : history) out += format_stats_row(s) + "\n";
  return out;
}

ExperimentReport run(const ExperimentConfig& config, const std::string& out_dir,
                     std::optional<int> stop_after) {
  config.validate();
  const auto evaluator = make_evaluator(config);
  ExperimentReport report;
  for (std::uint64_t seed : config.effective_seeds()) {
    if (stop_requested()) break;
    Experiment experiment(config, seed, evaluator);
    report.seeds.push_back(
        drive(experiment, fs::path(out_dir) / ("seed_" + std::to_string(seed)), stop_after));
  }

  std::size_t longest = 0;
  for (const SeedReport& s : report.seeds) longest = std::max(longest, s.history.size());
  std::string summary = "generation,mean_best_fitness,mean_mean_fitness,seeds\n";
  for (std::size_t g = 0; g < longest; ++g) {
    double best = 0.0, mean = 0.0;
    int count = 0;
    for (const SeedReport& s : report.seeds) {
      if (g >= s.history.size()) continue;
      best += s.history[g].best_fitness;
      mean += s.history[g].mean_fitness;
      ++count;
    }
    report.mean_best.push_back(best / count);
    report.mean_mean.push_back(mean / count);
    summary += std::to_string(g) + "," + format_double(best / count) + "," +
               format_double(mean / count) + "," + std::to_string(count) + "\n";
  }
  fs::create_directories(out_dir);
  write_file(fs::path(out_dir) / "summary.csv", summary);
  return report;
}

SeedReport resume(const std::string& checkpoint_path, const std::string& out_dir) {
  Experiment experiment = Experiment::from_checkpoint_file(checkpoint_path);
  return drive(experiment, out_dir, std::nullopt);
}

double wilcoxon_signed_rank_greater(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> diffs;
  for (std::size_t i = 0; i < std::min(x.size(), y.size()); ++i) {
    if (x[i] != y[i]) diffs.push_back(x[i] - y[i]);
  }
  const std::size_t m = diffs.size();
  if (m == 0) return 1.0;

  // Doubled ranks keep averaged ties integral.
  std::vector<std::size_t> idx(m);
  for (std::size_t i = 0; i < m; ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(),
            [&](std::size_t a, std::size_t b) { return std::abs(diffs[a]) < std::abs(diffs[b]); });
  std::vector<long> rank2(m);
  for (std::size_t i = 0; i < m;) {
    std::size_t j = i;
    while (j + 1 < m && std::abs(diffs[idx[j + 1]]) == std::abs(diffs[idx[i]])) ++j;
    const long doubled = static_cast<long>(i + 1 + j + 1);
    for (std::size_t k = i; k <= j; ++k) rank2[idx[k]] = doubled;
    i = j + 1;
  }
  long observed = 0, total = 0;
  for (std::size_t i = 0; i < m; ++i) {
    total += rank2[i];
    if (diffs[i] > 0) observed += rank2[i];
  }
  // Null distribution of W+ (doubled) over all 2^m sign patterns, as
  // probabilities to stay finite for large m.
  std::vector<double> dist(static_cast<std::size_t>(total) + 1, 0.0);
  dist[0] = 1.0;
  long reach = 0;
  for (std::size_t i = 0; i < m; ++i) {
    reach += rank2[i];
    for (long s = reach; s >= 0; --s) {
      const double with = s >= rank2[i] ? dist[s - rank2[i]] : 0.0;
      dist[s] = 0.5 * (dist[s] + with);
    }
  }
  double p = 0.0;
  for (long s = observed; s <= total; ++s) p += dist[s];
  return std::min(1.0, p);
}

ComparisonReport compare(const ExperimentConfig& config, const std::vector<std::uint64_t>& seeds,
                         const std::string& out_dir) {
  config.validate();
  if (seeds.size() < 5) throw ConfigError("compare needs at least 5 seeds");
  if (config.evaluator.type == EvaluatorType::kRandom) {
    throw ConfigError("compare needs a non-random evaluator for the search arm");
  }
  const auto search_eval = make_evaluator(config);
  const auto random_eval = std::make_shared<ConstantEvaluator>(config.evaluator.constant, search_eval);

  ComparisonReport report;
  report.seeds = seeds;
  report.early_generation = std::min(10, config.generations - 1);
  std::vector<double> search_final, random_final;
  std::string csv = "seed,generation,search_best,search_mean,random_best,random_mean\n";
  for (std::uint64_t seed : seeds) {
    Experiment search_arm(config, seed, search_eval);
    Experiment random_arm(config, seed, random_eval);
    while (!search_arm.finished()) {
      search_arm.step();
      random_arm.step();
    }
    const auto& s = search_arm.history();
    const auto& r = random_arm.history();
    for (std::size_t g = 0; g < s.size(); ++g) {
      csv += std::to_string(seed) + "," + std::to_string(g) + "," +
             format_double(s[g].best_fitness) + "," + format_double(s[g].mean_fitness) + "," +
             format_double(r[g].best_fitness) + "," + format_double(r[g].mean_fitness) + "\n";
    }
    search_final.push_back(s.back().best_fitness);
    random_final.push_back(r.back().best_fitness);
    if (s.back().best_fitness > r.back().best_fitness) ++report.final_best_wins;
    const auto e = static_cast<std::size_t>(report.early_generation);
    if (s[e].mean_fitness > r[e].best_fitness) ++report.early_mean_wins;
    report.search.push_back(s);
    report.random.push_back(r);
  }
  report.wilcoxon_p_value = wilcoxon_signed_rank_greater(search_final, random_final);

  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    write_file(fs::path(out_dir) / "compare.csv", csv);
    const json summary = {{"seeds", seeds},
                          {"generations", config.generations},
                          {"final_best_wins", report.final_best_wins},
                          {"early_generation", report.early_generation},
                          {"early_mean_wins", report.early_mean_wins},
                          {"wilcoxon_p_value", report.wilcoxon_p_value}};
    write_file(fs::path(out_dir) / "compare_summary.json", summary.dump(2) + "\n");
  }
  return report;
}

std::string export_best(const json& cp, ExportFormat format) {
  try {
    if (!cp.is_object() || cp.value("format", "") != "hnas-checkpoint") {
      throw CorruptCheckpoint("not an hnas checkpoint");
    }
    ModuleStore store;
    for (const json& entry : cp.at("modules")) {
      const ModuleDef def = module_from_json(entry.at("def"));
      if (def.id() != parse_id(entry.at("id"))) {
        throw CorruptCheckpoint("module id does not match its definition: " + entry["id"].dump());
      }
      store.insert(def);
    }
    const json& best = cp.at("best");
    if (best.is_null()) throw CorruptCheckpoint("checkpoint has no evaluated member yet");
    const ModuleDef* root = store.find(parse_id(best.at("root")));
    if (root == nullptr) throw CorruptCheckpoint("best module missing from checkpoint");
    const Resolver resolve = store.resolver();
    if (const ValidationResult r = validate_hierarchy(*root, resolve); !r) {
      throw CorruptCheckpoint("invalid best module: " + r.detail);
    }
    if (format == ExportFormat::kDot) return hierarchy_to_dot(*root, resolve);
    json out = hierarchy_to_json(*root, resolve);
    out["fitness"] = best.at("reported_fitness");
    return out.dump(2) + "\n";
  } catch (const json::exception& e) {
    throw CorruptCheckpoint(std::string("malformed checkpoint: ") + e.what());
  }
}

}  // namespace hnas
