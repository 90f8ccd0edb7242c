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

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>

#include "doctest.h"
#include "hnas/error.hpp"
#include "hnas/registry.hpp"

using namespace hnas;

namespace {

std::vector<LayerOp> ops(int n, const std::string& prefix = "op") {
  std::vector<LayerOp> out;
  for (int i = 0; i < n; ++i) out.push_back({prefix + std::to_string(i), OpKind::kOther});
  return out;
}

ModuleId add(ListsState& s, const std::string& label) {
  return s.store().insert(ModuleDef::single_layer({label, OpKind::kOther}));
}

// Plain-vector model of the list rules, written without the library's maps.
struct Model {
  struct Entry {
    ModuleId id;
    double sum;
    int count;
    int ttl;
  };
  RegistryParams p;
  std::vector<Entry> notable, candidate;
  std::set<ModuleId> banned;
  int ttl_bans = 0, adjudication_bans = 0, promotions = 0, evictions = 0;

  static double avg(const Entry& e) { return e.sum / e.count; }

  Entry* find(std::vector<Entry>& v, const ModuleId& id) {
    for (Entry& e : v)
      if (e.id == id) return &e;
    return nullptr;
  }

  void record(const ModuleId& id, double f) {
    if (banned.count(id)) return;
    if (Entry* e = find(notable, id)) {
      e->sum += f;
      e->count++;
    } else if (Entry* c = find(candidate, id)) {
      c->sum += f;
      c->count++;
    } else {
      candidate.push_back({id, f, 1, p.base_ttl});
    }
  }

  int worst_index() const {
    int w = -1;
    for (int i = 0; i < static_cast<int>(notable.size()); ++i) {
      if (w < 0 || avg(notable[i]) < avg(notable[w]) ||
          (avg(notable[i]) == avg(notable[w]) && notable[i].id < notable[w].id))
        w = i;
    }
    return w;
  }

  void end_of_generation() {
    std::vector<Entry> ready, waiting;
    for (Entry e : candidate) {
      if (e.ttl > 0) e.ttl--;
      (e.count >= p.min_observations ? ready : waiting).push_back(e);
    }
    std::sort(ready.begin(), ready.end(), [](const Entry& a, const Entry& b) {
      if (avg(a) != avg(b)) return avg(a) > avg(b);
      return a.id < b.id;
    });
    for (const Entry& c : ready) {
      const int w = worst_index();
      const bool room = static_cast<int>(notable.size()) < p.notable_max;
      bool ok = w < 0 ? room : room ? avg(c) >= avg(notable[w]) : avg(c) > avg(notable[w]);
      if (!ok) {
        banned.insert(c.id);
        adjudication_bans++;
        continue;
      }
      if (!room) {
        banned.insert(notable[w].id);
        notable.erase(notable.begin() + w);
        evictions++;
      }
      notable.push_back({c.id, c.sum, c.count, 0});
      promotions++;
    }
    candidate.clear();
    for (const Entry& e : waiting) {
      if (e.ttl == 0) {
        banned.insert(e.id);
        ttl_bans++;
      } else {
        candidate.push_back(e);
      }
    }
  }
};

bool same(const Model& m, const ListsState& s, bool full_banned) {
  if (m.notable.size() != s.notable().size() || m.candidate.size() != s.candidate().size() ||
      m.banned.size() != s.banned().size() || (full_banned && m.banned != s.banned()))
    return false;
  for (const auto& e : m.notable) {
    const auto it = s.notable().find(e.id);
    if (it == s.notable().end() || it->second.fitness_sum != e.sum ||
        it->second.observation_count != e.count)
      return false;
  }
  for (const auto& e : m.candidate) {
    const auto it = s.candidate().find(e.id);
    if (it == s.candidate().end() || it->second.fitness_sum != e.sum ||
        it->second.observation_count != e.count || it->second.ttl_remaining != e.ttl)
      return false;
  }
  return true;
}

}  // namespace

TEST_CASE("initialize seeds one notable per layer") {
  const RegistryParams p;
  const ListsState fm = ListsState::initialize(ops(6), p);
  CHECK(fm.notable().size() == 6);
  CHECK(fm.candidate().empty());
  CHECK(fm.banned().empty());
  for (const auto& [id, r] : fm.notable()) {
    CHECK(r.observation_count == 1);
    CHECK(r.fitness_sum == p.prior_fitness);
    CHECK(fm.store().at(id).is_single_layer());
  }
  CHECK(ListsState::initialize(ops(3), p).notable().size() == 3);
  CHECK_THROWS_AS(ListsState::initialize({}, p), EmptyLayerSet);
  CHECK_THROWS_AS(ListsState::initialize(ops(11), p), ConfigError);
}

TEST_CASE("record_fitness examples") {
  ListsState s = ListsState::initialize(ops(2), RegistryParams{});
  const ModuleId fresh = add(s, "fresh");
  s.record_fitness(fresh, 0.8);
  REQUIRE(s.is_candidate(fresh));
  CHECK(s.candidate().at(fresh).fitness_sum == 0.8);
  CHECK(s.candidate().at(fresh).observation_count == 1);
  CHECK(s.candidate().at(fresh).ttl_remaining == 4);

  const ModuleId seed = s.notable().begin()->first;
  s.record_fitness(seed, 1.1);  // prior 0.5 + 1.1 = {1.6, 2}
  s.record_fitness(seed, 0.7);
  CHECK(s.notable().at(seed).fitness_sum == doctest::Approx(2.3).epsilon(1e-15));
  CHECK(s.notable().at(seed).observation_count == 3);
  CHECK(*s.notable().at(seed).average() == doctest::Approx(0.766666667).epsilon(1e-8));

  const ModuleId gone = add(s, "gone");
  s.restore(s.notable(), s.candidate(), {gone});
  const auto before_n = s.notable();
  const auto before_c = s.candidate();
  s.record_fitness(gone, 0.9);
  CHECK(s.is_banned(gone));
  CHECK_FALSE(s.is_candidate(gone));
  CHECK(s.candidate().size() == before_c.size());
  CHECK(s.notable().size() == before_n.size());
}

TEST_CASE("end_of_generation: promotion, eviction, ban and expiry") {
  RegistryParams p;
  SUBCASE("promoted over a worse notable with room") {
    ListsState s = ListsState::initialize(ops(3), p);
    const ModuleId c = add(s, "c");
    s.record_fitness(c, 0.9);
    s.record_fitness(c, 0.9);
    const auto v = s.end_of_generation();
    CHECK(s.is_notable(c));
    CHECK(v.promotions == std::vector<ModuleId>{c});
    CHECK(v.bans.empty());
    CHECK(s.notable().size() == 4);
  }
  SUBCASE("promotion into a full list evicts the worst") {
    ListsState s = ListsState::initialize(ops(10), p);
    // Lift every seed but one above 0.5.
    ModuleId worst;
    int k = 0;
    const auto seeds = s.notable();
    for (const auto& [id, r] : seeds) {
      if (k++ == 4) {
        worst = id;
        continue;
      }
      s.record_fitness(id, 0.7);
    }
    const ModuleId c = add(s, "c");
    s.record_fitness(c, 0.9);
    s.record_fitness(c, 0.9);
    const auto v = s.end_of_generation();
    CHECK(s.is_notable(c));
    CHECK(s.is_banned(worst));
    CHECK(s.notable().size() == 10);
    CHECK(v.bans == std::vector<ModuleId>{worst});
  }
  SUBCASE("below the worst notable is banned") {
    ListsState s = ListsState::initialize(ops(3), p);
    const ModuleId c = add(s, "c");
    s.record_fitness(c, 0.4);
    s.record_fitness(c, 0.4);
    s.end_of_generation();
    CHECK(s.is_banned(c));
    CHECK(s.notable().size() == 3);
  }
  SUBCASE("tie with the worst is banned when the list is full") {
    ListsState s = ListsState::initialize(ops(10), p);
    const ModuleId c = add(s, "c");
    s.record_fitness(c, 0.5);
    s.record_fitness(c, 0.5);
    s.end_of_generation();
    CHECK(s.is_banned(c));
  }
  SUBCASE("tie with the worst is promoted while there is room") {
    ListsState s = ListsState::initialize(ops(3), p);
    const ModuleId c = add(s, "c");
    s.record_fitness(c, 0.5);
    s.record_fitness(c, 0.5);
    s.end_of_generation();
    CHECK(s.is_notable(c));
  }
  SUBCASE("one observation and ttl 1 expires") {
    ListsState s = ListsState::initialize(ops(3), p);
    const ModuleId c = add(s, "c");
    s.record_fitness(c, 0.99);
    auto cand = s.candidate();
    cand[c].ttl_remaining = 1;
    s.restore(s.notable(), cand, s.banned());
    s.end_of_generation();
    CHECK(s.is_banned(c));
  }
  SUBCASE("ttl counts down once per generation") {
    ListsState s = ListsState::initialize(ops(3), p);
    const ModuleId c = add(s, "c");
    s.record_fitness(c, 0.99);
    for (int g = 1; g < p.base_ttl; ++g) {
      s.end_of_generation();
      REQUIRE(s.is_candidate(c));
      CHECK(s.candidate().at(c).ttl_remaining == p.base_ttl - g);
    }
    s.end_of_generation();
    CHECK(s.is_banned(c));
  }
  SUBCASE("no candidates leaves notable and banned unchanged") {
    ListsState s = ListsState::initialize(ops(5), p);
    const auto n = s.notable();
    const auto b = s.banned();
    const auto v = s.end_of_generation();
    CHECK(v.promotions.empty());
    CHECK(v.bans.empty());
    CHECK(s.notable().size() == n.size());
    CHECK(s.banned() == b);
  }
}

TEST_CASE("worst_notable") {
  ListsState s(RegistryParams{});
  CHECK_FALSE(s.worst_notable().has_value());
  const ModuleId a = add(s, "a"), b = add(s, "b"), c = add(s, "c");
  s.restore({{a, {0.9, 1, 0}}, {b, {0.5, 1, 0}}, {c, {0.7, 1, 0}}}, {}, {});
  REQUIRE(s.worst_notable().has_value());
  CHECK(s.worst_notable()->first == b);
  CHECK(s.worst_notable()->second == 0.5);

  s.restore({{a, {0.5, 1, 0}}, {b, {0.5, 1, 0}}}, {}, {});
  CHECK(s.worst_notable()->first == std::min(a, b));
}

TEST_CASE("sample_notables") {
  Rng rng(3);
  ListsState empty(RegistryParams{});
  CHECK_THROWS_AS(empty.sample_notables(1, rng), EmptyNotableList);

  ListsState one(RegistryParams{});
  const ModuleId x = add(one, "x");
  one.restore({{x, {0.3, 1, 0}}}, {}, {});
  CHECK(one.sample_notables(3, rng) == std::vector<ModuleId>{x, x, x});

  ListsState two(RegistryParams{});
  const ModuleId a = add(two, "a"), b = add(two, "b");
  two.restore({{a, {0.75, 1, 0}}, {b, {0.25, 1, 0}}}, {}, {});
  int hits = 0;
  for (const ModuleId& id : two.sample_notables(10000, rng)) hits += id == a;
  CHECK(std::abs(hits / 10000.0 - 0.75) <= 0.02);

  // Zero and negative averages keep the floor weight.
  ListsState floor(RegistryParams{});
  const ModuleId z = add(floor, "z"), n = add(floor, "n");
  floor.restore({{z, {0.0, 1, 0}}, {n, {-2.0, 1, 0}}}, {}, {});
  std::set<ModuleId> seen;
  for (const ModuleId& id : floor.sample_notables(2000, rng)) seen.insert(id);
  CHECK(seen.size() == 2);
}

TEST_CASE("sample_notables is uniform for equal averages") {
  Rng rng(99);
  ListsState s = ListsState::initialize(ops(10), RegistryParams{});
  std::map<ModuleId, int> counts;
  const int draws = 100000;
  for (const ModuleId& id : s.sample_notables(draws, rng)) counts[id]++;
  double chi2 = 0.0;
  const double expected = draws / 10.0;
  for (const auto& [id, c] : counts) chi2 += (c - expected) * (c - expected) / expected;
  // 9 degrees of freedom, upper 0.1% point.
  CHECK(chi2 < 27.877);
  CHECK(counts.size() == 10);
}

TEST_CASE("average does not drift over a million updates") {
  ListsState s = ListsState::initialize(ops(1), RegistryParams{});
  const ModuleId id = s.notable().begin()->first;
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  long double exact = 0.5L;
  for (int i = 0; i < 1000000; ++i) {
    const double f = u(gen);
    s.record_fitness(id, f);
    exact += f;
  }
  const FitnessRecord& r = s.notable().at(id);
  CHECK(r.observation_count == 1000001);
  const long double want = exact / 1000001.0L;
  CHECK(std::abs(static_cast<long double>(*r.average()) - want) / want < 1e-9L);
  CHECK(*r.average() == r.fitness_sum / r.observation_count);
}

TEST_CASE("random operation sequences match the reference model") {
  RegistryParams p;
  p.notable_max = 6;
  p.base_ttl = 3;
  std::mt19937_64 gen(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);

  ListsState s = ListsState::initialize(ops(4, "seed"), p);
  Model m{p, {}, {}, {}};
  for (const auto& [id, r] : s.notable()) m.notable.push_back({id, r.fitness_sum, 1, 0});
  std::set<ModuleId> seeds;
  for (const auto& [id, r] : s.notable()) seeds.insert(id);

  // Modules arrive continuously; observations favour recent arrivals, and
  // quality drifts upward so late modules can still displace notables.
  std::vector<ModuleId> pool(seeds.begin(), seeds.end());
  std::map<ModuleId, double> quality;
  for (const ModuleId& id : seeds) quality[id] = 0.5;
  std::normal_distribution<double> noise(0.0, 0.05);

  std::set<ModuleId> ever_banned;
  for (int events = 1; events <= 100000; ++events) {
    if (gen() % 12 == 0) {
      s.end_of_generation();
      m.end_of_generation();
    } else {
      if (pool.size() < 8 || gen() % 4 == 0) {
        const ModuleId id = add(s, "m" + std::to_string(pool.size()));
        quality[id] = u(gen) + events * 2e-5;
        pool.push_back(id);
      }
      const std::size_t window = std::min<std::size_t>(pool.size(), 12);
      const ModuleId id = pool[pool.size() - 1 - gen() % window];
      const double f = quality[id] + noise(gen);
      s.record_fitness(id, f);
      m.record(id, f);
    }
    REQUIRE(same(m, s, events % 100 == 0));
    REQUIRE_FALSE(s.check_invariants().has_value());
    for (const ModuleId& id : seeds) REQUIRE_FALSE(s.is_candidate(id));
    if (events % 100 == 0) {
      REQUIRE(std::includes(s.banned().begin(), s.banned().end(), ever_banned.begin(),
                            ever_banned.end()));
      ever_banned = s.banned();
    }
  }
  MESSAGE("promotions " << m.promotions << ", ttl bans " << m.ttl_bans << ", adjudication bans "
                        << m.adjudication_bans << ", evictions " << m.evictions);
  CHECK(m.promotions >= 100);
  CHECK(m.ttl_bans >= 100);
}
