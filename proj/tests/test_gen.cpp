#include <algorithm>
#include <cctype>
#include <set>

#include "doctest.h"
#include "gen/generator.hpp"
#include "gen/prompt.hpp"
#include "netlist/canonical.hpp"
#include "util/error.hpp"

using namespace crl;

namespace {

// Drops whitespace and the separator before "representing", which the
// reference prompt rows use inconsistently.
std::string normalize(std::string s) {
  s.erase(std::remove_if(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); }), s.end());
  const std::string with_sep = ";representingdifferentnodes";
  for (auto at = s.find(with_sep); at != std::string::npos; at = s.find(with_sep))
    s.erase(at, 1);
  return s;
}

Device dev(const char* name) { return *Device::from_name(name); }

SimResult valid_sim(double eff, double vout) {
  SimResult r;
  r.valid = true;
  r.efficiency = eff;
  r.vout = vout;
  return r;
}

DatasetRecord record_in(Group g) {
  DatasetRecord r;
  r.group = g;
  r.sim = valid_sim(0.5, 1.0);
  return r;
}

}  // namespace

TEST_CASE("random_topology is deterministic and structurally clean") {
  const auto a = random_topology(4, 42);
  const auto b = random_topology(4, 42);
  CHECK(a == b);
  CHECK(a.size() == 4);
  CHECK_FALSE(has_errors(structural_check(a)));
  const auto counts = a.kind_counts();
  CHECK(counts[2] + counts[3] >= 1);
}

TEST_CASE("random_topology rejects sizes outside 4..10") {
  Rng rng(1);
  CHECK_THROWS_AS(random_topology(3, rng), Error);
  CHECK_THROWS_AS(random_topology(11, rng), Error);
}

TEST_CASE("random_topology: 10,000 draws at n=4 pass structural_check") {
  Rng rng(7);
  for (int i = 0; i < 10000; ++i) {
    const auto n = random_topology(4, rng);
    REQUIRE(n.size() == 4);
    REQUIRE_FALSE(has_errors(structural_check(n)));
    const auto c = n.kind_counts();
    REQUIRE(c[2] + c[3] >= 1);
  }
}

TEST_CASE("generate_unique returns distinct canonical keys") {
  const auto nets = generate_unique(4, 200, 3);
  REQUIRE(nets.size() == 200);
  std::set<CanonicalKey> keys;
  for (const auto& n : nets) keys.insert(canonical_key(n));
  CHECK(keys.size() == 200);
}

TEST_CASE("generate_unique reports SpaceExhausted with the discovered count") {
  SearchBudget small;
  small.max_draws = 2000;
  small.stall_draws = 1000;
  try {
    generate_unique(4, 1'000'000'000, 5, small);
    FAIL("expected SpaceExhausted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SpaceExhausted);
    CHECK(std::string(e.what()).find("unique") != std::string::npos);
  }
  const auto partial = search_unique(4, 1'000'000'000, 5, small);
  CHECK(partial.exhausted);
  CHECK(partial.draws <= small.max_draws);
  CHECK_FALSE(partial.netlists.empty());
}

TEST_CASE("sweep_duties yields the five duties in ascending order") {
  const auto n = random_topology(4, 9);
  const auto ds = sweep_duties(n);
  REQUIRE(ds.size() == 5);
  const std::array<double, 5> expect = {0.1, 0.3, 0.5, 0.7, 0.9};
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(ds[i].duty.value() == doctest::Approx(expect[i]));
    CHECK(ds[i].netlist == n);
  }
  std::size_t total = 0;
  for (const auto& m : generate_unique(4, 100, 11)) total += sweep_duties(m).size();
  CHECK(total == 500);
}

TEST_CASE("assign_group boundaries") {
  CHECK(assign_group(valid_sim(0.03, 1.0), 2.0) == Group::G1);
  CHECK(assign_group(valid_sim(0.049999, 1.0), 2.0) == Group::G1);
  CHECK(assign_group(valid_sim(0.05, 1.0), 2.0) == Group::G2);
  CHECK(assign_group(valid_sim(0.5, 1.0), 2.0) == Group::G2);
  CHECK(assign_group(valid_sim(0.7, 1.0), 2.0) == Group::G2);
  CHECK(assign_group(valid_sim(0.700001, 1.0), 2.0) == Group::G4);
  CHECK(assign_group(valid_sim(0.9, 1.0), 2.0) == Group::G4);
  CHECK(assign_group(valid_sim(0.9, 1.9), 2.0) == Group::G3);
  CHECK(assign_group(valid_sim(0.9, 2.1), 2.0) == Group::G3);
  CHECK(assign_group(valid_sim(0.9, 1.75), 2.0) == Group::G4);
  SimResult bad;
  CHECK_THROWS_AS(assign_group(bad, 2.0), Error);
}

TEST_CASE("weighted_sample frequencies, empty batch and degenerate pools") {
  std::vector<DatasetRecord> pool;
  for (int g = 0; g < kNumGroups; ++g)
    for (int i = 0; i < 25; ++i) pool.push_back(record_in(static_cast<Group>(g)));
  Rng rng(123);
  const auto draws = weighted_sample(pool, 10000, rng);
  std::array<int, kNumGroups> hist{};
  for (const auto& r : draws) ++hist[static_cast<std::size_t>(*r.group)];
  for (int g = 0; g < kNumGroups; ++g)
    CHECK(std::abs(hist[static_cast<std::size_t>(g)] / 10000.0 - kGroupWeights[static_cast<std::size_t>(g)]) <= 0.03);

  CHECK(weighted_sample(pool, 0, rng).empty());

  std::vector<DatasetRecord> only_g4(5, record_in(Group::G4));
  for (const auto& r : weighted_sample(only_g4, 200, rng)) CHECK(*r.group == Group::G4);

  std::vector<DatasetRecord> none(3);
  CHECK_THROWS_AS(weighted_sample(none, 1, rng), Error);
}

TEST_CASE("prompt rendering matches the reference rows") {
  Prompt c;
  c.category = Category::C;
  c.names = {dev("FET-A-2"), dev("FET-B-0"), dev("FET-A-1"), dev("FET-A-0")};
  CHECK(normalize(render_prompt(c)) ==
        normalize("Generate a 4-component circuit with n-type MOSFETs: FET-A-0, FET-A-1 and FET-A-2; and p-type "
                  "MOSFET: FET-B-0; representing different nodes: ['FET-A-2', 'FET-B-0', 'FET-A-1', 'FET-A-0']"));

  Prompt cv;
  cv.category = Category::CV;
  cv.names = {dev("capacitor-1"), dev("FET-A-0"), dev("capacitor-0"), dev("FET-B-0")};
  cv.vout_bound = VoutBound{Relation::Less, 1.5};
  cv.vin = 2.0;
  CHECK(normalize(render_prompt(cv)) ==
        normalize("Generate a 4-component circuit with capacitors: capacitor-0 and capacitor-1; n-type MOSFET: "
                  "FET-A-0; and p-type MOSFET: FET-B-0 representing different nodes: ['capacitor-1', 'FET-A-0', "
                  "'capacitor-0', 'FET-B-0'] with Vout less than 1.5V when Vin equals 2V"));

  Prompt ce;
  ce.category = Category::CE;
  ce.names = {dev("inductor-0"), dev("FET-A-0"), dev("FET-B-0"), dev("capacitor-0")};
  ce.eff_floor = 0.6;
  CHECK(normalize(render_prompt(ce)) ==
        normalize("Generate a 4-component circuit with inductor: inductor-0; n-type MOSFET: FET-A-0; p-type MOSFET: "
                  "FET-B-0; and capacitor: capacitor-0; representing different nodes: ['inductor-0', 'FET-A-0', "
                  "'FET-B-0', 'capacitor-0'] with efficiency greater than 0.6"));
}

TEST_CASE("validate_prompt rejects missing or foreign constraints") {
  Prompt empty;
  CHECK_THROWS_AS(validate_prompt(empty), Error);
  try {
    render_prompt(empty);
    FAIL("expected MissingConstraint");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MissingConstraint);
  }
  Prompt ce;
  ce.category = Category::CE;
  ce.names = {dev("FET-A-0")};
  CHECK_THROWS_AS(validate_prompt(ce), Error);
  ce.eff_floor = 0.5;
  CHECK_NOTHROW(validate_prompt(ce));
  ce.vin = 2.0;
  CHECK_THROWS_AS(validate_prompt(ce), Error);
  Prompt cv;
  cv.category = Category::CV;
  cv.names = {dev("FET-A-0")};
  cv.vout_bound = VoutBound{Relation::Greater, 1.0};
  CHECK_THROWS_AS(validate_prompt(cv), Error);
  cv.vin = 2.0;
  CHECK_NOTHROW(validate_prompt(cv));
}

TEST_CASE("prompt rendering is injective over category, pool and constraint") {
  std::set<std::string> texts;
  std::size_t count = 0;
  const std::vector<std::vector<Device>> pools = {
      {dev("FET-A-0"), dev("capacitor-0")},
      {dev("capacitor-0"), dev("FET-A-0")},
      {dev("FET-B-0"), dev("capacitor-0")},
      {dev("FET-A-0"), dev("capacitor-0"), dev("inductor-0")},
      {dev("FET-A-0"), dev("FET-A-1")},
  };
  for (const auto& names : pools) {
    Prompt c{Category::C, names, std::nullopt, std::nullopt, std::nullopt};
    texts.insert(render_prompt(c));
    ++count;
    for (double f : kEffFloors) {
      Prompt p{Category::CE, names, f, std::nullopt, std::nullopt};
      texts.insert(render_prompt(p));
      ++count;
    }
    for (double v : kVoutGrid)
      for (auto rel : {Relation::Less, Relation::Greater}) {
        Prompt p{Category::CV, names, std::nullopt, VoutBound{rel, v}, 2.0};
        texts.insert(render_prompt(p));
        ++count;
      }
  }
  CHECK(texts.size() == count);
}

TEST_CASE("prompt_satisfied checks the pool and strict constraints") {
  const auto buck = parse_triple_list(
      "[['FET-B-0','IN','1'],['FET-A-0','1','0'],['inductor-0','1','OUT'],['capacitor-0','OUT','0']]");
  Design d{buck, Duty::from_value(0.5)};
  auto p = make_prompt(Category::CE, buck, 0.6);
  CHECK(prompt_satisfied(p, d, valid_sim(0.95, 1.0)));
  CHECK_FALSE(prompt_satisfied(p, d, valid_sim(0.6, 1.0)));
  auto cv = make_prompt(Category::CV, buck, std::nullopt, VoutBound{Relation::Less, 1.5}, 2.0);
  CHECK(prompt_satisfied(cv, d, valid_sim(0.95, 1.0)));
  CHECK_FALSE(prompt_satisfied(cv, d, valid_sim(0.95, 1.8)));
  Prompt other{Category::C, {dev("capacitor-0"), dev("capacitor-1"), dev("FET-A-0"), dev("FET-B-0")}, {}, {}, {}};
  CHECK_FALSE(prompt_satisfied(other, d, valid_sim(0.95, 1.0)));
}

TEST_CASE("build_dataset: records, groups and prompts are consistent") {
  DatasetOptions o;
  o.per_size = 60;
  o.seed = 17;
  DatasetStats st;
  const auto recs = build_dataset(o, SimConfig{}, &st);
  REQUIRE(recs.size() == 300);
  CHECK(st.records == 300);
  std::int64_t grouped = 0;
  for (const auto& r : recs) {
    CHECK(r.group.has_value() == r.sim.valid);
    if (r.group) {
      CHECK(*r.group == assign_group(r.sim, 2.0));
      ++grouped;
    }
    CHECK(component_constraint_met(r.prompt, r.design.netlist));
    if (r.sim.valid) CHECK(value_constraint_met(r.prompt, r.sim));
    else CHECK(r.prompt.category == Category::C);
  }
  std::int64_t hist = 0;
  for (auto h : st.group_histogram) hist += h;
  CHECK(hist == grouped);
  CHECK(st.invalid == 300 - grouped);
  DatasetStats st2;
  const auto again = build_dataset(o, SimConfig{}, &st2);
  REQUIRE(again.size() == recs.size());
  for (std::size_t i = 0; i < recs.size(); ++i) CHECK(render_prompt(again[i].prompt) == render_prompt(recs[i].prompt));
}
