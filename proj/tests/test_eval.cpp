#include <algorithm>
#include <random>

#include "doctest.h"
#include "eval/eval.hpp"
#include "json.hpp"
#include "util/error.hpp"

using namespace crl;

namespace {

const char* kBuck = "[['FET-B-0','IN','1'],['FET-A-0','1','0'],['inductor-0','1','OUT'],['capacitor-0','OUT','0']]";

template <class F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no crl::Error thrown");
  return ErrorCode::Io;
}

Design buck(double duty) { return {parse_triple_list(kBuck), Duty::from_value(duty)}; }

// Always emits the buck at D = 0.5.
Generator buck_generator() {
  return [](const Prompt&, Rng&) { return tokenize(parse_triple_list(kBuck), Duty::from_value(0.5)); };
}

}  // namespace

TEST_CASE("dgr fixtures") {
  CHECK(dgr(500, 500) == 1.0);
  CHECK(dgr(645, 500) == doctest::Approx(1.29));
  CHECK(code_of([] { dgr(10, 0); }) == ErrorCode::InvalidCounts);
  CHECK(code_of([] { dgr(10, 11); }) == ErrorCode::InvalidCounts);
  CHECK(code_of([] { dgr(0, 0); }) == ErrorCode::InvalidCounts);
}

TEST_CASE("expected_scores on oracle fixtures") {
  const auto oracle = Estimator::oracle(SimConfig{});
  const auto two = expected_scores({buck(0.5), buck(0.3)}, oracle);
  CHECK(two.e_valid == 1.0);
  CHECK(two.e_eff > 0.9);
  // One dangling (invalid) design halves validity and contributes 0 efficiency.
  const Design bad{parse_triple_list("[['FET-A-0','IN','OUT'],['capacitor-0','OUT','1']]"), Duty::from_value(0.5)};
  const auto half = expected_scores({buck(0.5), bad}, oracle);
  CHECK(half.e_valid == 0.5);
  CHECK(half.e_eff == doctest::Approx(oracle.simulate_cached(buck(0.5)).efficiency / 2));
  CHECK(code_of([&] { expected_scores({}, oracle); }) == ErrorCode::EmptySampleSet);
  CHECK(code_of([&] { expected_scores({buck(0.5), buck(0.5)}, oracle); }) == ErrorCode::InvalidInput);
}

TEST_CASE("success follows the prompt's constraints") {
  const auto y = buck(0.5);
  const auto sim = simulate(y, SimConfig{});
  CHECK(success(make_prompt(Category::C, y.netlist), y, sim));
  CHECK(success(make_prompt(Category::CE, y.netlist, 0.6), y, sim));
  CHECK(success(make_prompt(Category::CV, y.netlist, std::nullopt, VoutBound{Relation::Less, 1.5}, 2.0), y, sim));
  CHECK_FALSE(success(make_prompt(Category::CV, y.netlist, std::nullopt, VoutBound{Relation::Greater, 1.5}, 2.0), y, sim));
  const auto other = parse_triple_list("[['FET-B-0','IN','1'],['FET-A-0','1','0'],['inductor-0','1','OUT'],"
                                       "['capacitor-0','OUT','0'],['capacitor-1','IN','0']]");
  CHECK_FALSE(success(make_prompt(Category::C, other), y, sim));
}

TEST_CASE("SuccessRate@m is monotone in m on fixed tables") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    SuccessTable t;
    std::bernoulli_distribution hit(0.05 + 0.015 * trial);
    for (int i = 0; i < 40; ++i) {
      t.categories.push_back(static_cast<Category>(i % 3));
      std::vector<bool> row;
      for (int k = 0; k < 6; ++k) row.push_back(hit(rng));
      t.outcomes.push_back(row);
    }
    double prev = -1.0;
    for (int m = 1; m <= 6; ++m) {
      const double r = success_rate_at(t, m);
      CHECK(r >= prev);
      CHECK(r >= 0.0);
      CHECK(r <= 100.0);
      prev = r;
    }
  }
  SuccessTable t{{Category::C, Category::CE}, {{false, true}, {false, false}}};
  CHECK(success_rate_at(t, 1) == 0.0);
  CHECK(success_rate_at(t, 2) == 50.0);
}

TEST_CASE("category sigma weights by the mix and respects per-category bounds") {
  SuccessTable t{{Category::C, Category::CE, Category::CE, Category::CV},
                 {{true}, {true}, {false}, {false}}};
  const auto s = category_sigma(t, 1);
  CHECK(s.at("C") == 100.0);
  CHECK(s.at("CE") == 50.0);
  CHECK(s.at("CV") == 0.0);
  CHECK(s.at("O") == doctest::Approx(0.2 * 100 + 0.4 * 50 + 0.4 * 0));
  CHECK(s.at("O") >= 0.0);
  CHECK(s.at("O") <= 100.0);
  // Only C and CE present: weights renormalize to 1/3 and 2/3.
  SuccessTable u{{Category::C, Category::CE}, {{true}, {false}}};
  CHECK(category_sigma(u, 1).at("O") == doctest::Approx(100.0 / 3.0));
}

TEST_CASE("buck fixture generator satisfies every CE-0.6 buck prompt") {
  const auto oracle = Estimator::oracle(SimConfig{});
  std::vector<Prompt> prompts(10, make_prompt(Category::CE, parse_triple_list(kBuck), 0.6));
  CHECK(success_rate(buck_generator(), prompts, 1, oracle, 3) == 100.0);
  CHECK(code_of([&] { success_rate(buck_generator(), {}, 1, oracle, 3); }) == ErrorCode::EmptyPromptSet);
}

TEST_CASE("evaluation prompts follow exact quotas and are satisfiable") {
  DatasetOptions o;
  o.per_size = 120;
  o.seed = 5;
  const auto recs = build_dataset(o, SimConfig{}, nullptr);
  const auto prompts = make_eval_prompts(recs, 50, PromptMix{}, 9);
  REQUIRE(prompts.size() == 50);
  std::array<int, 3> count{};
  for (const auto& p : prompts) {
    REQUIRE_NOTHROW(validate_prompt(p));
    ++count[static_cast<std::size_t>(p.category)];
  }
  CHECK(count[0] == 10);
  CHECK(count[1] == 20);
  CHECK(count[2] == 20);
  CHECK(make_eval_prompts(recs, 50, PromptMix{}, 9) == prompts);
}

TEST_CASE("evaluate reports a fully duplicated fixture") {
  const auto oracle = Estimator::oracle(SimConfig{});
  std::vector<Prompt> prompts(4, make_prompt(Category::C, parse_triple_list(kBuck)));
  EvalOptions opts;
  opts.samples = 20;
  const auto r = evaluate(buck_generator(), prompts, oracle, oracle, opts);
  CHECK(r.sample_count == 20);
  CHECK(r.unique_count == 1);
  CHECK(r.dgr == 20.0);
  CHECK(r.e_valid_sim == 1.0);
  CHECK(r.success_at_m.at(1) == 100.0);
  const auto j = nlohmann::json::parse(eval_report_json(r));
  CHECK(j.at("dgr").get<double>() == 20.0);
  const auto header = eval_report_csv_header();
  const auto row = eval_report_csv_row("buck", r);
  CHECK(std::count(header.begin(), header.end(), ',') == std::count(row.begin(), row.end(), ','));
}
