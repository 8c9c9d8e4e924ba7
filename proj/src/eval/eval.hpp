#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "gen/generator.hpp"
#include "policy/train.hpp"
#include "reward/reward.hpp"

namespace crl {

struct ExpectedScores {
  double e_valid = 0.0;
  double e_eff = 0.0;
};
// Samples must be pairwise distinct by canonical key and duty. Invalid designs
// (oracle-invalid, or s_valid < 0.6 for the learned backend) contribute 0
// efficiency. Throws EmptySampleSet, InvalidInput on duplicates.
ExpectedScores expected_scores(const std::vector<Design>& samples, const Estimator& backend);

// generated / unique. Throws InvalidCounts unless 1 <= unique <= generated.
double dgr(std::int64_t generated, std::int64_t unique);

bool success(const Prompt& prompt, const Design& d, const SimResult& sim);

// Produces one token sequence for a prompt.
using Generator = std::function<TokenSequence(const Prompt&, Rng&)>;
Generator policy_generator(const PolicyParams& p, const SampleConfig& cfg);

// outcomes[i][k]: whether the k-th generation for prompt i succeeded.
struct SuccessTable {
  std::vector<Category> categories;
  std::vector<std::vector<bool>> outcomes;
};
SuccessTable success_table(const Generator& gen, const std::vector<Prompt>& prompts, int m, const Estimator& oracle,
                           std::uint64_t seed);
// Percentage of prompts with any success among the first m generations.
double success_rate_at(const SuccessTable& t, int m);
// Per-category and overall sigma at m; O weights categories by the mix,
// renormalized over categories present.
std::map<std::string, double> category_sigma(const SuccessTable& t, int m, const PromptMix& mix = {});
double success_rate(const Generator& gen, const std::vector<Prompt>& prompts, int m, const Estimator& oracle,
                    std::uint64_t seed);

// Satisfiable prompts drawn from simulated records with exact category
// quotas from the mix: CE floors the target clears, CV bounds it meets.
std::vector<Prompt> make_eval_prompts(const std::vector<DatasetRecord>& records, int count, const PromptMix& mix,
                                      std::uint64_t seed);

struct EvalReport {
  double e_valid_clf = 0.0;
  double e_valid_sim = 0.0;
  double e_eff_clf = 0.0;
  double e_eff_sim = 0.0;
  double dgr = 1.0;
  std::map<std::string, double> sigma;    // C, CE, CV, O in percent
  std::map<int, double> success_at_m;     // percent
  std::int64_t sample_count = 0;
  std::int64_t unique_count = 0;
};

struct EvalOptions {
  int samples = 200;  // generations for DGR and expectation columns
  std::vector<int> ms = {1, 3, 5};
  std::uint64_t seed = 0;
  PromptMix mix;
};
// Draws opts.samples generations cycling over prompts for DGR (topology keys)
// and the expectation columns (distinct designs), then success rates.
EvalReport evaluate(const Generator& gen, const std::vector<Prompt>& prompts, const Estimator& learned,
                    const Estimator& oracle, const EvalOptions& opts);

std::string eval_report_json(const EvalReport& r);
std::string eval_report_csv_header();
std::string eval_report_csv_row(const std::string& label, const EvalReport& r);

}  // namespace crl
