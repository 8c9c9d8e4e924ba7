#include "eval/eval.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "json.hpp"
#include "netlist/canonical.hpp"
#include "util/error.hpp"

namespace crl {

namespace {

std::pair<std::string, int> design_key(const Design& d) { return {canonical_key(d.netlist).bytes, d.duty.index()}; }

}  // namespace

ExpectedScores expected_scores(const std::vector<Design>& samples, const Estimator& backend) {
  if (samples.empty()) fail(ErrorCode::EmptySampleSet, "no samples to score");
  std::set<std::pair<std::string, int>> seen;
  ExpectedScores out;
  for (const auto& d : samples) {
    if (!seen.insert(design_key(d)).second) fail(ErrorCode::InvalidInput, "samples are not pairwise unique");
    bool valid;
    double eff;
    if (backend.mode() == Estimator::Mode::Oracle) {
      const auto sim = backend.simulate_cached(d);
      valid = sim.valid;
      eff = sim.efficiency;
    } else {
      const auto s = backend.score(d);
      valid = s.s_valid >= kValidityThreshold;
      eff = s.s_eff;
    }
    out.e_valid += valid ? 1.0 : 0.0;
    out.e_eff += valid ? eff : 0.0;
  }
  out.e_valid /= static_cast<double>(samples.size());
  out.e_eff /= static_cast<double>(samples.size());
  return out;
}

double dgr(std::int64_t generated, std::int64_t unique) {
  if (unique < 1 || generated < unique)
    fail(ErrorCode::InvalidCounts, "need 1 <= unique <= generated, got " + std::to_string(generated) + "/" +
                                       std::to_string(unique));
  return static_cast<double>(generated) / static_cast<double>(unique);
}

bool success(const Prompt& prompt, const Design& d, const SimResult& sim) { return prompt_satisfied(prompt, d, sim); }

Generator policy_generator(const PolicyParams& p, const SampleConfig& cfg) {
  return [p, cfg](const Prompt& x, Rng& rng) { return sample_rollout(p, x, cfg, rng).tokens; };
}

SuccessTable success_table(const Generator& gen, const std::vector<Prompt>& prompts, int m, const Estimator& oracle,
                           std::uint64_t seed) {
  if (prompts.empty()) fail(ErrorCode::EmptyPromptSet, "no prompts to evaluate");
  if (m < 1) fail(ErrorCode::InvalidInput, "m must be >= 1");
  SuccessTable t;
  for (std::size_t i = 0; i < prompts.size(); ++i) {
    // One stream per prompt so the first k generations do not depend on m.
    Rng rng(seed + 0x9e3779b97f4a7c15ULL * (i + 1));
    t.categories.push_back(prompts[i].category);
    auto& row = t.outcomes.emplace_back();
    for (int k = 0; k < m; ++k) {
      bool ok = false;
      try {
        auto [n, d] = detokenize(gen(prompts[i], rng));
        Design design{std::move(n), d};
        ok = success(prompts[i], design, oracle.simulate_cached(design));
      } catch (const Error& e) {
        if (e.code() != ErrorCode::Truncated && e.code() != ErrorCode::MalformedSequence) throw;
      }
      row.push_back(ok);
    }
  }
  return t;
}

double success_rate_at(const SuccessTable& t, int m) {
  if (t.outcomes.empty()) fail(ErrorCode::EmptyPromptSet, "empty success table");
  std::size_t hits = 0;
  for (const auto& row : t.outcomes) {
    if (static_cast<int>(row.size()) < m) fail(ErrorCode::InvalidInput, "table has fewer than m generations");
    hits += std::any_of(row.begin(), row.begin() + m, [](bool b) { return b; }) ? 1 : 0;
  }
  return 100.0 * static_cast<double>(hits) / static_cast<double>(t.outcomes.size());
}

std::map<std::string, double> category_sigma(const SuccessTable& t, int m, const PromptMix& mix) {
  std::array<std::size_t, kNumCategories> total{}, hits{};
  for (std::size_t i = 0; i < t.outcomes.size(); ++i) {
    const auto c = static_cast<std::size_t>(t.categories[i]);
    const auto& row = t.outcomes[i];
    ++total[c];
    hits[c] += std::any_of(row.begin(), row.begin() + std::min<std::ptrdiff_t>(m, static_cast<std::ptrdiff_t>(row.size())),
                           [](bool b) { return b; })
                   ? 1
                   : 0;
  }
  std::map<std::string, double> out;
  double o = 0, wsum = 0;
  for (std::size_t c = 0; c < total.size(); ++c) {
    const double s = total[c] ? 100.0 * static_cast<double>(hits[c]) / static_cast<double>(total[c]) : 0.0;
    out[category_name(static_cast<Category>(c))] = s;
    if (total[c]) {
      o += mix.weights[c] * s;
      wsum += mix.weights[c];
    }
  }
  out["O"] = wsum > 0 ? o / wsum : 0.0;
  return out;
}

double success_rate(const Generator& gen, const std::vector<Prompt>& prompts, int m, const Estimator& oracle,
                    std::uint64_t seed) {
  return success_rate_at(success_table(gen, prompts, m, oracle, seed), m);
}

std::vector<Prompt> make_eval_prompts(const std::vector<DatasetRecord>& records, int count, const PromptMix& mix,
                                      std::uint64_t seed) {
  std::vector<const DatasetRecord*> valid, ce_ok;
  for (const auto& r : records) {
    if (!r.sim.valid) continue;
    valid.push_back(&r);
    if (r.sim.efficiency > kEffFloors.front()) ce_ok.push_back(&r);
  }
  if (valid.empty() || count < 1) fail(ErrorCode::EmptyPromptSet, "no valid records to build prompts from");
  Rng rng(seed);
  // Largest-remainder quotas.
  std::array<int, kNumCategories> quota{};
  double wsum = 0;
  for (double w : mix.weights) wsum += w;
  std::vector<std::pair<double, int>> rem;
  int assigned = 0;
  for (int c = 0; c < kNumCategories; ++c) {
    const double exact = count * mix.weights[static_cast<std::size_t>(c)] / wsum;
    quota[static_cast<std::size_t>(c)] = static_cast<int>(exact);
    assigned += quota[static_cast<std::size_t>(c)];
    rem.emplace_back(exact - static_cast<int>(exact), c);
  }
  std::stable_sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t i = 0; assigned < count; ++i, ++assigned) ++quota[static_cast<std::size_t>(rem[i].second)];
  if (ce_ok.empty()) {
    quota[static_cast<std::size_t>(Category::C)] += quota[static_cast<std::size_t>(Category::CE)];
    quota[static_cast<std::size_t>(Category::CE)] = 0;
  }
  std::vector<Prompt> out;
  auto pick = [&](const std::vector<const DatasetRecord*>& from) {
    return from[std::uniform_int_distribution<std::size_t>(0, from.size() - 1)(rng)];
  };
  for (int c = 0; c < kNumCategories; ++c) {
    for (int k = 0; k < quota[static_cast<std::size_t>(c)]; ++k) {
      const auto cat = static_cast<Category>(c);
      if (cat == Category::C) {
        out.push_back(make_prompt(cat, pick(valid)->design.netlist));
      } else if (cat == Category::CE) {
        const auto* r = pick(ce_ok);
        std::vector<double> floors;
        for (double f : kEffFloors)
          if (r->sim.efficiency > f) floors.push_back(f);
        const double f = floors[std::uniform_int_distribution<std::size_t>(0, floors.size() - 1)(rng)];
        out.push_back(make_prompt(cat, r->design.netlist, f));
      } else {
        const auto* r = pick(valid);
        std::vector<VoutBound> bounds;
        for (double v : kVoutGrid) {
          if (r->sim.vout < v) bounds.push_back({Relation::Less, v});
          if (r->sim.vout > v) bounds.push_back({Relation::Greater, v});
        }
        if (bounds.empty()) {
          --k;
          continue;
        }
        const auto b = bounds[std::uniform_int_distribution<std::size_t>(0, bounds.size() - 1)(rng)];
        out.push_back(make_prompt(cat, r->design.netlist, std::nullopt, b, 2.0));
      }
    }
  }
  std::shuffle(out.begin(), out.end(), rng);
  return out;
}

EvalReport evaluate(const Generator& gen, const std::vector<Prompt>& prompts, const Estimator& learned,
                    const Estimator& oracle, const EvalOptions& opts) {
  if (prompts.empty()) fail(ErrorCode::EmptyPromptSet, "no prompts to evaluate");
  if (opts.samples < 1) fail(ErrorCode::InvalidInput, "samples must be >= 1");
  if (opts.ms.empty()) fail(ErrorCode::InvalidInput, "m list is empty");
  EvalReport r;
  Rng rng(opts.seed);
  std::set<std::string> topologies;
  std::set<std::pair<std::string, int>> seen;
  std::vector<Design> distinct;
  for (int i = 0; i < opts.samples; ++i) {
    const auto& x = prompts[static_cast<std::size_t>(i) % prompts.size()];
    auto [n, d] = detokenize(gen(x, rng));
    Design design{std::move(n), d};
    topologies.insert(canonical_key(design.netlist).bytes);
    if (seen.insert(design_key(design)).second) distinct.push_back(std::move(design));
  }
  r.sample_count = opts.samples;
  r.unique_count = static_cast<std::int64_t>(topologies.size());
  r.dgr = dgr(r.sample_count, r.unique_count);
  const auto clf = expected_scores(distinct, learned);
  const auto sim = expected_scores(distinct, oracle);
  r.e_valid_clf = clf.e_valid;
  r.e_eff_clf = clf.e_eff;
  r.e_valid_sim = sim.e_valid;
  r.e_eff_sim = sim.e_eff;
  const int max_m = *std::max_element(opts.ms.begin(), opts.ms.end());
  const auto table = success_table(gen, prompts, max_m, oracle, opts.seed ^ 0xa0761d6478bd642fULL);
  r.sigma = category_sigma(table, 1, opts.mix);
  for (int m : opts.ms) r.success_at_m[m] = success_rate_at(table, m);
  return r;
}

std::string eval_report_json(const EvalReport& r) {
  nlohmann::json j;
  j["e_valid_clf"] = r.e_valid_clf;
  j["e_valid_sim"] = r.e_valid_sim;
  j["e_eff_clf"] = r.e_eff_clf;
  j["e_eff_sim"] = r.e_eff_sim;
  j["dgr"] = r.dgr;
  j["sigma"] = r.sigma;
  nlohmann::json at = nlohmann::json::object();
  for (const auto& [m, v] : r.success_at_m) at[std::to_string(m)] = v;
  j["success_at_m"] = at;
  j["sample_count"] = r.sample_count;
  j["unique_count"] = r.unique_count;
  return j.dump(2);
}

std::string eval_report_csv_header() {
  return "label,e_valid_clf,e_valid_sim,e_eff_clf,e_eff_sim,dgr,sigma_C,sigma_CE,sigma_CV,sigma_O,success_at_m,"
         "sample_count,unique_count";
}

std::string eval_report_csv_row(const std::string& label, const EvalReport& r) {
  auto get = [&](const char* k) {
    auto it = r.sigma.find(k);
    return it == r.sigma.end() ? 0.0 : it->second;
  };
  std::ostringstream os;
  os.precision(10);
  os << label << ',' << r.e_valid_clf << ',' << r.e_valid_sim << ',' << r.e_eff_clf << ',' << r.e_eff_sim << ','
     << r.dgr << ',' << get("C") << ',' << get("CE") << ',' << get("CV") << ',' << get("O") << ',';
  bool first = true;
  for (const auto& [m, v] : r.success_at_m) {
    os << (first ? "" : ";") << m << '=' << v;
    first = false;
  }
  os << ',' << r.sample_count << ',' << r.unique_count;
  return os.str();
}

}  // namespace crl
