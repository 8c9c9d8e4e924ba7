// Acceptance suite: one PASS/FAIL line per criterion. Exit status is nonzero
// when any criterion fails. Expected values come from independent oracles in
// this file or in oracles.hpp, never from the code under test.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <unordered_set>

#include "eval/eval.hpp"
#include "netlist/canonical.hpp"
#include "oracles.hpp"

using namespace crl;
using Clock = std::chrono::steady_clock;

namespace {

// ---- pinned tolerances and budgets ----
constexpr double kBuckVoutRelTol = 0.05;
constexpr double kBuckEffMin = 0.9;
constexpr double kBuckBudgetS = 2.0;
constexpr int kCanonNetlists = 1000;
constexpr int kCanonRelabelings = 20;
constexpr double kCanonBudgetS = 60.0;
constexpr double kSamplingTol = 0.03;
constexpr int kSamplingDraws = 10000;
constexpr double kSftNllReduction = 0.5;
constexpr double kMemorizeNll = 0.1;
constexpr double kRlMaGain = 0.1;
constexpr int kRlMaWindow = 200;
constexpr double kSigmaGainPp = 5.0;
constexpr double kRlBudgetS = 30 * 60.0;
constexpr double kIaEffFloor = 0.7;
constexpr double kGradRelTol = 1e-4;
constexpr double kF1Min = 0.85;
constexpr double kEffMseMax = 0.02;
constexpr double kVoutMseMax = 5e-2;

// ---- desk-scale pipeline settings ----
constexpr std::int64_t kTrainTopologies = 1000;
constexpr std::uint64_t kTrainSeed = 1;
constexpr std::int64_t kHeldTopologies = 300;
constexpr std::uint64_t kHeldSeed = 99;
constexpr int kHeldPrompts = 100;
constexpr int kSftEpochs = 10;
constexpr int kRlSteps = 600;
constexpr int kEvalSamples = 200;
constexpr int kFreshSamples = 100;

int failures = 0;

double since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

void report(int id, bool pass, const std::string& detail) {
  std::printf("[%s] criterion %2d: %s\n", pass ? "PASS" : "FAIL", id, detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

const char* kBuck = "[['FET-B-0','IN','1'],['FET-A-0','1','0'],['inductor-0','1','OUT'],['capacitor-0','OUT','0']]";

// 1. Canonical buck: vout = D * Vin, high efficiency.
void buck_oracle() {
  const SimConfig cfg;
  const auto n = parse_triple_list(kBuck);
  const auto t0 = Clock::now();
  bool ok = true;
  double worst_rel = 0.0, min_eff = 1.0;
  for (double d : Duty::kValues) {
    const auto r = simulate({n, Duty::from_value(d)}, cfg);
    const double target = d * cfg.vin;
    const double rel = std::abs(r.vout - target) / target;
    worst_rel = std::max(worst_rel, rel);
    min_eff = std::min(min_eff, r.efficiency);
    ok = ok && r.valid && rel <= kBuckVoutRelTol && r.efficiency > kBuckEffMin;
  }
  const double t = since(t0);
  report(1, ok && t < kBuckBudgetS,
         fmt("buck at 5 duties: worst |vout-D*Vin|/(D*Vin)=%.4f (<=%.2f), min efficiency=%.4f (>%.1f), %.2fs (<%.0fs)",
             worst_rel, kBuckVoutRelTol, min_eff, kBuckEffMin, t, kBuckBudgetS));
}

// 2. Canonical keys: relabel invariance and agreement with brute force.
void canonicalization() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(2024);
  std::int64_t equal = 0, total = 0;
  for (int i = 0; i < kCanonNetlists; ++i) {
    const int size = 4 + i % 3;
    // Alternate generator-valid topologies and arbitrary wirings.
    const auto n = i % 2 ? random_topology(size, rng) : oracle::random_netlist(rng, size, 6);
    const auto key = canonical_key(n);
    for (int k = 0; k < kCanonRelabelings; ++k) {
      ++total;
      if (canonical_key(oracle::random_relabel(rng, n)) == key) ++equal;
    }
  }
  // Exhaustive <=3-device space: the key partition equals the brute-force partition.
  const auto all = oracle::enumerate_small(3);
  std::map<CanonicalKey, std::set<oracle::BruteForm>> by_key;
  std::map<oracle::BruteForm, std::set<CanonicalKey>> by_form;
  for (const auto& n : all) {
    const auto key = canonical_key(n);
    const auto form = oracle::brute_force_form(n);
    by_key[key].insert(form);
    by_form[form].insert(key);
  }
  bool partition_equal = by_key.size() == by_form.size();
  for (const auto& [k, forms] : by_key) partition_equal = partition_equal && forms.size() == 1;
  for (const auto& [f, keys] : by_form) partition_equal = partition_equal && keys.size() == 1;
  const double t = since(t0);
  report(2, equal == total && partition_equal && t < kCanonBudgetS,
         fmt("relabel key equality %lld/%lld; exhaustive <=3-device space: %zu netlists, %zu key classes vs %zu "
             "brute-force classes, partitions %s; %.1fs (<%.0fs)",
             static_cast<long long>(equal), static_cast<long long>(total), all.size(), by_key.size(), by_form.size(),
             partition_equal ? "equal" : "differ", t, kCanonBudgetS));
}

// 3. Reward branch table against an independent statement of the rule.
void reward_table() {
  const auto n = parse_triple_list(kBuck);
  const Design y{n, Duty::from_value(0.5)};
  struct P {
    Prompt prompt;
    std::function<bool(double se, double sv)> met;  // constraint as written in the prompt
  };
  const std::vector<P> prompts = {
      {make_prompt(Category::C, n), [](double, double) { return false; }},
      {make_prompt(Category::CE, n, 0.6), [](double se, double) { return se > 0.6; }},
      {make_prompt(Category::CV, n, std::nullopt, VoutBound{Relation::Less, 1.5}, 2.0),
       [](double, double sv) { return sv < 1.5; }},
  };
  int cases = 0, agree = 0;
  bool edge_ok = true;
  for (const auto& p : prompts)
    for (double s_valid : {0.0, 0.59, 0.6, 0.61, 1.0})
      for (auto [s_eff, s_vout] : {std::pair{0.72, 1.0}, std::pair{0.45, 1.8}}) {
        const double expect = s_valid < 0.6 ? -1.0 : (p.met(s_eff, s_vout) ? 1.0 : s_eff);
        const double got = reward(p.prompt, y, {s_valid, s_eff, s_vout});
        ++cases;
        if (got == expect) ++agree;
        if (s_valid == 0.6 && got == -1.0) edge_ok = false;
      }
  report(3, cases == 30 && agree == cases && edge_ok,
         fmt("reward grid %d/%d cases agree with the reference rule; s_valid=0.6 treated as valid: %s", agree, cases,
             edge_ok ? "yes" : "no"));
}

// 4. DGR fixtures and SuccessRate@m monotonicity.
void dgr_and_success() {
  const bool fixtures = dgr(500, 500) == 1.0 && std::abs(dgr(645, 500) - 1.29) < 1e-12;
  std::mt19937_64 rng(8);
  bool monotone = true;
  for (int trial = 0; trial < 100; ++trial) {
    SuccessTable t;
    std::bernoulli_distribution hit(0.01 * trial);
    for (int i = 0; i < 30; ++i) {
      t.categories.push_back(static_cast<Category>(i % kNumCategories));
      std::vector<bool> row;
      for (int k = 0; k < 8; ++k) row.push_back(hit(rng));
      t.outcomes.push_back(row);
    }
    for (int m = 1; m < 8; ++m) monotone = monotone && success_rate_at(t, m) <= success_rate_at(t, m + 1);
  }
  report(4, fixtures && monotone,
         fmt("dgr(500,500)=%.2f, dgr(645,500)=%.2f; SuccessRate@m monotone on 100 fixed tables: %s", dgr(500, 500),
             dgr(645, 500), monotone ? "yes" : "no"));
}

// 5. Group-weighted sampling frequencies.
void weighted_sampling() {
  // Deliberately unequal group sizes: frequencies must follow the weights, not the sizes.
  std::vector<std::optional<Group>> groups;
  const std::array<int, kNumGroups> sizes = {300, 20, 90, 7};
  for (int g = 0; g < kNumGroups; ++g)
    for (int i = 0; i < sizes[static_cast<std::size_t>(g)]; ++i) groups.emplace_back(static_cast<Group>(g));
  for (int i = 0; i < 50; ++i) groups.emplace_back(std::nullopt);
  Rng rng(5);
  const auto idx = weighted_sample_indices(groups, kSamplingDraws, rng);
  std::array<double, kNumGroups> freq{};
  bool ungrouped = false;
  for (auto i : idx) {
    if (!groups[i]) ungrouped = true;
    else freq[static_cast<std::size_t>(*groups[i])] += 1.0 / kSamplingDraws;
  }
  const std::array<double, kNumGroups> want = {0.1, 0.25, 0.25, 0.4};
  double worst = 0.0;
  for (int g = 0; g < kNumGroups; ++g)
    worst = std::max(worst, std::abs(freq[static_cast<std::size_t>(g)] - want[static_cast<std::size_t>(g)]));
  report(5, worst <= kSamplingTol && !ungrouped && idx.size() == kSamplingDraws,
         fmt("10k draws: G1..G4 = %.4f %.4f %.4f %.4f, max deviation %.4f (<=%.2f)", freq[0], freq[1], freq[2], freq[3],
             worst, kSamplingTol));
}

// 9. Log-prob gradient against central finite differences.
void gradient_check() {
  std::mt19937_64 rng(99);
  const ModelShape shape{10, {6, 5}, 7};
  double worst = 0.0;
  for (int inst = 0; inst < 20; ++inst) {
    auto p = init_params(shape, 1000 + inst, 0.7);
    const auto ref = init_params(shape, 3000 + inst, 0.7);
    Trajectory t;
    const int steps = 1 + inst % 5;
    std::uniform_int_distribution<int> feat(0, shape.input_dim - 1), tok(0, shape.vocab - 1);
    std::uniform_real_distribution<double> val(-1.5, 1.5);
    for (int s = 0; s < steps; ++s) {
      Step st;
      for (int k = 0; k < 3; ++k) st.x.add(feat(rng), val(rng));
      st.mask.assign(static_cast<std::size_t>(shape.vocab), 0);
      for (auto& m : st.mask) m = std::bernoulli_distribution(0.7)(rng) ? 1 : 0;
      st.action = tok(rng);
      st.mask[static_cast<std::size_t>(st.action)] = 1;
      t.push_back(st);
    }
    std::vector<double> g(p.w.size(), 0.0), gk(p.w.size(), 0.0);
    trajectory_log_prob(p, t, &g);
    trajectory_kl(p, ref, t, &gk);
    double num = 0.0, den = 0.0, numk = 0.0, denk = 0.0;
    const double h = 1e-5;
    for (std::size_t i = 0; i < p.w.size(); ++i) {
      const double w0 = p.w[i];
      p.w[i] = w0 + h;
      const double up = trajectory_log_prob(p, t), kup = trajectory_kl(p, ref, t);
      p.w[i] = w0 - h;
      const double down = trajectory_log_prob(p, t), kdown = trajectory_kl(p, ref, t);
      p.w[i] = w0;
      const double fd = (up - down) / (2 * h), fdk = (kup - kdown) / (2 * h);
      num += (g[i] - fd) * (g[i] - fd);
      den += fd * fd;
      numk += (gk[i] - fdk) * (gk[i] - fdk);
      denk += fdk * fdk;
    }
    worst = std::max(worst, std::sqrt(num) / std::max(std::sqrt(den), 1e-12));
    worst = std::max(worst, std::sqrt(numk) / std::max(std::sqrt(denk), 1e-12));
  }
  report(9, worst <= kGradRelTol,
         fmt("20 random instances, log-prob and KL: worst ||g - g_fd|| / ||g_fd|| = %.2e (<=%.0e)", worst, kGradRelTol));
}

// Fraction of samples that are simulator-valid, and their mean efficiency
// with invalid samples counted as 0.
double mean_sampled_efficiency(const PolicyParams& p, const std::vector<Prompt>& prompts, const SampleConfig& cfg,
                               const Estimator& oracle, std::uint64_t seed) {
  Rng rng(seed);
  const auto gen = policy_generator(p, cfg);
  double total = 0.0;
  for (int i = 0; i < kFreshSamples; ++i) {
    const auto& x = prompts[static_cast<std::size_t>(i) % prompts.size()];
    const auto y = gen(x, rng);
    try {
      const auto [n, d] = detokenize(y);
      const auto r = oracle.simulate_cached({n, d});
      total += r.valid ? r.efficiency : 0.0;
    } catch (const std::exception&) {
      // Unparseable samples count as invalid.
    }
  }
  return total / kFreshSamples;
}

// 6, 7, 8, 10: the desk-scale training pipeline.
void pipeline() {
  const SimConfig sim;
  auto t0 = Clock::now();
  DatasetOptions train_opts;
  train_opts.per_size = kTrainTopologies;
  train_opts.seed = kTrainSeed;
  const auto train = build_dataset(train_opts, sim, nullptr);
  DatasetOptions held_opts = train_opts;
  held_opts.per_size = kHeldTopologies;
  held_opts.seed = kHeldSeed;
  // Held-out topologies never seen in training.
  std::unordered_set<std::string> seen;
  for (const auto& r : train) seen.insert(canonical_key(r.design.netlist).bytes);
  std::vector<DatasetRecord> held;
  for (auto& r : build_dataset(held_opts, sim, nullptr))
    if (!seen.count(canonical_key(r.design.netlist).bytes)) held.push_back(std::move(r));
  std::printf("  data: %zu training records, %zu held-out records (%.1fs)\n", train.size(), held.size(), since(t0));

  // 10. Learned estimator on held-out topologies.
  const auto oracle = Estimator::oracle(sim);
  const auto learned = Estimator::learned(train_learned(train), sim);
  const auto em = evaluate_estimator(learned, held);
  report(10, em.validity_f1 >= kF1Min && em.efficiency_mse <= kEffMseMax && em.vout_mse <= kVoutMseMax,
         fmt("held-out estimator: validity F1=%.4f (>=%.2f), efficiency MSE=%.5f (<=%.2f), vout MSE=%.5f (<=%.0e)",
             em.validity_f1, kF1Min, em.efficiency_mse, kEffMseMax, em.vout_mse, kVoutMseMax));

  // 6. SFT.
  TrainConfig cfg;
  cfg.sft_epochs = kSftEpochs;
  cfg.rl_steps = kRlSteps;
  const auto train_ex = sft_examples(train);
  const auto held_ex = sft_examples(held);
  const auto untrained = init_params(policy_shape(cfg.hidden), cfg.seed);
  const auto pipeline_start = Clock::now();
  t0 = Clock::now();
  const auto sft = sft_train(train_ex, cfg);
  const double sft_s = since(t0);
  const double nll0 = mean_token_nll(untrained, held_ex);
  const double nll1 = mean_token_nll(sft.policy, held_ex);

  std::vector<SftExample> ten(train_ex.begin(), train_ex.begin() + 10);
  for (auto& e : ten) e.group.reset();  // uniform minibatches over the ten
  TrainConfig mem = cfg;
  mem.sft_epochs = 300;
  mem.sft_batch = 10;
  mem.sft_lr = 3e-3;
  const double mem_nll = mean_token_nll(sft_train(ten, mem).policy, ten);
  report(6, nll1 <= (1.0 - kSftNllReduction) * nll0 && mem_nll < kMemorizeNll,
         fmt("held-out per-token NLL %.4f vs untrained %.4f (reduction %.1f%%, need >=%.0f%%); 10-example "
             "memorization NLL %.4f (<%.1f); SFT %.0fs",
             nll1, nll0, 100.0 * (1.0 - nll1 / nll0), 100.0 * kSftNllReduction, mem_nll, kMemorizeNll, sft_s));

  // 7. RL with the learned backend; the simulator adjudicates.
  std::vector<Prompt> prompts;
  for (const auto& r : train)
    if (r.group) prompts.push_back(r.prompt);
  t0 = Clock::now();
  const auto rl = rl_train(sft.policy, sft.reference, prompts, learned, oracle, cfg);
  const double rl_s = since(t0);
  t0 = Clock::now();
  std::vector<std::string> ia_log;
  const auto ia = iterative_adapt(rl.policy, sft.reference, prompts, learned, oracle, cfg,
                                  [&](const std::string& s) { ia_log.push_back(s); });
  const double ia_s = since(t0);
  const double pipeline_s = since(pipeline_start);

  double ma_start = 0.0, ma_end = 0.0;
  const int w = std::min<int>(kRlMaWindow, static_cast<int>(rl.metrics.size()));
  for (int i = 0; i < w; ++i) {
    ma_start += rl.metrics[static_cast<std::size_t>(i)].sim_reward_mean / w;
    ma_end += rl.metrics[rl.metrics.size() - 1 - static_cast<std::size_t>(i)].sim_reward_mean / w;
  }

  const auto eval_prompts = make_eval_prompts(held, kHeldPrompts, PromptMix{}, 5);
  EvalOptions eo;
  eo.samples = kEvalSamples;
  eo.seed = 11;
  const auto scfg = SampleConfig::from(cfg);
  const auto r_sft = evaluate(policy_generator(sft.policy, scfg), eval_prompts, learned, oracle, eo);
  const auto r_rl = evaluate(policy_generator(rl.policy, scfg), eval_prompts, learned, oracle, eo);
  const auto r_ia = evaluate(policy_generator(ia.policy, scfg), eval_prompts, learned, oracle, eo);
  for (const auto& [label, r] : {std::pair{"SFT", &r_sft}, std::pair{"RL", &r_rl}, std::pair{"RL+IA", &r_ia}})
    std::printf("  %-5s sigma(O)=%.1f C=%.1f CE=%.1f CV=%.1f @3=%.1f @5=%.1f DGR=%.3f e_valid_sim=%.3f "
                "e_eff_sim=%.3f e_valid_clf=%.3f\n",
                label, r->sigma.at("O"), r->sigma.at("C"), r->sigma.at("CE"), r->sigma.at("CV"),
                r->success_at_m.at(3), r->success_at_m.at(5), r->dgr, r->e_valid_sim, r->e_eff_sim, r->e_valid_clf);

  const bool a = ma_end - ma_start >= kRlMaGain;
  const bool b = r_rl.sigma.at("O") - r_sft.sigma.at("O") >= kSigmaGainPp;
  const bool c = r_ia.dgr <= r_sft.dgr;
  const bool budget = pipeline_s <= kRlBudgetS;
  report(7, a && b && c && budget,
         fmt("(a) %d-step MA of simulator reward %.3f -> %.3f (gain %.3f, need >=%.1f) %s; (b) sigma(O) SFT %.1f -> "
             "RL %.1f (gain %.1f pp, need >=%.0f) %s; (c) DGR RL+IA %.3f vs SFT %.3f %s; SFT+RL+IA %.0fs "
             "(SFT %.0fs, RL %.0fs, IA %.0fs; budget %.0fs)",
             w, ma_start, ma_end, ma_end - ma_start, kRlMaGain, a ? "ok" : "FAIL", r_sft.sigma.at("O"),
             r_rl.sigma.at("O"), r_rl.sigma.at("O") - r_sft.sigma.at("O"), kSigmaGainPp, b ? "ok" : "FAIL", r_ia.dgr,
             r_sft.dgr, c ? "ok" : "FAIL", pipeline_s, sft_s, rl_s, ia_s, kRlBudgetS));

  // 8. IA effect and filter soundness.
  const double eff_rl = mean_sampled_efficiency(rl.policy, eval_prompts, scfg, oracle, 4242);
  const double eff_ia = mean_sampled_efficiency(ia.policy, eval_prompts, scfg, oracle, 4242);
  double min_admitted = 1.0;
  int admitted = 0;
  for (const auto& round : ia.rounds) {
    admitted += round.kept;
    if (round.kept > 0) min_admitted = std::min(min_admitted, round.min_oracle_eff);
  }
  report(8, eff_rl < eff_ia && admitted > 0 && min_admitted > kIaEffFloor,
         fmt("mean oracle efficiency over %d fresh samples: without IA %.4f, with IA %.4f; %d admitted pool samples, "
             "min oracle efficiency %.4f (>%.1f)",
             kFreshSamples, eff_rl, eff_ia, admitted, min_admitted, kIaEffFloor));
}

}  // namespace

int main() {
  const auto t0 = Clock::now();
  buck_oracle();
  canonicalization();
  reward_table();
  dgr_and_success();
  weighted_sampling();
  gradient_check();
  pipeline();
  std::printf("acceptance: %d failing criteria, %.0fs total\n", failures, since(t0));
  return failures == 0 ? 0 : 1;
}
