#include "policy/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "json.hpp"
#include "netlist/canonical.hpp"
#include "util/error.hpp"

namespace crl {

namespace {

constexpr const char* kCheckpointFormat = "circuitrl-policy-v1";

void check_finite(const std::vector<double>& v, const char* what) {
  for (double x : v)
    if (!std::isfinite(x)) fail(ErrorCode::Diverged, std::string("non-finite ") + what);
}

}  // namespace

void TrainConfig::validate() const {
  auto need = [](bool ok, const char* msg) {
    if (!ok) fail(ErrorCode::InvalidInput, msg);
  };
  need(eta >= 0, "eta must be >= 0");
  need(clip_eps > 0 && clip_eps < 1, "clip_eps must lie in (0, 1)");
  need(nucleus_p > 0 && nucleus_p <= 1, "nucleus_p must lie in (0, 1]");
  need(top_k >= 1, "top_k must be >= 1");
  need(lr > 0 && sft_lr > 0, "learning rates must be positive");
  need(batch >= 1 && sft_batch >= 1, "batch sizes must be >= 1");
  need(ppo_epochs >= 1, "ppo_epochs must be >= 1");
  need(rl_steps >= 0 && sft_epochs >= 0 && ia_iters >= 0, "step counts must be >= 0");
  need(ia_pool >= 1 && ia_sample_factor >= 1 && ia_passes >= 1, "ia pool settings must be >= 1");
  need(ia_eff_floor >= 0 && ia_eff_floor < 1, "ia_eff_floor must lie in [0, 1)");
  need(max_len >= 1, "max_len must be >= 1");
  for (int h : hidden) need(h >= 1, "hidden widths must be >= 1");
}

ModelShape policy_shape(const std::vector<int>& hidden) { return {decoder_input_dim(), hidden, kVocabSize}; }

int sample_token(const StepEval& ev, const SampleConfig& cfg, Rng& rng) {
  std::vector<std::pair<double, int>> cand;
  for (std::size_t j = 0; j < ev.logp.size(); ++j)
    if (std::isfinite(ev.logp[j])) cand.emplace_back(std::exp(ev.logp[j]), static_cast<int>(j));
  if (cand.empty()) fail(ErrorCode::MalformedSequence, "no legal token to sample");
  std::stable_sort(cand.begin(), cand.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  if (static_cast<int>(cand.size()) > cfg.top_k) cand.resize(static_cast<std::size_t>(cfg.top_k));
  double mass = 0;
  for (const auto& c : cand) mass += c.first;
  if (cfg.nucleus_p < 1.0) {
    double cum = 0;
    std::size_t keep = 0;
    while (keep < cand.size()) {
      cum += cand[keep++].first / mass;
      if (cum >= cfg.nucleus_p) break;
    }
    cand.resize(keep);
    mass = 0;
    for (const auto& c : cand) mass += c.first;
  }
  const double u = std::uniform_real_distribution<double>(0.0, mass)(rng);
  double cum = 0;
  for (const auto& c : cand) {
    cum += c.first;
    if (u < cum) return c.second;
  }
  return cand.back().second;
}

Sample sample_rollout(const PolicyParams& p, const Prompt& x, const SampleConfig& cfg, Rng& rng) {
  Decoder dec(x);
  Sample s;
  StepEval ev;
  while (!dec.done()) {
    if (static_cast<int>(s.tokens.size()) >= cfg.max_len)
      fail(ErrorCode::Truncated, "sequence reached the length cap of " + std::to_string(cfg.max_len));
    Step step{dec.features(), dec.mask(), 0};
    forward(p, step.x, step.mask, ev);
    step.action = sample_token(ev, cfg, rng);
    s.logp.push_back(ev.logp[static_cast<std::size_t>(step.action)]);
    s.tokens.push_back(step.action);
    dec.advance(step.action);
    s.trajectory.push_back(std::move(step));
  }
  return s;
}

TokenSequence sample_nucleus(const PolicyParams& p, const Prompt& x, const SampleConfig& cfg, std::uint64_t seed) {
  Rng rng(seed);
  return sample_rollout(p, x, cfg, rng).tokens;
}

double log_prob(const PolicyParams& p, const Prompt& x, const TokenSequence& y) {
  return trajectory_log_prob(p, build_trajectory(x, y));
}

double kl_estimate(const PolicyParams& p, const PolicyParams& ref, const Prompt& x, const TokenSequence& y) {
  return trajectory_kl(p, ref, build_trajectory(x, y));
}

std::vector<SftExample> sft_examples(const std::vector<DatasetRecord>& records) {
  std::vector<SftExample> out;
  for (const auto& r : records)
    if (r.sim.valid) out.push_back({r.prompt, policy_sequence(r.design.netlist, r.design.duty), r.group});
  return out;
}

double mean_token_nll(const PolicyParams& p, const std::vector<SftExample>& data) {
  if (data.empty()) fail(ErrorCode::EmptyDataset, "no examples to score");
  double nll = 0;
  std::size_t tokens = 0;
  for (const auto& e : data) {
    nll -= log_prob(p, e.prompt, e.tokens);
    tokens += e.tokens.size();
  }
  return nll / static_cast<double>(tokens);
}

SftResult sft_train(const std::vector<SftExample>& data, const TrainConfig& cfg, const std::optional<PolicyParams>& init) {
  cfg.validate();
  if (data.empty()) fail(ErrorCode::EmptyDataset, "supervised fine-tuning needs at least one example");
  PolicyParams p = init ? *init : init_params(policy_shape(cfg.hidden), cfg.seed);
  if (p.shape != policy_shape(p.shape.hidden)) fail(ErrorCode::InvalidInput, "initial parameters have the wrong shape");
  Rng rng(cfg.seed ^ 0x5f7a1d3c9b2e4f61ULL);
  std::vector<std::optional<Group>> groups;
  bool grouped = false;
  for (const auto& e : data) {
    groups.push_back(e.group);
    grouped = grouped || e.group.has_value();
  }
  Adam opt(cfg.sft_lr);
  std::vector<double> grad(p.w.size());
  const auto batch = static_cast<std::size_t>(cfg.sft_batch);
  const std::size_t per_epoch = (data.size() + batch - 1) / batch;
  SftResult out;
  for (int epoch = 0; epoch < cfg.sft_epochs; ++epoch) {
    double epoch_nll = 0;
    std::size_t epoch_tokens = 0;
    for (std::size_t b = 0; b < per_epoch; ++b) {
      std::vector<std::size_t> idx;
      if (grouped) {
        idx = weighted_sample_indices(groups, batch, rng);
      } else {
        std::uniform_int_distribution<std::size_t> pick(0, data.size() - 1);
        for (std::size_t i = 0; i < batch; ++i) idx.push_back(pick(rng));
      }
      std::size_t tokens = 0;
      for (auto i : idx) tokens += data[i].tokens.size();
      std::fill(grad.begin(), grad.end(), 0.0);
      double nll = 0;
      for (auto i : idx) {
        // Descend on mean per-token NLL.
        nll -= trajectory_log_prob(p, build_trajectory(data[i].prompt, data[i].tokens), &grad,
                                   -1.0 / static_cast<double>(tokens));
      }
      if (!std::isfinite(nll)) fail(ErrorCode::Diverged, "non-finite training loss");
      check_finite(grad, "gradient");
      opt.step(p.w, grad);
      epoch_nll += nll;
      epoch_tokens += tokens;
    }
    out.epoch_loss.push_back(epoch_nll / static_cast<double>(epoch_tokens));
  }
  out.reference = p;
  out.policy = std::move(p);
  return out;
}

Rollout make_rollout(const PolicyParams& behaviour, const Prompt& x, const TokenSequence& y, double reward) {
  Rollout r{build_trajectory(x, y), {}, reward};
  StepEval ev;
  for (const auto& s : r.trajectory) {
    forward(behaviour, s.x, s.mask, ev);
    r.old_logp.push_back(ev.logp[static_cast<std::size_t>(s.action)]);
  }
  return r;
}

PpoStats ppo_step(PolicyParams& p, const PolicyParams& ref, const std::vector<Rollout>& rollouts, const TrainConfig& cfg,
                  Adam& opt, std::optional<double> baseline) {
  if (rollouts.empty()) fail(ErrorCode::InvalidInput, "ppo_step needs at least one rollout");
  if (p.shape != ref.shape) fail(ErrorCode::InvalidInput, "policy and reference shapes differ");
  PpoStats st;
  if (baseline) {
    st.baseline = *baseline;
  } else {
    for (const auto& r : rollouts) st.baseline += r.reward;
    st.baseline /= static_cast<double>(rollouts.size());
  }
  const double inv_b = 1.0 / static_cast<double>(rollouts.size());
  const double lo = 1.0 - cfg.clip_eps, hi = 1.0 + cfg.clip_eps;
  std::vector<double> grad(p.w.size(), 0.0), d;
  StepEval ep, er;
  std::size_t tokens = 0, clipped = 0;
  double kl_total = 0;
  for (const auto& r : rollouts) {
    if (r.old_logp.size() != r.trajectory.size()) fail(ErrorCode::InvalidInput, "rollout is missing old log-probs");
    const double adv = r.reward - st.baseline;
    for (std::size_t t = 0; t < r.trajectory.size(); ++t) {
      const auto& s = r.trajectory[t];
      const auto a = static_cast<std::size_t>(s.action);
      forward(p, s.x, s.mask, ep);
      forward(ref, s.x, s.mask, er);
      if (!s.mask[a]) fail(ErrorCode::MalformedSequence, "rollout action is masked");
      const double ratio = std::exp(ep.logp[a] - r.old_logp[t]);
      if (!std::isfinite(ratio)) fail(ErrorCode::Diverged, "non-finite importance ratio");
      const bool inside = ratio >= lo && ratio <= hi;
      ++tokens;
      if (!inside) ++clipped;
      double kl = 0;
      for (std::size_t j = 0; j < ep.logp.size(); ++j)
        if (s.mask[j]) kl += std::exp(ep.logp[j]) * (ep.logp[j] - er.logp[j]);
      kl_total += std::max(kl, 0.0);
      d.assign(ep.logp.size(), 0.0);
      for (std::size_t j = 0; j < d.size(); ++j) {
        if (!s.mask[j]) continue;
        const double pj = std::exp(ep.logp[j]);
        d[j] = cfg.eta * inv_b * pj * (ep.logp[j] - er.logp[j] - kl);
      }
      if (inside && adv != 0.0) {
        if (ratio < lo || ratio > hi) throw std::logic_error("PPO used an importance ratio outside the clip range");
        const double c = -adv * ratio * inv_b;
        for (std::size_t j = 0; j < d.size(); ++j)
          if (s.mask[j]) d[j] -= c * std::exp(ep.logp[j]);
        d[a] += c;
      }
      backward(p, s.x, ep, d, grad);
    }
  }
  check_finite(grad, "PPO gradient");
  opt.step(p.w, grad);
  check_finite(p.w, "parameters after PPO step");
  st.kl_mean = kl_total * inv_b;
  st.clipped_fraction = tokens ? static_cast<double>(clipped) / static_cast<double>(tokens) : 0.0;
  return st;
}

std::string metrics_csv(const std::vector<StepMetrics>& rows) {
  std::ostringstream os;
  os.precision(10);
  os << "step,reward_mean,sim_reward_mean,kl_mean,validity,efficiency\n";
  for (const auto& r : rows)
    os << r.step << ',' << r.reward_mean << ',' << r.sim_reward_mean << ',' << r.kl_mean << ',' << r.validity << ','
       << r.efficiency << '\n';
  return os.str();
}

ScoredSample score_sample(const Prompt& x, const TokenSequence& y, const Estimator& backend, const Estimator& oracle) {
  auto [netlist, duty] = detokenize(y);
  ScoredSample s;
  s.design = Design{std::move(netlist), duty};
  s.backend = backend.score(s.design);
  s.sim = oracle.simulate_cached(s.design);
  s.reward = reward(x, s.design, s.backend);
  s.sim_reward = reward(x, s.design, oracle.score(s.design));
  return s;
}

namespace {

struct Batch {
  std::vector<Rollout> rollouts;
  StepMetrics metrics;
};

Batch collect(const PolicyParams& p, const PolicyParams& ref, const std::vector<Prompt>& prompts,
              const Estimator& backend, const Estimator& oracle, const TrainConfig& cfg, Rng& rng) {
  Batch b;
  const auto sc = SampleConfig::from(cfg);
  std::uniform_int_distribution<std::size_t> pick(0, prompts.size() - 1);
  for (int i = 0; i < cfg.batch; ++i) {
    const auto& x = prompts[pick(rng)];
    auto s = sample_rollout(p, x, sc, rng);
    const auto scored = score_sample(x, s.tokens, backend, oracle);
    b.metrics.reward_mean += scored.reward;
    b.metrics.sim_reward_mean += scored.sim_reward;
    b.metrics.validity += scored.sim.valid ? 1.0 : 0.0;
    b.metrics.efficiency += scored.sim.valid ? scored.sim.efficiency : 0.0;
    b.metrics.kl_mean += trajectory_kl(p, ref, s.trajectory);
    b.rollouts.push_back({std::move(s.trajectory), std::move(s.logp), scored.reward});
  }
  const double n = cfg.batch;
  b.metrics.reward_mean /= n;
  b.metrics.sim_reward_mean /= n;
  b.metrics.validity /= n;
  b.metrics.efficiency /= n;
  b.metrics.kl_mean /= n;
  return b;
}

}  // namespace

RlResult rl_train(PolicyParams policy, const PolicyParams& ref, const std::vector<Prompt>& prompts,
                  const Estimator& backend, const Estimator& oracle, const TrainConfig& cfg,
                  const std::function<void(const StepMetrics&)>& on_step) {
  cfg.validate();
  if (prompts.empty()) fail(ErrorCode::EmptyPromptSet, "RL needs training prompts");
  Rng rng(cfg.seed ^ 0x2545f4914f6cdd1dULL);
  Adam opt(cfg.lr);
  RlResult out;
  for (int step = 1; step <= cfg.rl_steps; ++step) {
    auto b = collect(policy, ref, prompts, backend, oracle, cfg, rng);
    for (int e = 0; e < cfg.ppo_epochs; ++e) ppo_step(policy, ref, b.rollouts, cfg, opt);
    b.metrics.step = step;
    if (on_step) on_step(b.metrics);
    out.metrics.push_back(b.metrics);
  }
  out.policy = std::move(policy);
  return out;
}

IaResult iterative_adapt(PolicyParams policy, PolicyParams ref, const std::vector<Prompt>& prompts,
                         const Estimator& backend, const Estimator& oracle, const TrainConfig& cfg,
                         const std::function<void(const std::string&)>& log) {
  cfg.validate();
  IaResult out;
  if (cfg.ia_iters == 0) {
    out.policy = std::move(policy);
    out.reference = std::move(ref);
    return out;
  }
  if (prompts.empty()) fail(ErrorCode::EmptyPromptSet, "iterative adaptation needs prompts");
  Rng rng(cfg.seed ^ 0x7c3b9e1f5a2d8e47ULL);
  const auto sc = SampleConfig::from(cfg);
  std::uniform_int_distribution<std::size_t> pick(0, prompts.size() - 1);
  Adam opt(cfg.lr);
  for (int round = 0; round < cfg.ia_iters; ++round) {
    IaRound info;
    std::vector<std::pair<Prompt, TokenSequence>> pool;
    std::set<std::pair<std::string, int>> seen;
    double reward_sum = 0, sim_reward_sum = 0, valid_sum = 0, eff_sum = 0, kl_sum = 0;
    int updates = 0;
    double min_eff = 1.0;
    const int budget = cfg.ia_pool * cfg.ia_sample_factor;
    while (static_cast<int>(pool.size()) < cfg.ia_pool && info.candidates < budget) {
      const auto& x = prompts[pick(rng)];
      auto s = sample_rollout(policy, x, sc, rng);
      ++info.candidates;
      const auto scored = score_sample(x, s.tokens, backend, oracle);
      reward_sum += scored.reward;
      sim_reward_sum += scored.sim_reward;
      valid_sum += scored.sim.valid ? 1.0 : 0.0;
      eff_sum += scored.sim.valid ? scored.sim.efficiency : 0.0;
      const bool keep = scored.backend.s_valid >= kValidityThreshold && scored.backend.s_eff > cfg.ia_eff_floor &&
                        scored.sim.valid && scored.sim.efficiency > cfg.ia_eff_floor;
      if (!keep) continue;
      if (cfg.ia_dedup && !seen.insert({canonical_key(scored.design.netlist).bytes, scored.design.duty.index()}).second) continue;
      min_eff = std::min(min_eff, scored.sim.efficiency);
      pool.emplace_back(x, std::move(s.tokens));
    }
    info.kept = static_cast<int>(pool.size());
    info.starved = info.kept < cfg.ia_pool;
    info.min_oracle_eff = pool.empty() ? 0.0 : min_eff;
    info.mean_reward = reward_sum / std::max(1, info.candidates);
    if (log)
      log("ia round " + std::to_string(round + 1) + ": kept " + std::to_string(info.kept) + " of " +
          std::to_string(info.candidates) + " candidates" + (info.starved ? " (pool starvation)" : ""));
    // Filtered self-training: admission is the reward, so every kept sample
    // carries advantage 1. Negative advantages inside an all-good pool push
    // mass toward unseen, mostly invalid, sequences.
    std::vector<std::size_t> order(pool.size());
    std::iota(order.begin(), order.end(), 0);
    for (int pass = 0; pass < cfg.ia_passes && !pool.empty(); ++pass) {
      std::shuffle(order.begin(), order.end(), rng);
      for (std::size_t at = 0; at < order.size(); at += static_cast<std::size_t>(cfg.batch)) {
        std::vector<Rollout> batch;
        for (std::size_t k = at; k < std::min(order.size(), at + static_cast<std::size_t>(cfg.batch)); ++k)
          batch.push_back(make_rollout(policy, pool[order[k]].first, pool[order[k]].second, 1.0));
        for (int e = 0; e < cfg.ppo_epochs; ++e) {
          const auto st = ppo_step(policy, ref, batch, cfg, opt, 0.0);
          if (e == 0) {
            kl_sum += st.kl_mean;
            ++updates;
          }
        }
      }
    }
    // One row per round: candidate statistics and the mean pre-update KL.
    StepMetrics m;
    m.step = round + 1;
    m.reward_mean = info.mean_reward;
    m.sim_reward_mean = sim_reward_sum / std::max(1, info.candidates);
    m.validity = valid_sum / std::max(1, info.candidates);
    m.efficiency = eff_sum / std::max(1, info.candidates);
    m.kl_mean = updates ? kl_sum / updates : 0.0;
    out.metrics.push_back(m);
    if (cfg.ia_refreeze) ref = policy;
    out.rounds.push_back(info);
  }
  out.policy = std::move(policy);
  out.reference = std::move(ref);
  return out;
}

std::string save_checkpoint_json(const Checkpoint& c) {
  using nlohmann::json;
  const auto& k = c.config;
  json cfg = {{"eta", k.eta},
              {"clip_eps", k.clip_eps},
              {"lr", k.lr},
              {"batch", k.batch},
              {"ppo_epochs", k.ppo_epochs},
              {"rl_steps", k.rl_steps},
              {"nucleus_p", k.nucleus_p},
              {"top_k", k.top_k},
              {"max_len", k.max_len},
              {"ia_iters", k.ia_iters},
              {"ia_pool", k.ia_pool},
              {"ia_eff_floor", k.ia_eff_floor},
              {"ia_sample_factor", k.ia_sample_factor},
              {"ia_passes", k.ia_passes},
              {"ia_refreeze", k.ia_refreeze},
              {"ia_dedup", k.ia_dedup},
              {"sft_lr", k.sft_lr},
              {"sft_epochs", k.sft_epochs},
              {"sft_batch", k.sft_batch},
              {"hidden", k.hidden},
              {"seed", k.seed}};
  json j = {{"format", kCheckpointFormat},
            {"vocab_hash", vocab_hash()},
            {"input_dim", c.policy.shape.input_dim},
            {"hidden", c.policy.shape.hidden},
            {"vocab", c.policy.shape.vocab},
            {"phase", c.phase},
            {"config", cfg},
            {"policy", c.policy.w},
            {"reference", c.reference.w}};
  return j.dump();
}

Checkpoint load_checkpoint_json(const std::string& text) {
  using nlohmann::json;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorCode::InvalidInput, std::string("checkpoint is not JSON: ") + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != kCheckpointFormat)
      fail(ErrorCode::VersionMismatch, "unknown checkpoint format");
    if (j.at("vocab_hash").get<std::string>() != vocab_hash())
      fail(ErrorCode::VersionMismatch, "checkpoint vocabulary differs from this build");
    Checkpoint c;
    c.phase = j.at("phase").get<std::string>();
    const ModelShape shape{j.at("input_dim").get<int>(), j.at("hidden").get<std::vector<int>>(),
                           j.at("vocab").get<int>()};
    if (shape != policy_shape(shape.hidden))
      fail(ErrorCode::VersionMismatch, "checkpoint feature layout differs from this build");
    c.policy = {shape, j.at("policy").get<std::vector<double>>()};
    c.reference = {shape, j.at("reference").get<std::vector<double>>()};
    if (c.policy.w.size() != shape.param_count() || c.reference.w.size() != shape.param_count())
      fail(ErrorCode::InvalidInput, "checkpoint parameter count does not match its shape");
    const auto& g = j.at("config");
    auto& k = c.config;
    k.eta = g.at("eta");
    k.clip_eps = g.at("clip_eps");
    k.lr = g.at("lr");
    k.batch = g.at("batch");
    k.ppo_epochs = g.at("ppo_epochs");
    k.rl_steps = g.at("rl_steps");
    k.nucleus_p = g.at("nucleus_p");
    k.top_k = g.at("top_k");
    k.max_len = g.at("max_len");
    k.ia_iters = g.at("ia_iters");
    k.ia_pool = g.at("ia_pool");
    k.ia_eff_floor = g.at("ia_eff_floor");
    k.ia_sample_factor = g.at("ia_sample_factor");
    k.ia_passes = g.at("ia_passes");
    k.ia_refreeze = g.at("ia_refreeze");
    k.ia_dedup = g.at("ia_dedup");
    k.sft_lr = g.at("sft_lr");
    k.sft_epochs = g.at("sft_epochs");
    k.sft_batch = g.at("sft_batch");
    k.hidden = g.at("hidden").get<std::vector<int>>();
    k.seed = g.at("seed");
    return c;
  } catch (const json::exception& e) {
    fail(ErrorCode::InvalidInput, std::string("checkpoint is missing fields: ") + e.what());
  }
}

}  // namespace crl
