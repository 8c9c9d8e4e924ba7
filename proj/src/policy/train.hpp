#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "gen/generator.hpp"
#include "policy/decoder.hpp"
#include "policy/model.hpp"
#include "reward/reward.hpp"

namespace crl {

struct TrainConfig {
  // RL (KL-penalized PPO).
  double eta = 0.1;
  double clip_eps = 0.2;
  double lr = 1e-4;
  int batch = 16;
  int ppo_epochs = 4;
  int rl_steps = 600;
  // Decoding.
  double nucleus_p = 0.9;
  int top_k = 40;
  int max_len = kMaxSequenceLength;
  // Iterative adaptation.
  int ia_iters = 3;
  int ia_pool = 500;
  double ia_eff_floor = 0.7;
  int ia_sample_factor = 8;  // candidate budget per round = factor * ia_pool
  int ia_passes = 1;         // PPO passes over each round's pool
  bool ia_refreeze = false;  // re-freeze the KL reference after each round
  bool ia_dedup = false;     // keep one pool entry per canonical key and duty
  // Supervised fine-tuning and model.
  double sft_lr = 1e-3;
  int sft_epochs = 20;
  int sft_batch = 32;
  std::vector<int> hidden = {96, 96};
  std::uint64_t seed = 0;

  void validate() const;  // throws InvalidInput
};

struct SampleConfig {
  double nucleus_p = 0.9;
  int top_k = 40;
  int max_len = kMaxSequenceLength;
  static SampleConfig from(const TrainConfig& c) { return {c.nucleus_p, c.top_k, c.max_len}; }
};

ModelShape policy_shape(const std::vector<int>& hidden);

// Masked distribution -> top_k -> smallest nucleus with mass >= nucleus_p
// (of the top-k renormalized mass) -> renormalized draw.
int sample_token(const StepEval& ev, const SampleConfig& cfg, Rng& rng);

struct Sample {
  TokenSequence tokens;
  Trajectory trajectory;
  std::vector<double> logp;  // per step, under the full masked distribution
};
Sample sample_rollout(const PolicyParams& p, const Prompt& x, const SampleConfig& cfg, Rng& rng);
TokenSequence sample_nucleus(const PolicyParams& p, const Prompt& x, const SampleConfig& cfg, std::uint64_t seed);

double log_prob(const PolicyParams& p, const Prompt& x, const TokenSequence& y);
double kl_estimate(const PolicyParams& p, const PolicyParams& ref, const Prompt& x, const TokenSequence& y);

// ---- supervised fine-tuning ----
struct SftExample {
  Prompt prompt;
  TokenSequence tokens;
  std::optional<Group> group;
};
std::vector<SftExample> sft_examples(const std::vector<DatasetRecord>& records);  // valid records only

double mean_token_nll(const PolicyParams& p, const std::vector<SftExample>& data);

struct SftResult {
  PolicyParams policy;
  PolicyParams reference;  // frozen copy of policy
  std::vector<double> epoch_loss;
};
// Minibatches are drawn by group weight when any example carries a group,
// uniformly otherwise. Throws EmptyDataset, Diverged.
SftResult sft_train(const std::vector<SftExample>& data, const TrainConfig& cfg,
                    const std::optional<PolicyParams>& init = std::nullopt);

// ---- PPO ----
struct Rollout {
  Trajectory trajectory;
  std::vector<double> old_logp;
  double reward = 0.0;
};
Rollout make_rollout(const PolicyParams& behaviour, const Prompt& x, const TokenSequence& y, double reward);

struct PpoStats {
  double kl_mean = 0.0;        // per sequence, before the update
  double clipped_fraction = 0.0;
  double baseline = 0.0;
};
// One clipped-surrogate update of p on -(A * ratio) + eta * KL(p || ref),
// A = reward - baseline (batch mean unless given). Tokens whose ratio lies
// outside [1 - clip_eps, 1 + clip_eps] contribute no surrogate gradient.
PpoStats ppo_step(PolicyParams& p, const PolicyParams& ref, const std::vector<Rollout>& rollouts,
                  const TrainConfig& cfg, Adam& opt, std::optional<double> baseline = std::nullopt);

// ---- RL loop ----
struct StepMetrics {
  int step = 0;
  double reward_mean = 0.0;      // training backend
  double sim_reward_mean = 0.0;  // simulator-adjudicated
  double kl_mean = 0.0;
  double validity = 0.0;         // simulator-valid fraction
  double efficiency = 0.0;       // mean simulator efficiency, invalid as 0
};
std::string metrics_csv(const std::vector<StepMetrics>& rows);

struct ScoredSample {
  Design design;
  RewardScores backend;
  SimResult sim;
  double reward = 0.0;
  double sim_reward = 0.0;
};
ScoredSample score_sample(const Prompt& x, const TokenSequence& y, const Estimator& backend, const Estimator& oracle);

struct RlResult {
  PolicyParams policy;
  std::vector<StepMetrics> metrics;
};
RlResult rl_train(PolicyParams policy, const PolicyParams& ref, const std::vector<Prompt>& prompts,
                  const Estimator& backend, const Estimator& oracle, const TrainConfig& cfg,
                  const std::function<void(const StepMetrics&)>& on_step = {});

struct IaRound {
  int candidates = 0;
  int kept = 0;
  bool starved = false;  // pool not filled within the candidate budget
  double min_oracle_eff = 0.0;
  double mean_reward = 0.0;  // over all candidates, training backend
};
struct IaResult {
  PolicyParams policy;
  PolicyParams reference;
  std::vector<IaRound> rounds;
  std::vector<StepMetrics> metrics;
};
// Keeps candidates with backend s_valid >= 0.6 and s_eff > ia_eff_floor that
// are also oracle-valid with oracle efficiency > ia_eff_floor (optionally one
// per canonical key and duty), then runs PPO passes over the pool with unit
// advantage per kept sample and the KL penalty to ref.
IaResult iterative_adapt(PolicyParams policy, PolicyParams ref, const std::vector<Prompt>& prompts,
                         const Estimator& backend, const Estimator& oracle, const TrainConfig& cfg,
                         const std::function<void(const std::string&)>& log = {});

// ---- checkpoints ----
struct Checkpoint {
  std::string phase;  // "sft", "rl", "ia"
  TrainConfig config;
  PolicyParams policy;
  PolicyParams reference;
};
std::string save_checkpoint_json(const Checkpoint& c);
Checkpoint load_checkpoint_json(const std::string& text);  // throws VersionMismatch, InvalidInput

}  // namespace crl
