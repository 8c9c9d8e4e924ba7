#pragma once

#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "gen/generator.hpp"
#include "gen/prompt.hpp"
#include "sim/simulator.hpp"

namespace crl {

// Scores below this validity are treated as invalid designs.
inline constexpr double kValidityThreshold = 0.6;

struct RewardScores {
  double s_valid = 0.0;
  double s_eff = 0.0;
  double s_vout = 0.0;
};

// Reward: -1 below the validity threshold, 1 when the prompt's efficiency or
// vout constraint is met by the scores, otherwise s_eff.
double reward(const Prompt& x, const Design& y, const RewardScores& scores);

struct EstimatorMetrics {
  double validity_f1 = 0.0;
  double validity_accuracy = 0.0;
  double efficiency_mse = 0.0;
  double vout_mse = 0.0;  // over oracle-valid designs
  std::size_t count = 0;
};

struct LearnedParams {
  std::vector<double> validity;    // logistic weights
  std::vector<double> efficiency;  // linear weights, output clamped to [0, 1]
  std::vector<double> vout;        // linear weights
  EstimatorMetrics train_metrics;
  std::string feature_version;
};

struct LearnedOptions {
  double l2_validity = 1e-4;
  double l2_regression = 1e-2;
  int newton_iters = 50;
};

// Fits the learned backend on simulated records. Throws EmptyDataset.
LearnedParams train_learned(const std::vector<DatasetRecord>& records, const LearnedOptions& opts = {},
                            double vin = 2.0);

class Estimator {
 public:
  enum class Mode { Oracle, Learned };

  static Estimator oracle(const SimConfig& cfg);
  static Estimator learned(LearnedParams params, const SimConfig& cfg);
  // An estimator in Learned mode without parameters; scoring throws UntrainedBackend.
  static Estimator untrained(const SimConfig& cfg);

  Mode mode() const { return mode_; }
  const SimConfig& sim_config() const { return cfg_; }
  const std::optional<LearnedParams>& params() const { return params_; }

  double estimate_validity(const Design& d) const;
  double estimate_efficiency(const Design& d) const;
  double estimate_vout(const Design& d) const;
  RewardScores score(const Design& d) const;

  // Oracle simulation with a cache keyed by canonical key and duty.
  SimResult simulate_cached(const Design& d) const;

 private:
  Estimator(Mode m, const SimConfig& cfg) : mode_(m), cfg_(cfg), cache_(std::make_shared<Cache>()) {}
  RewardScores learned_scores(const Design& d) const;

  struct Cache {
    std::mutex mu;
    std::unordered_map<std::string, SimResult> results;
  };
  Mode mode_;
  SimConfig cfg_;
  std::optional<LearnedParams> params_;
  std::shared_ptr<Cache> cache_;
};

EstimatorMetrics evaluate_estimator(const Estimator& e, const std::vector<DatasetRecord>& records);

// JSON persistence with feature-version tag. load throws VersionMismatch.
std::string save_learned_json(const LearnedParams& p);
LearnedParams load_learned_json(const std::string& text);

}  // namespace crl
