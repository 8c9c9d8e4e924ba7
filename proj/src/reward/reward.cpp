#include "reward/reward.hpp"

#include <Eigen/Dense>
#include <cmath>
#include "json.hpp"

#include "netlist/canonical.hpp"
#include "reward/features.hpp"
#include "util/error.hpp"

namespace crl {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

double dot(const std::vector<double>& w, const std::vector<double>& x) {
  double s = 0;
  for (std::size_t i = 0; i < w.size(); ++i) s += w[i] * x[i];
  return s;
}

double sigmoid(double z) { return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z)); }

std::vector<double> to_std(const VectorXd& v) { return {v.data(), v.data() + v.size()}; }

VectorXd ridge(const MatrixXd& x, const VectorXd& y, double l2) {
  MatrixXd a = x.transpose() * x;
  a.diagonal().array() += l2 * static_cast<double>(x.rows());
  return a.ldlt().solve(x.transpose() * y);
}

VectorXd logistic(const MatrixXd& x, const VectorXd& y, double l2, int iters) {
  const double n = static_cast<double>(x.rows());
  VectorXd w = VectorXd::Zero(x.cols());
  for (int it = 0; it < iters; ++it) {
    VectorXd p = (x * w).unaryExpr([](double z) { return sigmoid(z); });
    VectorXd grad = x.transpose() * (y - p) - l2 * n * w;
    VectorXd s = (p.array() * (1 - p.array())).matrix();
    MatrixXd h = x.transpose() * s.asDiagonal() * x;
    h.diagonal().array() += l2 * n;
    VectorXd step = h.ldlt().solve(grad);
    w += step;
    if (step.norm() < 1e-10 * (1 + w.norm())) break;
  }
  return w;
}

}  // namespace

double reward(const Prompt& x, const Design& y, const RewardScores& scores) {
  (void)y;
  if (scores.s_valid < kValidityThreshold) return -1.0;
  bool met = false;
  if (x.category == Category::CE && x.eff_floor) met = scores.s_eff > *x.eff_floor;
  if (x.category == Category::CV && x.vout_bound)
    met = x.vout_bound->relation == Relation::Less ? scores.s_vout < x.vout_bound->volts
                                                   : scores.s_vout > x.vout_bound->volts;
  return met ? 1.0 : scores.s_eff;
}

LearnedParams train_learned(const std::vector<DatasetRecord>& records, const LearnedOptions& opts, double vin) {
  if (records.empty()) fail(ErrorCode::EmptyDataset, "no records to train estimators on");
  const auto dim = static_cast<Eigen::Index>(feature_count());
  const auto n = static_cast<Eigen::Index>(records.size());
  MatrixXd x(n, dim);
  VectorXd valid(n), eff(n);
  std::vector<Eigen::Index> valid_rows;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = records[static_cast<std::size_t>(i)];
    auto f = featurize(r.design, vin);
    x.row(i) = Eigen::Map<const VectorXd>(f.data(), dim);
    valid[i] = r.sim.valid ? 1.0 : 0.0;
    eff[i] = r.sim.valid ? r.sim.efficiency : 0.0;
    if (r.sim.valid) valid_rows.push_back(i);
  }
  LearnedParams p;
  p.feature_version = kFeatureVersion;
  p.validity = to_std(logistic(x, valid, opts.l2_validity, opts.newton_iters));
  p.efficiency = to_std(ridge(x, eff, opts.l2_regression));
  if (valid_rows.empty()) {
    p.vout.assign(static_cast<std::size_t>(dim), 0.0);
  } else {
    MatrixXd xv(static_cast<Eigen::Index>(valid_rows.size()), dim);
    VectorXd yv(xv.rows());
    for (Eigen::Index i = 0; i < xv.rows(); ++i) {
      xv.row(i) = x.row(valid_rows[static_cast<std::size_t>(i)]);
      yv[i] = records[static_cast<std::size_t>(valid_rows[static_cast<std::size_t>(i)])].sim.vout;
    }
    p.vout = to_std(ridge(xv, yv, opts.l2_regression));
  }
  SimConfig cfg;
  cfg.vin = vin;
  p.train_metrics = evaluate_estimator(Estimator::learned(p, cfg), records);
  return p;
}

Estimator Estimator::oracle(const SimConfig& cfg) {
  cfg.validate();
  return Estimator(Mode::Oracle, cfg);
}

Estimator Estimator::learned(LearnedParams params, const SimConfig& cfg) {
  if (params.feature_version != kFeatureVersion)
    fail(ErrorCode::VersionMismatch, "estimator features '" + params.feature_version + "' do not match '" +
                                         kFeatureVersion + "'");
  const auto dim = feature_count();
  if (params.validity.size() != dim || params.efficiency.size() != dim || params.vout.size() != dim)
    fail(ErrorCode::VersionMismatch, "estimator parameter length does not match the feature map");
  Estimator e(Mode::Learned, cfg);
  e.params_ = std::move(params);
  return e;
}

Estimator Estimator::untrained(const SimConfig& cfg) { return Estimator(Mode::Learned, cfg); }

SimResult Estimator::simulate_cached(const Design& d) const {
  const std::string key = canonical_key(d.netlist).bytes + "@" + d.duty.str();
  {
    std::lock_guard<std::mutex> lock(cache_->mu);
    auto it = cache_->results.find(key);
    if (it != cache_->results.end()) return it->second;
  }
  SimResult r = simulate(d, cfg_);
  std::lock_guard<std::mutex> lock(cache_->mu);
  cache_->results.emplace(key, r);
  return r;
}

RewardScores Estimator::learned_scores(const Design& d) const {
  if (!params_) fail(ErrorCode::UntrainedBackend, "learned estimator has no trained parameters");
  // Structurally broken designs never reach the simulator and are absent
  // from generated training data; score them as invalid outright.
  if (d.netlist.empty() || has_errors(structural_check(d.netlist))) return {0.0, 0.0, 0.0};
  const auto f = featurize(d, cfg_.vin);
  RewardScores s;
  s.s_valid = sigmoid(dot(params_->validity, f));
  s.s_eff = std::clamp(dot(params_->efficiency, f), 0.0, 1.0);
  s.s_vout = dot(params_->vout, f);
  return s;
}

double Estimator::estimate_validity(const Design& d) const { return score(d).s_valid; }
double Estimator::estimate_efficiency(const Design& d) const { return score(d).s_eff; }
double Estimator::estimate_vout(const Design& d) const { return score(d).s_vout; }

RewardScores Estimator::score(const Design& d) const {
  if (mode_ == Mode::Learned) return learned_scores(d);
  const SimResult r = simulate_cached(d);
  return {r.valid ? 1.0 : 0.0, r.valid ? r.efficiency : 0.0, r.vout};
}

EstimatorMetrics evaluate_estimator(const Estimator& e, const std::vector<DatasetRecord>& records) {
  EstimatorMetrics m;
  double tp = 0, fp = 0, fn = 0, correct = 0, se_eff = 0, se_vout = 0, n_valid = 0;
  for (const auto& r : records) {
    const auto s = e.score(r.design);
    const bool pred = s.s_valid >= kValidityThreshold;
    tp += pred && r.sim.valid;
    fp += pred && !r.sim.valid;
    fn += !pred && r.sim.valid;
    correct += pred == r.sim.valid;
    const double eff = r.sim.valid ? r.sim.efficiency : 0.0;
    se_eff += (s.s_eff - eff) * (s.s_eff - eff);
    if (r.sim.valid) {
      se_vout += (s.s_vout - r.sim.vout) * (s.s_vout - r.sim.vout);
      n_valid += 1;
    }
  }
  m.count = records.size();
  if (records.empty()) return m;
  m.validity_f1 = tp > 0 ? 2 * tp / (2 * tp + fp + fn) : 0.0;
  m.validity_accuracy = correct / static_cast<double>(records.size());
  m.efficiency_mse = se_eff / static_cast<double>(records.size());
  m.vout_mse = n_valid > 0 ? se_vout / n_valid : 0.0;
  return m;
}

std::string save_learned_json(const LearnedParams& p) {
  nlohmann::json j;
  j["feature_version"] = p.feature_version;
  j["feature_names"] = feature_names();
  j["validity"] = p.validity;
  j["efficiency"] = p.efficiency;
  j["vout"] = p.vout;
  j["train_metrics"] = {{"validity_f1", p.train_metrics.validity_f1},
                        {"validity_accuracy", p.train_metrics.validity_accuracy},
                        {"efficiency_mse", p.train_metrics.efficiency_mse},
                        {"vout_mse", p.train_metrics.vout_mse},
                        {"count", p.train_metrics.count}};
  return j.dump(2);
}

LearnedParams load_learned_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::MalformedSyntax, std::string("estimator JSON: ") + e.what());
  }
  LearnedParams p;
  try {
    p.feature_version = j.at("feature_version").get<std::string>();
    if (p.feature_version != kFeatureVersion)
      fail(ErrorCode::VersionMismatch, "estimator features '" + p.feature_version + "' do not match '" +
                                           kFeatureVersion + "'");
    p.validity = j.at("validity").get<std::vector<double>>();
    p.efficiency = j.at("efficiency").get<std::vector<double>>();
    p.vout = j.at("vout").get<std::vector<double>>();
    const auto& m = j.at("train_metrics");
    p.train_metrics.validity_f1 = m.at("validity_f1").get<double>();
    p.train_metrics.validity_accuracy = m.at("validity_accuracy").get<double>();
    p.train_metrics.efficiency_mse = m.at("efficiency_mse").get<double>();
    p.train_metrics.vout_mse = m.at("vout_mse").get<double>();
    p.train_metrics.count = m.at("count").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::MalformedSyntax, std::string("estimator JSON: ") + e.what());
  }
  return p;
}

}  // namespace crl
