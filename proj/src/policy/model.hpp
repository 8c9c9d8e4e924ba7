#pragma once

#include <cstdint>
#include <vector>

namespace crl {

// Sparse feature vector: parallel index/value lists.
struct SparseInput {
  std::vector<int> index;
  std::vector<double> value;
  void add(int i, double v = 1.0) {
    index.push_back(i);
    value.push_back(v);
  }
};

using Mask = std::vector<char>;  // 1 = legal, size = vocabulary

struct Step {
  SparseInput x;
  Mask mask;
  int action = 0;
};
using Trajectory = std::vector<Step>;

// Sparse input -> tanh hidden layers -> logits over the vocabulary.
struct ModelShape {
  int input_dim = 0;
  std::vector<int> hidden;
  int vocab = 0;

  std::size_t param_count() const;
  bool operator==(const ModelShape&) const = default;
};

struct PolicyParams {
  ModelShape shape;
  std::vector<double> w;
};

PolicyParams init_params(const ModelShape& shape, std::uint64_t seed, double output_scale = 0.01);

// Activations of one step. logp is -inf on masked tokens.
struct StepEval {
  std::vector<std::vector<double>> h;
  std::vector<double> logp;
  double prob(int a) const;
};

void forward(const PolicyParams& p, const SparseInput& x, const Mask& mask, StepEval& out);
// grad += d(sum_j dlogits[j] * logits[j]) / dw.
void backward(const PolicyParams& p, const SparseInput& x, const StepEval& ev, const std::vector<double>& dlogits,
              std::vector<double>& grad);

// Sum of per-step log-probabilities. With grad, accumulates scale * gradient.
// Throws MalformedSequence when an action is masked.
double trajectory_log_prob(const PolicyParams& p, const Trajectory& t, std::vector<double>* grad = nullptr,
                           double scale = 1.0);
// Sum over steps of the exact KL(p || ref) on the masked support. With grad,
// accumulates scale * dKL/dw for p only.
double trajectory_kl(const PolicyParams& p, const PolicyParams& ref, const Trajectory& t,
                     std::vector<double>* grad = nullptr, double scale = 1.0);

class Adam {
 public:
  explicit Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), b1_(beta1), b2_(beta2), eps_(eps) {}
  // Descends along grad.
  void step(std::vector<double>& w, const std::vector<double>& grad);
  double lr() const { return lr_; }
  void set_lr(double lr) { lr_ = lr; }

 private:
  double lr_, b1_, b2_, eps_;
  std::vector<double> m_, v_;
  std::int64_t t_ = 0;
};

}  // namespace crl
