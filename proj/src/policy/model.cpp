#include "policy/model.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "util/error.hpp"

namespace crl {

namespace {

// Layer l maps width(l) -> width(l+1). Layer 0 reads the sparse input and is
// stored row-per-input ([in][out]); later layers are stored [out][in].
// Biases follow each weight block. The last layer is linear, the rest tanh.
std::vector<int> widths(const ModelShape& s) {
  std::vector<int> w{s.input_dim};
  w.insert(w.end(), s.hidden.begin(), s.hidden.end());
  w.push_back(s.vocab);
  return w;
}

std::vector<std::size_t> layer_offsets(const ModelShape& s) {
  const auto w = widths(s);
  std::vector<std::size_t> off{0};
  for (std::size_t l = 0; l + 1 < w.size(); ++l)
    off.push_back(off.back() + static_cast<std::size_t>(w[l]) * static_cast<std::size_t>(w[l + 1]) +
                  static_cast<std::size_t>(w[l + 1]));
  return off;
}

double logsumexp_masked(const std::vector<double>& z, const Mask& mask) {
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < z.size(); ++j)
    if (mask[j]) mx = std::max(mx, z[j]);
  if (!std::isfinite(mx)) return mx;
  double s = 0;
  for (std::size_t j = 0; j < z.size(); ++j)
    if (mask[j]) s += std::exp(z[j] - mx);
  return mx + std::log(s);
}

}  // namespace

std::size_t ModelShape::param_count() const { return layer_offsets(*this).back(); }

PolicyParams init_params(const ModelShape& shape, std::uint64_t seed, double output_scale) {
  if (shape.input_dim <= 0 || shape.vocab <= 0) fail(ErrorCode::InvalidInput, "model shape needs input and vocabulary");
  for (int h : shape.hidden)
    if (h <= 0) fail(ErrorCode::InvalidInput, "hidden widths must be positive");
  PolicyParams p{shape, std::vector<double>(shape.param_count(), 0.0)};
  std::mt19937_64 rng(seed);
  const auto w = widths(shape);
  const auto off = layer_offsets(shape);
  for (std::size_t l = 0; l + 1 < w.size(); ++l) {
    const bool last = l + 2 == w.size();
    // Sparse inputs carry a few dozen active unit features.
    const double fan_in = l == 0 ? 32.0 : w[l];
    const double a = last ? output_scale : std::sqrt(3.0 / fan_in);
    std::uniform_real_distribution<double> u(-a, a);
    const std::size_t n = static_cast<std::size_t>(w[l]) * static_cast<std::size_t>(w[l + 1]);
    for (std::size_t i = 0; i < n; ++i) p.w[off[l] + i] = u(rng);
  }
  return p;
}

double StepEval::prob(int a) const { return std::exp(logp[static_cast<std::size_t>(a)]); }

void forward(const PolicyParams& p, const SparseInput& x, const Mask& mask, StepEval& out) {
  const auto w = widths(p.shape);
  const auto off = layer_offsets(p.shape);
  const std::size_t layers = w.size() - 1;
  out.h.resize(layers);
  for (std::size_t l = 0; l < layers; ++l) {
    const std::size_t in = static_cast<std::size_t>(w[l]), n = static_cast<std::size_t>(w[l + 1]);
    const double* W = p.w.data() + off[l];
    const double* b = W + in * n;
    auto& z = out.h[l];
    z.assign(b, b + n);
    if (l == 0) {
      for (std::size_t k = 0; k < x.index.size(); ++k) {
        const auto i = static_cast<std::size_t>(x.index[k]);
        if (i >= in) fail(ErrorCode::InvalidInput, "feature index outside the model input");
        const double* row = W + i * n;
        const double v = x.value[k];
        for (std::size_t j = 0; j < n; ++j) z[j] += v * row[j];
      }
    } else {
      const auto& prev = out.h[l - 1];
      for (std::size_t j = 0; j < n; ++j) {
        const double* row = W + j * in;
        double s = 0;
        for (std::size_t i = 0; i < in; ++i) s += row[i] * prev[i];
        z[j] += s;
      }
    }
    if (l + 1 < layers)
      for (auto& v : z) v = std::tanh(v);
  }
  const auto& logits = out.h.back();
  if (mask.size() != logits.size()) fail(ErrorCode::InvalidInput, "mask size differs from vocabulary");
  const double lse = logsumexp_masked(logits, mask);
  if (!std::isfinite(lse)) fail(ErrorCode::MalformedSequence, "no legal token at this step");
  out.logp.resize(logits.size());
  for (std::size_t j = 0; j < logits.size(); ++j)
    out.logp[j] = mask[j] ? logits[j] - lse : -std::numeric_limits<double>::infinity();
}

void backward(const PolicyParams& p, const SparseInput& x, const StepEval& ev, const std::vector<double>& dlogits,
              std::vector<double>& grad) {
  const auto w = widths(p.shape);
  const auto off = layer_offsets(p.shape);
  if (grad.size() != p.w.size()) grad.assign(p.w.size(), 0.0);
  std::vector<double> delta = dlogits, next;
  for (std::size_t l = w.size() - 1; l-- > 0;) {
    const std::size_t in = static_cast<std::size_t>(w[l]), n = static_cast<std::size_t>(w[l + 1]);
    const double* W = p.w.data() + off[l];
    double* gW = grad.data() + off[l];
    double* gb = gW + in * n;
    for (std::size_t j = 0; j < n; ++j) gb[j] += delta[j];
    if (l == 0) {
      for (std::size_t k = 0; k < x.index.size(); ++k) {
        double* row = gW + static_cast<std::size_t>(x.index[k]) * n;
        const double v = x.value[k];
        for (std::size_t j = 0; j < n; ++j) row[j] += v * delta[j];
      }
      break;
    }
    const auto& prev = ev.h[l - 1];
    next.assign(in, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      const double* row = W + j * in;
      double* grow = gW + j * in;
      const double d = delta[j];
      if (d == 0) continue;
      for (std::size_t i = 0; i < in; ++i) {
        grow[i] += d * prev[i];
        next[i] += d * row[i];
      }
    }
    for (std::size_t i = 0; i < in; ++i) next[i] *= 1.0 - prev[i] * prev[i];
    delta.swap(next);
  }
}

double trajectory_log_prob(const PolicyParams& p, const Trajectory& t, std::vector<double>* grad, double scale) {
  StepEval ev;
  std::vector<double> d;
  double total = 0;
  for (const auto& s : t) {
    forward(p, s.x, s.mask, ev);
    const auto a = static_cast<std::size_t>(s.action);
    if (a >= ev.logp.size() || !s.mask[a]) fail(ErrorCode::MalformedSequence, "action is masked at this step");
    total += ev.logp[a];
    if (grad) {
      d.assign(ev.logp.size(), 0.0);
      for (std::size_t j = 0; j < d.size(); ++j)
        if (s.mask[j]) d[j] = -scale * std::exp(ev.logp[j]);
      d[a] += scale;
      backward(p, s.x, ev, d, *grad);
    }
  }
  return total;
}

double trajectory_kl(const PolicyParams& p, const PolicyParams& ref, const Trajectory& t, std::vector<double>* grad,
                     double scale) {
  StepEval ep, er;
  std::vector<double> d;
  double total = 0;
  for (const auto& s : t) {
    forward(p, s.x, s.mask, ep);
    forward(ref, s.x, s.mask, er);
    double kl = 0;
    for (std::size_t j = 0; j < ep.logp.size(); ++j)
      if (s.mask[j]) kl += std::exp(ep.logp[j]) * (ep.logp[j] - er.logp[j]);
    kl = std::max(kl, 0.0);
    total += kl;
    if (grad) {
      d.assign(ep.logp.size(), 0.0);
      for (std::size_t j = 0; j < d.size(); ++j)
        if (s.mask[j]) d[j] = scale * std::exp(ep.logp[j]) * (ep.logp[j] - er.logp[j] - kl);
      backward(p, s.x, ep, d, *grad);
    }
  }
  return total;
}

void Adam::step(std::vector<double>& w, const std::vector<double>& grad) {
  if (m_.size() != w.size()) {
    m_.assign(w.size(), 0.0);
    v_.assign(w.size(), 0.0);
    t_ = 0;
  }
  ++t_;
  const double c1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < w.size(); ++i) {
    m_[i] = b1_ * m_[i] + (1 - b1_) * grad[i];
    v_[i] = b2_ * v_[i] + (1 - b2_) * grad[i] * grad[i];
    w[i] -= lr_ * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps_);
  }
}

}  // namespace crl
