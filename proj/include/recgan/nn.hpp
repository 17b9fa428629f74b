#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "recgan/rng.hpp"
#include "recgan/tensor.hpp"

namespace recgan {

// Named parameter block with its gradient accumulator. Backward passes
// accumulate (+=) into grad so blocks shared between network paths sum
// their gradients naturally.
template <typename T>
struct Param {
  std::string name;
  Tensor<T> value;
  Tensor<T> grad;
  bool trainable = true;

  Param() = default;
  Param(std::string n, std::vector<std::size_t> shape, bool train = true)
      : name(std::move(n)), value(shape), grad(std::move(shape)),
        trainable(train) {}

  void zero_grad() { grad.fill(T{0}); }
};

enum class Mode { Train, Infer };

// ---- matmul kernels ----

// y[m,n] (+)= x[m,k] * w[k,n]
template <typename T>
void matmul(const T* x, const T* w, T* y, std::size_t m, std::size_t k,
            std::size_t n, bool accumulate) {
  if (!accumulate)
    for (std::size_t i = 0; i < m * n; ++i) y[i] = T{0};
  for (std::size_t i = 0; i < m; ++i) {
    const T* xi = x + i * k;
    T* yi = y + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const T v = xi[p];
      if (v == T{0}) continue;
      const T* wp = w + p * n;
      for (std::size_t j = 0; j < n; ++j) yi[j] += v * wp[j];
    }
  }
}

// y[k,n] += x[m,k]^T * d[m,n]
template <typename T>
void matmul_tn(const T* x, const T* d, T* y, std::size_t m, std::size_t k,
               std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const T* xi = x + i * k;
    const T* di = d + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const T v = xi[p];
      if (v == T{0}) continue;
      T* yp = y + p * n;
      for (std::size_t j = 0; j < n; ++j) yp[j] += v * di[j];
    }
  }
}

// y[m,k] (+)= d[m,n] * w[k,n]^T
template <typename T>
void matmul_nt(const T* d, const T* w, T* y, std::size_t m, std::size_t k,
               std::size_t n, bool accumulate) {
  if (!accumulate)
    for (std::size_t i = 0; i < m * k; ++i) y[i] = T{0};
  for (std::size_t i = 0; i < m; ++i) {
    const T* di = d + i * n;
    T* yi = y + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const T* wp = w + p * n;
      T acc{0};
      for (std::size_t j = 0; j < n; ++j) acc += di[j] * wp[j];
      yi[p] += acc;
    }
  }
}

// ---- dense ----

template <typename T>
Tensor<T> dense_forward(const Tensor<T>& x, const Param<T>& w,
                        const Param<T>& b) {
  if (x.rank() != 2 || w.value.rank() != 2 || x.dim(1) != w.value.dim(0))
    throw ContractViolation("dense: shape mismatch");
  const std::size_t m = x.dim(0), k = x.dim(1), n = w.value.dim(1);
  if (b.value.numel() != n) throw ContractViolation("dense: bias mismatch");
  Tensor<T> y({m, n});
  matmul(x.data.data(), w.value.data.data(), y.data.data(), m, k, n, false);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) y.at2(i, j) += b.value.at(j);
  return y;
}

// Returns dx; accumulates dw, db.
template <typename T>
Tensor<T> dense_backward(const Tensor<T>& x, Param<T>& w, Param<T>& b,
                         const Tensor<T>& dy) {
  const std::size_t m = x.dim(0), k = x.dim(1), n = w.value.dim(1);
  matmul_tn(x.data.data(), dy.data.data(), w.grad.data.data(), m, k, n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) b.grad.at(j) += dy.at2(i, j);
  Tensor<T> dx({m, k});
  matmul_nt(dy.data.data(), w.value.data.data(), dx.data.data(), m, k, n,
            false);
  return dx;
}

// ---- relu ----

template <typename T>
Tensor<T> relu_forward(const Tensor<T>& x) {
  Tensor<T> y = x;
  for (auto& v : y.data)
    if (v < T{0}) v = T{0};
  return y;
}

template <typename T>
Tensor<T> relu_backward(const Tensor<T>& pre, const Tensor<T>& dy) {
  Tensor<T> dx = dy;
  for (std::size_t i = 0; i < dx.numel(); ++i)
    if (pre.at(i) <= T{0}) dx.at(i) = T{0};
  return dx;
}

// ---- batchnorm ----

inline constexpr double kBatchNormMomentum = 0.99;
inline constexpr double kBatchNormEps = 1e-3;

template <typename T>
struct BatchNormCache {
  Tensor<T> x_hat;
  std::vector<T> inv_std;  // per feature
  Mode mode = Mode::Train;
};

// Per-feature normalisation over the batch (biased variance). In train
// mode batch statistics are used; running statistics update only when
// update_running is set. In infer mode running statistics are used.
template <typename T>
Tensor<T> batchnorm_forward(const Tensor<T>& x, const Param<T>& gamma,
                            const Param<T>& beta, Param<T>& run_mean,
                            Param<T>& run_var, Mode mode, bool update_running,
                            BatchNormCache<T>* cache) {
  const std::size_t batch = x.dim(0), features = x.dim(1);
  Tensor<T> y({batch, features});
  Tensor<T> x_hat({batch, features});
  std::vector<T> inv_std(features);
  for (std::size_t f = 0; f < features; ++f) {
    T mean, var;
    if (mode == Mode::Train) {
      double acc = 0;
      for (std::size_t i = 0; i < batch; ++i) acc += x.at2(i, f);
      mean = static_cast<T>(acc / static_cast<double>(batch));
      double sq = 0;
      for (std::size_t i = 0; i < batch; ++i) {
        const double d = x.at2(i, f) - mean;
        sq += d * d;
      }
      var = static_cast<T>(sq / static_cast<double>(batch));
      if (update_running) {
        run_mean.value.at(f) = static_cast<T>(
            kBatchNormMomentum * run_mean.value.at(f) +
            (1.0 - kBatchNormMomentum) * mean);
        run_var.value.at(f) =
            static_cast<T>(kBatchNormMomentum * run_var.value.at(f) +
                           (1.0 - kBatchNormMomentum) * var);
      }
    } else {
      mean = run_mean.value.at(f);
      var = run_var.value.at(f);
    }
    const T is = static_cast<T>(
        1.0 / std::sqrt(static_cast<double>(var) + kBatchNormEps));
    inv_std[f] = is;
    for (std::size_t i = 0; i < batch; ++i) {
      const T xh = (x.at2(i, f) - mean) * is;
      x_hat.at2(i, f) = xh;
      y.at2(i, f) = gamma.value.at(f) * xh + beta.value.at(f);
    }
  }
  if (cache != nullptr) {
    cache->x_hat = std::move(x_hat);
    cache->inv_std = std::move(inv_std);
    cache->mode = mode;
  }
  return y;
}

template <typename T>
Tensor<T> batchnorm_backward(const BatchNormCache<T>& cache,
                             const Param<T>& gamma, Param<T>& dgamma,
                             Param<T>& dbeta, const Tensor<T>& dy) {
  const std::size_t batch = dy.dim(0), features = dy.dim(1);
  Tensor<T> dx({batch, features});
  for (std::size_t f = 0; f < features; ++f) {
    double sum_dy = 0, sum_dy_xhat = 0;
    for (std::size_t i = 0; i < batch; ++i) {
      sum_dy += dy.at2(i, f);
      sum_dy_xhat += dy.at2(i, f) * cache.x_hat.at2(i, f);
    }
    dgamma.grad.at(f) += static_cast<T>(sum_dy_xhat);
    dbeta.grad.at(f) += static_cast<T>(sum_dy);
    const T g_is = gamma.value.at(f) * cache.inv_std[f];
    if (cache.mode == Mode::Infer) {
      for (std::size_t i = 0; i < batch; ++i)
        dx.at2(i, f) = dy.at2(i, f) * g_is;
      continue;
    }
    const double inv_b = 1.0 / static_cast<double>(batch);
    for (std::size_t i = 0; i < batch; ++i) {
      dx.at2(i, f) = static_cast<T>(
          g_is * (dy.at2(i, f) - sum_dy * inv_b -
                  cache.x_hat.at2(i, f) * sum_dy_xhat * inv_b));
    }
  }
  return dx;
}

// ---- dropout (inverted: scaling happens at train time) ----

// Mask entries are 0 or 1/(1-rate); applying the mask is plain
// elementwise multiplication in both directions.
template <typename T>
Tensor<T> dropout_mask(const std::vector<std::size_t>& shape, double rate,
                       Rng& rng) {
  if (rate < 0 || rate >= 1)
    throw ContractViolation("dropout rate must be in [0,1)");
  Tensor<T> mask(shape);
  const T keep_scale = static_cast<T>(1.0 / (1.0 - rate));
  for (auto& v : mask.data) v = rng.bernoulli(rate) ? T{0} : keep_scale;
  return mask;
}

template <typename T>
Tensor<T> apply_mask(const Tensor<T>& x, const Tensor<T>& mask) {
  Tensor<T> y = x;
  for (std::size_t i = 0; i < y.numel(); ++i) y.at(i) *= mask.at(i);
  return y;
}

// ---- embedding ----

template <typename T>
Tensor<T> embedding_forward(const Param<T>& table,
                            const std::vector<std::uint32_t>& ids) {
  const std::size_t rows = table.value.dim(0), width = table.value.dim(1);
  Tensor<T> y({ids.size(), width});
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] >= rows)
      throw ContractViolation("embedding: id out of range");
    for (std::size_t j = 0; j < width; ++j)
      y.at2(i, j) = table.value.at2(ids[i], j);
  }
  return y;
}

template <typename T>
void embedding_backward(Param<T>& table, const std::vector<std::uint32_t>& ids,
                        const Tensor<T>& dy) {
  const std::size_t width = table.value.dim(1);
  for (std::size_t i = 0; i < ids.size(); ++i)
    for (std::size_t j = 0; j < width; ++j)
      table.grad.at2(ids[i], j) += dy.at2(i, j);
}

// ---- average pooling over [batch, h, w] ----

inline std::pair<std::size_t, std::size_t> avgpool2d_output_shape(
    std::size_t h, std::size_t w, std::size_t win, std::size_t stride) {
  if (win == 0 || stride == 0 || win > h || win > w)
    throw ContractViolation("avgpool: window larger than input");
  return {(h - win) / stride + 1, (w - win) / stride + 1};
}

template <typename T>
Tensor<T> avgpool2d_forward(const Tensor<T>& x, std::size_t win,
                            std::size_t stride) {
  const std::size_t batch = x.dim(0), h = x.dim(1), w = x.dim(2);
  const auto [oh, ow] = avgpool2d_output_shape(h, w, win, stride);
  Tensor<T> y({batch, oh, ow});
  const T inv = static_cast<T>(1.0 / static_cast<double>(win * win));
  for (std::size_t b = 0; b < batch; ++b) {
    const T* xb = x.data.data() + b * h * w;
    T* yb = y.data.data() + b * oh * ow;
    for (std::size_t i = 0; i < oh; ++i) {
      for (std::size_t j = 0; j < ow; ++j) {
        T acc{0};
        for (std::size_t di = 0; di < win; ++di)
          for (std::size_t dj = 0; dj < win; ++dj)
            acc += xb[(i * stride + di) * w + (j * stride + dj)];
        yb[i * ow + j] = acc * inv;
      }
    }
  }
  return y;
}

template <typename T>
Tensor<T> avgpool2d_backward(const Tensor<T>& dy, std::size_t h,
                             std::size_t w, std::size_t win,
                             std::size_t stride) {
  const std::size_t batch = dy.dim(0), oh = dy.dim(1), ow = dy.dim(2);
  Tensor<T> dx({batch, h, w});
  const T inv = static_cast<T>(1.0 / static_cast<double>(win * win));
  for (std::size_t b = 0; b < batch; ++b) {
    const T* db = dy.data.data() + b * oh * ow;
    T* xb = dx.data.data() + b * h * w;
    for (std::size_t i = 0; i < oh; ++i)
      for (std::size_t j = 0; j < ow; ++j) {
        const T g = db[i * ow + j] * inv;
        for (std::size_t di = 0; di < win; ++di)
          for (std::size_t dj = 0; dj < win; ++dj)
            xb[(i * stride + di) * w + (j * stride + dj)] += g;
      }
  }
  return dx;
}

// ---- tanh ----

template <typename T>
Tensor<T> tanh_forward(const Tensor<T>& x) {
  Tensor<T> y = x;
  for (auto& v : y.data) v = std::tanh(v);
  return y;
}

template <typename T>
Tensor<T> tanh_backward(const Tensor<T>& y, const Tensor<T>& dy) {
  Tensor<T> dx = dy;
  for (std::size_t i = 0; i < dx.numel(); ++i)
    dx.at(i) *= (T{1} - y.at(i) * y.at(i));
  return dx;
}

// ---- elementwise multiply ----

template <typename T>
Tensor<T> multiply_forward(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape != b.shape) throw ContractViolation("multiply: shape mismatch");
  Tensor<T> y = a;
  for (std::size_t i = 0; i < y.numel(); ++i) y.at(i) *= b.at(i);
  return y;
}

// ---- sigmoid cross-entropy ----

// Numerically stable cross-entropy of sigmoid(logit) against label.
// label = 1 gives -log D, label = 0 gives -log(1 - D).
template <typename T>
std::pair<double, T> sigmoid_xent(T logit, double label) {
  const double l = static_cast<double>(logit);
  const double loss =
      std::max(l, 0.0) - l * label + std::log1p(std::exp(-std::abs(l)));
  const double sig = 1.0 / (1.0 + std::exp(-l));
  return {loss, static_cast<T>(sig - label)};
}

// Mean loss over a batch of logits; dlogits already scaled by 1/batch.
template <typename T>
std::pair<double, Tensor<T>> sigmoid_xent_mean(const Tensor<T>& logits,
                                               double label) {
  const std::size_t n = logits.numel();
  Tensor<T> dlogits(logits.shape);
  double total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto [loss, d] = sigmoid_xent(logits.at(i), label);
    total += loss;
    dlogits.at(i) = d / static_cast<T>(n);
  }
  return {total / static_cast<double>(n), std::move(dlogits)};
}

// ---- adam ----

struct AdamConfig {
  double alpha = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-7;
};

template <typename T>
struct AdamState {
  struct Slot {
    Tensor<T> m, v;
    std::uint64_t t = 0;
  };
  std::vector<Slot> slots;

  void init(const std::vector<Param<T>*>& params) {
    slots.clear();
    slots.resize(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
      if (!params[i]->trainable) continue;
      slots[i].m = Tensor<T>(params[i]->value.shape);
      slots[i].v = Tensor<T>(params[i]->value.shape);
    }
  }
};

// Standard bias-corrected update from the accumulated gradients.
// Non-trainable blocks are left untouched.
template <typename T>
void adam_step(const std::vector<Param<T>*>& params, AdamState<T>& state,
               const AdamConfig& cfg) {
  if (state.slots.size() != params.size())
    throw ContractViolation("adam: state not initialised for this list");
  for (std::size_t i = 0; i < params.size(); ++i) {
    Param<T>& p = *params[i];
    if (!p.trainable) continue;
    auto& slot = state.slots[i];
    ++slot.t;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(slot.t));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(slot.t));
    for (std::size_t j = 0; j < p.value.numel(); ++j) {
      const double g = p.grad.at(j);
      const double m = cfg.beta1 * slot.m.at(j) + (1.0 - cfg.beta1) * g;
      const double v = cfg.beta2 * slot.v.at(j) + (1.0 - cfg.beta2) * g * g;
      slot.m.at(j) = static_cast<T>(m);
      slot.v.at(j) = static_cast<T>(v);
      const double m_hat = m / bc1;
      const double v_hat = v / bc2;
      p.value.at(j) -= static_cast<T>(cfg.alpha * m_hat /
                                      (std::sqrt(v_hat) + cfg.eps));
    }
  }
}

// ---- init ----

template <typename T>
void glorot_uniform(Tensor<T>& w, std::size_t fan_in, std::size_t fan_out,
                    Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (auto& v : w.data)
    v = static_cast<T>((2.0 * rng.uniform() - 1.0) * limit);
}

// ---- gradient verification ----

struct GradCheckReport {
  double max_rel_error = 0;
  std::string worst_param;
  std::size_t worst_index = 0;
  std::size_t checked = 0;
};

// Central finite differences against the analytic gradients already in
// Param::grad. `loss_fn` recomputes the loss from current values; it must
// be deterministic (fixed masks, fixed batch).
template <typename T, typename LossFn>
GradCheckReport grad_check(const std::vector<Param<T>*>& params,
                           LossFn&& loss_fn, double h) {
  GradCheckReport report;
  for (Param<T>* p : params) {
    if (!p->trainable) continue;
    for (std::size_t j = 0; j < p->value.numel(); ++j) {
      const T saved = p->value.at(j);
      p->value.at(j) = saved + static_cast<T>(h);
      const double up = loss_fn();
      p->value.at(j) = saved - static_cast<T>(h);
      const double down = loss_fn();
      p->value.at(j) = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double analytic = static_cast<double>(p->grad.at(j));
      const double rel = std::abs(analytic - numeric) /
                         std::max({1e-8, std::abs(analytic),
                                   std::abs(numeric)});
      ++report.checked;
      if (rel > report.max_rel_error) {
        report.max_rel_error = rel;
        report.worst_param = p->name;
        report.worst_index = j;
      }
    }
  }
  return report;
}

}  // namespace recgan
