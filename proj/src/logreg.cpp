#include "disent/logreg.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace disent {

namespace {

#if defined(__GNUC__) && (defined(__x86_64__) || defined(__aarch64__))
#define DISENT_VEC_KERNELS 1
typedef float v8f __attribute__((vector_size(32)));

inline v8f load8(const float* p) {
  v8f v;
  __builtin_memcpy(&v, p, sizeof(v));
  return v;
}

inline void store8(float* p, v8f v) { __builtin_memcpy(p, &v, sizeof(v)); }

inline float hsum8(v8f v) {
  return ((v[0] + v[4]) + (v[1] + v[5])) + ((v[2] + v[6]) + (v[3] + v[7]));
}
#endif

// fixed-lane accumulation: deterministic and SIMD-friendly
inline float dot_f32(const float* a, const float* b, std::size_t n) {
  float acc[8] = {0, 0, 0, 0, 0, 0, 0, 0};
  std::size_t f = 0;
  for (; f + 8 <= n; f += 8)
    for (int k = 0; k < 8; ++k) acc[k] += a[f + k] * b[f + k];
  float s = ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7]));
  for (; f < n; ++f) s += a[f] * b[f];
  return s;
}

inline void axpy_f32(float* y, const float* x, float a, std::size_t n) {
  for (std::size_t f = 0; f < n; ++f) y[f] += a * x[f];
}

// logits[b][c] = dot(x_b, w_c) + bias[c] for a mini-batch, register-blocked
// 4 samples x 2 classes so each weight line feeds several accumulators
void batch_logits(const float* xb, std::size_t b_count, std::size_t f_count, const float* weights,
                  const float* bias, std::int32_t n_classes, float* logits) {
#ifdef DISENT_VEC_KERNELS
  std::size_t b = 0;
  for (; b + 4 <= b_count; b += 4) {
    const float* x0 = xb + (b + 0) * f_count;
    const float* x1 = xb + (b + 1) * f_count;
    const float* x2 = xb + (b + 2) * f_count;
    const float* x3 = xb + (b + 3) * f_count;
    std::int32_t c = 0;
    for (; c + 2 <= n_classes; c += 2) {
      const float* w0 = weights + static_cast<std::size_t>(c) * f_count;
      const float* w1 = w0 + f_count;
      v8f a00{}, a01{}, a10{}, a11{}, a20{}, a21{}, a30{}, a31{};
      std::size_t f = 0;
      for (; f + 8 <= f_count; f += 8) {
        const v8f wv0 = load8(w0 + f), wv1 = load8(w1 + f);
        const v8f xv0 = load8(x0 + f), xv1 = load8(x1 + f);
        const v8f xv2 = load8(x2 + f), xv3 = load8(x3 + f);
        a00 += xv0 * wv0;
        a01 += xv0 * wv1;
        a10 += xv1 * wv0;
        a11 += xv1 * wv1;
        a20 += xv2 * wv0;
        a21 += xv2 * wv1;
        a30 += xv3 * wv0;
        a31 += xv3 * wv1;
      }
      float s00 = hsum8(a00), s01 = hsum8(a01), s10 = hsum8(a10), s11 = hsum8(a11);
      float s20 = hsum8(a20), s21 = hsum8(a21), s30 = hsum8(a30), s31 = hsum8(a31);
      for (; f < f_count; ++f) {
        s00 += x0[f] * w0[f];
        s01 += x0[f] * w1[f];
        s10 += x1[f] * w0[f];
        s11 += x1[f] * w1[f];
        s20 += x2[f] * w0[f];
        s21 += x2[f] * w1[f];
        s30 += x3[f] * w0[f];
        s31 += x3[f] * w1[f];
      }
      logits[(b + 0) * n_classes + c] = s00 + bias[c];
      logits[(b + 0) * n_classes + c + 1] = s01 + bias[c + 1];
      logits[(b + 1) * n_classes + c] = s10 + bias[c];
      logits[(b + 1) * n_classes + c + 1] = s11 + bias[c + 1];
      logits[(b + 2) * n_classes + c] = s20 + bias[c];
      logits[(b + 2) * n_classes + c + 1] = s21 + bias[c + 1];
      logits[(b + 3) * n_classes + c] = s30 + bias[c];
      logits[(b + 3) * n_classes + c + 1] = s31 + bias[c + 1];
    }
    for (; c < n_classes; ++c) {
      const float* w0 = weights + static_cast<std::size_t>(c) * f_count;
      logits[(b + 0) * n_classes + c] = dot_f32(x0, w0, f_count) + bias[c];
      logits[(b + 1) * n_classes + c] = dot_f32(x1, w0, f_count) + bias[c];
      logits[(b + 2) * n_classes + c] = dot_f32(x2, w0, f_count) + bias[c];
      logits[(b + 3) * n_classes + c] = dot_f32(x3, w0, f_count) + bias[c];
    }
  }
  for (; b < b_count; ++b)
    for (std::int32_t c = 0; c < n_classes; ++c)
      logits[b * n_classes + c] =
          dot_f32(xb + b * f_count, weights + static_cast<std::size_t>(c) * f_count, f_count) +
          bias[c];
#else
  for (std::size_t b = 0; b < b_count; ++b)
    for (std::int32_t c = 0; c < n_classes; ++c)
      logits[b * n_classes + c] =
          dot_f32(xb + b * f_count, weights + static_cast<std::size_t>(c) * f_count, f_count) +
          bias[c];
#endif
}

// w_c -= sum_b coef[b][c] * x_b, blocked 4 samples per weight-row pass
void batch_weight_update(float* weights, const float* xb, std::size_t b_count,
                         std::size_t f_count, const float* coef, std::int32_t n_classes) {
#ifdef DISENT_VEC_KERNELS
  std::size_t b = 0;
  for (; b + 4 <= b_count; b += 4) {
    const float* x0 = xb + (b + 0) * f_count;
    const float* x1 = xb + (b + 1) * f_count;
    const float* x2 = xb + (b + 2) * f_count;
    const float* x3 = xb + (b + 3) * f_count;
    for (std::int32_t c = 0; c < n_classes; ++c) {
      const float c0 = coef[(b + 0) * n_classes + c];
      const float c1 = coef[(b + 1) * n_classes + c];
      const float c2 = coef[(b + 2) * n_classes + c];
      const float c3 = coef[(b + 3) * n_classes + c];
      if (c0 == 0.0f && c1 == 0.0f && c2 == 0.0f && c3 == 0.0f) continue;
      float* w = weights + static_cast<std::size_t>(c) * f_count;
      const v8f v0 = {c0, c0, c0, c0, c0, c0, c0, c0};
      const v8f v1 = {c1, c1, c1, c1, c1, c1, c1, c1};
      const v8f v2 = {c2, c2, c2, c2, c2, c2, c2, c2};
      const v8f v3 = {c3, c3, c3, c3, c3, c3, c3, c3};
      std::size_t f = 0;
      for (; f + 8 <= f_count; f += 8) {
        v8f wv = load8(w + f);
        wv -= v0 * load8(x0 + f);
        wv -= v1 * load8(x1 + f);
        wv -= v2 * load8(x2 + f);
        wv -= v3 * load8(x3 + f);
        store8(w + f, wv);
      }
      for (; f < f_count; ++f)
        w[f] -= c0 * x0[f] + c1 * x1[f] + c2 * x2[f] + c3 * x3[f];
    }
  }
  for (; b < b_count; ++b) {
    const float* x0 = xb + b * f_count;
    for (std::int32_t c = 0; c < n_classes; ++c) {
      const float c0 = coef[b * n_classes + c];
      if (c0 == 0.0f) continue;
      axpy_f32(weights + static_cast<std::size_t>(c) * f_count, x0, -c0, f_count);
    }
  }
#else
  for (std::size_t b = 0; b < b_count; ++b) {
    const float* x0 = xb + b * f_count;
    for (std::int32_t c = 0; c < n_classes; ++c) {
      const float c0 = coef[b * n_classes + c];
      if (c0 == 0.0f) continue;
      axpy_f32(weights + static_cast<std::size_t>(c) * f_count, x0, -c0, f_count);
    }
  }
#endif
}

// Fisher-Yates with an explicit bounded draw so the permutation sequence does
// not depend on the standard library's distribution implementation.
void shuffle_indices(std::vector<std::size_t>& idx, std::mt19937_64& rng) {
  for (std::size_t i = idx.size(); i > 1; --i) {
    const auto r = static_cast<std::size_t>(
        (static_cast<unsigned __int128>(rng()) * i) >> 64);
    std::swap(idx[i - 1], idx[r]);
  }
}

}  // namespace

FeatureView FeatureView::from_matrix(const std::vector<float>& m, std::size_t rows,
                                     std::size_t cols) {
  if (m.size() != rows * cols) throw ValidationError("FeatureView: matrix size mismatch");
  return FeatureView{m.data(), rows, cols, 0, cols};
}

FeatureView FeatureView::tensor_dim(const CodeTensor& ct, std::size_t dim) {
  if (dim >= ct.n_dims) throw ValidationError("FeatureView: dimension out of range");
  return FeatureView{ct.values.data(), ct.n_samples, ct.n_dims * ct.seq_len, dim * ct.seq_len,
                     ct.seq_len};
}

FeatureView FeatureView::tensor_all(const CodeTensor& ct) {
  return FeatureView{ct.values.data(), ct.n_samples, ct.n_dims * ct.seq_len, 0,
                     ct.n_dims * ct.seq_len};
}

LinearClassifier::LinearClassifier(std::int32_t n_classes, std::size_t n_features)
    : n_classes_(n_classes),
      n_features_(n_features),
      weights_(static_cast<std::size_t>(n_classes) * n_features, 0.0f),
      bias_(n_classes, 0.0f),
      shift_(n_features, 0.0f),
      scale_(n_features, 1.0f) {}

std::vector<double> LinearClassifier::predict_proba(const FeatureView& x,
                                                    std::span<const std::size_t> rows) const {
  const std::size_t f_count = n_features_;
  std::vector<float> xs(f_count);
  std::vector<double> out(rows.size() * n_classes_);
  std::vector<double> logits(n_classes_);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const float* src = x.row(rows[r]);
    for (std::size_t f = 0; f < f_count; ++f) xs[f] = (src[f] - shift_[f]) * scale_[f];
    double max_logit = -1e300;
    for (std::int32_t c = 0; c < n_classes_; ++c) {
      logits[c] = dot_f32(xs.data(), weights_.data() + static_cast<std::size_t>(c) * f_count,
                          f_count) +
                  bias_[c];
      max_logit = std::max(max_logit, logits[c]);
    }
    double z = 0.0;
    for (std::int32_t c = 0; c < n_classes_; ++c) {
      logits[c] = std::exp(logits[c] - max_logit);
      z += logits[c];
    }
    for (std::int32_t c = 0; c < n_classes_; ++c) out[r * n_classes_ + c] = logits[c] / z;
  }
  return out;
}

double LinearClassifier::accuracy(const FeatureView& x, std::span<const std::size_t> rows,
                                  std::span<const std::int32_t> labels) const {
  if (rows.empty()) throw ValidationError("accuracy: no rows");
  const std::size_t f_count = n_features_;
  std::vector<float> xs(f_count);
  std::size_t hits = 0;
  for (std::size_t r : rows) {
    const float* src = x.row(r);
    for (std::size_t f = 0; f < f_count; ++f) xs[f] = (src[f] - shift_[f]) * scale_[f];
    std::int32_t best = 0;
    float best_logit = dot_f32(xs.data(), weights_.data(), f_count) + bias_[0];
    for (std::int32_t c = 1; c < n_classes_; ++c) {
      const float l = dot_f32(xs.data(), weights_.data() + static_cast<std::size_t>(c) * f_count,
                              f_count) +
                      bias_[c];
      if (l > best_logit) {
        best_logit = l;
        best = c;
      }
    }
    if (best == labels[r]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(rows.size());
}

LinearClassifier train_logreg(const FeatureView& x, std::span<const std::int32_t> labels,
                              std::span<const std::size_t> train_rows, std::int32_t n_classes,
                              const TrainConfig& config) {
  if (n_classes < 2) throw ValidationError("train_logreg: need at least 2 classes");
  if (train_rows.size() < static_cast<std::size_t>(n_classes))
    throw ValidationError("train_logreg: fewer training samples than classes");
  if (config.epochs < 1 || config.batch_size < 1)
    throw ValidationError("train_logreg: epochs and batch size must be positive");
  {
    std::vector<bool> seen(n_classes, false);
    std::int32_t distinct = 0;
    for (std::size_t r : train_rows) {
      const std::int32_t y = labels[r];
      if (y < 0 || y >= n_classes) throw ValidationError("train_logreg: label out of range");
      if (!seen[y]) {
        seen[y] = true;
        ++distinct;
      }
    }
    if (distinct < 2) throw ValidationError("train_logreg: single-class labels");
  }

  const std::size_t f_count = x.n_features;
  LinearClassifier clf(n_classes, f_count);
  clf.config_ = config;

  // standardization statistics from the training split only
  {
    std::vector<double> mean(f_count, 0.0), var(f_count, 0.0);
    for (std::size_t r : train_rows) {
      const float* src = x.row(r);
      for (std::size_t f = 0; f < f_count; ++f) mean[f] += src[f];
    }
    const double inv_n = 1.0 / static_cast<double>(train_rows.size());
    for (std::size_t f = 0; f < f_count; ++f) mean[f] *= inv_n;
    for (std::size_t r : train_rows) {
      const float* src = x.row(r);
      for (std::size_t f = 0; f < f_count; ++f) {
        const double d = src[f] - mean[f];
        var[f] += d * d;
      }
    }
    for (std::size_t f = 0; f < f_count; ++f) {
      const double sd = std::sqrt(var[f] * inv_n);
      clf.shift_[f] = static_cast<float>(mean[f]);
      clf.scale_[f] = sd > 1e-12 ? static_cast<float>(1.0 / sd) : 0.0f;
    }
  }

  const std::size_t batch = std::min<std::size_t>(config.batch_size, train_rows.size());
  std::vector<float> xb(batch * f_count);       // standardized mini-batch
  std::vector<float> probs(batch * n_classes);  // softmax activations
  std::vector<std::size_t> order(train_rows.begin(), train_rows.end());
  std::mt19937_64 rng(config.seed);
  const auto lr = static_cast<float>(config.learning_rate);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    shuffle_indices(order, rng);
    double epoch_loss = 0.0;
    // linear decay: large steps early for drift, small late so the noisy
    // stationary band does not cap held-out accuracy
    const float lr_now =
        lr * (1.0f - static_cast<float>(epoch) / static_cast<float>(config.epochs));

    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t b_count = std::min(batch, order.size() - start);
      for (std::size_t b = 0; b < b_count; ++b) {
        const float* src = x.row(order[start + b]);
        float* dst = xb.data() + b * f_count;
        for (std::size_t f = 0; f < f_count; ++f) dst[f] = (src[f] - clf.shift_[f]) * clf.scale_[f];
      }

      batch_logits(xb.data(), b_count, f_count, clf.weights_.data(), clf.bias_.data(), n_classes,
                   probs.data());
      for (std::size_t b = 0; b < b_count; ++b) {
        float* prow = probs.data() + b * n_classes;
        float max_logit = prow[0];
        for (std::int32_t c = 1; c < n_classes; ++c) max_logit = std::max(max_logit, prow[c]);
        float z = 0.0f;
        for (std::int32_t c = 0; c < n_classes; ++c) {
          prow[c] = std::exp(prow[c] - max_logit);
          z += prow[c];
        }
        const float inv_z = 1.0f / z;
        for (std::int32_t c = 0; c < n_classes; ++c) prow[c] *= inv_z;
        epoch_loss -= std::log(std::max(prow[labels[order[start + b]]], 1e-30f));
      }

      // W <- W*(1 - lr*l2) - lr/B * X^T (P - Y);  bias has no L2 term
      const float step = lr_now / static_cast<float>(b_count);
      const float decay = 1.0f - lr_now * static_cast<float>(config.l2);
      if (decay != 1.0f)
        for (float& w : clf.weights_) w *= decay;
      for (std::size_t b = 0; b < b_count; ++b) {
        float* prow = probs.data() + b * n_classes;
        const std::int32_t y = labels[order[start + b]];
        for (std::int32_t c = 0; c < n_classes; ++c) {
          const float delta = prow[c] - (c == y ? 1.0f : 0.0f);
          prow[c] = step * delta;  // reuse the buffer as update coefficients
          clf.bias_[c] -= step * delta;
        }
      }
      batch_weight_update(clf.weights_.data(), xb.data(), b_count, f_count, probs.data(),
                          n_classes);
    }

    if (!std::isfinite(epoch_loss))
      throw ValidationError("train_logreg: non-finite loss at epoch " + std::to_string(epoch) +
                            " (lr=" + std::to_string(config.learning_rate) +
                            ", l2=" + std::to_string(config.l2) +
                            ", batch=" + std::to_string(config.batch_size) + ")");
  }

  for (float w : clf.weights_)
    if (!std::isfinite(w)) throw ValidationError("train_logreg: non-finite weights after training");
  return clf;
}

}  // namespace disent
