#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "disent/common.hpp"
#include "disent/dataset.hpp"

namespace disent {

// Non-owning strided view over float32 feature rows. Lets classifiers train
// directly on a slice of a CodeTensor (one dimension's T-vector, or the full
// d*T vector) without materializing per-task copies.
struct FeatureView {
  const float* base = nullptr;
  std::size_t n_rows = 0;
  std::size_t row_stride = 0;
  std::size_t offset = 0;
  std::size_t n_features = 0;

  const float* row(std::size_t i) const { return base + i * row_stride + offset; }

  static FeatureView from_matrix(const std::vector<float>& m, std::size_t rows, std::size_t cols);
  // scope: a single dimension's T-vector, or the concatenated d*T vector
  static FeatureView tensor_dim(const CodeTensor& ct, std::size_t dim);
  static FeatureView tensor_all(const CodeTensor& ct);
};

struct TrainConfig {
  int epochs = 100;
  int batch_size = 128;
  double learning_rate = 0.2;  // initial rate; decays linearly to 0 over the epochs
  double l2 = 1e-4;
  std::uint64_t seed = 0;
};

// Multinomial logistic regression trained with mini-batch gradient descent on
// softmax cross-entropy plus L2. Features are standardized with statistics of
// the training rows only (constant features become zeros); the standardization
// is stored so held-out rows go through the identical transform.
class LinearClassifier {
 public:
  LinearClassifier(std::int32_t n_classes, std::size_t n_features);

  std::int32_t n_classes() const { return n_classes_; }
  std::size_t n_features() const { return n_features_; }
  const std::vector<float>& weights() const { return weights_; }
  const std::vector<float>& bias() const { return bias_; }
  const TrainConfig& config() const { return config_; }

  // class probabilities for the given rows, row-major n_rows x n_classes
  std::vector<double> predict_proba(const FeatureView& x, std::span<const std::size_t> rows) const;
  // top-1 accuracy (ties resolved toward the lowest class index)
  double accuracy(const FeatureView& x, std::span<const std::size_t> rows,
                  std::span<const std::int32_t> labels) const;

 private:
  friend LinearClassifier train_logreg(const FeatureView&, std::span<const std::int32_t>,
                                       std::span<const std::size_t>, std::int32_t,
                                       const TrainConfig&);
  std::int32_t n_classes_;
  std::size_t n_features_;
  std::vector<float> weights_;  // n_classes x n_features
  std::vector<float> bias_;
  std::vector<float> shift_;  // per-feature mean of the training rows
  std::vector<float> scale_;  // 1/stddev, or 0 for constant features
  TrainConfig config_;
};

// Trains on the rows named by train_rows. Throws ValidationError on
// single-class labels or if the loss goes non-finite.
LinearClassifier train_logreg(const FeatureView& x, std::span<const std::int32_t> labels,
                              std::span<const std::size_t> train_rows, std::int32_t n_classes,
                              const TrainConfig& config);

}  // namespace disent
