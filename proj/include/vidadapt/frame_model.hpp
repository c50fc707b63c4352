#ifndef VIDADAPT_FRAME_MODEL_HPP
#define VIDADAPT_FRAME_MODEL_HPP

#include "vidadapt/common.hpp"

#include <cstdint>
#include <filesystem>
#include <span>

namespace vidadapt {

/// Per-pixel feature layout of the reference classifier.
enum Feature : int {
  kRed = 0,
  kGreen,
  kBlue,
  kX,          // x / W
  kY,          // y / H
  kMeanRed,    // 3x3 edge-clamped box mean
  kMeanGreen,
  kMeanBlue,
  kGradient,   // |grad| of central-difference luminance
  kBias,       // always 1
  kFeatureDim
};

using FeatureVector = Eigen::Matrix<Scalar, kFeatureDim, 1>;
using FeatureMatrix = Eigen::Matrix<Scalar, kFeatureDim, Eigen::Dynamic>;

/// Trainable state of the reference classifier: logits = weights * features.
struct ModelParameters {
  MatrixX weights;   // K x D
  MatrixX momentum;  // K x D, SGD velocity

  ModelParameters() = default;
  ModelParameters(int num_classes, int feature_dim = kFeatureDim)
      : weights(MatrixX::Zero(num_classes, feature_dim)),
        momentum(MatrixX::Zero(num_classes, feature_dim)) {}

  int num_classes() const { return static_cast<int>(weights.rows()); }

  /// Throws ConfigError if the shapes disagree with `num_classes` x kFeatureDim
  /// or any entry is non-finite.
  void validate(int num_classes) const;

  bool operator==(const ModelParameters& other) const {
    return weights.rows() == other.weights.rows() && weights.cols() == other.weights.cols() &&
           weights == other.weights && momentum == other.momentum;
  }
};

struct TrainConfig {
  Scalar learning_rate = 0.001;
  Scalar momentum = 0.9;
  Scalar weight_decay = 0.0005;
  /// Fixed at 1 frame per step.
  int batch_size = 1;
  /// Number of SGD steps; unset means one pass over the dataset.
  std::optional<std::size_t> iterations;
  /// Pixels sampled per frame per step; 0 means every labeled pixel.
  std::size_t pixel_subsample = 4096;
  bool shuffle = false;
  std::uint64_t seed = 0;

  void validate() const;
};

/// One pseudo-labeled training frame.
struct TrainingSample {
  const Image* frame = nullptr;
  const LabelMap* labels = nullptr;
};

FeatureVector extract_features(const Image& image, int x, int y);
FeatureVector extract_features(const Image& image, std::size_t pixel_index);
/// Features for every pixel, column i for pixel i.
FeatureMatrix extract_features(const Image& image);

/// Column-wise softmax of a logit matrix (one column per pixel).
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> softmax_columns(
    const Eigen::MatrixBase<Derived>& logits) {
  using S = typename Derived::Scalar;
  Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic> out =
      (logits.rowwise() - logits.colwise().maxCoeff()).array().exp().matrix();
  out.array().rowwise() /= out.colwise().sum().array();
  return out;
}

ProbabilityVolume predict(const ModelParameters& params, const Image& image);
ProbabilityVolume predict(const ModelParameters& params, const FeatureMatrix& features, int width,
                          int height);

/// Label of maximum probability; ties go to the lowest class index.
LabelMap argmax_labels(const ProbabilityVolume& prob);

/// Mean negative log-probability of the target class over non-IGNORE pixels.
Scalar masked_cross_entropy(const ProbabilityVolume& prob, const LabelMap& target);

/// Loss and its gradient with respect to the weights, restricted to `pixels`.
struct LossGradient {
  Scalar loss = 0.0;
  MatrixX gradient;  // K x D
  std::size_t pixel_count = 0;
};
LossGradient cross_entropy_gradient(const MatrixX& weights, const FeatureMatrix& features,
                                    const LabelMap& target, std::span<const std::size_t> pixels);
/// Same over every non-IGNORE pixel.
LossGradient cross_entropy_gradient(const MatrixX& weights, const FeatureMatrix& features,
                                    const LabelMap& target);

/// Runs the configured number of momentum-SGD steps, one frame per step.
ModelParameters sgd_fine_tune(const ModelParameters& params, std::span<const TrainingSample> dataset,
                              const TrainConfig& config);

// "VAPM" binary format: header then weights and momentum as row-major f32.
void save_parameters(const ModelParameters& params, const std::filesystem::path& path);
ModelParameters load_parameters(const std::filesystem::path& path);

}  // namespace vidadapt

#endif  // VIDADAPT_FRAME_MODEL_HPP
