#include "vidadapt/frame_model.hpp"

#include "binary_io.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace vidadapt {

namespace {

constexpr Scalar kLogFloor = 1e-12;

Scalar luminance(const Image& image, int x, int y) {
  const auto p = image.pixel(std::clamp(x, 0, image.width - 1), std::clamp(y, 0, image.height - 1));
  return 0.299 * p(0) + 0.587 * p(1) + 0.114 * p(2);
}

void fill_features(const Image& image, int x, int y, Eigen::Ref<FeatureVector> f) {
  const auto p = image.pixel(x, y);
  f.segment<3>(kRed) = p;
  f(kX) = static_cast<Scalar>(x) / image.width;
  f(kY) = static_cast<Scalar>(y) / image.height;

  Eigen::Matrix<Scalar, 3, 1> sum = Eigen::Matrix<Scalar, 3, 1>::Zero();
  for (int dy = -1; dy <= 1; ++dy) {
    for (int dx = -1; dx <= 1; ++dx) {
      sum += image.pixel(std::clamp(x + dx, 0, image.width - 1), std::clamp(y + dy, 0, image.height - 1));
    }
  }
  f.segment<3>(kMeanRed) = sum / 9.0;

  const Scalar gx = 0.5 * (luminance(image, x + 1, y) - luminance(image, x - 1, y));
  const Scalar gy = 0.5 * (luminance(image, x, y + 1) - luminance(image, x, y - 1));
  f(kGradient) = std::sqrt(gx * gx + gy * gy);
  f(kBias) = 1.0;
}

}  // namespace

void ModelParameters::validate(int num_classes) const {
  if (weights.rows() != num_classes || weights.cols() != kFeatureDim) {
    throw ConfigError("model has shape " + std::to_string(weights.rows()) + "x" +
                      std::to_string(weights.cols()) + ", expected " + std::to_string(num_classes) +
                      "x" + std::to_string(kFeatureDim));
  }
  if (momentum.rows() != weights.rows() || momentum.cols() != weights.cols()) {
    throw ConfigError("momentum buffer shape does not match weights");
  }
  if (!weights.allFinite() || !momentum.allFinite()) throw ConfigError("model contains non-finite values");
}

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0)) throw ConfigError("learning_rate must be >= 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("momentum must lie in [0,1)");
  if (!(weight_decay >= 0.0)) throw ConfigError("weight_decay must be >= 0");
  if (batch_size != 1) throw ConfigError("batch_size must be 1");
}

FeatureVector extract_features(const Image& image, int x, int y) {
  if (!image.contains(x, y)) {
    throw ContractError("pixel (" + std::to_string(x) + "," + std::to_string(y) + ") outside " +
                        std::to_string(image.width) + "x" + std::to_string(image.height) + " image");
  }
  FeatureVector f;
  fill_features(image, x, y, f);
  return f;
}

FeatureVector extract_features(const Image& image, std::size_t pixel_index) {
  if (pixel_index >= image.pixel_count()) throw ContractError("pixel index out of bounds");
  return extract_features(image, static_cast<int>(pixel_index % image.width),
                          static_cast<int>(pixel_index / image.width));
}

FeatureMatrix extract_features(const Image& image) {
  FeatureMatrix features(static_cast<Eigen::Index>(kFeatureDim), static_cast<Eigen::Index>(image.pixel_count()));
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      fill_features(image, x, y, features.col(static_cast<Eigen::Index>(y) * image.width + x));
    }
  }
  return features;
}

ProbabilityVolume predict(const ModelParameters& params, const FeatureMatrix& features, int width, int height) {
  if (params.weights.cols() != kFeatureDim) throw ConfigError("model feature dimension mismatch");
  if (features.cols() != static_cast<Eigen::Index>(width) * height) {
    throw ContractError("feature matrix does not match frame size");
  }
  ProbabilityVolume out;
  out.width = width;
  out.height = height;
  out.probs = softmax_columns(params.weights * features);
  return out;
}

ProbabilityVolume predict(const ModelParameters& params, const Image& image) {
  return predict(params, extract_features(image), image.width, image.height);
}

LabelMap argmax_labels(const ProbabilityVolume& prob) {
  LabelMap labels(prob.width, prob.height);
  for (Eigen::Index i = 0; i < prob.probs.cols(); ++i) {
    Eigen::Index best = 0;
    // maxCoeff returns the first maximal index, which is the tie-break we want.
    prob.probs.col(i).maxCoeff(&best);
    labels[static_cast<std::size_t>(i)] = static_cast<Label>(best);
  }
  return labels;
}

Scalar masked_cross_entropy(const ProbabilityVolume& prob, const LabelMap& target) {
  if (!same_size(prob, target)) throw ContractError("probability volume and target differ in size");
  Scalar total = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < target.pixel_count(); ++i) {
    const Label t = target[i];
    if (t == kIgnore) continue;
    if (t >= prob.num_classes()) throw ContractError("target label outside the class catalog");
    total -= std::log(std::max(prob.probs(t, static_cast<Eigen::Index>(i)), kLogFloor));
    ++count;
  }
  return count == 0 ? 0.0 : total / static_cast<Scalar>(count);
}

LossGradient cross_entropy_gradient(const MatrixX& weights, const FeatureMatrix& features, const LabelMap& target,
                                    std::span<const std::size_t> pixels) {
  if (features.cols() != static_cast<Eigen::Index>(target.pixel_count())) {
    throw ContractError("features and target differ in size");
  }
  LossGradient result;
  result.gradient = MatrixX::Zero(weights.rows(), weights.cols());
  if (pixels.empty()) return result;

  const auto n = static_cast<Eigen::Index>(pixels.size());
  FeatureMatrix selected(static_cast<Eigen::Index>(kFeatureDim), n);
  for (Eigen::Index j = 0; j < n; ++j) selected.col(j) = features.col(static_cast<Eigen::Index>(pixels[j]));

  MatrixX residual = softmax_columns(weights * selected);
  for (Eigen::Index j = 0; j < n; ++j) {
    const Label t = target[pixels[j]];
    if (t == kIgnore || t >= weights.rows()) throw ContractError("gradient pixel has no valid target");
    result.loss -= std::log(std::max(residual(t, j), kLogFloor));
    residual(t, j) -= 1.0;
  }
  const Scalar inv_n = 1.0 / static_cast<Scalar>(n);
  result.loss *= inv_n;
  result.gradient.noalias() = inv_n * residual * selected.transpose();
  result.pixel_count = pixels.size();
  return result;
}

LossGradient cross_entropy_gradient(const MatrixX& weights, const FeatureMatrix& features, const LabelMap& target) {
  std::vector<std::size_t> pixels;
  for (std::size_t i = 0; i < target.pixel_count(); ++i) {
    if (target[i] != kIgnore) pixels.push_back(i);
  }
  return cross_entropy_gradient(weights, features, target, pixels);
}

ModelParameters sgd_fine_tune(const ModelParameters& params, std::span<const TrainingSample> dataset,
                              const TrainConfig& config) {
  config.validate();
  ModelParameters out = params;
  if (dataset.empty()) return out;

  struct Prepared {
    FeatureMatrix features;
    std::vector<std::size_t> labeled;
  };
  std::vector<std::optional<Prepared>> cache(dataset.size());
  auto prepared = [&](std::size_t k) -> const Prepared& {
    if (!cache[k]) {
      const auto& [frame, labels] = dataset[k];
      if (frame == nullptr || labels == nullptr) throw ContractError("training sample is missing data");
      if (frame->width != labels->width() || frame->height != labels->height()) {
        throw ContractError("training frame and label map differ in size");
      }
      Prepared p;
      p.features = extract_features(*frame);
      for (std::size_t i = 0; i < labels->pixel_count(); ++i) {
        if ((*labels)[i] != kIgnore) p.labeled.push_back(i);
      }
      cache[k] = std::move(p);
    }
    return *cache[k];
  };

  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (config.shuffle) std::shuffle(order.begin(), order.end(), rng);

  const std::size_t steps = config.iterations.value_or(dataset.size());
  std::vector<std::size_t> sample;
  for (std::size_t step = 0; step < steps; ++step) {
    const std::size_t k = order[step % order.size()];
    const Prepared& p = prepared(k);
    if (p.labeled.empty()) continue;

    std::span<const std::size_t> pixels = p.labeled;
    if (config.pixel_subsample != 0 && p.labeled.size() > config.pixel_subsample) {
      sample.clear();
      std::sample(p.labeled.begin(), p.labeled.end(), std::back_inserter(sample), config.pixel_subsample, rng);
      pixels = sample;
    }
    const LossGradient g = cross_entropy_gradient(out.weights, p.features, *dataset[k].labels, pixels);
    out.momentum = config.momentum * out.momentum - config.learning_rate * (g.gradient + config.weight_decay * out.weights);
    out.weights += out.momentum;
  }
  return out;
}

namespace {
constexpr std::array<char, 4> kParamMagic{'V', 'A', 'P', 'M'};
constexpr std::uint32_t kParamVersion = 1;
}  // namespace

void save_parameters(const ModelParameters& params, const std::filesystem::path& path) {
  auto out = detail::open_output(path);
  out.write(kParamMagic.data(), kParamMagic.size());
  detail::write_u32(out, kParamVersion);
  detail::write_u32(out, static_cast<std::uint32_t>(params.weights.rows()));
  detail::write_u32(out, static_cast<std::uint32_t>(params.weights.cols()));
  for (const MatrixX* m : {&params.weights, &params.momentum}) {
    for (Eigen::Index r = 0; r < m->rows(); ++r) {
      for (Eigen::Index c = 0; c < m->cols(); ++c) detail::write_f32(out, static_cast<float>((*m)(r, c)));
    }
  }
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

ModelParameters load_parameters(const std::filesystem::path& path) {
  auto in = detail::open_input(path);
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kParamMagic) {
    throw IoError("'" + path.string() + "' is not a VAPM parameter file");
  }
  const std::uint32_t version = detail::read_u32(in);
  if (version != kParamVersion) throw IoError("unsupported VAPM version " + std::to_string(version));
  const std::uint32_t k = detail::read_u32(in);
  const std::uint32_t d = detail::read_u32(in);
  if (k == 0 || d == 0 || k > 4096 || d > 4096) throw IoError("implausible VAPM shape");
  ModelParameters params(static_cast<int>(k), static_cast<int>(d));
  for (MatrixX* m : {&params.weights, &params.momentum}) {
    for (Eigen::Index r = 0; r < m->rows(); ++r) {
      for (Eigen::Index c = 0; c < m->cols(); ++c) (*m)(r, c) = detail::read_f32(in);
    }
  }
  return params;
}

}  // namespace vidadapt
