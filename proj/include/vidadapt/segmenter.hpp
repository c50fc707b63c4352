#ifndef VIDADAPT_SEGMENTER_HPP
#define VIDADAPT_SEGMENTER_HPP

#include "vidadapt/common.hpp"
#include "vidadapt/frame_model.hpp"

#include <memory>
#include <span>

namespace vidadapt {

/// Anything that turns frames into class probabilities and can be adapted
/// on pseudo-labeled frames. The adaptation drivers only talk to this.
class Segmenter {
 public:
  virtual ~Segmenter() = default;

  virtual int num_classes() const = 0;
  virtual std::vector<ProbabilityVolume> predict(std::span<const Image> frames) = 0;
  virtual void fine_tune(std::span<const TrainingSample> dataset, const TrainConfig& config) = 0;

  ProbabilityVolume predict(const Image& frame) { return std::move(predict(std::span(&frame, 1)).front()); }
};

/// In-process linear softmax classifier.
class ReferenceSegmenter final : public Segmenter {
 public:
  explicit ReferenceSegmenter(ModelParameters params) : params_(std::move(params)) {
    params_.validate(params_.num_classes());
  }

  int num_classes() const override { return params_.num_classes(); }
  std::vector<ProbabilityVolume> predict(std::span<const Image> frames) override;
  void fine_tune(std::span<const TrainingSample> dataset, const TrainConfig& config) override;

  using Segmenter::predict;

  const ModelParameters& parameters() const { return params_; }

 private:
  ModelParameters params_;
};

}  // namespace vidadapt

#endif  // VIDADAPT_SEGMENTER_HPP
