#include "vidadapt/segmenter.hpp"

namespace vidadapt {

std::vector<ProbabilityVolume> ReferenceSegmenter::predict(std::span<const Image> frames) {
  std::vector<ProbabilityVolume> out;
  out.reserve(frames.size());
  for (const Image& frame : frames) out.push_back(vidadapt::predict(params_, frame));
  return out;
}

void ReferenceSegmenter::fine_tune(std::span<const TrainingSample> dataset, const TrainConfig& config) {
  params_ = sgd_fine_tune(params_, dataset, config);
}

}  // namespace vidadapt
