#ifndef VIDADAPT_EVALUATION_HPP
#define VIDADAPT_EVALUATION_HPP

#include "vidadapt/common.hpp"

#include <map>
#include <span>
#include <string>

namespace vidadapt {

/// Square-window binary dilation; pixels outside the image count as unset.
MaskArray dilate(const MaskArray& mask, int radius);
/// Square-window binary erosion; pixels outside the image count as set, so
/// the closing below never shrinks a mask at the border.
MaskArray erode(const MaskArray& mask, int radius);

/// Per-class closing with a (2r+1)^2 square, classes in ascending order, later
/// classes winning contested pixels. Radius 0 is the identity.
LabelMap refine_morphological(const LabelMap& labels, int radius = 1);

/// Intersection and union pixel counts of one class, skipping pixels where
/// the ground truth is IGNORE.
struct IoUCounts {
  std::size_t intersection = 0;
  std::size_t union_count = 0;

  IoUCounts& operator+=(const IoUCounts& o) {
    intersection += o.intersection;
    union_count += o.union_count;
    return *this;
  }
  Scalar iou() const {
    return union_count == 0 ? 1.0 : static_cast<Scalar>(intersection) / static_cast<Scalar>(union_count);
  }
};

IoUCounts class_counts(const LabelMap& pred, const LabelMap& gt, Label class_id);

inline Scalar class_iou(const LabelMap& pred, const LabelMap& gt, Label class_id) {
  return class_counts(pred, gt, class_id).iou();
}

/// Annotated frames only, keyed by 0-based frame position.
using GroundTruth = std::map<std::size_t, LabelMap>;

struct ClassScore {
  Label class_id = 0;
  std::string name;
  Scalar iou = 0.0;
  IoUCounts counts;
};

/// Pooled per-class IoU over all annotated frames. `per_class` holds the object
/// classes present in the ground truth; `mean_iou` is their plain mean.
struct IoUReport {
  std::vector<ClassScore> per_class;
  Scalar mean_iou = 0.0;
  Scalar background_iou = 1.0;
  std::size_t annotated_frames = 0;
};

/// Throws EvaluationError naming the first annotated frame without a prediction.
IoUReport evaluate_video(std::span<const LabelMap> predictions, const GroundTruth& gt, const ClassCatalog& catalog);

}  // namespace vidadapt

#endif  // VIDADAPT_EVALUATION_HPP
