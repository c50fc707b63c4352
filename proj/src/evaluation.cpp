#include "vidadapt/evaluation.hpp"

#include <algorithm>

namespace vidadapt {

namespace {

// Separable any/all over the (2r+1)^2 window clipped to the image, which is
// the same as padding with false (any) or true (all).
template <bool kAny>
MaskArray window_reduce(const MaskArray& mask, int radius) {
  const int h = static_cast<int>(mask.rows());
  const int w = static_cast<int>(mask.cols());
  MaskArray rows(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int x0 = std::max(0, x - radius);
      const int n = std::min(w - 1, x + radius) - x0 + 1;
      const auto seg = mask.row(y).segment(x0, n);
      rows(y, x) = kAny ? seg.any() : seg.all();
    }
  }
  MaskArray out(h, w);
  for (int y = 0; y < h; ++y) {
    const int y0 = std::max(0, y - radius);
    const int n = std::min(h - 1, y + radius) - y0 + 1;
    for (int x = 0; x < w; ++x) {
      const auto seg = rows.col(x).segment(y0, n);
      out(y, x) = kAny ? seg.any() : seg.all();
    }
  }
  return out;
}

}  // namespace

MaskArray dilate(const MaskArray& mask, int radius) {
  if (radius < 0) throw ContractError("radius must be >= 0");
  return radius == 0 ? mask : window_reduce<true>(mask, radius);
}

MaskArray erode(const MaskArray& mask, int radius) {
  if (radius < 0) throw ContractError("radius must be >= 0");
  return radius == 0 ? mask : window_reduce<false>(mask, radius);
}

LabelMap refine_morphological(const LabelMap& labels, int radius) {
  if (radius < 0) throw ContractError("radius must be >= 0");
  if (radius == 0) return labels;

  LabelMap out = labels;
  std::vector<bool> present(256, false);
  for (std::size_t i = 0; i < labels.pixel_count(); ++i) present[labels[i]] = true;
  for (int c = 1; c < kIgnore; ++c) {
    if (!present[c]) continue;
    const MaskArray closed = erode(dilate(labels.data == static_cast<Label>(c), radius), radius);
    out.data = closed.select(static_cast<Label>(c), out.data);
  }
  return out;
}

IoUCounts class_counts(const LabelMap& pred, const LabelMap& gt, Label class_id) {
  if (!same_size(pred, gt)) throw ContractError("prediction and ground truth differ in size");
  IoUCounts counts;
  for (std::size_t i = 0; i < gt.pixel_count(); ++i) {
    if (gt[i] == kIgnore) continue;
    const bool p = pred[i] == class_id;
    const bool g = gt[i] == class_id;
    counts.intersection += static_cast<std::size_t>(p && g);
    counts.union_count += static_cast<std::size_t>(p || g);
  }
  return counts;
}

IoUReport evaluate_video(std::span<const LabelMap> predictions, const GroundTruth& gt, const ClassCatalog& catalog) {
  const std::size_t k = catalog.size();
  std::vector<IoUCounts> pooled(k);
  std::vector<bool> present(k, false);
  for (const auto& [frame, truth] : gt) {
    if (frame >= predictions.size()) {
      throw EvaluationError("no prediction for annotated frame " + std::to_string(frame));
    }
    for (std::size_t i = 0; i < truth.pixel_count(); ++i) {
      const Label t = truth[i];
      if (t != kIgnore && t < k) present[t] = true;
      if (t != kIgnore && t >= k) {
        throw EvaluationError("ground truth of frame " + std::to_string(frame) + " has label outside the catalog");
      }
    }
    for (std::size_t c = 0; c < k; ++c) pooled[c] += class_counts(predictions[frame], truth, static_cast<Label>(c));
  }

  IoUReport report;
  report.annotated_frames = gt.size();
  report.background_iou = pooled[kBackground].iou();
  Scalar sum = 0.0;
  for (std::size_t c = 1; c < k; ++c) {
    if (!present[c]) continue;
    report.per_class.push_back({static_cast<Label>(c), catalog.name(c), pooled[c].iou(), pooled[c]});
    sum += report.per_class.back().iou;
  }
  report.mean_iou = report.per_class.empty() ? 0.0 : sum / static_cast<Scalar>(report.per_class.size());
  return report;
}

}  // namespace vidadapt
