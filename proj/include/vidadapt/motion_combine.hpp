#ifndef VIDADAPT_MOTION_COMBINE_HPP
#define VIDADAPT_MOTION_COMBINE_HPP

#include "vidadapt/common.hpp"

#include <Eigen/Core>

#include <filesystem>
#include <span>

namespace vidadapt {

/// Dense displacement between frame f and f+1. Column i holds (dx, dy) such
/// that pixel i = (x, y) of frame f+1 came from (x + dx, y + dy) in frame f.
struct FlowField {
  int width = 0;
  int height = 0;
  Matrix2X displacement;

  FlowField() = default;
  FlowField(int w, int h) : width(w), height(h), displacement(Matrix2X::Zero(2, static_cast<Eigen::Index>(w) * h)) {}
};

enum class ModelChoice : std::uint8_t { kBatch = 0, kOnline = 1 };

const char* to_string(ModelChoice choice);

struct CombineConfig {
  Scalar epsilon = 0.02;
};

/// Object overlaps between consecutive frames: (from, to) indexed by
/// ModelChoice, e.g. o(kBatch, kOnline) compares the warped batch map of
/// frame f with the online map of frame f+1.
using PairOverlaps = Eigen::Matrix<Scalar, 2, 2>;

struct SelectionSequence {
  std::vector<ModelChoice> choices;
  Scalar objective = 0.0;
};

/// Coarse-to-fine block matching; returns backward flow from `next` to `previous`.
FlowField estimate_flow(const Image& previous, const Image& next);

/// Nearest-neighbour backward warp; samples falling outside become IGNORE.
LabelMap warp_labels(const LabelMap& labels, const FlowField& flow);

/// Class-aware IoU of object pixels; 1 when neither map has object pixels.
Scalar object_overlap(const LabelMap& warped, const LabelMap& next);

inline Scalar consistency_score(ModelChoice from, ModelChoice to, Scalar overlap, const CombineConfig& config) {
  return (from == ModelChoice::kBatch && to == ModelChoice::kBatch) ? overlap + config.epsilon : overlap;
}

/// Sum of consistency terms for a fixed assignment, accumulated front to back.
Scalar selection_objective(std::span<const ModelChoice> choices, std::span<const PairOverlaps> overlaps,
                           const CombineConfig& config);

/// Exact maximizer of the summed consistency (two-state dynamic program).
/// `overlaps` has one entry per consecutive pair; ties prefer batch.
SelectionSequence select_models(std::span<const PairOverlaps> overlaps, const CombineConfig& config);

/// The four overlaps for every consecutive pair of frames.
std::vector<PairOverlaps> pair_overlaps(std::span<const LabelMap> batch, std::span<const LabelMap> online,
                                        std::span<const FlowField> flows);

SelectionSequence select_models(std::span<const LabelMap> batch, std::span<const LabelMap> online,
                                std::span<const FlowField> flows, const CombineConfig& config);

/// Frame-wise pick of the batch or online map.
std::vector<LabelMap> apply_selection(std::span<const LabelMap> batch, std::span<const LabelMap> online,
                                      const SelectionSequence& selection);

// Middlebury .flo files.
FlowField read_flo(const std::filesystem::path& path);
void write_flo(const FlowField& flow, const std::filesystem::path& path);

}  // namespace vidadapt

#endif  // VIDADAPT_MOTION_COMBINE_HPP
