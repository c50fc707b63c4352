#ifndef VIDADAPT_ADAPT_BATCH_HPP
#define VIDADAPT_ADAPT_BATCH_HPP

#include "vidadapt/ce_select.hpp"
#include "vidadapt/frame_model.hpp"
#include "vidadapt/segmenter.hpp"

#include <set>

namespace vidadapt {

enum class EntryKind { kGlobal, kLocal };

const char* to_string(EntryKind kind);

struct DatasetEntry {
  std::size_t frame = 0;  // 0-based position in the video
  EntryKind kind = EntryKind::kGlobal;
  Scalar confidence = 0.0;
  LabelMap labels;
};

/// Pseudo-labeled frames collected for fine-tuning, in insertion order.
class SelfAdaptingDataset {
 public:
  /// Throws ContractError on a duplicate (frame, kind) or when a frame would
  /// carry both a global and a local entry.
  void add(DatasetEntry entry);

  bool has_global(std::size_t frame) const { return global_frames_.count(frame) != 0; }
  bool has_local(std::size_t frame) const { return local_frames_.count(frame) != 0; }
  bool empty() const { return entries_.empty(); }
  std::size_t size() const { return entries_.size(); }
  const std::vector<DatasetEntry>& entries() const { return entries_; }

 private:
  std::vector<DatasetEntry> entries_;
  std::set<std::size_t> global_frames_;
  std::set<std::size_t> local_frames_;
};

/// Running best locally-confident frame of the current window.
struct WindowState {
  Scalar best_confidence = 0.0;
  std::optional<std::size_t> best_frame;
  LabelMap best_local_map;
  std::size_t window_length = 30;

  /// Strict improvement only, so the earliest maximum wins.
  bool observe(std::size_t frame, Scalar local_confidence, const LabelMap& local_map);
};

/// Record of one window boundary, kept for auditing.
struct WindowRecord {
  std::size_t end_frame = 0;
  std::optional<std::size_t> best_frame;
  Scalar best_confidence = 0.0;
  bool added = false;
};

/// Closes a window: adds the best frame's local map unless that frame already
/// has a global entry or no candidate was seen, then resets the confidence.
WindowRecord flush_window(WindowState& state, SelfAdaptingDataset& dataset, std::size_t end_frame);

struct FrameConfidence {
  Scalar global = 0.0;
  Scalar local = 0.0;
};

struct BatchOptions {
  SelectionThresholds thresholds;
  WeakLabelSet weak;
  TrainConfig train;
  std::size_t window_length = 30;  // tau_b
  /// Also flush a trailing partial window at the end of the video.
  bool flush_tail = false;
};

struct BatchResult {
  std::vector<LabelMap> labels;           // predictions of the adapted model
  std::vector<LabelMap> baseline_labels;  // predictions of the original model
  SelfAdaptingDataset dataset;
  std::vector<FrameConfidence> confidences;
  std::vector<WindowRecord> windows;
};

/// Scans the video with the current model, collects the self-adapting
/// dataset, fine-tunes `model` once on it and relabels every frame.
/// Window arithmetic is 1-based: frame position p closes a window when
/// (p + 1) % window_length == 0.
BatchResult run_batch(std::span<const Image> video, Segmenter& model, const BatchOptions& options);

/// The selection phase alone, on precomputed probabilities.
struct BatchSelection {
  SelfAdaptingDataset dataset;
  std::vector<FrameConfidence> confidences;
  std::vector<WindowRecord> windows;
};
BatchSelection select_batch_dataset(std::span<const ProbabilityVolume> probabilities, const BatchOptions& options);

}  // namespace vidadapt

#endif  // VIDADAPT_ADAPT_BATCH_HPP
