#ifndef VIDADAPT_ADAPT_ONLINE_HPP
#define VIDADAPT_ADAPT_ONLINE_HPP

#include "vidadapt/adapt_batch.hpp"

namespace vidadapt {

struct MemoryEntry {
  std::size_t frame = 0;
  Scalar confidence = 0.0;
  LabelMap labels;
};

/// Long-term memory keeps the highest-confidence global maps (capacity
/// tau_l); short-term memory is a FIFO of local maps (capacity tau_s).
/// Both keep insertion order.
class OnlineMemory {
 public:
  explicit OnlineMemory(std::size_t long_capacity = 10, std::size_t short_capacity = 5);

  /// Inserts, then evicts the minimum-confidence entry while over capacity.
  /// Among equal minima the most recently inserted one goes, so the memory
  /// always equals the stable top-k of everything inserted.
  void insert_global(std::size_t frame, LabelMap labels, Scalar confidence);

  /// FIFO insert; skipped (returns false) if `frame` is in long-term memory.
  bool insert_local(std::size_t frame, LabelMap labels, Scalar confidence);

  bool long_term_contains(std::size_t frame) const;
  const std::vector<MemoryEntry>& long_term() const { return long_term_; }
  const std::vector<MemoryEntry>& short_term() const { return short_term_; }
  std::size_t long_capacity() const { return long_capacity_; }
  std::size_t short_capacity() const { return short_capacity_; }

 private:
  std::size_t long_capacity_;
  std::size_t short_capacity_;
  std::vector<MemoryEntry> long_term_;
  std::vector<MemoryEntry> short_term_;
};

struct OnlineOptions {
  SelectionThresholds thresholds;
  WeakLabelSet weak;
  TrainConfig train;
  std::size_t long_capacity = 10;   // tau_l
  std::size_t short_capacity = 5;   // tau_s
  std::size_t update_period = 30;   // tau_b
  /// Period of the local-best window; defaults to short_capacity.
  std::optional<std::size_t> local_window;
};

struct MemorySnapshot {
  std::size_t frame = 0;
  bool local_flush = false;
  bool update = false;
  std::vector<std::pair<std::size_t, Scalar>> long_term;   // (frame, confidence)
  std::vector<std::pair<std::size_t, Scalar>> short_term;
};

struct OnlineResult {
  std::vector<LabelMap> labels;  // as-you-go predictions
  std::vector<FrameConfidence> confidences;
  std::vector<MemorySnapshot> boundaries;
  std::size_t update_count = 0;      // boundaries reached
  std::size_t fine_tune_count = 0;   // boundaries with a nonempty training set
};

/// Streams the video, labeling each frame with the current model and
/// fine-tuning it on long-term then short-term memory every update_period
/// frames. Window arithmetic is 1-based as in run_batch.
OnlineResult run_online(std::span<const Image> video, Segmenter& model, const OnlineOptions& options);

}  // namespace vidadapt

#endif  // VIDADAPT_ADAPT_ONLINE_HPP
