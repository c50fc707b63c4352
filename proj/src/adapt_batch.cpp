#include "vidadapt/adapt_batch.hpp"

#include <algorithm>

namespace vidadapt {

const char* to_string(EntryKind kind) { return kind == EntryKind::kGlobal ? "global" : "local"; }

void SelfAdaptingDataset::add(DatasetEntry entry) {
  const std::size_t f = entry.frame;
  if (has_global(f) || has_local(f)) throw ContractError("frame " + std::to_string(f) + " already in dataset");
  (entry.kind == EntryKind::kGlobal ? global_frames_ : local_frames_).insert(f);
  entries_.push_back(std::move(entry));
}

bool WindowState::observe(std::size_t frame, Scalar local_confidence, const LabelMap& local_map) {
  if (!(local_confidence > best_confidence)) return false;
  best_confidence = local_confidence;
  best_frame = frame;
  best_local_map = local_map;
  return true;
}

WindowRecord flush_window(WindowState& state, SelfAdaptingDataset& dataset, std::size_t end_frame) {
  WindowRecord record;
  record.end_frame = end_frame;
  record.best_confidence = state.best_confidence;
  if (state.best_confidence > 0.0) {
    record.best_frame = state.best_frame;
    if (!dataset.has_global(*state.best_frame)) {
      dataset.add({*state.best_frame, EntryKind::kLocal, state.best_confidence, state.best_local_map});
      record.added = true;
    }
  }
  state.best_confidence = 0.0;
  return record;
}

namespace {

// Sequential fold over per-frame predictions.
class BatchSelector {
 public:
  explicit BatchSelector(const BatchOptions& options) : options_(options) {
    if (options.window_length == 0) throw ConfigError("window length must be positive");
    options.thresholds.validate();
    window_.window_length = options.window_length;
  }

  LabelMap observe(const ProbabilityVolume& prob) {
    const std::size_t f = next_frame_++;
    LabelMap labels = argmax_labels(prob);
    CandidateMaps maps = build_candidate_maps(prob, labels, options_.weak, options_.thresholds);
    result_.confidences.push_back({maps.global_confidence, maps.local_confidence});

    if (maps.global_confidence > 0.0) {
      result_.dataset.add({f, EntryKind::kGlobal, maps.global_confidence, std::move(maps.global_map)});
    }
    window_.observe(f, maps.local_confidence, maps.local_map);
    if ((f + 1) % window_.window_length == 0) {
      result_.windows.push_back(flush_window(window_, result_.dataset, f));
    }
    return labels;
  }

  BatchSelection finish() {
    if (options_.flush_tail && next_frame_ % window_.window_length != 0) {
      result_.windows.push_back(flush_window(window_, result_.dataset, next_frame_ - 1));
    }
    return std::move(result_);
  }

 private:
  const BatchOptions& options_;
  WindowState window_;
  std::size_t next_frame_ = 0;
  BatchSelection result_;
};

constexpr std::size_t kPredictChunk = 16;

template <typename Fn>
void for_each_prediction(Segmenter& model, std::span<const Image> video, Fn&& fn) {
  for (std::size_t begin = 0; begin < video.size(); begin += kPredictChunk) {
    const std::size_t count = std::min(kPredictChunk, video.size() - begin);
    std::vector<ProbabilityVolume> probs = model.predict(video.subspan(begin, count));
    if (probs.size() != count) throw ContractError("segmenter returned the wrong number of predictions");
    for (std::size_t k = 0; k < count; ++k) {
      const Image& frame = video[begin + k];
      if (probs[k].width != frame.width || probs[k].height != frame.height ||
          probs[k].num_classes() != model.num_classes()) {
        throw ContractError("segmenter prediction for frame " + std::to_string(begin + k) + " has the wrong shape");
      }
      fn(probs[k]);
    }
  }
}

}  // namespace

BatchSelection select_batch_dataset(std::span<const ProbabilityVolume> probabilities, const BatchOptions& options) {
  BatchSelector selector(options);
  for (const auto& prob : probabilities) selector.observe(prob);
  return selector.finish();
}

BatchResult run_batch(std::span<const Image> video, Segmenter& model, const BatchOptions& options) {
  if (video.empty()) throw ContractError("video has no frames");
  options.train.validate();

  BatchResult result;
  BatchSelector selector(options);
  for_each_prediction(model, video, [&](const ProbabilityVolume& prob) {
    result.baseline_labels.push_back(selector.observe(prob));
  });
  BatchSelection selection = selector.finish();
  result.dataset = std::move(selection.dataset);
  result.confidences = std::move(selection.confidences);
  result.windows = std::move(selection.windows);

  if (result.dataset.empty()) {
    result.labels = result.baseline_labels;
    return result;
  }

  std::vector<TrainingSample> samples;
  samples.reserve(result.dataset.size());
  for (const auto& entry : result.dataset.entries()) samples.push_back({&video[entry.frame], &entry.labels});
  model.fine_tune(samples, options.train);

  for_each_prediction(model, video, [&](const ProbabilityVolume& prob) {
    result.labels.push_back(argmax_labels(prob));
  });
  return result;
}

}  // namespace vidadapt
