#include "vidadapt/adapt_online.hpp"

#include <algorithm>

namespace vidadapt {

OnlineMemory::OnlineMemory(std::size_t long_capacity, std::size_t short_capacity)
    : long_capacity_(long_capacity), short_capacity_(short_capacity) {
  if (long_capacity == 0 || short_capacity == 0) throw ConfigError("memory capacities must be positive");
}

void OnlineMemory::insert_global(std::size_t frame, LabelMap labels, Scalar confidence) {
  if (!(confidence > 0.0)) throw ContractError("global maps enter memory only with positive confidence");
  long_term_.push_back({frame, confidence, std::move(labels)});
  while (long_term_.size() > long_capacity_) {
    // Last minimum in insertion order.
    auto victim = long_term_.begin();
    for (auto it = long_term_.begin(); it != long_term_.end(); ++it) {
      if (it->confidence <= victim->confidence) victim = it;
    }
    long_term_.erase(victim);
  }
}

bool OnlineMemory::insert_local(std::size_t frame, LabelMap labels, Scalar confidence) {
  if (long_term_contains(frame)) return false;
  short_term_.push_back({frame, confidence, std::move(labels)});
  while (short_term_.size() > short_capacity_) short_term_.erase(short_term_.begin());
  return true;
}

bool OnlineMemory::long_term_contains(std::size_t frame) const {
  return std::any_of(long_term_.begin(), long_term_.end(), [&](const MemoryEntry& e) { return e.frame == frame; });
}

namespace {

std::vector<std::pair<std::size_t, Scalar>> summarize(const std::vector<MemoryEntry>& entries) {
  std::vector<std::pair<std::size_t, Scalar>> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.emplace_back(e.frame, e.confidence);
  return out;
}

}  // namespace

OnlineResult run_online(std::span<const Image> video, Segmenter& model, const OnlineOptions& options) {
  if (video.empty()) throw ContractError("video has no frames");
  options.thresholds.validate();
  options.train.validate();
  const std::size_t local_window = options.local_window.value_or(options.short_capacity);
  if (local_window == 0 || options.update_period == 0) throw ConfigError("periods must be positive");

  OnlineMemory memory(options.long_capacity, options.short_capacity);
  WindowState window;
  window.window_length = local_window;
  OnlineResult result;

  for (std::size_t f = 0; f < video.size(); ++f) {
    const ProbabilityVolume prob = model.predict(video[f]);
    if (prob.width != video[f].width || prob.height != video[f].height || prob.num_classes() != model.num_classes()) {
      throw ContractError("segmenter prediction for frame " + std::to_string(f) + " has the wrong shape");
    }
    LabelMap labels = argmax_labels(prob);
    CandidateMaps maps = build_candidate_maps(prob, labels, options.weak, options.thresholds);
    result.labels.push_back(std::move(labels));
    result.confidences.push_back({maps.global_confidence, maps.local_confidence});

    if (maps.global_confidence > 0.0) memory.insert_global(f, std::move(maps.global_map), maps.global_confidence);
    window.observe(f, maps.local_confidence, maps.local_map);

    const bool local_flush = (f + 1) % local_window == 0;
    const bool update = (f + 1) % options.update_period == 0;
    if (local_flush) {
      if (window.best_confidence > 0.0) {
        memory.insert_local(*window.best_frame, window.best_local_map, window.best_confidence);
      }
      window.best_confidence = 0.0;
    }
    if (update) {
      std::vector<TrainingSample> samples;
      for (const auto* part : {&memory.long_term(), &memory.short_term()}) {
        for (const auto& e : *part) samples.push_back({&video[e.frame], &e.labels});
      }
      if (!samples.empty()) {
        TrainConfig train = options.train;
        train.seed += result.update_count;
        model.fine_tune(samples, train);
        ++result.fine_tune_count;
      }
      ++result.update_count;
    }
    if (local_flush || update) {
      result.boundaries.push_back({f, local_flush, update, summarize(memory.long_term()), summarize(memory.short_term())});
    }
  }
  return result;
}

}  // namespace vidadapt
