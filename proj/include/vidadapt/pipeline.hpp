#ifndef VIDADAPT_PIPELINE_HPP
#define VIDADAPT_PIPELINE_HPP

#include "vidadapt/adapt_batch.hpp"
#include "vidadapt/adapt_online.hpp"
#include "vidadapt/evaluation.hpp"
#include "vidadapt/external_segmenter.hpp"
#include "vidadapt/motion_combine.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <memory>

namespace vidadapt {

namespace fs = std::filesystem;

enum class ModelSource { kReference, kExternal };

/// Every knob of a pipeline run. Defaults are the recommended settings.
struct PipelineConfig {
  SelectionThresholds thresholds;
  std::size_t tau_b = 30;
  std::size_t tau_l = 10;
  std::size_t tau_s = 5;
  CombineConfig combine;
  TrainConfig train;
  std::vector<std::string> weak_labels;
  bool unsupervised = false;
  /// "builtin" or a directory of flow_%06d.flo files.
  std::string flows = "builtin";
  int morph_radius = 1;
  ModelSource model_source = ModelSource::kReference;
  fs::path model_path;
  fs::path endpoint;
  std::chrono::milliseconds timeout{std::chrono::minutes(10)};
  Preprocessing preprocessing;
  std::uint64_t seed = 0;
  bool flush_tail = false;
  fs::path classes;

  void validate() const;
  WeakLabelSet weak_set(const ClassCatalog& catalog) const;
  BatchOptions batch_options(const ClassCatalog& catalog) const;
  OnlineOptions online_options(const ClassCatalog& catalog) const;
};

std::unique_ptr<Segmenter> make_segmenter(const PipelineConfig& config, const ClassCatalog& catalog);

// JSON report schemas.
nlohmann::json to_json(const IoUReport& report);
nlohmann::json to_json(const BatchResult& result);
nlohmann::json to_json(const OnlineResult& result);
nlohmann::json to_json(const SelectionSequence& selection, std::span<const PairOverlaps> overlaps);
void write_json(const nlohmann::json& j, const fs::path& path);

/// Each run_* reads frame directories in frame_%06d.{png,ppm} form, writes
/// label maps to `out/labels/` and a JSON report, and throws on any invalid
/// input before writing outputs.
void run_infer(const PipelineConfig& config, const fs::path& frames_dir, const fs::path& out_dir);
BatchResult run_adapt_batch(const PipelineConfig& config, const fs::path& frames_dir, const fs::path& out_dir);
OnlineResult run_adapt_online(const PipelineConfig& config, const fs::path& frames_dir, const fs::path& out_dir);
SelectionSequence run_combine(const PipelineConfig& config, const fs::path& batch_labels, const fs::path& online_labels,
                              const fs::path& frames_dir, const fs::path& out_dir);
IoUReport run_eval(const fs::path& pred_labels, const fs::path& gt_dir, const fs::path& classes,
                   const fs::path& out_file);

struct SynthRequest {
  std::optional<fs::path> scene;          // scene spec JSON, else a benchmark scene
  std::uint64_t benchmark_seed = 0;
  std::uint64_t seed = 0;
  std::size_t gt_every = 1;
  bool pretrain = true;
};
/// Writes frames/, gt/, classes.txt, scene.json, weak_labels.txt and, unless
/// disabled, a pretrained reference model.vapm.
void run_synth(const SynthRequest& request, const fs::path& out_dir);

}  // namespace vidadapt

#endif  // VIDADAPT_PIPELINE_HPP
