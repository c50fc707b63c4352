#include "vidadapt/pipeline.hpp"

#include "vidadapt/io.hpp"
#include "vidadapt/synth.hpp"

#include <fstream>

namespace vidadapt {

using nlohmann::json;

void PipelineConfig::validate() const {
  thresholds.validate();
  train.validate();
  if (tau_b == 0 || tau_l == 0 || tau_s == 0) throw ConfigError("periods and capacities must be positive");
  if (!(combine.epsilon >= 0.0)) throw ConfigError("epsilon must be >= 0");
  if (morph_radius < 0) throw ConfigError("morphology radius must be >= 0");
  if (model_source == ModelSource::kReference && model_path.empty()) {
    throw ConfigError("reference model source needs --model <file.vapm>");
  }
  if (model_source == ModelSource::kExternal && endpoint.empty()) {
    throw ConfigError("external model source needs --endpoint <directory>");
  }
  if (classes.empty()) throw ConfigError("a class catalog (--classes) is required");
}

WeakLabelSet PipelineConfig::weak_set(const ClassCatalog& catalog) const {
  WeakLabelSet weak;
  weak.unsupervised = unsupervised;
  for (const auto& name : weak_labels) {
    const auto id = catalog.index_of(name);
    if (!id || *id == kBackground) throw ConfigError("weak label '" + name + "' is not an object class of the catalog");
    weak.classes.insert(*id);
  }
  if (!unsupervised && weak.classes.empty()) {
    throw ConfigError("no weak labels given; pass --weak-labels or --unsupervised");
  }
  return weak;
}

BatchOptions PipelineConfig::batch_options(const ClassCatalog& catalog) const {
  BatchOptions o;
  o.thresholds = thresholds;
  o.weak = weak_set(catalog);
  o.train = train;
  o.train.seed = seed;
  o.window_length = tau_b;
  o.flush_tail = flush_tail;
  return o;
}

OnlineOptions PipelineConfig::online_options(const ClassCatalog& catalog) const {
  OnlineOptions o;
  o.thresholds = thresholds;
  o.weak = weak_set(catalog);
  o.train = train;
  o.train.seed = seed;
  o.long_capacity = tau_l;
  o.short_capacity = tau_s;
  o.update_period = tau_b;
  return o;
}

std::unique_ptr<Segmenter> make_segmenter(const PipelineConfig& config, const ClassCatalog& catalog) {
  const int k = static_cast<int>(catalog.size());
  if (config.model_source == ModelSource::kExternal) {
    ExchangeOptions options;
    options.workdir = config.endpoint;
    options.timeout = config.timeout;
    options.preprocessing = config.preprocessing;
    return std::make_unique<ExternalSegmenter>(options, k);
  }
  ModelParameters params = load_parameters(config.model_path);
  params.validate(k);
  return std::make_unique<ReferenceSegmenter>(std::move(params));
}

json to_json(const IoUReport& report) {
  json per_class = json::array();
  for (const auto& c : report.per_class) {
    per_class.push_back({{"class_id", c.class_id},
                         {"name", c.name},
                         {"iou", c.iou},
                         {"intersection", c.counts.intersection},
                         {"union", c.counts.union_count}});
  }
  return {{"per_class", per_class},
          {"mean_iou", report.mean_iou},
          {"background_iou", report.background_iou},
          {"annotated_frames", report.annotated_frames}};
}

namespace {

json dataset_json(const SelfAdaptingDataset& dataset) {
  json entries = json::array();
  for (const auto& e : dataset.entries()) {
    entries.push_back({{"frame", e.frame}, {"kind", to_string(e.kind)}, {"confidence", e.confidence}});
  }
  return entries;
}

json confidences_json(const std::vector<FrameConfidence>& confidences) {
  json frames = json::array();
  for (std::size_t f = 0; f < confidences.size(); ++f) {
    frames.push_back({{"frame", f}, {"global_confidence", confidences[f].global}, {"local_confidence", confidences[f].local}});
  }
  return frames;
}

json memory_json(const std::vector<std::pair<std::size_t, Scalar>>& entries) {
  json out = json::array();
  for (const auto& [frame, confidence] : entries) out.push_back({{"frame", frame}, {"confidence", confidence}});
  return out;
}

std::vector<Image> load_video(const fs::path& frames_dir) { return load_frames(scan_video(frames_dir)); }

std::vector<LabelMap> refined(std::vector<LabelMap> labels, int radius) {
  if (radius > 0) {
    for (auto& l : labels) l = refine_morphological(l, radius);
  }
  return labels;
}

void save_model_if_reference(const Segmenter& model, const fs::path& path) {
  if (const auto* ref = dynamic_cast<const ReferenceSegmenter*>(&model)) save_parameters(ref->parameters(), path);
}

}  // namespace

json to_json(const BatchResult& result) {
  json windows = json::array();
  for (const auto& w : result.windows) {
    json jw{{"end_frame", w.end_frame}, {"best_confidence", w.best_confidence}, {"added", w.added}};
    jw["best_frame"] = w.best_frame ? json(*w.best_frame) : json(nullptr);
    windows.push_back(jw);
  }
  return {{"mode", "batch"},
          {"dataset_size", result.dataset.size()},
          {"dataset", dataset_json(result.dataset)},
          {"windows", windows},
          {"frames", confidences_json(result.confidences)}};
}

json to_json(const OnlineResult& result) {
  json boundaries = json::array();
  for (const auto& b : result.boundaries) {
    boundaries.push_back({{"frame", b.frame},
                          {"local_flush", b.local_flush},
                          {"update", b.update},
                          {"long_term", memory_json(b.long_term)},
                          {"short_term", memory_json(b.short_term)}});
  }
  return {{"mode", "online"},
          {"update_count", result.update_count},
          {"fine_tune_count", result.fine_tune_count},
          {"boundaries", boundaries},
          {"frames", confidences_json(result.confidences)}};
}

json to_json(const SelectionSequence& selection, std::span<const PairOverlaps> overlaps) {
  json choices = json::array();
  std::size_t batch_count = 0;
  for (auto c : selection.choices) {
    choices.push_back(to_string(c));
    batch_count += c == ModelChoice::kBatch ? 1 : 0;
  }
  json pairs = json::array();
  for (const auto& o : overlaps) {
    pairs.push_back({{"batch_batch", o(0, 0)}, {"batch_online", o(0, 1)}, {"online_batch", o(1, 0)}, {"online_online", o(1, 1)}});
  }
  return {{"choices", choices},
          {"objective", selection.objective},
          {"batch_frames", batch_count},
          {"online_frames", selection.choices.size() - batch_count},
          {"overlaps", pairs}};
}

void write_json(const json& j, const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << j.dump(2) << '\n';
}

void run_infer(const PipelineConfig& config, const fs::path& frames_dir, const fs::path& out_dir) {
  config.validate();
  const ClassCatalog catalog = read_catalog(config.classes);
  const std::vector<Image> frames = load_video(frames_dir);
  auto model = make_segmenter(config, catalog);
  std::vector<LabelMap> labels;
  for (const auto& prob : model->predict(frames)) labels.push_back(argmax_labels(prob));
  write_label_sequence(refined(std::move(labels), config.morph_radius), out_dir / "labels");
}

BatchResult run_adapt_batch(const PipelineConfig& config, const fs::path& frames_dir, const fs::path& out_dir) {
  config.validate();
  const ClassCatalog catalog = read_catalog(config.classes);
  const BatchOptions options = config.batch_options(catalog);
  const std::vector<Image> frames = load_video(frames_dir);
  auto model = make_segmenter(config, catalog);
  BatchResult result = run_batch(frames, *model, options);
  write_label_sequence(refined(result.labels, config.morph_radius), out_dir / "labels");
  write_json(to_json(result), out_dir / "report.json");
  save_model_if_reference(*model, out_dir / "model.vapm");
  return result;
}

OnlineResult run_adapt_online(const PipelineConfig& config, const fs::path& frames_dir, const fs::path& out_dir) {
  config.validate();
  const ClassCatalog catalog = read_catalog(config.classes);
  const OnlineOptions options = config.online_options(catalog);
  const std::vector<Image> frames = load_video(frames_dir);
  auto model = make_segmenter(config, catalog);
  OnlineResult result = run_online(frames, *model, options);
  write_label_sequence(refined(result.labels, config.morph_radius), out_dir / "labels");
  write_json(to_json(result), out_dir / "report.json");
  save_model_if_reference(*model, out_dir / "model.vapm");
  return result;
}

SelectionSequence run_combine(const PipelineConfig& config, const fs::path& batch_labels, const fs::path& online_labels,
                              const fs::path& frames_dir, const fs::path& out_dir) {
  if (!(config.combine.epsilon >= 0.0)) throw ConfigError("epsilon must be >= 0");
  const std::vector<LabelMap> batch = read_label_sequence(batch_labels);
  const std::vector<LabelMap> online = read_label_sequence(online_labels);
  if (batch.size() != online.size()) {
    throw ContractError("batch has " + std::to_string(batch.size()) + " frames but online has " +
                        std::to_string(online.size()));
  }
  for (std::size_t f = 0; f < batch.size(); ++f) {
    if (!same_size(batch[f], online[f]) || !same_size(batch[f], batch.front())) {
      throw ContractError("label maps of frame " + std::to_string(f) + " differ in size");
    }
  }

  std::vector<FlowField> flows;
  if (config.flows == "builtin") {
    const std::vector<Image> frames = load_video(frames_dir);
    if (frames.size() != batch.size()) throw ContractError("frame count does not match the label sequences");
    for (std::size_t f = 0; f + 1 < frames.size(); ++f) flows.push_back(estimate_flow(frames[f], frames[f + 1]));
  } else {
    for (std::size_t f = 0; f + 1 < batch.size(); ++f) {
      char name[32];
      std::snprintf(name, sizeof(name), "flow_%06zu.flo", f);
      FlowField flow = read_flo(fs::path(config.flows) / name);
      if (flow.width != batch[f].width() || flow.height != batch[f].height()) {
        throw ContractError(std::string(name) + " does not match the frame size");
      }
      flows.push_back(std::move(flow));
    }
  }

  const std::vector<PairOverlaps> overlaps = pair_overlaps(batch, online, flows);
  SelectionSequence selection = select_models(overlaps, config.combine);
  write_label_sequence(apply_selection(batch, online, selection), out_dir / "labels");
  write_json(to_json(selection, overlaps), out_dir / "selection.json");
  return selection;
}

IoUReport run_eval(const fs::path& pred_labels, const fs::path& gt_dir, const fs::path& classes,
                   const fs::path& out_file) {
  const ClassCatalog catalog = read_catalog(classes);
  const GroundTruth gt = load_ground_truth(gt_dir);
  std::vector<LabelMap> predictions;
  if (!fs::is_directory(pred_labels)) throw IoError("'" + pred_labels.string() + "' is not a directory");
  // Predictions may be sparse; only annotated frames are required.
  const std::size_t last = gt.rbegin()->first;
  predictions.resize(last + 1);
  for (const auto& [frame, truth] : gt) {
    const fs::path p = pred_labels / frame_file_name(frame);
    if (!fs::exists(p)) throw EvaluationError("no prediction for annotated frame " + std::to_string(frame));
    predictions[frame] = read_label_map(p);
    if (!same_size(predictions[frame], truth)) {
      throw EvaluationError("prediction of frame " + std::to_string(frame) + " differs in size from its annotation");
    }
  }
  IoUReport report = evaluate_video(predictions, gt, catalog);
  write_json(to_json(report), out_file);
  return report;
}

void run_synth(const SynthRequest& request, const fs::path& out_dir) {
  const SceneSpec spec = request.scene ? read_scene_spec(*request.scene) : benchmark_scene(request.benchmark_seed);
  if (request.gt_every == 0) throw ConfigError("gt_every must be positive");
  const SyntheticVideo video = generate_video(spec, request.seed);

  fs::create_directories(out_dir / "frames");
  fs::create_directories(out_dir / "gt");
  for (std::size_t f = 0; f < video.frames.size(); ++f) {
    write_image(video.frames[f], out_dir / "frames" / frame_file_name(f));
    if (f % request.gt_every == 0) write_label_map(video.ground_truth[f], out_dir / "gt" / frame_file_name(f));
  }
  write_catalog(video.catalog, out_dir / "classes.txt");
  write_scene_spec(spec, out_dir / "scene.json");

  std::set<Label> present;
  for (const auto& o : spec.objects) present.insert(o.class_id);
  std::ofstream weak(out_dir / "weak_labels.txt", std::ios::trunc);
  bool first = true;
  for (Label c : present) {
    weak << (first ? "" : ",") << video.catalog.name(c);
    first = false;
  }
  weak << '\n';

  if (request.pretrain) {
    BenchmarkPalette palette{spec.classes, spec.palette, {}};
    save_parameters(pretrain_reference_model(palette, request.seed), out_dir / "model.vapm");
  }
}

}  // namespace vidadapt
