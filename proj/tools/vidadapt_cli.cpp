// Command-line front end for the adaptation pipeline.
//
//   vidadapt infer        --frames DIR --out DIR
//   vidadapt adapt-batch  --frames DIR --out DIR
//   vidadapt adapt-online --frames DIR --out DIR
//   vidadapt combine      --batch DIR --online DIR [--frames DIR] --out DIR
//   vidadapt eval         --pred DIR --gt DIR --classes FILE --out FILE
//   vidadapt synth        [--scene FILE | --benchmark-seed N] --out DIR
//
// Shared options may also come from a key=value file passed with --config.

#include "vidadapt/pipeline.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

using namespace vidadapt;

void print_summary(const IoUReport& r) {
  for (const auto& c : r.per_class) std::cout << c.name << " " << c.iou << "\n";
  std::cout << "mean_iou " << r.mean_iou << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Video semantic segmentation with self-adapting models"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Key=value file with shared options");

  PipelineConfig cfg;
  std::string model_source = "reference";
  std::string weak_labels;
  long long timeout_s = 600;

  app.add_option("--classes", cfg.classes, "Class catalog, one name per line, background first");
  app.add_option("--model", cfg.model_path, "Reference model parameters (.vapm)");
  app.add_option("--model-source", model_source, "reference | external")
      ->check(CLI::IsMember({"reference", "external"}));
  app.add_option("--endpoint", cfg.endpoint, "Exchange directory of the external model");
  app.add_option("--timeout", timeout_s, "External request timeout in seconds")->check(CLI::PositiveNumber);
  app.add_option("--t-o", cfg.thresholds.object, "Object region confidence threshold")->capture_default_str();
  app.add_option("--t-b", cfg.thresholds.background, "Background confidence threshold")->capture_default_str();
  app.add_option("--tau-b", cfg.tau_b, "Window length and update period")->capture_default_str();
  app.add_option("--tau-l", cfg.tau_l, "Long-term memory capacity")->capture_default_str();
  app.add_option("--tau-s", cfg.tau_s, "Short-term memory capacity")->capture_default_str();
  app.add_option("--epsilon", cfg.combine.epsilon, "Model switching penalty")->capture_default_str();
  app.add_option("--lr", cfg.train.learning_rate, "Fine-tuning learning rate")->capture_default_str();
  app.add_option("--momentum", cfg.train.momentum, "SGD momentum")->capture_default_str();
  app.add_option("--weight-decay", cfg.train.weight_decay, "SGD weight decay")->capture_default_str();
  app.add_option("--iterations", cfg.train.iterations, "SGD steps per fine-tune (default: dataset size)");
  app.add_option("--pixel-subsample", cfg.train.pixel_subsample, "Pixels per step, 0 for all")->capture_default_str();
  app.add_option("--weak-labels", weak_labels, "Comma-separated object classes present in the video");
  app.add_flag("--unsupervised", cfg.unsupervised, "Accept any object class");
  app.add_option("--flows", cfg.flows, "'builtin' or a directory of flow_%06d.flo files")->capture_default_str();
  app.add_option("--seed", cfg.seed, "Random seed")->capture_default_str();
  app.add_flag("--flush-tail", cfg.flush_tail, "Close a trailing partial window in batch mode");
  app.add_option("--morph-radius", cfg.morph_radius, "Closing radius for emitted labels, 0 to disable")
      ->capture_default_str();

  fs::path frames, out;
  auto* infer = app.add_subcommand("infer", "Segment with the unadapted model");
  auto* batch = app.add_subcommand("adapt-batch", "Self-adapt over the whole video, then segment");
  auto* online = app.add_subcommand("adapt-online", "Self-adapt causally while segmenting");
  for (auto* sub : {infer, batch, online}) {
    sub->fallthrough();
    sub->add_option("--frames", frames, "Directory of frame_%06d images")->required()->check(CLI::ExistingDirectory);
    sub->add_option("--out", out, "Output directory")->required();
  }

  fs::path batch_dir, online_dir;
  auto* combine = app.add_subcommand("combine", "Pick batch or online labels per frame");
  combine->fallthrough();
  combine->add_option("--batch", batch_dir, "Batch label directory")->required()->check(CLI::ExistingDirectory);
  combine->add_option("--online", online_dir, "Online label directory")->required()->check(CLI::ExistingDirectory);
  combine->add_option("--frames", frames, "Frames, needed for builtin flow");
  combine->add_option("--out", out, "Output directory")->required();

  fs::path pred, gt;
  auto* eval = app.add_subcommand("eval", "Pooled per-class IoU against annotations");
  eval->fallthrough();
  eval->add_option("--pred", pred, "Predicted label directory")->required()->check(CLI::ExistingDirectory);
  eval->add_option("--gt", gt, "Annotation directory")->required()->check(CLI::ExistingDirectory);
  eval->add_option("--out", out, "Report file")->required();

  SynthRequest synth_request;
  fs::path scene;
  bool no_pretrain = false;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic annotated video");
  synth->fallthrough();
  synth->add_option("--scene", scene, "Scene description JSON")->check(CLI::ExistingFile);
  synth->add_option("--benchmark-seed", synth_request.benchmark_seed, "Seed of the random benchmark scene");
  synth->add_option("--gt-every", synth_request.gt_every, "Annotate every n-th frame")->capture_default_str();
  synth->add_flag("--no-pretrain", no_pretrain, "Skip writing a pretrained model");
  synth->add_option("--out", out, "Output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    cfg.model_source = model_source == "external" ? ModelSource::kExternal : ModelSource::kReference;
    cfg.timeout = std::chrono::seconds(timeout_s);
    std::stringstream ss(weak_labels);
    for (std::string name; std::getline(ss, name, ',');) {
      if (!name.empty()) cfg.weak_labels.push_back(name);
    }

    if (*infer) {
      run_infer(cfg, frames, out);
    } else if (*batch) {
      const BatchResult r = run_adapt_batch(cfg, frames, out);
      std::cout << "dataset_size " << r.dataset.size() << "\n";
    } else if (*online) {
      const OnlineResult r = run_adapt_online(cfg, frames, out);
      std::cout << "updates " << r.update_count << " fine_tunes " << r.fine_tune_count << "\n";
    } else if (*combine) {
      if (cfg.flows == "builtin" && frames.empty()) throw ConfigError("builtin flow needs --frames");
      const SelectionSequence s = run_combine(cfg, batch_dir, online_dir, frames, out);
      std::cout << "objective " << s.objective << "\n";
    } else if (*eval) {
      if (cfg.classes.empty()) throw ConfigError("eval needs --classes");
      print_summary(run_eval(pred, gt, cfg.classes, out));
    } else if (*synth) {
      if (!scene.empty()) synth_request.scene = scene;
      synth_request.seed = cfg.seed;
      synth_request.pretrain = !no_pretrain;
      run_synth(synth_request, out);
    }
  } catch (const std::exception& e) {
    std::cerr << "vidadapt: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
