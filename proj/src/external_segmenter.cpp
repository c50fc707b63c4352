#include "vidadapt/external_segmenter.hpp"

#include "binary_io.hpp"
#include "vidadapt/io.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <thread>

namespace vidadapt {

using nlohmann::json;

namespace {

constexpr const char* kRequest = "request.json";
constexpr const char* kActiveRequest = "request.active.json";
constexpr const char* kDone = "done.json";
constexpr const char* kError = "error.json";

fs::path sidecar_path(const fs::path& path) {
  fs::path p = path;
  return p.replace_extension(".json");
}

void write_json_atomic(const json& j, const fs::path& path) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw IoError("cannot write '" + tmp.string() + "'");
    out << j.dump(2) << '\n';
  }
  fs::rename(tmp, path);
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw MalformedResponse("cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw MalformedResponse("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

void reset_directory(const fs::path& dir) {
  fs::remove_all(dir);
  fs::create_directories(dir);
}

}  // namespace

void write_probability_volume(const ProbabilityVolume& prob, const fs::path& path) {
  {
    auto out = detail::open_output(path);
    for (Eigen::Index k = 0; k < prob.probs.rows(); ++k) {
      for (Eigen::Index i = 0; i < prob.probs.cols(); ++i) detail::write_f32(out, static_cast<float>(prob.probs(k, i)));
    }
    if (!out) throw IoError("failed writing '" + path.string() + "'");
  }
  const json sidecar{{"width", prob.width},
                     {"height", prob.height},
                     {"num_classes", prob.num_classes()},
                     {"dtype", "f32le"},
                     {"layout", "planar"}};
  std::ofstream side(sidecar_path(path), std::ios::trunc);
  side << sidecar.dump(2) << '\n';
  if (!side) throw IoError("failed writing sidecar for '" + path.string() + "'");
}

ProbabilityVolume read_probability_volume(const fs::path& path, Scalar tolerance) {
  const json sidecar = read_json(sidecar_path(path));
  int width = 0;
  int height = 0;
  int classes = 0;
  try {
    width = sidecar.at("width").get<int>();
    height = sidecar.at("height").get<int>();
    classes = sidecar.at("num_classes").get<int>();
    if (sidecar.at("dtype").get<std::string>() != "f32le" || sidecar.at("layout").get<std::string>() != "planar") {
      throw MalformedResponse("'" + path.string() + "' must be planar f32le");
    }
  } catch (const json::exception& e) {
    throw MalformedResponse("malformed sidecar for '" + path.string() + "': " + e.what());
  }
  if (width < 1 || height < 1 || classes < 2) throw MalformedResponse("'" + path.string() + "' has invalid dimensions");
  if (!fs::exists(path)) throw MalformedResponse("missing probability file '" + path.string() + "'");
  const auto expected = static_cast<std::uintmax_t>(width) * height * classes * 4;
  if (fs::file_size(path) != expected) {
    throw MalformedResponse("'" + path.string() + "' has " + std::to_string(fs::file_size(path)) + " bytes, expected " +
                            std::to_string(expected));
  }
  ProbabilityVolume prob(width, height, classes);
  auto in = detail::open_input(path);
  for (Eigen::Index k = 0; k < prob.probs.rows(); ++k) {
    for (Eigen::Index i = 0; i < prob.probs.cols(); ++i) prob.probs(k, i) = detail::read_f32(in);
  }
  if (auto bad = prob.find_invalid_pixel(tolerance)) {
    throw NormalizationError("'" + path.string() + "' pixel " + std::to_string(*bad) + " has channel sum " +
                             std::to_string(prob.probs.col(static_cast<Eigen::Index>(*bad)).sum()) +
                             " or values outside [0,1]");
  }
  return prob;
}

ExternalSegmenter::ExternalSegmenter(ExchangeOptions options, int num_classes)
    : options_(std::move(options)), num_classes_(num_classes) {
  if (!fs::is_directory(options_.workdir)) {
    throw ConfigError("external segmenter directory '" + options_.workdir.string() + "' does not exist");
  }
  if (num_classes < 2) throw ConfigError("external segmenter needs at least two classes");
}

void ExternalSegmenter::wait_for_response(std::uint64_t id) {
  const fs::path done = options_.workdir / kDone;
  const fs::path error = options_.workdir / kError;
  const auto deadline = std::chrono::steady_clock::now() + options_.timeout;
  for (;;) {
    if (fs::exists(error)) {
      const json j = read_json(error);
      fs::remove(error);
      throw ProtocolError("external segmenter failed: " + j.value("message", std::string("(no message)")));
    }
    if (fs::exists(done)) {
      const json j = read_json(done);
      fs::remove(done);
      if (j.value("id", std::uint64_t{0}) != id) {
        throw MalformedResponse("done.json answers request " + j.value("id", json(nullptr)).dump() + ", expected " +
                                std::to_string(id));
      }
      if (j.value("status", std::string()) != "ok") {
        throw ProtocolError("external segmenter reported status '" + j.value("status", std::string()) + "'");
      }
      return;
    }
    if (std::chrono::steady_clock::now() >= deadline) {
      throw ProtocolTimeout("no response to request " + std::to_string(id) + " within " +
                            std::to_string(options_.timeout.count()) + " ms");
    }
    std::this_thread::sleep_for(options_.poll_interval);
  }
}

std::vector<ProbabilityVolume> ExternalSegmenter::predict(std::span<const Image> frames) {
  const fs::path& dir = options_.workdir;
  fs::remove(dir / kDone);
  fs::remove(dir / kError);
  reset_directory(dir / "frames");
  reset_directory(dir / "probs");

  json names = json::array();
  for (std::size_t f = 0; f < frames.size(); ++f) {
    const std::string name = "frames/" + frame_file_name(f);
    write_image(frames[f], dir / name);
    names.push_back(name);
  }
  const std::uint64_t id = next_id_++;
  const json request{{"id", id},
                     {"mode", "predict"},
                     {"frames", names},
                     {"preprocessing",
                      {{"resize_long_side", options_.preprocessing.resize_long_side},
                       {"pad_to", {options_.preprocessing.pad_width, options_.preprocessing.pad_height}},
                       {"pad_mode", options_.preprocessing.pad_mode}}}};
  write_json_atomic(request, dir / kRequest);
  wait_for_response(id);

  std::vector<ProbabilityVolume> out;
  out.reserve(frames.size());
  for (std::size_t f = 0; f < frames.size(); ++f) {
    const fs::path path = dir / "probs" / frame_file_name(f, ".f32");
    ProbabilityVolume prob;
    try {
      prob = read_probability_volume(path);
    } catch (const NormalizationError& e) {
      throw NormalizationError("frame " + std::to_string(f) + ": " + e.what());
    } catch (const IoError& e) {
      throw MalformedResponse("frame " + std::to_string(f) + ": " + e.what());
    }
    if (prob.width != frames[f].width || prob.height != frames[f].height || prob.num_classes() != num_classes_) {
      throw MalformedResponse("frame " + std::to_string(f) + ": response has shape " + std::to_string(prob.width) +
                              "x" + std::to_string(prob.height) + "x" + std::to_string(prob.num_classes()));
    }
    out.push_back(std::move(prob));
  }
  return out;
}

void ExternalSegmenter::fine_tune(std::span<const TrainingSample> dataset, const TrainConfig& config) {
  config.validate();
  const fs::path& dir = options_.workdir;
  fs::remove(dir / kDone);
  fs::remove(dir / kError);
  reset_directory(dir / "dataset");

  json entries = json::array();
  for (std::size_t k = 0; k < dataset.size(); ++k) {
    const std::string frame = "dataset/" + frame_file_name(k);
    char label[48];
    std::snprintf(label, sizeof(label), "dataset/label_%06zu.png", k);
    write_image(*dataset[k].frame, dir / frame);
    write_label_map(*dataset[k].labels, dir / label);
    entries.push_back({{"frame", frame}, {"labels", label}});
  }
  const std::uint64_t id = next_id_++;
  json request{{"id", id},
               {"mode", "finetune"},
               {"entries", entries},
               {"learning_rate", config.learning_rate},
               {"momentum", config.momentum},
               {"weight_decay", config.weight_decay},
               {"iterations", config.iterations.value_or(dataset.size())},
               {"batch_size", config.batch_size},
               {"pixel_subsample", config.pixel_subsample},
               {"shuffle", config.shuffle},
               {"seed", config.seed},
               {"ignore_label", kIgnore},
               {"dropout", 0.5}};
  write_json_atomic(request, dir / kRequest);
  wait_for_response(id);
}

ReferenceResponder::ReferenceResponder(fs::path workdir, ModelParameters params)
    : workdir_(std::move(workdir)), model_(std::move(params)) {}

bool ReferenceResponder::poll_once() {
  const fs::path request_path = workdir_ / kRequest;
  if (!fs::exists(request_path)) return false;
  const fs::path active = workdir_ / kActiveRequest;
  fs::rename(request_path, active);

  std::uint64_t id = 0;
  try {
    const json request = read_json(active);
    id = request.at("id").get<std::uint64_t>();
    const auto mode = request.at("mode").get<std::string>();
    if (mode == "predict") {
      fs::create_directories(workdir_ / "probs");
      for (const auto& name : request.at("frames")) {
        const fs::path frame = workdir_ / name.get<std::string>();
        const ProbabilityVolume prob = model_.predict(read_image(frame));
        write_probability_volume(prob, workdir_ / "probs" / (frame.stem().string() + ".f32"));
      }
    } else if (mode == "finetune") {
      std::vector<Image> frames;
      std::vector<LabelMap> labels;
      for (const auto& e : request.at("entries")) {
        frames.push_back(read_image(workdir_ / e.at("frame").get<std::string>()));
        labels.push_back(read_label_map(workdir_ / e.at("labels").get<std::string>()));
      }
      std::vector<TrainingSample> samples;
      for (std::size_t k = 0; k < frames.size(); ++k) samples.push_back({&frames[k], &labels[k]});
      TrainConfig config;
      config.learning_rate = request.at("learning_rate").get<Scalar>();
      config.momentum = request.at("momentum").get<Scalar>();
      config.weight_decay = request.at("weight_decay").get<Scalar>();
      config.iterations = request.at("iterations").get<std::size_t>();
      config.pixel_subsample = request.value("pixel_subsample", config.pixel_subsample);
      config.shuffle = request.value("shuffle", false);
      config.seed = request.value("seed", std::uint64_t{0});
      model_.fine_tune(samples, config);
    } else {
      throw MalformedResponse("unknown request mode '" + mode + "'");
    }
    write_json_atomic({{"id", id}, {"status", "ok"}}, workdir_ / kDone);
  } catch (const std::exception& e) {
    write_json_atomic({{"id", id}, {"status", "error"}, {"message", e.what()}}, workdir_ / kError);
  }
  fs::remove(active);
  return true;
}

void ReferenceResponder::serve(std::stop_token stop, std::chrono::milliseconds poll_interval) {
  while (!stop.stop_requested()) {
    if (!poll_once()) std::this_thread::sleep_for(poll_interval);
  }
}

}  // namespace vidadapt
