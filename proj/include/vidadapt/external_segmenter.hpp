#ifndef VIDADAPT_EXTERNAL_SEGMENTER_HPP
#define VIDADAPT_EXTERNAL_SEGMENTER_HPP

#include "vidadapt/segmenter.hpp"

#include <chrono>
#include <filesystem>
#include <stop_token>

namespace vidadapt {

namespace fs = std::filesystem;

struct ProtocolError : Error {
  using Error::Error;
};
struct ProtocolTimeout : ProtocolError {
  using ProtocolError::ProtocolError;
};
/// Response files missing, unparsable, or of the wrong shape.
struct MalformedResponse : ProtocolError {
  using ProtocolError::ProtocolError;
};
/// Probability values out of range or channel sums off by more than 1e-3.
struct NormalizationError : ProtocolError {
  using ProtocolError::ProtocolError;
};

/// Preprocessing the external model is asked to apply (and undo) itself.
struct Preprocessing {
  int resize_long_side = 500;
  int pad_width = 900;
  int pad_height = 900;
  std::string pad_mode = "reflect";
};

inline constexpr Scalar kExternalSumTolerance = 1e-3;

/// Planar little-endian f32 volume plus `<name>.json` sidecar
/// {width, height, num_classes, dtype: "f32le", layout: "planar"}.
void write_probability_volume(const ProbabilityVolume& prob, const fs::path& path);
/// Validates the sidecar and size, and normalization to `tolerance`.
ProbabilityVolume read_probability_volume(const fs::path& path, Scalar tolerance = kExternalSumTolerance);

struct ExchangeOptions {
  fs::path workdir;
  std::chrono::milliseconds timeout{std::chrono::minutes(10)};
  std::chrono::milliseconds poll_interval{20};
  Preprocessing preprocessing;
};

/// Client side of the directory protocol.
///
/// A request is `request.json` in the working directory (written atomically),
/// with inputs under `frames/` or `dataset/`. The responder answers with
/// `done.json` {"id", "status": "ok"} or `error.json` {"id", "message"}; predict
/// outputs go to `probs/frame_%06d.f32`.
class ExternalSegmenter final : public Segmenter {
 public:
  ExternalSegmenter(ExchangeOptions options, int num_classes);

  int num_classes() const override { return num_classes_; }
  std::vector<ProbabilityVolume> predict(std::span<const Image> frames) override;
  void fine_tune(std::span<const TrainingSample> dataset, const TrainConfig& config) override;

  using Segmenter::predict;

 private:
  void wait_for_response(std::uint64_t id);

  ExchangeOptions options_;
  int num_classes_;
  std::uint64_t next_id_ = 1;
};

/// Serves the protocol with the in-process reference model. Preprocessing
/// requests are ignored: the reference model runs at native resolution.
class ReferenceResponder {
 public:
  ReferenceResponder(fs::path workdir, ModelParameters params);

  /// Handles one pending request; returns false if there was none.
  bool poll_once();
  void serve(std::stop_token stop, std::chrono::milliseconds poll_interval = std::chrono::milliseconds(5));

  const ModelParameters& parameters() const { return model_.parameters(); }

 private:
  fs::path workdir_;
  ReferenceSegmenter model_;
};

}  // namespace vidadapt

#endif  // VIDADAPT_EXTERNAL_SEGMENTER_HPP
