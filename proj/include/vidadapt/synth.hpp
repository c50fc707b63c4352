#ifndef VIDADAPT_SYNTH_HPP
#define VIDADAPT_SYNTH_HPP

#include "vidadapt/common.hpp"
#include "vidadapt/frame_model.hpp"

#include <Eigen/Core>

#include <filesystem>

namespace vidadapt {

using Color = Eigen::Matrix<Scalar, 3, 1>;
using Point = Eigen::Matrix<Scalar, 2, 1>;

enum class ShapeKind { kDisc, kRectangle };

/// One moving object. Its centre at frame t is
///   start + velocity * t + amplitude * sin(2 pi t / period).
struct ObjectSpec {
  Label class_id = 1;
  ShapeKind shape = ShapeKind::kDisc;
  Point extent{8.0, 8.0};  // radius (disc uses x) or half width/height
  std::optional<Color> color;  // defaults to the class palette colour
  Point start{0.0, 0.0};
  Point velocity{0.0, 0.0};
  Point amplitude{0.0, 0.0};
  Scalar period = 30.0;

  Point center(Scalar t) const;
};

/// Frames [first, last] render `object` blended toward `confusable_class`'s
/// palette colour: (1 - blend) * own + blend * confusable.
struct AmbiguitySpan {
  std::size_t object = 0;
  std::size_t first = 0;
  std::size_t last = 0;
  Label confusable_class = 1;
  Scalar blend = 0.6;
};

struct SceneSpec {
  std::vector<std::string> classes;  // catalog, background first
  std::vector<Color> palette;        // one colour per class (palette[0] unused)
  int frame_count = 1;
  int width = 64;
  int height = 64;
  std::vector<ObjectSpec> objects;
  std::vector<AmbiguitySpan> ambiguity;
  Scalar noise_sigma = 0.0;
  std::uint64_t background_seed = 0;
  bool motion_blur = false;

  /// Throws ConfigError on inconsistent fields or objects leaving the frame.
  void validate() const;
};

struct SyntheticVideo {
  ClassCatalog catalog;
  std::vector<Image> frames;
  std::vector<LabelMap> ground_truth;  // dense, every frame
};

/// Deterministic in (spec, seed); `seed` drives the per-frame pixel noise.
SyntheticVideo generate_video(const SceneSpec& spec, std::uint64_t seed);

SceneSpec read_scene_spec(const std::filesystem::path& path);
void write_scene_spec(const SceneSpec& spec, const std::filesystem::path& path);

/// Classes and colours shared by the built-in benchmark scenes; each class
/// is paired with a visually similar one for ambiguity spans.
struct BenchmarkPalette {
  std::vector<std::string> classes;
  std::vector<Color> colors;
  std::vector<Label> confusable;  // confusable[c] for object classes
};
BenchmarkPalette benchmark_palette();

struct BenchmarkOptions {
  int frame_count = 90;
  int size = 128;
  Scalar ambiguous_fraction = 0.35;
  Scalar blend = 0.6;
  Scalar noise_sigma = 0.02;
};

/// A random single-object scene whose ambiguity spans cover at least
/// `ambiguous_fraction` of the frames.
SceneSpec benchmark_scene(std::uint64_t seed, const BenchmarkOptions& options = {});

struct PretrainOptions {
  std::size_t images = 64;
  int size = 96;
  TrainConfig train{.learning_rate = 0.5, .momentum = 0.9, .weight_decay = 0.0, .iterations = 3000};
};

/// Trains the reference classifier on generic still images of every palette
/// class, standing in for a model pretrained on an image dataset.
ModelParameters pretrain_reference_model(const BenchmarkPalette& palette, std::uint64_t seed,
                                         const PretrainOptions& options = {});

}  // namespace vidadapt

#endif  // VIDADAPT_SYNTH_HPP
