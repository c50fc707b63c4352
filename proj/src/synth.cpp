#include "vidadapt/synth.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>

namespace vidadapt {

using nlohmann::json;

Point ObjectSpec::center(Scalar t) const {
  const Scalar phase = 2.0 * std::numbers::pi * t / period;
  return start + velocity * t + amplitude * std::sin(phase);
}

namespace {

Point half_extent(const ObjectSpec& o) {
  return o.shape == ShapeKind::kDisc ? Point(o.extent.x(), o.extent.x()) : o.extent;
}

bool covers(const ObjectSpec& o, const Point& c, Scalar x, Scalar y) {
  const Scalar dx = x - c.x();
  const Scalar dy = y - c.y();
  if (o.shape == ShapeKind::kDisc) return dx * dx + dy * dy <= o.extent.x() * o.extent.x();
  return std::abs(dx) <= o.extent.x() && std::abs(dy) <= o.extent.y();
}

// Smooth grey value noise, static over time.
Matrix3X background_texture(int width, int height, std::uint64_t seed) {
  constexpr int kCell = 16;
  const int gw = width / kCell + 2;
  const int gh = height / kCell + 2;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<Scalar> level(0.35, 0.65);
  std::uniform_real_distribution<Scalar> tint(-0.04, 0.04);
  std::vector<Color> grid(static_cast<std::size_t>(gw) * gh);
  for (auto& g : grid) {
    const Scalar v = level(rng);
    g = Color(v + tint(rng), v + tint(rng), v + tint(rng));
  }
  Matrix3X tex(3, static_cast<Eigen::Index>(width) * height);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const Scalar fx = static_cast<Scalar>(x) / kCell;
      const Scalar fy = static_cast<Scalar>(y) / kCell;
      const int x0 = static_cast<int>(fx);
      const int y0 = static_cast<int>(fy);
      const Scalar ax = fx - x0;
      const Scalar ay = fy - y0;
      auto at = [&](int gx, int gy) -> const Color& { return grid[static_cast<std::size_t>(gy) * gw + gx]; };
      tex.col(static_cast<Eigen::Index>(y) * width + x) =
          (1 - ay) * ((1 - ax) * at(x0, y0) + ax * at(x0 + 1, y0)) + ay * ((1 - ax) * at(x0, y0 + 1) + ax * at(x0 + 1, y0 + 1));
    }
  }
  return tex;
}

struct Placed {
  const ObjectSpec* object;
  Point center;
  Color color;
};

// Paints objects in order over `rgb` and optionally writes their labels.
void paint(std::span<const Placed> placed, int width, int height, Matrix3X& rgb, LabelMap* labels) {
  for (const auto& p : placed) {
    const Point h = half_extent(*p.object);
    const int x0 = std::max(0, static_cast<int>(std::floor(p.center.x() - h.x())));
    const int x1 = std::min(width - 1, static_cast<int>(std::ceil(p.center.x() + h.x())));
    const int y0 = std::max(0, static_cast<int>(std::floor(p.center.y() - h.y())));
    const int y1 = std::min(height - 1, static_cast<int>(std::ceil(p.center.y() + h.y())));
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        if (!covers(*p.object, p.center, x, y)) continue;
        rgb.col(static_cast<Eigen::Index>(y) * width + x) = p.color;
        if (labels != nullptr) labels->at(x, y) = p.object->class_id;
      }
    }
  }
}

void add_noise(Matrix3X& rgb, Scalar sigma, std::mt19937_64& rng) {
  if (sigma > 0.0) {
    std::normal_distribution<Scalar> noise(0.0, sigma);
    for (Eigen::Index i = 0; i < rgb.size(); ++i) rgb.data()[i] += noise(rng);
  }
  rgb = rgb.cwiseMax(0.0).cwiseMin(1.0);
}

json color_json(const Color& c) { return json::array({c.x(), c.y(), c.z()}); }
json point_json(const Point& p) { return json::array({p.x(), p.y()}); }

Color color_from(const json& j) {
  if (!j.is_array() || j.size() != 3) throw ConfigError("colour must be an array of 3 numbers");
  return Color(j[0].get<Scalar>(), j[1].get<Scalar>(), j[2].get<Scalar>());
}
Point point_from(const json& j) {
  if (!j.is_array() || j.size() != 2) throw ConfigError("point must be an array of 2 numbers");
  return Point(j[0].get<Scalar>(), j[1].get<Scalar>());
}

}  // namespace

void SceneSpec::validate() const {
  if (frame_count < 1) throw ConfigError("scene needs at least one frame");
  if (width < 1 || height < 1) throw ConfigError("scene dimensions must be positive");
  (void)ClassCatalog(classes);
  if (palette.size() != classes.size()) throw ConfigError("palette needs one colour per class");
  if (!(noise_sigma >= 0.0)) throw ConfigError("noise sigma must be >= 0");
  for (std::size_t k = 0; k < objects.size(); ++k) {
    const auto& o = objects[k];
    if (o.class_id == kBackground || o.class_id >= classes.size()) {
      throw ConfigError("object " + std::to_string(k) + " has an invalid class");
    }
    if (!(o.extent.minCoeff() > 0.0) || !(o.period > 0.0)) {
      throw ConfigError("object " + std::to_string(k) + " needs positive extent and period");
    }
    const Point h = half_extent(o);
    for (int t = 0; t < frame_count; ++t) {
      const Point c = o.center(t);
      if (c.x() - h.x() < 0.0 || c.y() - h.y() < 0.0 || c.x() + h.x() > width - 1 || c.y() + h.y() > height - 1) {
        throw ConfigError("object " + std::to_string(k) + " leaves the frame at frame " + std::to_string(t));
      }
    }
  }
  for (const auto& a : ambiguity) {
    if (a.object >= objects.size()) throw ConfigError("ambiguity span refers to a missing object");
    if (a.first > a.last) throw ConfigError("ambiguity span has first > last");
    if (a.confusable_class == kBackground || a.confusable_class >= classes.size()) {
      throw ConfigError("ambiguity span has an invalid confusable class");
    }
    if (!(a.blend >= 0.0 && a.blend <= 1.0)) throw ConfigError("ambiguity blend must lie in [0,1]");
  }
}

SyntheticVideo generate_video(const SceneSpec& spec, std::uint64_t seed) {
  spec.validate();
  SyntheticVideo video;
  video.catalog = ClassCatalog(spec.classes);
  const Matrix3X background = background_texture(spec.width, spec.height, spec.background_seed);

  for (int t = 0; t < spec.frame_count; ++t) {
    auto placed_at = [&](Scalar time) {
      std::vector<Placed> placed;
      for (std::size_t k = 0; k < spec.objects.size(); ++k) {
        const auto& o = spec.objects[k];
        Color color = o.color.value_or(spec.palette[o.class_id]);
        for (const auto& a : spec.ambiguity) {
          if (a.object == k && static_cast<std::size_t>(t) >= a.first && static_cast<std::size_t>(t) <= a.last) {
            color = (1.0 - a.blend) * color + a.blend * spec.palette[a.confusable_class];
          }
        }
        placed.push_back({&o, o.center(time), color});
      }
      return placed;
    };

    Image frame(spec.width, spec.height);
    LabelMap gt(spec.width, spec.height, kBackground);
    if (spec.motion_blur) {
      constexpr int kTaps = 5;
      frame.rgb.setZero();
      for (int s = 0; s < kTaps; ++s) {
        Matrix3X layer = background;
        paint(placed_at(t - 0.4 + 0.2 * s), spec.width, spec.height, layer, nullptr);
        frame.rgb += layer / kTaps;
      }
      Matrix3X scratch = background;
      paint(placed_at(t), spec.width, spec.height, scratch, &gt);
    } else {
      frame.rgb = background;
      paint(placed_at(t), spec.width, spec.height, frame.rgb, &gt);
    }
    std::mt19937_64 rng(seed ^ (0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(t + 1)));
    add_noise(frame.rgb, spec.noise_sigma, rng);
    video.frames.push_back(std::move(frame));
    video.ground_truth.push_back(std::move(gt));
  }
  return video;
}

SceneSpec read_scene_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scene spec '" + path.string() + "'");
  SceneSpec spec;
  try {
    const json j = json::parse(in);
    spec.classes = j.at("classes").get<std::vector<std::string>>();
    for (const auto& c : j.at("palette")) spec.palette.push_back(color_from(c));
    spec.frame_count = j.at("frame_count").get<int>();
    spec.width = j.at("width").get<int>();
    spec.height = j.at("height").get<int>();
    spec.noise_sigma = j.value("noise_sigma", 0.0);
    spec.background_seed = j.value("background_seed", std::uint64_t{0});
    spec.motion_blur = j.value("motion_blur", false);
    for (const auto& jo : j.value("objects", json::array())) {
      ObjectSpec o;
      o.class_id = jo.at("class_id").get<Label>();
      const auto shape = jo.value("shape", std::string("disc"));
      if (shape != "disc" && shape != "rectangle") throw ConfigError("unknown shape '" + shape + "'");
      o.shape = shape == "disc" ? ShapeKind::kDisc : ShapeKind::kRectangle;
      o.extent = point_from(jo.at("extent"));
      if (jo.contains("color")) o.color = color_from(jo["color"]);
      o.start = point_from(jo.at("start"));
      if (jo.contains("velocity")) o.velocity = point_from(jo["velocity"]);
      if (jo.contains("amplitude")) o.amplitude = point_from(jo["amplitude"]);
      o.period = jo.value("period", 30.0);
      spec.objects.push_back(o);
    }
    for (const auto& ja : j.value("ambiguity", json::array())) {
      spec.ambiguity.push_back({ja.at("object").get<std::size_t>(), ja.at("first").get<std::size_t>(),
                                ja.at("last").get<std::size_t>(), ja.at("confusable_class").get<Label>(),
                                ja.value("blend", 0.6)});
    }
  } catch (const json::exception& e) {
    throw ConfigError("malformed scene spec '" + path.string() + "': " + e.what());
  }
  spec.validate();
  return spec;
}

void write_scene_spec(const SceneSpec& spec, const std::filesystem::path& path) {
  json j;
  j["classes"] = spec.classes;
  j["palette"] = json::array();
  for (const auto& c : spec.palette) j["palette"].push_back(color_json(c));
  j["frame_count"] = spec.frame_count;
  j["width"] = spec.width;
  j["height"] = spec.height;
  j["noise_sigma"] = spec.noise_sigma;
  j["background_seed"] = spec.background_seed;
  j["motion_blur"] = spec.motion_blur;
  j["objects"] = json::array();
  for (const auto& o : spec.objects) {
    json jo{{"class_id", o.class_id},
            {"shape", o.shape == ShapeKind::kDisc ? "disc" : "rectangle"},
            {"extent", point_json(o.extent)},
            {"start", point_json(o.start)},
            {"velocity", point_json(o.velocity)},
            {"amplitude", point_json(o.amplitude)},
            {"period", o.period}};
    if (o.color) jo["color"] = color_json(*o.color);
    j["objects"].push_back(jo);
  }
  j["ambiguity"] = json::array();
  for (const auto& a : spec.ambiguity) {
    j["ambiguity"].push_back({{"object", a.object},
                              {"first", a.first},
                              {"last", a.last},
                              {"confusable_class", a.confusable_class},
                              {"blend", a.blend}});
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write scene spec '" + path.string() + "'");
  out << j.dump(2) << '\n';
}

BenchmarkPalette benchmark_palette() {
  BenchmarkPalette p;
  p.classes = {"background", "bird", "cat", "dog", "horse", "car"};
  p.colors = {Color(0.5, 0.5, 0.5),   Color(0.2, 0.35, 0.9), Color(0.95, 0.65, 0.15),
              Color(0.85, 0.2, 0.2),  Color(0.5, 0.25, 0.1), Color(0.15, 0.75, 0.3)};
  p.confusable = {0, 5, 3, 4, 3, 1};
  return p;
}

SceneSpec benchmark_scene(std::uint64_t seed, const BenchmarkOptions& options) {
  const BenchmarkPalette palette = benchmark_palette();
  std::mt19937_64 rng(seed);
  auto uniform = [&](Scalar lo, Scalar hi) { return std::uniform_real_distribution<Scalar>(lo, hi)(rng); };

  SceneSpec spec;
  spec.classes = palette.classes;
  spec.palette = palette.colors;
  spec.frame_count = options.frame_count;
  spec.width = options.size;
  spec.height = options.size;
  spec.noise_sigma = options.noise_sigma;
  spec.background_seed = rng();

  const auto num_objects = static_cast<Label>(palette.classes.size() - 1);
  ObjectSpec o;
  o.class_id = static_cast<Label>(1 + std::uniform_int_distribution<int>(0, num_objects - 1)(rng));
  o.shape = uniform(0.0, 1.0) < 0.5 ? ShapeKind::kDisc : ShapeKind::kRectangle;
  const Scalar s = options.size;
  o.extent = Point(uniform(0.08, 0.14) * s, uniform(0.08, 0.14) * s);
  o.period = uniform(30.0, 60.0);
  for (;;) {
    o.start = Point(uniform(0.3, 0.7) * s, uniform(0.3, 0.7) * s);
    o.velocity = Point(uniform(-0.15, 0.15), uniform(-0.15, 0.15));
    o.amplitude = Point(uniform(-0.08, 0.08) * s, uniform(-0.08, 0.08) * s);
    spec.objects = {o};
    try {
      spec.validate();
      break;
    } catch (const ConfigError&) {
    }
  }

  const auto ambiguous = static_cast<std::size_t>(std::ceil(options.ambiguous_fraction * options.frame_count));
  const auto half = static_cast<std::size_t>(options.frame_count) / 2;
  const std::size_t first_len = std::min(ambiguous / 2, half);
  const std::size_t second_len = std::min(ambiguous - first_len, static_cast<std::size_t>(options.frame_count) - half);
  auto span_start = [&](std::size_t lo, std::size_t hi) {
    return hi <= lo ? lo : std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
  };
  if (first_len > 0) {
    const std::size_t a = span_start(0, half - first_len);
    spec.ambiguity.push_back({0, a, a + first_len - 1, palette.confusable[o.class_id], options.blend});
  }
  if (second_len > 0) {
    const std::size_t b = span_start(half, static_cast<std::size_t>(options.frame_count) - second_len);
    spec.ambiguity.push_back({0, b, b + second_len - 1, palette.confusable[o.class_id], options.blend});
  }
  return spec;
}

ModelParameters pretrain_reference_model(const BenchmarkPalette& palette, std::uint64_t seed,
                                         const PretrainOptions& options) {
  const int k = static_cast<int>(palette.classes.size());
  std::mt19937_64 rng(seed);
  auto uniform = [&](Scalar lo, Scalar hi) { return std::uniform_real_distribution<Scalar>(lo, hi)(rng); };

  std::vector<Image> images;
  std::vector<LabelMap> labels;
  for (std::size_t n = 0; n < options.images; ++n) {
    const int size = options.size;
    Matrix3X rgb = background_texture(size, size, rng());
    LabelMap gt(size, size, kBackground);
    std::vector<ObjectSpec> objects(1 + rng() % 3);
    std::vector<Placed> placed;
    for (auto& o : objects) {
      o.class_id = static_cast<Label>(1 + rng() % (k - 1));
      o.shape = rng() % 2 == 0 ? ShapeKind::kDisc : ShapeKind::kRectangle;
      o.extent = Point(uniform(0.06, 0.16) * size, uniform(0.06, 0.16) * size);
      const Color jitter(uniform(-0.05, 0.05), uniform(-0.05, 0.05), uniform(-0.05, 0.05));
      const Color color = (palette.colors[o.class_id] + jitter).cwiseMax(0.0).cwiseMin(1.0);
      placed.push_back({&o, Point(uniform(0.0, size - 1.0), uniform(0.0, size - 1.0)), color});
    }
    paint(placed, size, size, rgb, &gt);
    add_noise(rgb, 0.02, rng);
    Image image(size, size);
    image.rgb = std::move(rgb);
    images.push_back(std::move(image));
    labels.push_back(std::move(gt));
  }

  std::vector<TrainingSample> samples;
  for (std::size_t n = 0; n < images.size(); ++n) samples.push_back({&images[n], &labels[n]});
  TrainConfig train = options.train;
  train.shuffle = true;
  train.seed = seed;
  ModelParameters trained = sgd_fine_tune(ModelParameters(k), samples, train);
  trained.momentum.setZero();
  return trained;
}

}  // namespace vidadapt
