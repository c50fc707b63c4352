#include "vidadapt/io.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

namespace vidadapt {

namespace {

std::string lower_extension(const fs::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext;
}

// RAII wrapper over libpng's simplified API.
class PngImage {
 public:
  PngImage() {
    std::memset(&image_, 0, sizeof(image_));
    image_.version = PNG_IMAGE_VERSION;
  }
  ~PngImage() { png_image_free(&image_); }
  PngImage(const PngImage&) = delete;
  PngImage& operator=(const PngImage&) = delete;

  png_image* get() { return &image_; }
  png_image* operator->() { return &image_; }

 private:
  png_image image_;
};

std::vector<unsigned char> read_png(const fs::path& path, std::uint32_t format, int& width, int& height) {
  PngImage png;
  if (!png_image_begin_read_from_file(png.get(), path.c_str())) {
    throw IoError("cannot read PNG '" + path.string() + "': " + png->message);
  }
  png->format = format;
  std::vector<unsigned char> buffer(PNG_IMAGE_SIZE(*png.get()));
  if (!png_image_finish_read(png.get(), nullptr, buffer.data(), 0, nullptr)) {
    throw IoError("cannot decode PNG '" + path.string() + "': " + png->message);
  }
  width = static_cast<int>(png->width);
  height = static_cast<int>(png->height);
  return buffer;
}

void write_png(const fs::path& path, std::uint32_t format, int width, int height, const unsigned char* data) {
  PngImage png;
  png->width = static_cast<png_uint_32>(width);
  png->height = static_cast<png_uint_32>(height);
  png->format = format;
  if (!png_image_write_to_file(png.get(), path.c_str(), 0, data, 0, nullptr)) {
    throw IoError("cannot write PNG '" + path.string() + "': " + png->message);
  }
}

unsigned char to_byte(Scalar v) { return static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)); }

Image from_rgb_bytes(const std::vector<unsigned char>& bytes, int width, int height) {
  Image image(width, height);
  for (Eigen::Index i = 0; i < image.rgb.cols(); ++i) {
    for (int c = 0; c < 3; ++c) image.rgb(c, i) = bytes[3 * static_cast<std::size_t>(i) + c] / 255.0;
  }
  return image;
}

std::vector<unsigned char> to_rgb_bytes(const Image& image) {
  std::vector<unsigned char> bytes(3 * image.pixel_count());
  for (Eigen::Index i = 0; i < image.rgb.cols(); ++i) {
    for (int c = 0; c < 3; ++c) bytes[3 * static_cast<std::size_t>(i) + c] = to_byte(image.rgb(c, i));
  }
  return bytes;
}

std::string next_ppm_token(std::istream& in) {
  std::string token;
  char ch = 0;
  while (in.get(ch)) {
    if (ch == '#') {
      std::string skip;
      std::getline(in, skip);
    } else if (!std::isspace(static_cast<unsigned char>(ch))) {
      token.push_back(ch);
      break;
    }
  }
  while (in.get(ch) && !std::isspace(static_cast<unsigned char>(ch))) token.push_back(ch);
  return token;
}

Image read_ppm(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  if (next_ppm_token(in) != "P6") throw IoError("'" + path.string() + "' is not a binary PPM (P6)");
  int width = 0;
  int height = 0;
  int maxval = 0;
  try {
    width = std::stoi(next_ppm_token(in));
    height = std::stoi(next_ppm_token(in));
    maxval = std::stoi(next_ppm_token(in));
  } catch (const std::exception&) {
    throw IoError("'" + path.string() + "' has a malformed PPM header");
  }
  if (width < 1 || height < 1 || maxval != 255) throw IoError("'" + path.string() + "' must be 8-bit PPM");
  std::vector<unsigned char> bytes(3 * static_cast<std::size_t>(width) * height);
  if (!in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()))) {
    throw IoError("'" + path.string() + "' is truncated");
  }
  return from_rgb_bytes(bytes, width, height);
}

void write_ppm(const Image& image, const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << "P6\n" << image.width << ' ' << image.height << "\n255\n";
  const auto bytes = to_rgb_bytes(image);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

std::map<std::size_t, fs::path> indexed_files(const fs::path& directory) {
  if (!fs::is_directory(directory)) throw IoError("'" + directory.string() + "' is not a directory");
  std::map<std::size_t, fs::path> files;
  for (const auto& entry : fs::directory_iterator(directory)) {
    if (!entry.is_regular_file()) continue;
    const std::string ext = lower_extension(entry.path());
    if (ext != ".png" && ext != ".ppm") continue;
    if (auto index = parse_frame_index(entry.path())) {
      if (!files.emplace(*index, entry.path()).second) {
        throw IoError("duplicate frame index " + std::to_string(*index) + " in '" + directory.string() + "'");
      }
    }
  }
  return files;
}

}  // namespace

Image read_image(const fs::path& path) {
  const std::string ext = lower_extension(path);
  if (ext == ".ppm") return read_ppm(path);
  if (ext != ".png") throw IoError("unsupported image format '" + path.string() + "'");
  int width = 0;
  int height = 0;
  const auto bytes = read_png(path, PNG_FORMAT_RGB, width, height);
  return from_rgb_bytes(bytes, width, height);
}

void write_image(const Image& image, const fs::path& path) {
  image.validate();
  const std::string ext = lower_extension(path);
  if (ext == ".ppm") return write_ppm(image, path);
  if (ext != ".png") throw IoError("unsupported image format '" + path.string() + "'");
  const auto bytes = to_rgb_bytes(image);
  write_png(path, PNG_FORMAT_RGB, image.width, image.height, bytes.data());
}

LabelMap read_label_map(const fs::path& path) {
  int width = 0;
  int height = 0;
  const auto bytes = read_png(path, PNG_FORMAT_GRAY, width, height);
  LabelMap labels(width, height);
  std::copy(bytes.begin(), bytes.end(), labels.data.data());
  return labels;
}

void write_label_map(const LabelMap& labels, const fs::path& path) {
  write_png(path, PNG_FORMAT_GRAY, labels.width(), labels.height(), labels.data.data());
}

ClassCatalog read_catalog(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open class catalog '" + path.string() + "'");
  std::vector<std::string> names;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back()))) line.pop_back();
    if (!line.empty()) names.push_back(line);
  }
  if (names.empty() || names.front() != "background") {
    throw ConfigError("class catalog '" + path.string() + "' must start with 'background'");
  }
  return ClassCatalog(std::move(names));
}

void write_catalog(const ClassCatalog& catalog, const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write class catalog '" + path.string() + "'");
  for (const auto& n : catalog.names()) out << n << '\n';
}

std::string frame_file_name(std::size_t index, const std::string& extension) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "frame_%06zu", index);
  return buf + extension;
}

std::optional<std::size_t> parse_frame_index(const fs::path& path) {
  const std::string stem = path.stem().string();
  constexpr std::string_view kPrefix = "frame_";
  if (stem.size() <= kPrefix.size() || stem.compare(0, kPrefix.size(), kPrefix) != 0) return std::nullopt;
  const std::string digits = stem.substr(kPrefix.size());
  if (!std::all_of(digits.begin(), digits.end(), [](unsigned char c) { return std::isdigit(c); })) return std::nullopt;
  return static_cast<std::size_t>(std::stoull(digits));
}

VideoSequence scan_video(const fs::path& directory) {
  const auto files = indexed_files(directory);
  if (files.empty()) throw IoError("no frame_%06d images in '" + directory.string() + "'");
  VideoSequence video;
  std::size_t expected = 0;
  for (const auto& [index, path] : files) {
    if (index != expected++) {
      throw IoError("frame sequence in '" + directory.string() + "' is missing frame " + std::to_string(expected - 1));
    }
    video.frames.push_back(path);
  }
  const Image first = read_image(video.frames.front());
  video.width = first.width;
  video.height = first.height;
  return video;
}

std::vector<Image> load_frames(const VideoSequence& video) {
  std::vector<Image> frames;
  frames.reserve(video.size());
  for (const auto& path : video.frames) {
    frames.push_back(read_image(path));
    if (!same_size(frames.front(), frames.back())) {
      throw IoError("frame '" + path.string() + "' differs in size from the first frame");
    }
  }
  return frames;
}

GroundTruth load_ground_truth(const fs::path& directory) {
  GroundTruth gt;
  for (const auto& [index, path] : indexed_files(directory)) gt.emplace(index, read_label_map(path));
  if (gt.empty()) throw IoError("no annotations in '" + directory.string() + "'");
  return gt;
}

void write_label_sequence(std::span<const LabelMap> labels, const fs::path& directory) {
  fs::create_directories(directory);
  for (std::size_t f = 0; f < labels.size(); ++f) write_label_map(labels[f], directory / frame_file_name(f));
}

std::vector<LabelMap> read_label_sequence(const fs::path& directory) {
  std::vector<LabelMap> labels;
  for (const auto& path : scan_video(directory).frames) labels.push_back(read_label_map(path));
  return labels;
}

}  // namespace vidadapt
