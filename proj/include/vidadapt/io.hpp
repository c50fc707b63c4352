#ifndef VIDADAPT_IO_HPP
#define VIDADAPT_IO_HPP

#include "vidadapt/common.hpp"
#include "vidadapt/evaluation.hpp"

#include <filesystem>

namespace vidadapt {

namespace fs = std::filesystem;

/// PNG (any colour type, converted to RGB) or binary PPM, chosen by extension.
Image read_image(const fs::path& path);
void write_image(const Image& image, const fs::path& path);

/// 8-bit single-channel PNG: 0 background, 1..K-1 classes, 255 IGNORE.
LabelMap read_label_map(const fs::path& path);
void write_label_map(const LabelMap& labels, const fs::path& path);

/// One class name per line, first line `background`.
ClassCatalog read_catalog(const fs::path& path);
void write_catalog(const ClassCatalog& catalog, const fs::path& path);

/// "frame_%06d" + extension.
std::string frame_file_name(std::size_t index, const std::string& extension = ".png");
/// Parses the index out of a frame_%06d.* name.
std::optional<std::size_t> parse_frame_index(const fs::path& path);

/// Frame files of a directory, sorted by index. Indices must run 0..n-1.
struct VideoSequence {
  std::vector<fs::path> frames;
  int width = 0;
  int height = 0;

  std::size_t size() const { return frames.size(); }
};

VideoSequence scan_video(const fs::path& directory);
/// Reads every frame; throws IoError on inconsistent sizes.
std::vector<Image> load_frames(const VideoSequence& video);

/// Sparse annotations from frame_%06d.png files.
GroundTruth load_ground_truth(const fs::path& directory);

void write_label_sequence(std::span<const LabelMap> labels, const fs::path& directory);
std::vector<LabelMap> read_label_sequence(const fs::path& directory);

}  // namespace vidadapt

#endif  // VIDADAPT_IO_HPP
