#ifndef VIDADAPT_COMMON_HPP
#define VIDADAPT_COMMON_HPP

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace vidadapt {

using Scalar = double;
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
using Matrix3X = Eigen::Matrix<Scalar, 3, Eigen::Dynamic>;
using Matrix2X = Eigen::Matrix<Scalar, 2, Eigen::Dynamic>;

using Label = std::uint8_t;
using LabelArray = Eigen::Array<Label, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MaskArray = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Reserved label for pixels excluded from training and evaluation.
inline constexpr Label kIgnore = 255;
inline constexpr Label kBackground = 0;

// Error taxonomy. Everything derives from std::runtime_error so callers at
// the CLI boundary can catch one type.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
/// Precondition violated by the caller (bad index, mismatched shapes).
struct ContractError : Error {
  using Error::Error;
};
/// Inconsistent configuration (model shape vs catalog, invalid thresholds).
struct ConfigError : Error {
  using Error::Error;
};
struct EvaluationError : Error {
  using Error::Error;
};
struct IoError : Error {
  using Error::Error;
};

/// Ordered class names; index 0 is background.
class ClassCatalog {
 public:
  ClassCatalog() = default;
  explicit ClassCatalog(std::vector<std::string> names);

  std::size_t size() const { return names_.size(); }
  const std::string& name(std::size_t index) const { return names_.at(index); }
  const std::vector<std::string>& names() const { return names_; }
  std::optional<Label> index_of(const std::string& name) const;

 private:
  std::vector<std::string> names_;
};

/// RGB frame. Column i of `rgb` is pixel i = y * width + x, channels in [0,1].
struct Image {
  int width = 0;
  int height = 0;
  Matrix3X rgb;

  Image() = default;
  Image(int w, int h);

  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
  auto pixel(int x, int y) { return rgb.col(static_cast<Eigen::Index>(y) * width + x); }
  auto pixel(int x, int y) const { return rgb.col(static_cast<Eigen::Index>(y) * width + x); }
  bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width && y < height; }

  /// Throws ContractError unless dimensions are positive and values lie in [0,1].
  void validate() const;
};

/// Per-pixel class labels stored as an H x W row-major array.
struct LabelMap {
  LabelArray data;

  LabelMap() = default;
  LabelMap(int w, int h, Label fill = kBackground) : data(LabelArray::Constant(h, w, fill)) {}

  int width() const { return static_cast<int>(data.cols()); }
  int height() const { return static_cast<int>(data.rows()); }
  std::size_t pixel_count() const { return static_cast<std::size_t>(data.size()); }

  Label& operator[](std::size_t i) { return data.data()[i]; }
  Label operator[](std::size_t i) const { return data.data()[i]; }
  Label& at(int x, int y) { return data(y, x); }
  Label at(int x, int y) const { return data(y, x); }

  bool operator==(const LabelMap& other) const {
    return data.rows() == other.data.rows() && data.cols() == other.data.cols() &&
           (data == other.data).all();
  }
};

/// Class distribution per pixel: `probs` is K x N, column i is pixel i.
struct ProbabilityVolume {
  int width = 0;
  int height = 0;
  MatrixX probs;

  ProbabilityVolume() = default;
  ProbabilityVolume(int w, int h, int num_classes)
      : width(w), height(h), probs(MatrixX::Zero(num_classes, static_cast<Eigen::Index>(w) * h)) {}

  int num_classes() const { return static_cast<int>(probs.rows()); }
  std::size_t pixel_count() const { return static_cast<std::size_t>(probs.cols()); }

  /// Checks range and per-pixel normalization within `tolerance`.
  /// Returns the index of the first offending pixel, if any.
  std::optional<std::size_t> find_invalid_pixel(Scalar tolerance) const;
};

inline bool same_size(const LabelMap& a, const LabelMap& b) {
  return a.width() == b.width() && a.height() == b.height();
}
inline bool same_size(const ProbabilityVolume& p, const LabelMap& l) {
  return p.width == l.width() && p.height == l.height();
}
inline bool same_size(const Image& a, const Image& b) {
  return a.width == b.width && a.height == b.height;
}

}  // namespace vidadapt

#endif  // VIDADAPT_COMMON_HPP
