#include "vidadapt/common.hpp"

#include <algorithm>
#include <set>

namespace vidadapt {

ClassCatalog::ClassCatalog(std::vector<std::string> names) : names_(std::move(names)) {
  if (names_.size() < 2) {
    throw ConfigError("class catalog needs background plus at least one object class");
  }
  if (names_.size() > kIgnore) {
    throw ConfigError("class catalog exceeds the 8-bit label range");
  }
  std::set<std::string> seen;
  for (const auto& n : names_) {
    if (n.empty()) throw ConfigError("class catalog contains an empty name");
    if (!seen.insert(n).second) throw ConfigError("duplicate class name '" + n + "'");
  }
}

std::optional<Label> ClassCatalog::index_of(const std::string& name) const {
  auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) return std::nullopt;
  return static_cast<Label>(it - names_.begin());
}

Image::Image(int w, int h) : width(w), height(h), rgb(Matrix3X::Zero(3, static_cast<Eigen::Index>(w) * h)) {}

void Image::validate() const {
  if (width < 1 || height < 1) throw ContractError("image dimensions must be positive");
  if (rgb.cols() != static_cast<Eigen::Index>(width) * height) {
    throw ContractError("image buffer does not match its dimensions");
  }
  if (!rgb.allFinite() || rgb.minCoeff() < 0.0 || rgb.maxCoeff() > 1.0) {
    throw ContractError("image channel values must lie in [0,1]");
  }
}

std::optional<std::size_t> ProbabilityVolume::find_invalid_pixel(Scalar tolerance) const {
  for (Eigen::Index i = 0; i < probs.cols(); ++i) {
    const auto col = probs.col(i);
    if (!col.allFinite() || col.minCoeff() < 0.0 || col.maxCoeff() > 1.0 ||
        std::abs(col.sum() - 1.0) > tolerance) {
      return static_cast<std::size_t>(i);
    }
  }
  return std::nullopt;
}

}  // namespace vidadapt
