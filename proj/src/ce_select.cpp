#include "vidadapt/ce_select.hpp"

#include <algorithm>

namespace vidadapt {

void WeakLabelSet::validate(const ClassCatalog& catalog) const {
  for (Label c : classes) {
    if (c == kBackground || c >= catalog.size()) {
      throw ConfigError("weak label " + std::to_string(c) + " is not an object class of the catalog");
    }
  }
}

void SelectionThresholds::validate() const {
  // 1.0 is allowed: comparisons are strict, so it disables selection.
  if (!(object > 0.0 && object <= 1.0 && background > 0.0 && background <= 1.0)) {
    throw ConfigError("selection thresholds must lie in (0,1]");
  }
}

std::vector<Region> connected_components(const LabelMap& labels) {
  const int w = labels.width();
  const int h = labels.height();
  std::vector<bool> visited(labels.pixel_count(), false);
  std::vector<Region> regions;
  std::vector<std::size_t> stack;

  for (std::size_t seed = 0; seed < labels.pixel_count(); ++seed) {
    const Label c = labels[seed];
    if (visited[seed] || c == kBackground || c == kIgnore) continue;

    Region region;
    region.class_id = c;
    visited[seed] = true;
    stack.assign(1, seed);
    while (!stack.empty()) {
      const std::size_t i = stack.back();
      stack.pop_back();
      region.pixels.push_back(i);
      const int x = static_cast<int>(i % w);
      const int y = static_cast<int>(i / w);
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const int nx = x + dx;
          const int ny = y + dy;
          if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
          const std::size_t j = static_cast<std::size_t>(ny) * w + nx;
          if (!visited[j] && labels[j] == c) {
            visited[j] = true;
            stack.push_back(j);
          }
        }
      }
    }
    std::sort(region.pixels.begin(), region.pixels.end());
    regions.push_back(std::move(region));
  }
  return regions;
}

Scalar region_confidence(const ProbabilityVolume& prob, const Region& region) {
  if (region.pixels.empty()) throw ContractError("region has no pixels");
  if (region.class_id >= prob.num_classes()) throw ContractError("region class outside probability volume");
  Scalar sum = 0.0;
  for (std::size_t i : region.pixels) {
    if (i >= prob.pixel_count()) throw ContractError("region pixel outside probability volume");
    sum += prob.probs(region.class_id, static_cast<Eigen::Index>(i));
  }
  return sum / static_cast<Scalar>(region.pixels.size());
}

Scalar map_confidence(const ProbabilityVolume& prob, const LabelMap& labels) {
  if (!same_size(prob, labels)) throw ContractError("probability volume and label map differ in size");
  Scalar sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < labels.pixel_count(); ++i) {
    const Label c = labels[i];
    if (c == kBackground || c == kIgnore) continue;
    sum += prob.probs(c, static_cast<Eigen::Index>(i));
    ++count;
  }
  return count == 0 ? 0.0 : sum / static_cast<Scalar>(count);
}

CandidateMaps build_candidate_maps(const ProbabilityVolume& prob, const LabelMap& labels, const WeakLabelSet& weak,
                                   const SelectionThresholds& thr) {
  if (!same_size(prob, labels)) throw ContractError("probability volume and label map differ in size");
  CandidateMaps maps;
  maps.global_map = LabelMap(labels.width(), labels.height(), kIgnore);
  maps.local_map = maps.global_map;

  for (Region& region : connected_components(labels)) {
    if (!weak.contains(region.class_id)) continue;
    region.confidence = region_confidence(prob, region);
    const bool confident = region.confidence > thr.object;
    for (std::size_t i : region.pixels) {
      if (confident) maps.global_map[i] = region.class_id;
      maps.local_map[i] = region.class_id;
    }
  }

  for (std::size_t i = 0; i < labels.pixel_count(); ++i) {
    if (prob.probs(kBackground, static_cast<Eigen::Index>(i)) > thr.background) {
      maps.global_map[i] = kBackground;
      maps.local_map[i] = kBackground;
    }
  }

  maps.global_confidence = map_confidence(prob, maps.global_map);
  maps.local_confidence = map_confidence(prob, maps.local_map);
  return maps;
}

}  // namespace vidadapt
