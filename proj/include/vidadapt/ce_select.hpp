#ifndef VIDADAPT_CE_SELECT_HPP
#define VIDADAPT_CE_SELECT_HPP

#include "vidadapt/common.hpp"

#include <set>

namespace vidadapt {

/// Maximal 8-connected set of pixels sharing one object class.
struct Region {
  Label class_id = 0;
  std::vector<std::size_t> pixels;  // ascending linear indices
  Scalar confidence = 0.0;
};

/// Video-level object classes; in unsupervised mode every class passes.
struct WeakLabelSet {
  std::set<Label> classes;
  bool unsupervised = false;

  bool contains(Label c) const { return unsupervised || classes.count(c) != 0; }
  void validate(const ClassCatalog& catalog) const;
};

struct SelectionThresholds {
  Scalar object = 0.75;      // t_o
  Scalar background = 0.8;   // t_b

  void validate() const;
};

struct CandidateMaps {
  LabelMap global_map;
  LabelMap local_map;
  Scalar global_confidence = 0.0;
  Scalar local_confidence = 0.0;
};

/// Regions ordered by their first pixel in raster order. Background and
/// IGNORE never form regions. `confidence` is left at 0.
std::vector<Region> connected_components(const LabelMap& labels);

/// Mean probability of the region's class over its pixels.
Scalar region_confidence(const ProbabilityVolume& prob, const Region& region);

/// Mean probability of each pixel's assigned label over object-labeled
/// pixels; 0 when the map has none.
Scalar map_confidence(const ProbabilityVolume& prob, const LabelMap& labels);

/// Globally- and locally-confident pseudo-label maps for one frame.
///
/// Regions whose class is in `weak` go into the local map; those with
/// confidence above `thr.object` also go into the global map. Afterwards every
/// pixel with background probability above `thr.background` is set to
/// background in both maps, overriding object labels. Everything else is
/// IGNORE.
CandidateMaps build_candidate_maps(const ProbabilityVolume& prob, const LabelMap& labels, const WeakLabelSet& weak,
                                   const SelectionThresholds& thr);

}  // namespace vidadapt

#endif  // VIDADAPT_CE_SELECT_HPP
