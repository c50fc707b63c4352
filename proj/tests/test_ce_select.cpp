#include "oracles.hpp"

#include "vidadapt/ce_select.hpp"

#include <gtest/gtest.h>

#include <random>

namespace vidadapt {
namespace {

LabelMap random_labels(std::mt19937_64& rng, int w, int h, int k) {
  std::uniform_int_distribution<int> c(0, k - 1);
  LabelMap m(w, h);
  for (std::size_t i = 0; i < m.pixel_count(); ++i) m[i] = static_cast<Label>(c(rng));
  return m;
}

/// Volume whose argmax reproduces `labels`, with the assigned class at `p`.
ProbabilityVolume volume_for(const LabelMap& labels, int k, double p) {
  ProbabilityVolume v(labels.width(), labels.height(), k);
  for (std::size_t i = 0; i < labels.pixel_count(); ++i) {
    v.probs.col(static_cast<Eigen::Index>(i)).setConstant((1.0 - p) / (k - 1));
    v.probs(labels[i], static_cast<Eigen::Index>(i)) = p;
  }
  return v;
}

TEST(Components, AllBackgroundHasNone) { EXPECT_TRUE(connected_components(LabelMap(5, 5)).empty()); }

TEST(Components, DiagonalNeighboursJoin) {
  LabelMap m(3, 3);
  m.at(0, 0) = 1;
  m.at(1, 1) = 1;
  const auto regions = connected_components(m);
  ASSERT_EQ(regions.size(), 1u);
  EXPECT_EQ(regions[0].pixels.size(), 2u);
  EXPECT_EQ(regions[0].class_id, 1);
}

TEST(Components, IgnoreFormsNoRegion) {
  LabelMap m(3, 3, kIgnore);
  m.at(2, 2) = 2;
  const auto regions = connected_components(m);
  ASSERT_EQ(regions.size(), 1u);
  EXPECT_EQ(regions[0].pixels, std::vector<std::size_t>{8});
}

TEST(Components, MatchFloodFillOracle) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 25; ++trial) {
    const LabelMap m = random_labels(rng, 32, 32, 3);
    const std::vector<int> expected = oracle::flood_fill_components(m);
    std::vector<int> actual(m.pixel_count(), -1);
    const auto regions = connected_components(m);
    for (std::size_t r = 0; r < regions.size(); ++r) {
      for (std::size_t i : regions[r].pixels) {
        ASSERT_EQ(actual[i], -1) << "pixel in two regions";
        actual[i] = static_cast<int>(r);
        EXPECT_EQ(m[i], regions[r].class_id);
      }
    }
    EXPECT_EQ(actual, expected);
  }
}

TEST(Confidence, RegionMeanArithmetic) {
  ProbabilityVolume p(2, 1, 2);
  p.probs.col(0) << 0.1, 0.9;
  p.probs.col(1) << 0.3, 0.7;
  const Region r{1, {0, 1}, 0.0};
  EXPECT_NEAR(region_confidence(p, r), 0.8, 1e-15);
}

TEST(Confidence, RegionOfCertainPixels) {
  LabelMap m(3, 3, 2);
  const ProbabilityVolume p = volume_for(m, 3, 1.0);
  EXPECT_EQ(region_confidence(p, connected_components(m).front()), 1.0);
}

TEST(Confidence, UniformVolumeRegion) {
  ProbabilityVolume p(4, 4, 4);
  p.probs.setConstant(0.25);
  const Region r{3, {0, 5, 6}, 0.0};
  EXPECT_EQ(region_confidence(p, r), 0.25);
}

TEST(Confidence, MapOfIgnoreIsZero) {
  ProbabilityVolume p(2, 2, 2);
  p.probs.setConstant(0.5);
  EXPECT_EQ(map_confidence(p, LabelMap(2, 2, kIgnore)), 0.0);
}

TEST(Confidence, OneHotArgmaxIsOne) {
  std::mt19937_64 rng(22);
  const LabelMap m = random_labels(rng, 6, 6, 3);
  EXPECT_EQ(map_confidence(volume_for(m, 3, 1.0), m), 1.0);
}

TEST(Confidence, MapMatchesDirectArithmetic) {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    ProbabilityVolume p(5, 4, 3);
    for (Eigen::Index i = 0; i < p.probs.cols(); ++i) {
      p.probs.col(i) << u(rng), u(rng), u(rng);
      p.probs.col(i) /= p.probs.col(i).sum();
    }
    LabelMap m = random_labels(rng, 5, 4, 3);
    m[3] = kIgnore;
    EXPECT_NEAR(map_confidence(p, m), oracle::direct_map_confidence(p, m), 1e-12);
  }
}

class CandidateTest : public ::testing::Test {
 protected:
  // 6x6 background with a 2x2 "dog" (class 2) block; catalog {bg, cat, dog}.
  void SetUp() override {
    labels = LabelMap(6, 6);
    for (int y = 1; y < 3; ++y)
      for (int x = 1; x < 3; ++x) labels.at(x, y) = 2;
  }
  ProbabilityVolume with_confidence(double object_p, double background_p) const {
    ProbabilityVolume p(6, 6, 3);
    for (std::size_t i = 0; i < labels.pixel_count(); ++i) {
      const double top = labels[i] == 0 ? background_p : object_p;
      p.probs.col(static_cast<Eigen::Index>(i)).setConstant((1.0 - top) / 2.0);
      p.probs(labels[i], static_cast<Eigen::Index>(i)) = top;
    }
    return p;
  }
  std::size_t count(const LabelMap& m, Label c) const { return static_cast<std::size_t>((m.data == c).count()); }

  LabelMap labels;
  SelectionThresholds thr;
};

TEST_F(CandidateTest, BackgroundOnlyMap) {
  const LabelMap bg(6, 6);
  ProbabilityVolume p(6, 6, 3);
  for (Eigen::Index i = 0; i < p.probs.cols(); ++i) p.probs.col(i) << (i % 2 == 0 ? 0.9 : 0.6), 0.05, 0.0;
  for (Eigen::Index i = 0; i < p.probs.cols(); ++i) p.probs(2, i) = 1.0 - p.probs(0, i) - 0.05;
  const CandidateMaps c = build_candidate_maps(p, bg, WeakLabelSet{{2}, false}, thr);
  for (std::size_t i = 0; i < bg.pixel_count(); ++i) {
    const Label expected = i % 2 == 0 ? kBackground : kIgnore;
    EXPECT_EQ(c.global_map[i], expected);
    EXPECT_EQ(c.local_map[i], expected);
  }
  EXPECT_EQ(c.global_confidence, 0.0);
  EXPECT_EQ(c.local_confidence, 0.0);
}

TEST_F(CandidateTest, ConfidentWeakRegionInBothMaps) {
  const CandidateMaps c = build_candidate_maps(with_confidence(0.9, 0.95), labels, WeakLabelSet{{2}, false}, thr);
  EXPECT_EQ(count(c.global_map, 2), 4u);
  EXPECT_EQ(count(c.local_map, 2), 4u);
  EXPECT_NEAR(c.global_confidence, 0.9, 1e-15);
}

TEST_F(CandidateTest, WeakLabelFiltering) {
  const ProbabilityVolume p = with_confidence(0.9, 0.95);
  const CandidateMaps filtered = build_candidate_maps(p, labels, WeakLabelSet{{1}, false}, thr);
  EXPECT_EQ(count(filtered.global_map, 2), 0u);
  EXPECT_EQ(count(filtered.local_map, 2), 0u);
  EXPECT_EQ(count(filtered.local_map, kIgnore), 4u);
  const CandidateMaps open = build_candidate_maps(p, labels, WeakLabelSet{{1}, true}, thr);
  EXPECT_EQ(count(open.global_map, 2), 4u);
  EXPECT_EQ(count(open.local_map, 2), 4u);
}

TEST_F(CandidateTest, UnconfidentRegionOnlyLocal) {
  const CandidateMaps c = build_candidate_maps(with_confidence(0.7, 0.95), labels, WeakLabelSet{{2}, false}, thr);
  EXPECT_EQ(count(c.global_map, 2), 0u);
  EXPECT_EQ(count(c.local_map, 2), 4u);
  EXPECT_EQ(c.global_confidence, 0.0);
  EXPECT_NEAR(c.local_confidence, 0.7, 1e-15);
}

TEST_F(CandidateTest, BackgroundOverridesObjects) {
  // Object pixels whose background probability still exceeds t_b.
  ProbabilityVolume p = with_confidence(0.9, 0.95);
  const Eigen::Index i = 1 * 6 + 1;
  p.probs.col(i) << 0.81, 0.0, 0.19;
  LabelMap l = labels;
  l[static_cast<std::size_t>(i)] = 2;  // forced label despite the volume
  const CandidateMaps c = build_candidate_maps(p, l, WeakLabelSet{{2}, false}, thr);
  EXPECT_EQ(c.global_map[static_cast<std::size_t>(i)], kBackground);
  EXPECT_EQ(c.local_map[static_cast<std::size_t>(i)], kBackground);
}

TEST_F(CandidateTest, MatchesLineByLineOracle) {
  std::mt19937_64 rng(24);
  for (int trial = 0; trial < 50; ++trial) {
    const ProbabilityVolume p = oracle::random_scripted_volume(rng, 16, 12, 4);
    const std::set<Label> weak{1, 3};
    const bool unsup = trial % 5 == 0;
    const CandidateMaps c = build_candidate_maps(p, argmax_labels(p), WeakLabelSet{weak, unsup}, thr);
    const oracle::Candidates o = oracle::build_candidates(p, weak, unsup, 0.75, 0.8);
    EXPECT_EQ(c.global_map, o.global_map);
    EXPECT_EQ(c.local_map, o.local_map);
    EXPECT_NEAR(c.global_confidence, o.global_confidence, 1e-12);
    EXPECT_NEAR(c.local_confidence, o.local_confidence, 1e-12);
  }
}

TEST(CandidateProperties, GlobalSubsetAndMonotoneThresholds) {
  std::mt19937_64 rng(25);
  for (int trial = 0; trial < 40; ++trial) {
    const ProbabilityVolume p = oracle::random_scripted_volume(rng, 20, 20, 4);
    const LabelMap s = argmax_labels(p);
    const WeakLabelSet weak{{1, 2}, false};
    const CandidateMaps lo = build_candidate_maps(p, s, weak, {0.6, 0.7});
    const CandidateMaps hi_o = build_candidate_maps(p, s, weak, {0.9, 0.7});
    const CandidateMaps hi_b = build_candidate_maps(p, s, weak, {0.6, 0.9});
    for (std::size_t i = 0; i < s.pixel_count(); ++i) {
      const Label g = lo.global_map[i];
      if (g != kIgnore && g != kBackground) EXPECT_EQ(lo.local_map[i], g);
      // Weak-label soundness.
      EXPECT_TRUE(lo.local_map[i] == kIgnore || lo.local_map[i] == kBackground || weak.contains(lo.local_map[i]));
      // Raising t_o never adds object pixels to the global map.
      if (hi_o.global_map[i] != kIgnore && hi_o.global_map[i] != kBackground) EXPECT_EQ(lo.global_map[i], hi_o.global_map[i]);
      // Raising t_b never adds background pixels.
      if (hi_b.global_map[i] == kBackground) EXPECT_EQ(lo.global_map[i], kBackground);
      if (hi_b.local_map[i] == kBackground) EXPECT_EQ(lo.local_map[i], kBackground);
    }
    const bool has_object = ((lo.global_map.data != kIgnore) && (lo.global_map.data != kBackground)).any();
    EXPECT_EQ(lo.global_confidence > 0.0, has_object);
  }
}

TEST(Thresholds, Validation) {
  EXPECT_NO_THROW((SelectionThresholds{0.75, 0.8}.validate()));
  EXPECT_NO_THROW((SelectionThresholds{1.0, 1.0}.validate()));
  EXPECT_THROW((SelectionThresholds{0.0, 0.8}.validate()), ConfigError);
  EXPECT_THROW((SelectionThresholds{0.75, 1.2}.validate()), ConfigError);
}

TEST(WeakLabels, ValidationAgainstCatalog) {
  const ClassCatalog catalog({"background", "cat", "dog"});
  EXPECT_NO_THROW((WeakLabelSet{{1, 2}, false}.validate(catalog)));
  EXPECT_THROW((WeakLabelSet{{0}, false}.validate(catalog)), ConfigError);
  EXPECT_THROW((WeakLabelSet{{3}, false}.validate(catalog)), ConfigError);
}

}  // namespace
}  // namespace vidadapt
