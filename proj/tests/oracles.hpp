// Independent reference implementations used as test oracles. They are
// written for clarity, not speed, and share no code with the library beyond
// the plain data types.
#ifndef VIDADAPT_TESTS_ORACLES_HPP
#define VIDADAPT_TESTS_ORACLES_HPP

#include "vidadapt/frame_model.hpp"
#include "vidadapt/motion_combine.hpp"
#include "vidadapt/segmenter.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <random>
#include <set>
#include <utility>
#include <vector>

namespace vidadapt::oracle {

// ---------------------------------------------------------------- softmax

inline std::vector<double> scalar_softmax(const std::vector<double>& logits) {
  double m = logits[0];
  for (double v : logits) m = std::max(m, v);
  std::vector<double> out(logits.size());
  double sum = 0.0;
  for (std::size_t k = 0; k < logits.size(); ++k) {
    out[k] = std::exp(logits[k] - m);
    sum += out[k];
  }
  for (double& v : out) v /= sum;
  return out;
}

inline Label linear_scan_argmax(const ProbabilityVolume& p, std::size_t i) {
  Label best = 0;
  for (int k = 1; k < p.num_classes(); ++k) {
    if (p.probs(k, static_cast<Eigen::Index>(i)) > p.probs(best, static_cast<Eigen::Index>(i))) best = static_cast<Label>(k);
  }
  return best;
}

// ------------------------------------------------------------- flood fill

/// Component id per pixel (-1 for background/IGNORE), numbered in raster
/// order of each component's first pixel.
inline std::vector<int> flood_fill_components(const LabelMap& labels) {
  const int w = labels.width();
  const int h = labels.height();
  std::vector<int> comp(static_cast<std::size_t>(w) * h, -1);
  int next = 0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const Label c = labels.at(x, y);
      if (c == kBackground || c == kIgnore || comp[y * w + x] >= 0) continue;
      std::deque<std::pair<int, int>> queue{{x, y}};
      comp[y * w + x] = next;
      while (!queue.empty()) {
        auto [cx, cy] = queue.front();
        queue.pop_front();
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int nx = cx + dx;
            const int ny = cy + dy;
            if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
            if (labels.at(nx, ny) != c || comp[ny * w + nx] >= 0) continue;
            comp[ny * w + nx] = next;
            queue.push_back({nx, ny});
          }
        }
      }
      ++next;
    }
  }
  return comp;
}

// ------------------------------------------------------ candidate maps

struct Candidates {
  LabelMap global_map;
  LabelMap local_map;
  double global_confidence = 0.0;
  double local_confidence = 0.0;
};

inline double direct_map_confidence(const ProbabilityVolume& p, const LabelMap& m) {
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < m.pixel_count(); ++i) {
    if (m[i] == kBackground || m[i] == kIgnore) continue;
    sum += p.probs(m[i], static_cast<Eigen::Index>(i));
    ++n;
  }
  return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

/// Line-by-line selection of one frame: components via flood fill, weak
/// filter, threshold, then the background override.
inline Candidates build_candidates(const ProbabilityVolume& p, const std::set<Label>& weak, bool unsupervised,
                                   double t_o, double t_b) {
  LabelMap s(p.width, p.height);
  for (std::size_t i = 0; i < s.pixel_count(); ++i) s[i] = linear_scan_argmax(p, i);
  const std::vector<int> comp = flood_fill_components(s);
  std::map<int, std::pair<double, std::size_t>> stats;
  for (std::size_t i = 0; i < comp.size(); ++i) {
    if (comp[i] < 0) continue;
    stats[comp[i]].first += p.probs(s[i], static_cast<Eigen::Index>(i));
    stats[comp[i]].second += 1;
  }
  Candidates c{LabelMap(p.width, p.height, kIgnore), LabelMap(p.width, p.height, kIgnore)};
  for (std::size_t i = 0; i < comp.size(); ++i) {
    if (comp[i] < 0) continue;
    if (!unsupervised && weak.count(s[i]) == 0) continue;
    c.local_map[i] = s[i];
    const auto [sum, n] = stats[comp[i]];
    if (sum / static_cast<double>(n) > t_o) c.global_map[i] = s[i];
  }
  for (std::size_t i = 0; i < comp.size(); ++i) {
    if (p.probs(0, static_cast<Eigen::Index>(i)) > t_b) {
      c.global_map[i] = kBackground;
      c.local_map[i] = kBackground;
    }
  }
  c.global_confidence = direct_map_confidence(p, c.global_map);
  c.local_confidence = direct_map_confidence(p, c.local_map);
  return c;
}

// ------------------------------------------------------ selection replays

struct TraceEntry {
  std::size_t frame;
  bool global;
  double confidence;
  LabelMap labels;
};

/// Batch selection replayed as a plain loop; frames numbered from 1 in
/// the loop, stored 0-based.
inline std::vector<TraceEntry> replay_batch(const std::vector<ProbabilityVolume>& probs, const std::set<Label>& weak,
                                            bool unsupervised, double t_o, double t_b, std::size_t tau_b,
                                            bool flush_tail = false) {
  std::vector<TraceEntry> g;
  std::set<std::size_t> global_frames;
  double d = 0.0;
  std::size_t t = 0;
  LabelMap local_t;
  auto flush = [&] {
    if (d > 0.0 && global_frames.count(t) == 0) g.push_back({t, false, d, local_t});
    d = 0.0;
  };
  for (std::size_t f = 1; f <= probs.size(); ++f) {
    const Candidates c = build_candidates(probs[f - 1], weak, unsupervised, t_o, t_b);
    if (c.global_confidence > 0.0) {
      g.push_back({f - 1, true, c.global_confidence, c.global_map});
      global_frames.insert(f - 1);
    }
    if (c.local_confidence > d) {
      d = c.local_confidence;
      t = f - 1;
      local_t = c.local_map;
    }
    if (f % tau_b == 0) flush();
  }
  if (flush_tail && probs.size() % tau_b != 0) flush();
  return g;
}

/// Keeps the k largest by value, earlier insertions winning ties, and
/// returns them in insertion order.
template <typename T, typename Key>
std::vector<T> sort_and_truncate(const std::vector<T>& inserted, std::size_t k, Key key) {
  std::vector<std::size_t> order(inserted.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return key(inserted[a]) > key(inserted[b]); });
  order.resize(std::min(k, order.size()));
  std::sort(order.begin(), order.end());
  std::vector<T> out;
  for (std::size_t i : order) out.push_back(inserted[i]);
  return out;
}

template <typename T>
std::vector<T> fifo_slice(const std::vector<T>& inserted, std::size_t k) {
  const std::size_t first = inserted.size() > k ? inserted.size() - k : 0;
  return {inserted.begin() + static_cast<std::ptrdiff_t>(first), inserted.end()};
}

struct OnlineBoundary {
  std::size_t frame;
  bool local_flush;
  bool update;
  std::vector<std::pair<std::size_t, double>> long_term;
  std::vector<std::pair<std::size_t, double>> short_term;
};

/// Online selection replayed as a plain loop with list-based memories.
/// Probabilities are fixed in advance, so model updates do not feed back.
inline std::vector<OnlineBoundary> replay_online(const std::vector<ProbabilityVolume>& probs,
                                                 const std::set<Label>& weak, bool unsupervised, double t_o,
                                                 double t_b, std::size_t tau_l, std::size_t tau_s,
                                                 std::size_t tau_b, std::size_t local_window) {
  using Item = std::pair<std::size_t, double>;
  std::vector<Item> long_inserted;
  std::vector<Item> short_inserted;
  std::vector<OnlineBoundary> out;
  double d = 0.0;
  std::size_t t = 0;
  for (std::size_t f = 1; f <= probs.size(); ++f) {
    const Candidates c = build_candidates(probs[f - 1], weak, unsupervised, t_o, t_b);
    if (c.global_confidence > 0.0) long_inserted.push_back({f - 1, c.global_confidence});
    const auto long_term = sort_and_truncate(long_inserted, tau_l, [](const Item& i) { return i.second; });
    if (c.local_confidence > d) {
      d = c.local_confidence;
      t = f - 1;
    }
    const bool flush = f % local_window == 0;
    const bool update = f % tau_b == 0;
    if (flush) {
      const bool in_long = std::any_of(long_term.begin(), long_term.end(), [&](const Item& i) { return i.first == t; });
      if (d > 0.0 && !in_long) short_inserted.push_back({t, d});
      d = 0.0;
    }
    if (flush || update) out.push_back({f - 1, flush, update, long_term, fifo_slice(short_inserted, tau_s)});
  }
  return out;
}

// ------------------------------------------------------- model selection

inline double brute_objective(const std::vector<int>& m, const std::vector<PairOverlaps>& o, double eps) {
  double total = 0.0;
  for (std::size_t f = 0; f + 1 < m.size(); ++f) {
    const double c = (m[f] == 0 && m[f + 1] == 0) ? o[f](m[f], m[f + 1]) + eps : o[f](m[f], m[f + 1]);
    total += c;
  }
  return total;
}

/// Best objective over all 2^n assignments.
inline double brute_force_best(const std::vector<PairOverlaps>& o, double eps) {
  const std::size_t n = o.size() + 1;
  double best = -1.0;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    std::vector<int> m(n);
    for (std::size_t f = 0; f < n; ++f) m[f] = (mask >> f) & 1u;
    best = std::max(best, brute_objective(m, o, eps));
  }
  return best;
}

// ---------------------------------------------------------------- helpers

/// Stamps a frame number into pixel 0 so a scripted segmenter can recover it.
inline Image tagged_frame(std::size_t index, int w, int h) {
  Image im(w, h);
  im.rgb.setConstant(0.5);
  im.rgb(0, 0) = static_cast<double>(index) / 4096.0;
  return im;
}

inline std::size_t frame_tag(const Image& im) { return static_cast<std::size_t>(std::lround(im.rgb(0, 0) * 4096.0)); }

/// Returns predetermined probabilities and logs every fine-tune call.
class ScriptedSegmenter final : public Segmenter {
 public:
  explicit ScriptedSegmenter(std::vector<ProbabilityVolume> script) : script_(std::move(script)) {}

  int num_classes() const override { return script_.front().num_classes(); }
  std::vector<ProbabilityVolume> predict(std::span<const Image> frames) override {
    std::vector<ProbabilityVolume> out;
    for (const Image& f : frames) out.push_back(script_.at(frame_tag(f)));
    return out;
  }
  void fine_tune(std::span<const TrainingSample> dataset, const TrainConfig&) override {
    std::vector<std::pair<std::size_t, LabelMap>> call;
    for (const auto& s : dataset) call.push_back({frame_tag(*s.frame), *s.labels});
    calls.push_back(std::move(call));
  }
  using Segmenter::predict;

  std::vector<std::vector<std::pair<std::size_t, LabelMap>>> calls;

 private:
  std::vector<ProbabilityVolume> script_;
};

/// Random blob-structured probability volume: argmax regions are blocks of
/// random classes with confidences spread across the selection thresholds.
inline ProbabilityVolume random_scripted_volume(std::mt19937_64& rng, int w, int h, int k) {
  ProbabilityVolume p(w, h, k);
  std::uniform_int_distribution<int> cls(0, k - 1);
  std::uniform_real_distribution<double> peak(0.4, 0.99);
  const int block = 4;
  for (int by = 0; by < h; by += block) {
    for (int bx = 0; bx < w; bx += block) {
      const int c = cls(rng) % 2 == 0 ? 0 : cls(rng);
      const double top = peak(rng);
      for (int y = by; y < std::min(h, by + block); ++y) {
        for (int x = bx; x < std::min(w, bx + block); ++x) {
          const auto i = static_cast<Eigen::Index>(y) * w + x;
          const double jitter = std::uniform_real_distribution<double>(-0.03, 0.03)(rng);
          const double pc = std::clamp(top + jitter, 1.0 / k + 0.05, 1.0);
          for (int j = 0; j < k; ++j) p.probs(j, i) = (1.0 - pc) / (k - 1);
          p.probs(c, i) = pc;
        }
      }
    }
  }
  return p;
}

}  // namespace vidadapt::oracle

#endif  // VIDADAPT_TESTS_ORACLES_HPP
