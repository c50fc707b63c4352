#include "vidadapt/motion_combine.hpp"

#include "binary_io.hpp"

#include <cmath>
#include <tuple>

namespace vidadapt {

const char* to_string(ModelChoice choice) { return choice == ModelChoice::kBatch ? "batch" : "online"; }

namespace {

using Plane = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using BlockFlow = Eigen::Array<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

constexpr int kLevels = 3;
constexpr int kBlock = 8;
constexpr int kSearch = 4;

Plane luminance_plane(const Image& image) {
  Plane plane(image.height, image.width);
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      const auto p = image.pixel(x, y);
      plane(y, x) = 0.299 * p(0) + 0.587 * p(1) + 0.114 * p(2);
    }
  }
  return plane;
}

Plane downsample(const Plane& in) {
  const Eigen::Index h = in.rows() / 2;
  const Eigen::Index w = in.cols() / 2;
  Plane out(h, w);
  for (Eigen::Index y = 0; y < h; ++y) {
    for (Eigen::Index x = 0; x < w; ++x) out(y, x) = in.block(2 * y, 2 * x, 2, 2).mean();
  }
  return out;
}

// Per-block integer displacements at one pyramid level.
struct LevelFlow {
  BlockFlow dx;
  BlockFlow dy;
};

LevelFlow match_level(const Plane& prev, const Plane& next, const LevelFlow* coarser) {
  const int h = static_cast<int>(next.rows());
  const int w = static_cast<int>(next.cols());
  const int bh = (h + kBlock - 1) / kBlock;
  const int bw = (w + kBlock - 1) / kBlock;
  LevelFlow flow{BlockFlow::Zero(bh, bw), BlockFlow::Zero(bh, bw)};

  for (int by = 0; by < bh; ++by) {
    for (int bx = 0; bx < bw; ++bx) {
      const int x0 = bx * kBlock;
      const int y0 = by * kBlock;
      const int x1 = std::min(x0 + kBlock, w);
      const int y1 = std::min(y0 + kBlock, h);
      const int area = (x1 - x0) * (y1 - y0);

      int gx = 0;
      int gy = 0;
      if (coarser != nullptr) {
        const int cbx = std::min<int>(((x0 + x1) / 2 / 2) / kBlock, static_cast<int>(coarser->dx.cols()) - 1);
        const int cby = std::min<int>(((y0 + y1) / 2 / 2) / kBlock, static_cast<int>(coarser->dx.rows()) - 1);
        gx = 2 * coarser->dx(cby, cbx);
        gy = 2 * coarser->dy(cby, cbx);
      }

      // Lexicographic: cost, squared magnitude, dy, dx.
      std::tuple<Scalar, int, int, int> best{std::numeric_limits<Scalar>::infinity(), 0, 0, 0};
      bool found = false;
      for (int dy = gy - kSearch; dy <= gy + kSearch; ++dy) {
        for (int dx = gx - kSearch; dx <= gx + kSearch; ++dx) {
          Scalar sad = 0.0;
          int valid = 0;
          for (int y = y0; y < y1; ++y) {
            const int sy = y + dy;
            if (sy < 0 || sy >= h) continue;
            for (int x = x0; x < x1; ++x) {
              const int sx = x + dx;
              if (sx < 0 || sx >= w) continue;
              sad += std::abs(next(y, x) - prev(sy, sx));
              ++valid;
            }
          }
          if (2 * valid < area) continue;
          const std::tuple<Scalar, int, int, int> candidate{sad / valid, dx * dx + dy * dy, dy, dx};
          if (!found || candidate < best) {
            best = candidate;
            found = true;
          }
        }
      }
      if (found) {
        flow.dx(by, bx) = std::get<3>(best);
        flow.dy(by, bx) = std::get<2>(best);
      }
    }
  }
  return flow;
}

}  // namespace

FlowField estimate_flow(const Image& previous, const Image& next) {
  if (!same_size(previous, next)) throw ContractError("flow estimation needs frames of equal size");

  std::vector<Plane> prev_pyramid{luminance_plane(previous)};
  std::vector<Plane> next_pyramid{luminance_plane(next)};
  while (static_cast<int>(prev_pyramid.size()) < kLevels && prev_pyramid.back().rows() / 2 >= kBlock &&
         prev_pyramid.back().cols() / 2 >= kBlock) {
    prev_pyramid.push_back(downsample(prev_pyramid.back()));
    next_pyramid.push_back(downsample(next_pyramid.back()));
  }

  std::optional<LevelFlow> level_flow;
  for (auto level = static_cast<int>(prev_pyramid.size()) - 1; level >= 0; --level) {
    level_flow = match_level(prev_pyramid[level], next_pyramid[level], level_flow ? &*level_flow : nullptr);
  }

  FlowField flow(next.width, next.height);
  for (int y = 0; y < next.height; ++y) {
    for (int x = 0; x < next.width; ++x) {
      const Eigen::Index i = static_cast<Eigen::Index>(y) * next.width + x;
      flow.displacement(0, i) = level_flow->dx(y / kBlock, x / kBlock);
      flow.displacement(1, i) = level_flow->dy(y / kBlock, x / kBlock);
    }
  }
  return flow;
}

LabelMap warp_labels(const LabelMap& labels, const FlowField& flow) {
  if (flow.width != labels.width() || flow.height != labels.height()) {
    throw ContractError("flow field and label map differ in size");
  }
  LabelMap out(labels.width(), labels.height(), kIgnore);
  for (int y = 0; y < labels.height(); ++y) {
    for (int x = 0; x < labels.width(); ++x) {
      const Eigen::Index i = static_cast<Eigen::Index>(y) * labels.width() + x;
      const long sx = std::lround(x + flow.displacement(0, i));
      const long sy = std::lround(y + flow.displacement(1, i));
      if (sx < 0 || sy < 0 || sx >= labels.width() || sy >= labels.height()) continue;
      out.at(x, y) = labels.at(static_cast<int>(sx), static_cast<int>(sy));
    }
  }
  return out;
}

Scalar object_overlap(const LabelMap& warped, const LabelMap& next) {
  if (!same_size(warped, next)) throw ContractError("label maps differ in size");
  std::size_t intersection = 0;
  std::size_t union_count = 0;
  for (std::size_t i = 0; i < warped.pixel_count(); ++i) {
    const Label a = warped[i];
    const Label b = next[i];
    if (a == kIgnore || b == kIgnore) continue;
    const bool a_object = a != kBackground;
    const bool b_object = b != kBackground;
    if (a_object || b_object) ++union_count;
    if (a_object && a == b) ++intersection;
  }
  return union_count == 0 ? 1.0 : static_cast<Scalar>(intersection) / static_cast<Scalar>(union_count);
}

Scalar selection_objective(std::span<const ModelChoice> choices, std::span<const PairOverlaps> overlaps,
                           const CombineConfig& config) {
  if (choices.size() != overlaps.size() + 1) throw ContractError("need one overlap table per consecutive pair");
  Scalar total = 0.0;
  for (std::size_t f = 0; f < overlaps.size(); ++f) {
    const auto from = choices[f];
    const auto to = choices[f + 1];
    total += consistency_score(from, to, overlaps[f](static_cast<int>(from), static_cast<int>(to)), config);
  }
  return total;
}

SelectionSequence select_models(std::span<const PairOverlaps> overlaps, const CombineConfig& config) {
  if (!(config.epsilon >= 0.0)) throw ConfigError("epsilon must be >= 0");
  constexpr int kB = static_cast<int>(ModelChoice::kBatch);
  constexpr int kO = static_cast<int>(ModelChoice::kOnline);
  const std::size_t n = overlaps.size() + 1;

  std::array<Scalar, 2> score{0.0, 0.0};
  // back[f][s]: best predecessor of state s at frame f.
  std::vector<std::array<ModelChoice, 2>> back(n, {ModelChoice::kBatch, ModelChoice::kBatch});
  for (std::size_t f = 1; f < n; ++f) {
    std::array<Scalar, 2> next{};
    for (int s : {kB, kO}) {
      const auto to = static_cast<ModelChoice>(s);
      const Scalar via_batch = score[kB] + consistency_score(ModelChoice::kBatch, to, overlaps[f - 1](kB, s), config);
      const Scalar via_online = score[kO] + consistency_score(ModelChoice::kOnline, to, overlaps[f - 1](kO, s), config);
      if (via_online > via_batch) {
        next[s] = via_online;
        back[f][s] = ModelChoice::kOnline;
      } else {
        next[s] = via_batch;
        back[f][s] = ModelChoice::kBatch;
      }
    }
    score = next;
  }

  SelectionSequence out;
  out.choices.resize(n);
  out.choices[n - 1] = score[kO] > score[kB] ? ModelChoice::kOnline : ModelChoice::kBatch;
  for (std::size_t f = n - 1; f > 0; --f) out.choices[f - 1] = back[f][static_cast<int>(out.choices[f])];
  out.objective = selection_objective(out.choices, overlaps, config);
  return out;
}

std::vector<PairOverlaps> pair_overlaps(std::span<const LabelMap> batch, std::span<const LabelMap> online,
                                        std::span<const FlowField> flows) {
  if (batch.size() != online.size() || batch.empty()) {
    throw ContractError("batch and online sequences must be nonempty and of equal length");
  }
  if (flows.size() + 1 != batch.size()) throw ContractError("need one flow field per consecutive frame pair");
  std::vector<PairOverlaps> out(flows.size());
  for (std::size_t f = 0; f < flows.size(); ++f) {
    const std::array<const LabelMap*, 2> current{&batch[f], &online[f]};
    const std::array<const LabelMap*, 2> following{&batch[f + 1], &online[f + 1]};
    for (int a = 0; a < 2; ++a) {
      const LabelMap warped = warp_labels(*current[a], flows[f]);
      for (int b = 0; b < 2; ++b) out[f](a, b) = object_overlap(warped, *following[b]);
    }
  }
  return out;
}

SelectionSequence select_models(std::span<const LabelMap> batch, std::span<const LabelMap> online,
                                std::span<const FlowField> flows, const CombineConfig& config) {
  return select_models(pair_overlaps(batch, online, flows), config);
}

std::vector<LabelMap> apply_selection(std::span<const LabelMap> batch, std::span<const LabelMap> online,
                                      const SelectionSequence& selection) {
  if (batch.size() != online.size() || selection.choices.size() != batch.size()) {
    throw ContractError("selection length does not match the sequences");
  }
  std::vector<LabelMap> out;
  out.reserve(batch.size());
  for (std::size_t f = 0; f < batch.size(); ++f) {
    out.push_back(selection.choices[f] == ModelChoice::kBatch ? batch[f] : online[f]);
  }
  return out;
}

namespace {
constexpr float kFloMagic = 202021.25f;
}

FlowField read_flo(const std::filesystem::path& path) {
  auto in = detail::open_input(path);
  if (detail::read_f32(in) != kFloMagic) throw IoError("'" + path.string() + "' is not a .flo file");
  const std::int32_t w = detail::read_i32(in);
  const std::int32_t h = detail::read_i32(in);
  if (w < 1 || h < 1 || w > 1 << 15 || h > 1 << 15) throw IoError("'" + path.string() + "' has invalid dimensions");
  FlowField flow(w, h);
  for (Eigen::Index i = 0; i < flow.displacement.cols(); ++i) {
    flow.displacement(0, i) = detail::read_f32(in);
    flow.displacement(1, i) = detail::read_f32(in);
  }
  if (!flow.displacement.allFinite()) throw IoError("'" + path.string() + "' contains non-finite flow");
  return flow;
}

void write_flo(const FlowField& flow, const std::filesystem::path& path) {
  auto out = detail::open_output(path);
  detail::write_f32(out, kFloMagic);
  detail::write_i32(out, flow.width);
  detail::write_i32(out, flow.height);
  for (Eigen::Index i = 0; i < flow.displacement.cols(); ++i) {
    detail::write_f32(out, static_cast<float>(flow.displacement(0, i)));
    detail::write_f32(out, static_cast<float>(flow.displacement(1, i)));
  }
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

}  // namespace vidadapt
