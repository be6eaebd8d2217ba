#include "emot/cluster_detector.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <tuple>

#include "emot/error.hpp"

namespace emot {

void ClusterParams::validate() const {
  std::string bad;
  if (eps <= 0) bad += " eps";
  if (min_pts < 1) bad += " min_pts";
  if (min_cluster_events < 1) bad += " min_cluster_events";
  if (!(score_saturation >= 1.0) || !std::isfinite(score_saturation)) bad += " score_saturation";
  if (!bad.empty()) throw ConfigError("invalid cluster parameters:" + bad);
}

std::vector<Detection> detect(const PolarityFrame& frame, const ClusterParams& params, ClassId class_id) {
  params.validate();
  const CountGrid weight = frame.combined();
  const int h = static_cast<int>(weight.rows());
  const int w = static_cast<int>(weight.cols());
  if (h == 0 || w == 0) return {};

  // Summed-area table with a zero border row/column.
  Eigen::Matrix<std::uint64_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> sat =
      Eigen::Matrix<std::uint64_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>::Zero(h + 1, w + 1);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      sat(y + 1, x + 1) = weight(y, x) + sat(y, x + 1) + sat(y + 1, x) - sat(y, x);

  const int eps = params.eps;
  auto window_sum = [&](int x, int y) {
    const int x0 = std::max(0, x - eps), x1 = std::min(w, x + eps + 1);
    const int y0 = std::max(0, y - eps), y1 = std::min(h, y + eps + 1);
    return sat(y1, x1) - sat(y0, x1) - sat(y1, x0) + sat(y0, x0);
  };

  std::vector<char> core(static_cast<std::size_t>(w) * h, 0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (weight(y, x) > 0 && window_sum(x, y) >= params.min_pts) core[static_cast<std::size_t>(y) * w + x] = 1;

  struct Cluster {
    std::uint64_t weight = 0;
    int x0 = std::numeric_limits<int>::max(), y0 = std::numeric_limits<int>::max();
    int x1 = -1, y1 = -1;
  };
  std::vector<int> label(static_cast<std::size_t>(w) * h, -1);
  std::vector<Cluster> clusters;
  std::vector<int> stack;

  for (int start = 0; start < w * h; ++start) {
    if (!core[start] || label[start] >= 0) continue;
    const int id = static_cast<int>(clusters.size());
    Cluster c;
    auto claim = [&](int p) {
      label[p] = id;
      const int px = p % w, py = p / w;
      c.weight += weight(py, px);
      c.x0 = std::min(c.x0, px);
      c.x1 = std::max(c.x1, px);
      c.y0 = std::min(c.y0, py);
      c.y1 = std::max(c.y1, py);
    };
    claim(start);
    stack.assign(1, start);
    while (!stack.empty()) {
      const int p = stack.back();
      stack.pop_back();
      const int px = p % w, py = p / w;
      for (int y = std::max(0, py - eps); y <= std::min(h - 1, py + eps); ++y) {
        for (int x = std::max(0, px - eps); x <= std::min(w - 1, px + eps); ++x) {
          const int q = y * w + x;
          if (label[q] >= 0 || weight(y, x) == 0) continue;
          claim(q);
          if (core[q]) stack.push_back(q);
        }
      }
    }
    clusters.push_back(c);
  }

  std::vector<Detection> out;
  for (const Cluster& c : clusters) {
    if (c.weight < params.min_cluster_events) continue;
    Detection d;
    d.bbox = {double(c.x0), double(c.y0), double(c.x1 - c.x0 + 1), double(c.y1 - c.y0 + 1)};
    d.score = std::min(1.0, static_cast<double>(c.weight) / params.score_saturation);
    d.class_id = class_id;
    d.frame_index = frame.frame_index;
    out.push_back(d);
  }
  std::sort(out.begin(), out.end(), [](const Detection& a, const Detection& b) {
    return std::tie(a.bbox.y, a.bbox.x, a.bbox.w, a.bbox.h) < std::tie(b.bbox.y, b.bbox.x, b.bbox.w, b.bbox.h);
  });
  return out;
}

}  // namespace emot
