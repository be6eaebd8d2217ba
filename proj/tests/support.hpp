#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <filesystem>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "emot/metrics.hpp"

namespace emot::testing {

/// Minimum total over all injective maps of the smaller side into the larger one.
inline double brute_force_min(const Eigen::MatrixXd& c) {
  const bool flip = c.rows() > c.cols();
  const Eigen::MatrixXd m = flip ? Eigen::MatrixXd(c.transpose()) : c;
  std::vector<int> cols(static_cast<std::size_t>(m.cols()));
  std::iota(cols.begin(), cols.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double total = 0;
    for (Eigen::Index r = 0; r < m.rows(); ++r) total += m(r, cols[static_cast<std::size_t>(r)]);
    best = std::min(best, total);
  } while (std::next_permutation(cols.begin(), cols.end()));
  return best;
}

/// Fresh empty directory under the build tree.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("emot_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

/// One object over ten frames; the hypothesis changes id halfway through.
struct SplitIdFixture {
  std::vector<GroundTruthEntry> gt;
  std::vector<FrameResult> results;
};

inline SplitIdFixture split_id_fixture() {
  SplitIdFixture f;
  for (std::int64_t k = 1; k <= 10; ++k) {
    const BBox b{10.0 + 2.0 * double(k), 20, 16, 16};
    f.gt.push_back({k, 1, b, ClassId::vehicle, 1.0});
    f.results.push_back({k, {{k <= 5 ? 1 : 2, b, 0.9, ClassId::vehicle}}});
  }
  return f;
}

/// Results that reproduce the ground truth exactly, ids included.
inline std::vector<FrameResult> results_from_gt(const std::vector<GroundTruthEntry>& gt) {
  std::map<std::int64_t, FrameResult> frames;
  for (const auto& g : gt) {
    auto& fr = frames[g.frame_index];
    fr.frame_index = g.frame_index;
    fr.tracks.push_back({g.object_id, g.bbox, 1.0, g.class_id});
  }
  std::vector<FrameResult> out;
  for (auto& [k, fr] : frames) {
    std::sort(fr.tracks.begin(), fr.tracks.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    out.push_back(fr);
  }
  return out;
}

/// IDTP maximised over every partial one-to-one pairing of gt and hypothesis trajectories.
inline std::int64_t brute_force_idtp(const std::vector<FrameResult>& results, const std::vector<GroundTruthEntry>& gt,
                                     double thresh = 0.5) {
  std::vector<int> gids, hids;
  for (const auto& g : gt)
    if (std::find(gids.begin(), gids.end(), g.object_id) == gids.end()) gids.push_back(g.object_id);
  for (const auto& r : results)
    for (const auto& t : r.tracks)
      if (std::find(hids.begin(), hids.end(), t.id) == hids.end()) hids.push_back(t.id);
  Eigen::MatrixXd overlap = Eigen::MatrixXd::Zero(Eigen::Index(gids.size()), Eigen::Index(hids.size()));
  for (const auto& g : gt)
    for (const auto& r : results)
      if (r.frame_index == g.frame_index)
        for (const auto& t : r.tracks)
          if (iou(g.bbox, t.bbox) >= thresh) {
            const auto gi = std::find(gids.begin(), gids.end(), g.object_id) - gids.begin();
            const auto hi = std::find(hids.begin(), hids.end(), t.id) - hids.begin();
            overlap(gi, hi) += 1;
          }
  if (overlap.size() == 0) return 0;
  // Pad with zero columns so every gt may stay unpaired.
  Eigen::MatrixXd padded = Eigen::MatrixXd::Zero(overlap.rows(), overlap.cols() + overlap.rows());
  padded.leftCols(overlap.cols()) = overlap;
  return std::int64_t(-brute_force_min(-padded));
}

}  // namespace emot::testing
