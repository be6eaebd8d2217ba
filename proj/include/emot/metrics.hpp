#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "emot/geometry.hpp"
#include "emot/tracker.hpp"

namespace emot {

struct GroundTruthEntry {
  std::int64_t frame_index{0};
  int object_id{0};
  BBox bbox;
  ClassId class_id{ClassId::vehicle};
  double visibility{1.0};

  friend bool operator==(const GroundTruthEntry&, const GroundTruthEntry&) = default;
};

struct PrPoint {
  double precision{0};
  double recall{0};

  friend bool operator==(const PrPoint&, const PrPoint&) = default;
};

/// One point per distinct score level, in descending score order. Detections are matched
/// greedily per frame to the unmatched ground truth of highest IoU >= iou_thresh.
std::vector<PrPoint> pr_curve(std::span<const Detection> dets, std::span<const GroundTruthEntry> gt,
                              double iou_thresh);

/// 101-point interpolated AP: mean over r in {0, 0.01, ..., 1} of the best precision at recall >= r.
double average_precision(std::span<const PrPoint> curve);

struct DetEvalOptions {
  double operating_score = 0.5;  // precision/recall use detections at or above this score
  double operating_iou = 0.5;
};

struct DetEvalReport {
  std::optional<double> ap50, ap75, ap_small, ap_medium, ap_large, map;
  std::optional<double> precision, recall;
  std::optional<double> fps;
};

/// AP50, AP75, mAP over IoU 0.50:0.05:0.95, and size-bucket APs (IoU-swept, COCO rules for
/// out-of-bucket boxes). Absent when the relevant ground truth set is empty.
DetEvalReport detection_report(std::span<const Detection> dets, std::span<const GroundTruthEntry> gt,
                               const DetEvalOptions& options = {});

struct MotEvalReport {
  double mota{0}, motp{0}, idf1{0}, idp{0}, idr{0};
  std::int64_t mt{0}, pt{0}, ml{0}, fp{0}, fn{0}, ids{0};

  // Raw tallies, kept so reports can be merged across sequences.
  std::int64_t num_gt{0}, num_hyp{0}, num_matches{0}, num_frames{0}, num_trajectories{0};
  std::int64_t idtp{0}, idfp{0}, idfn{0};
  double iou_sum{0};
  double distance_sum{0};  // pixel distance between matched box centres

  /// Mean centre distance of matched pairs, in pixels.
  double motp_distance() const { return num_matches ? distance_sum / double(num_matches) : 0.0; }
};

struct MotEvalOptions {
  double iou_thresh = 0.5;
  double mostly_tracked = 0.8;
  double mostly_lost = 0.2;
};

/// CLEAR-MOT counts plus MOTA/MOTP (MOTP as mean IoU of matched pairs). Previous
/// correspondences are kept while IoU stays above threshold; the rest are re-matched by
/// Hungarian on IoU.
MotEvalReport clear_mot(std::span<const FrameResult> results, std::span<const GroundTruthEntry> gt,
                        const MotEvalOptions& options = {});

struct IdentityScores {
  double idf1{0}, idp{0}, idr{0};
  std::int64_t idtp{0}, idfp{0}, idfn{0};
};

/// Global trajectory pairing maximising frames with IoU >= threshold.
IdentityScores identity_metrics(std::span<const FrameResult> results, std::span<const GroundTruthEntry> gt,
                                const MotEvalOptions& options = {});

struct Coverage {
  std::int64_t mt{0}, pt{0}, ml{0};
};

Coverage trajectory_coverage(std::span<const FrameResult> results, std::span<const GroundTruthEntry> gt,
                             const MotEvalOptions& options = {});

/// CLEAR-MOT, identity and coverage in one report.
MotEvalReport evaluate_tracking(std::span<const FrameResult> results, std::span<const GroundTruthEntry> gt,
                                const MotEvalOptions& options = {});

/// Sums tallies and recomputes every ratio (micro-average).
MotEvalReport merge_reports(std::span<const MotEvalReport> reports);

/// 1 - errors / max(num_gt, 1).
double mota_from_counts(std::int64_t fp, std::int64_t fn, std::int64_t ids, std::int64_t num_gt);

struct Throughput {
  std::optional<double> fps;
  std::optional<double> cv;  // coefficient of variation across repeated runs
  int runs{0};
};

std::optional<double> frames_per_second(std::int64_t frames, double seconds);

/// Times `run` `repeats` times; each call processes `frames` frames.
Throughput measure_throughput(const std::function<void()>& run, std::int64_t frames, int repeats = 1);

}  // namespace emot
