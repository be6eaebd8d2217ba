#pragma once

#include <cstdint>
#include <deque>
#include <span>
#include <utility>
#include <vector>

#include "emot/geometry.hpp"
#include "emot/kalman.hpp"

namespace emot {

struct TrackerConfig {
  double score_threshold = 0.5;  // tau: high tier is score > tau
  double first_gate = 0.8;       // max composite cost in the first association
  double second_gate = 0.5;      // max 1 - IoU in the second association
  int max_lost = 30;
  int activation_hits = 3;
  double motion_weight = 0.2;   // corner-velocity direction term
  double inertia_weight = 0.2;  // center-motion direction term
  int history_len = 3;
  /// Unmatched low-score detections also start tracks. Standard ByteTrack uses high only.
  bool init_from_low = true;
  bool enable_second_stage = true;
  KalmanNoise<double> noise{};

  /// Throws ConfigError naming every offending key.
  void validate() const;
};

enum class TrackStatus { tentative, active, lost, removed };

const char* to_string(TrackStatus s);

struct Track {
  int id{0};
  BoxState<double> state;
  TrackStatus status{TrackStatus::tentative};
  double score{0};
  ClassId class_id{ClassId::vehicle};
  int age{0};
  int hits{0};  // matched frames; consecutive while tentative
  int time_since_update{0};
  std::deque<BBox> history;  // oldest first, at most history_len boxes
  BBox last_observation;

  /// Box used for association: the Kalman prediction, or the last observation for tracks
  /// lost longer than the history window.
  BBox association_box(int history_len) const;
};

struct TrackReport {
  int id{0};
  BBox bbox;
  double score{0};
  ClassId class_id{ClassId::vehicle};

  friend bool operator==(const TrackReport&, const TrackReport&) = default;
};

struct FrameResult {
  std::int64_t frame_index{0};
  std::vector<TrackReport> tracks;  // ascending id

  friend bool operator==(const FrameResult&, const FrameResult&) = default;
};

/// High tier: score > tau. Low tier: score <= tau. Input order is kept in each tier.
std::pair<std::vector<Detection>, std::vector<Detection>> split_by_score(
    std::span<const Detection> detections, double tau);

/// Mean over the four corners of (1 - cos)/2 between each corner's history velocity
/// (oldest to newest entry) and its displacement from the newest entry to `candidate`.
double corner_velocity_cost(std::span<const BBox> history, const BBox& candidate);

/// (1 - cos)/2 between the last center step in the history and the candidate's center step.
double inertia_cost(std::span<const BBox> history, const BBox& candidate);

/// (1 - IoU) plus the weighted motion-direction terms; the motion terms vanish with fewer
/// than two history entries.
double association_cost(const BBox& predicted, std::span<const BBox> history, const BBox& candidate,
                        double motion_weight, double inertia_weight);
double association_cost(const Track& track, const Detection& det, const TrackerConfig& cfg);

struct MatchRecord {
  int track_id{0};
  std::size_t detection{0};  // index into the step's detection list
  int stage{1};
  double cost{0};
};

class Tracker {
 public:
  explicit Tracker(TrackerConfig cfg = {});

  /// Advances one frame. Every detection must carry the current frame index.
  FrameResult step(std::span<const Detection> detections);

  std::int64_t frame_index() const { return frame_; }
  const std::vector<Track>& tracks() const { return tracks_; }
  const std::vector<MatchRecord>& last_matches() const { return last_matches_; }
  const TrackerConfig& config() const { return cfg_; }

 private:
  void step_class(ClassId cls, std::span<const Detection> detections,
                  const std::vector<std::size_t>& det_indices);
  void start_track(const Detection& d);

  TrackerConfig cfg_;
  BoxKalmanFilter<double> filter_;
  std::vector<Track> tracks_;
  std::vector<MatchRecord> last_matches_;
  std::int64_t frame_{0};
  int next_id_{1};
};

/// Runs a fresh tracker over frames 0..N-1. Frame i's detections must all carry index i.
std::vector<FrameResult> run_sequence(std::span<const std::vector<Detection>> frames,
                                      const TrackerConfig& cfg);

/// Buckets detections by frame index into `frame_count` lists.
std::vector<std::vector<Detection>> group_by_frame(std::span<const Detection> detections,
                                                   std::int64_t frame_count);

}  // namespace emot
