#include "emot/tracker.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "emot/assignment.hpp"
#include "emot/error.hpp"

namespace emot {
namespace {

using Vec2 = Eigen::Vector2d;

// (1 - cos)/2 between two directions; zero when either has no length.
double direction_cost(const Vec2& a, const Vec2& b) {
  const double na = a.norm(), nb = b.norm();
  if (na <= 1e-12 || nb <= 1e-12) return 0.0;
  const double cos = std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
  return (1.0 - cos) / 2.0;
}

Vec2 center(const BBox& b) { return {b.cx(), b.cy()}; }

}  // namespace

const char* to_string(TrackStatus s) {
  switch (s) {
    case TrackStatus::tentative: return "tentative";
    case TrackStatus::active: return "active";
    case TrackStatus::lost: return "lost";
    case TrackStatus::removed: return "removed";
  }
  return "?";
}

void TrackerConfig::validate() const {
  std::vector<std::string> bad;
  if (!(score_threshold > 0.0 && score_threshold < 1.0)) bad.push_back("score_threshold");
  if (!(first_gate > 0.0 && first_gate <= 1.0)) bad.push_back("first_gate");
  if (!(second_gate > 0.0 && second_gate <= 1.0)) bad.push_back("second_gate");
  if (max_lost < 0) bad.push_back("max_lost");
  if (activation_hits < 1) bad.push_back("activation_hits");
  if (!(motion_weight >= 0.0) || !std::isfinite(motion_weight)) bad.push_back("motion_weight");
  if (!(inertia_weight >= 0.0) || !std::isfinite(inertia_weight)) bad.push_back("inertia_weight");
  if (history_len < 1) bad.push_back("history_len");
  if (!(noise.std_weight_position > 0.0)) bad.push_back("std_weight_position");
  if (!(noise.std_weight_velocity > 0.0)) bad.push_back("std_weight_velocity");
  if (!bad.empty()) {
    std::string msg = "invalid tracker configuration:";
    for (const auto& k : bad) msg += " " + k;
    throw ConfigError(msg);
  }
}

BBox Track::association_box(int history_len) const {
  if (status == TrackStatus::lost && time_since_update > history_len) return last_observation;
  return predicted_box(state);
}

std::pair<std::vector<Detection>, std::vector<Detection>> split_by_score(
    std::span<const Detection> detections, double tau) {
  std::pair<std::vector<Detection>, std::vector<Detection>> out;
  for (const Detection& d : detections) (d.score > tau ? out.first : out.second).push_back(d);
  return out;
}

double corner_velocity_cost(std::span<const BBox> history, const BBox& candidate) {
  if (history.size() < 2) return 0.0;
  const Eigen::Matrix<double, 2, 4> velocity = history.back().corners() - history.front().corners();
  const Eigen::Matrix<double, 2, 4> step = candidate.corners() - history.back().corners();
  double sum = 0.0;
  for (int k = 0; k < 4; ++k) sum += direction_cost(velocity.col(k), step.col(k));
  return sum / 4.0;
}

double inertia_cost(std::span<const BBox> history, const BBox& candidate) {
  if (history.size() < 2) return 0.0;
  const BBox& last = history[history.size() - 1];
  const BBox& prev = history[history.size() - 2];
  return direction_cost(center(last) - center(prev), center(candidate) - center(last));
}

double association_cost(const BBox& predicted, std::span<const BBox> history, const BBox& candidate,
                        double motion_weight, double inertia_weight) {
  double cost = 1.0 - iou(predicted, candidate);
  if (history.size() >= 2) {
    if (motion_weight != 0.0) cost += motion_weight * corner_velocity_cost(history, candidate);
    if (inertia_weight != 0.0) cost += inertia_weight * inertia_cost(history, candidate);
  }
  return cost;
}

double association_cost(const Track& track, const Detection& det, const TrackerConfig& cfg) {
  const std::vector<BBox> history(track.history.begin(), track.history.end());
  return association_cost(track.association_box(cfg.history_len), history, det.bbox,
                          cfg.motion_weight, cfg.inertia_weight);
}

Tracker::Tracker(TrackerConfig cfg) : cfg_(std::move(cfg)), filter_(cfg_.noise) { cfg_.validate(); }

void Tracker::start_track(const Detection& d) {
  Track t;
  t.id = next_id_++;
  t.state = filter_.initiate(d);
  t.status = TrackStatus::tentative;
  t.score = d.score;
  t.class_id = d.class_id;
  t.hits = 1;
  t.history.push_back(d.bbox);
  t.last_observation = d.bbox;
  tracks_.push_back(std::move(t));
}

void Tracker::step_class(ClassId cls, std::span<const Detection> detections,
                         const std::vector<std::size_t>& det_indices) {
  std::vector<std::size_t> pool;
  for (std::size_t i = 0; i < tracks_.size(); ++i)
    if (tracks_[i].class_id == cls && tracks_[i].status != TrackStatus::removed) pool.push_back(i);

  for (std::size_t ti : pool) {
    Track& t = tracks_[ti];
    t.state = filter_.predict(t.state);
    ++t.age;
    ++t.time_since_update;
  }

  std::vector<std::size_t> high, low;
  for (std::size_t di : det_indices)
    (detections[di].score > cfg_.score_threshold ? high : low).push_back(di);

  std::vector<std::vector<BBox>> histories(pool.size());
  std::vector<BBox> assoc_boxes(pool.size());
  for (std::size_t k = 0; k < pool.size(); ++k) {
    const Track& t = tracks_[pool[k]];
    histories[k].assign(t.history.begin(), t.history.end());
    assoc_boxes[k] = t.association_box(cfg_.history_len);
  }

  std::vector<char> track_matched(pool.size(), 0);
  auto apply_match = [&](std::size_t k, std::size_t di, int stage, double cost) {
    Track& t = tracks_[pool[k]];
    const Detection& d = detections[di];
    track_matched[k] = 1;
    try {
      t.state = filter_.update(t.state, d);
    } catch (const FilterDivergence&) {
      t.status = TrackStatus::removed;  // the detection is spent on the dead track
      return;
    }
    t.time_since_update = 0;
    ++t.hits;
    t.score = d.score;
    t.history.push_back(d.bbox);
    while (static_cast<int>(t.history.size()) > cfg_.history_len) t.history.pop_front();
    t.last_observation = d.bbox;
    if (t.status == TrackStatus::lost) t.status = TrackStatus::active;
    last_matches_.push_back({t.id, di, stage, cost});
  };

  // First association: every live track against the high tier, composite cost.
  std::vector<std::size_t> high_remain;
  {
    Eigen::MatrixXd costs(static_cast<Eigen::Index>(pool.size()), static_cast<Eigen::Index>(high.size()));
    for (std::size_t k = 0; k < pool.size(); ++k)
      for (std::size_t j = 0; j < high.size(); ++j)
        costs(k, j) = association_cost(assoc_boxes[k], histories[k], detections[high[j]].bbox,
                                       cfg_.motion_weight, cfg_.inertia_weight);
    const auto gated = gate(costs, cfg_.first_gate);
    const Assignment a = solve(gated);
    for (auto [k, j] : a.pairs) apply_match(static_cast<std::size_t>(k), high[j], 1, costs(k, j));
    for (int j : a.unmatched_cols) high_remain.push_back(high[j]);
  }

  // Second association: unmatched non-lost tracks against the low tier, IoU only.
  std::vector<std::size_t> low_remain = low;
  if (cfg_.enable_second_stage) {
    std::vector<std::size_t> remaining;
    for (std::size_t k = 0; k < pool.size(); ++k)
      if (!track_matched[k] && tracks_[pool[k]].status != TrackStatus::lost) remaining.push_back(k);
    Eigen::MatrixXd costs(static_cast<Eigen::Index>(remaining.size()), static_cast<Eigen::Index>(low.size()));
    for (std::size_t r = 0; r < remaining.size(); ++r)
      for (std::size_t j = 0; j < low.size(); ++j)
        costs(r, j) = 1.0 - iou(assoc_boxes[remaining[r]], detections[low[j]].bbox);
    const Assignment a = solve(gate(costs, cfg_.second_gate));
    low_remain.clear();
    for (auto [r, j] : a.pairs) apply_match(remaining[r], low[j], 2, costs(r, j));
    for (int j : a.unmatched_cols) low_remain.push_back(low[j]);
  }

  for (std::size_t k = 0; k < pool.size(); ++k) {
    if (track_matched[k]) continue;
    Track& t = tracks_[pool[k]];
    switch (t.status) {
      case TrackStatus::tentative: t.status = TrackStatus::removed; break;
      case TrackStatus::active: t.status = TrackStatus::lost; break;
      case TrackStatus::lost:
        if (t.time_since_update > cfg_.max_lost) t.status = TrackStatus::removed;
        break;
      case TrackStatus::removed: break;
    }
  }

  for (std::size_t di : high_remain) start_track(detections[di]);
  if (cfg_.init_from_low)
    for (std::size_t di : low_remain) start_track(detections[di]);
}

FrameResult Tracker::step(std::span<const Detection> detections) {
  for (const Detection& d : detections) {
    if (d.frame_index != frame_)
      throw Error("detection for frame " + std::to_string(d.frame_index) + " passed at frame " +
                  std::to_string(frame_));
    if (!d.valid()) throw Error("invalid detection at frame " + std::to_string(frame_));
  }
  last_matches_.clear();

  for (ClassId cls : {ClassId::vehicle, ClassId::pedestrian}) {
    std::vector<std::size_t> indices;
    for (std::size_t i = 0; i < detections.size(); ++i)
      if (detections[i].class_id == cls) indices.push_back(i);
    step_class(cls, detections, indices);
  }

  std::erase_if(tracks_, [](const Track& t) { return t.status == TrackStatus::removed; });

  FrameResult result;
  result.frame_index = frame_;
  for (Track& t : tracks_) {
    if (t.status == TrackStatus::tentative && t.hits >= cfg_.activation_hits) t.status = TrackStatus::active;
    if (t.status == TrackStatus::active && t.time_since_update == 0)
      result.tracks.push_back({t.id, predicted_box(t.state), t.score, t.class_id});
  }
  std::sort(result.tracks.begin(), result.tracks.end(),
            [](const TrackReport& a, const TrackReport& b) { return a.id < b.id; });
  ++frame_;
  return result;
}

std::vector<FrameResult> run_sequence(std::span<const std::vector<Detection>> frames,
                                      const TrackerConfig& cfg) {
  for (std::size_t i = 0; i < frames.size(); ++i)
    for (const Detection& d : frames[i])
      if (d.frame_index != static_cast<std::int64_t>(i))
        throw Error("non-contiguous frame index " + std::to_string(d.frame_index) + " in slot " +
                    std::to_string(i));
  Tracker tracker(cfg);
  std::vector<FrameResult> out;
  out.reserve(frames.size());
  for (const auto& dets : frames) out.push_back(tracker.step(dets));
  return out;
}

std::vector<std::vector<Detection>> group_by_frame(std::span<const Detection> detections,
                                                   std::int64_t frame_count) {
  std::vector<std::vector<Detection>> frames(static_cast<std::size_t>(std::max<std::int64_t>(0, frame_count)));
  for (const Detection& d : detections) {
    if (d.frame_index < 0 || d.frame_index >= frame_count)
      throw Error("detection frame " + std::to_string(d.frame_index) + " outside [0, " +
                  std::to_string(frame_count) + ")");
    frames[static_cast<std::size_t>(d.frame_index)].push_back(d);
  }
  return frames;
}

}  // namespace emot
