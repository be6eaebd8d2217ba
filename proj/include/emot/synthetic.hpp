#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <utility>
#include <vector>

#include "emot/events.hpp"
#include "emot/geometry.hpp"
#include "emot/metrics.hpp"

namespace emot::synthetic {

/// A box moving at constant velocity, in pixels per frame.
struct MovingBox {
  int id{1};
  Eigen::Vector2d start{0, 0};  // top-left at first_frame
  Eigen::Vector2d velocity{0, 0};
  int width{16};
  int height{12};
  int first_frame{0};
  int last_frame{-1};  // inclusive; -1 runs to the end of the scene
  std::vector<std::pair<int, int>> silent;  // [begin, end) frame spans that emit no events
  double score{0.9};  // for scripted detections

  /// Integer-aligned box at frame k clipped to the sensor, or a zero box when absent.
  BBox box_at(int frame, const SensorGeometry& g) const;
  bool visible(int frame, const SensorGeometry& g) const;
  bool silent_at(int frame) const;
};

struct SceneSpec {
  SensorGeometry geometry{};
  int frames{150};
  std::int64_t window_us{10000};
  std::vector<MovingBox> objects;
  int events_per_pixel{2};
  int noise_events_per_frame{15};
  std::uint32_t seed{7};
  ClassId class_id{ClassId::vehicle};
};

struct Scene {
  std::vector<Event> events;  // time-ordered, first at t = 0, last in the final window
  std::vector<GroundTruthEntry> gt;
};

/// Renders every visible, non-silent box as a filled patch of events (positive on the
/// leading half, negative on the trailing half) plus isolated noise events.
Scene generate_scene(const SceneSpec& spec);

/// Ground truth only; boxes present whenever any part is on the sensor.
std::vector<GroundTruthEntry> ground_truth(const SceneSpec& spec);

/// Detector-free scripted detections straight from the boxes, one list per frame.
std::vector<std::vector<Detection>> scripted_detections(const SceneSpec& spec);

/// Four-object scene: two boxes passing in adjacent lanes, one occluded for six frames,
/// one leaving through the right edge.
SceneSpec four_object_scene(int frames = 150);

/// Two boxes on crossing diagonals whose boxes overlap mid-sequence.
SceneSpec crossing_scene(int frames = 20);

}  // namespace emot::synthetic
