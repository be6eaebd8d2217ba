#include "emot/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace emot::synthetic {

BBox MovingBox::box_at(int frame, const SensorGeometry& g) const {
  const int last = last_frame < 0 ? std::numeric_limits<int>::max() : last_frame;
  if (frame < first_frame || frame > last) return {};
  const Eigen::Vector2d p = start + velocity * double(frame - first_frame);
  const int x0 = static_cast<int>(std::lround(p.x())), y0 = static_cast<int>(std::lround(p.y()));
  const int cx0 = std::max(0, x0), cy0 = std::max(0, y0);
  const int cx1 = std::min(g.width, x0 + width), cy1 = std::min(g.height, y0 + height);
  if (cx1 <= cx0 || cy1 <= cy0) return {};
  return {double(cx0), double(cy0), double(cx1 - cx0), double(cy1 - cy0)};
}

bool MovingBox::visible(int frame, const SensorGeometry& g) const { return box_at(frame, g).area() > 0; }

bool MovingBox::silent_at(int frame) const {
  return std::any_of(silent.begin(), silent.end(),
                     [frame](const auto& s) { return frame >= s.first && frame < s.second; });
}

std::vector<GroundTruthEntry> ground_truth(const SceneSpec& spec) {
  std::vector<GroundTruthEntry> gt;
  for (int k = 0; k < spec.frames; ++k)
    for (const MovingBox& o : spec.objects)
      if (o.visible(k, spec.geometry)) gt.push_back({k, o.id, o.box_at(k, spec.geometry), spec.class_id, 1.0});
  return gt;
}

Scene generate_scene(const SceneSpec& spec) {
  Scene scene;
  scene.gt = ground_truth(spec);
  std::mt19937 rng(spec.seed);
  std::uniform_int_distribution<std::int64_t> offset(0, spec.window_us - 1);
  std::uniform_int_distribution<int> px(0, spec.geometry.width - 1), py(0, spec.geometry.height - 1);

  for (int k = 0; k < spec.frames; ++k) {
    const std::int64_t base = k * spec.window_us;
    std::vector<Event> frame_events;
    for (const MovingBox& o : spec.objects) {
      if (!o.visible(k, spec.geometry) || o.silent_at(k)) continue;
      const BBox b = o.box_at(k, spec.geometry);
      const double mid_x = b.cx();
      const int sign = o.velocity.x() >= 0 ? 1 : -1;
      for (int y = int(b.y); y < int(b.bottom()); ++y)
        for (int x = int(b.x); x < int(b.right()); ++x)
          for (int e = 0; e < spec.events_per_pixel; ++e) {
            const bool leading = (x + 0.5 - mid_x) * sign >= 0;
            frame_events.push_back({base + offset(rng), x, y, static_cast<std::int8_t>(leading ? 1 : -1)});
          }
    }
    for (int n = 0; n < spec.noise_events_per_frame; ++n)
      frame_events.push_back({base + offset(rng), px(rng), py(rng), static_cast<std::int8_t>(n % 2 ? 1 : -1)});
    // Pin the window edges so first-event anchoring reproduces frame k exactly.
    if (k == 0) frame_events.push_back({0, 0, 0, 1});
    if (k == spec.frames - 1) frame_events.push_back({base + spec.window_us - 1, spec.geometry.width - 1, 0, 1});
    std::stable_sort(frame_events.begin(), frame_events.end(),
                     [](const Event& a, const Event& b) { return a.t < b.t; });
    scene.events.insert(scene.events.end(), frame_events.begin(), frame_events.end());
  }
  return scene;
}

std::vector<std::vector<Detection>> scripted_detections(const SceneSpec& spec) {
  std::vector<std::vector<Detection>> frames(static_cast<std::size_t>(spec.frames));
  for (int k = 0; k < spec.frames; ++k)
    for (const MovingBox& o : spec.objects)
      if (o.visible(k, spec.geometry) && !o.silent_at(k))
        frames[k].push_back({o.box_at(k, spec.geometry), o.score, spec.class_id, k});
  return frames;
}

namespace {

MovingBox moving(int id, Eigen::Vector2d start, Eigen::Vector2d velocity, int w, int h) {
  MovingBox b;
  b.id = id;
  b.start = start;
  b.velocity = velocity;
  b.width = w;
  b.height = h;
  return b;
}

}  // namespace

SceneSpec four_object_scene(int frames) {
  SceneSpec s;
  s.frames = frames;
  MovingBox east = moving(1, Eigen::Vector2d{10, 60}, Eigen::Vector2d{1.2, 0.0}, 16, 12);
  MovingBox west = moving(2, Eigen::Vector2d{200, 76}, Eigen::Vector2d{-1.2, 0.0}, 16, 12);
  MovingBox occluded = moving(3, Eigen::Vector2d{30, 20}, Eigen::Vector2d{0.8, 0.1}, 14, 14);
  occluded.silent = {{70, 76}};
  MovingBox leaving = moving(4, Eigen::Vector2d{150, 120}, Eigen::Vector2d{1.0, 0.3}, 12, 16);
  s.objects = {east, west, occluded, leaving};
  return s;
}

SceneSpec crossing_scene(int frames) {
  SceneSpec s;
  s.frames = frames;
  // Diagonals meeting near frame frames/2; per-frame displacement stays under width/4.
  const double speed = 3.0;
  const double half = frames / 2.0;
  MovingBox a = moving(1, Eigen::Vector2d{100 - speed * half, 80 - 1.0 * half}, Eigen::Vector2d{speed, 1.0}, 16, 16);
  MovingBox b = moving(2, Eigen::Vector2d{100 + speed * half, 80 - 1.0 * half}, Eigen::Vector2d{-speed, 1.0}, 16, 16);
  s.objects = {a, b};
  s.noise_events_per_frame = 0;
  return s;
}

}  // namespace emot::synthetic
