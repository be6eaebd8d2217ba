#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string_view>

namespace emot {

/// Axis-aligned box in MOT16 layout: left, top, width, height.
template <typename Scalar>
struct Box {
  Scalar x{0};
  Scalar y{0};
  Scalar w{0};
  Scalar h{0};

  Scalar right() const { return x + w; }
  Scalar bottom() const { return y + h; }
  Scalar area() const { return w * h; }
  Scalar cx() const { return x + w / Scalar(2); }
  Scalar cy() const { return y + h / Scalar(2); }

  /// Corners in (tl, tr, bl, br) order as columns.
  Eigen::Matrix<Scalar, 2, 4> corners() const {
    Eigen::Matrix<Scalar, 2, 4> c;
    c << x, right(), x, right(),
         y, y, bottom(), bottom();
    return c;
  }

  bool valid() const {
    return std::isfinite(x) && std::isfinite(y) && std::isfinite(w) && std::isfinite(h) &&
           w >= Scalar(0) && h >= Scalar(0);
  }

  Box translated(Scalar dx, Scalar dy) const { return {x + dx, y + dy, w, h}; }

  template <typename Other>
  Box<Other> cast() const {
    return {static_cast<Other>(x), static_cast<Other>(y), static_cast<Other>(w),
            static_cast<Other>(h)};
  }

  friend bool operator==(const Box&, const Box&) = default;
};

using BBox = Box<double>;

template <typename Scalar>
Box<Scalar> box_from_center(Scalar cx, Scalar cy, Scalar w, Scalar h) {
  return {cx - w / Scalar(2), cy - h / Scalar(2), w, h};
}

/// Intersection over union. Zero when the union has no area.
template <typename Scalar>
Scalar iou(const Box<Scalar>& a, const Box<Scalar>& b) {
  // (x + w) - x need not round back to w
  if (a == b) return a.area() > Scalar(0) ? Scalar(1) : Scalar(0);
  const Scalar iw = std::min(a.right(), b.right()) - std::max(a.x, b.x);
  const Scalar ih = std::min(a.bottom(), b.bottom()) - std::max(a.y, b.y);
  if (iw <= Scalar(0) || ih <= Scalar(0)) return Scalar(0);
  const Scalar inter = iw * ih;
  const Scalar uni = a.area() + b.area() - inter;
  if (uni <= Scalar(0)) return Scalar(0);
  return std::clamp(inter / uni, Scalar(0), Scalar(1));
}

enum class SizeClass { small, medium, large };

/// COCO buckets: area < 32^2 small, < 96^2 medium, else large.
template <typename Scalar>
SizeClass size_class(const Box<Scalar>& b) {
  const Scalar area = b.area();
  if (area < Scalar(32 * 32)) return SizeClass::small;
  if (area < Scalar(96 * 96)) return SizeClass::medium;
  return SizeClass::large;
}

enum class ClassId : std::uint8_t { vehicle = 0, pedestrian = 1 };

inline std::string_view to_string(ClassId c) {
  return c == ClassId::vehicle ? "vehicle" : "pedestrian";
}

inline std::optional<ClassId> parse_class(std::string_view s) {
  if (s == "vehicle") return ClassId::vehicle;
  if (s == "pedestrian") return ClassId::pedestrian;
  return std::nullopt;
}

struct Detection {
  BBox bbox;
  double score{1.0};
  ClassId class_id{ClassId::vehicle};
  std::int64_t frame_index{0};

  bool valid() const { return bbox.valid() && score >= 0.0 && score <= 1.0 && frame_index >= 0; }
};

}  // namespace emot
