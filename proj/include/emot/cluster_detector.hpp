#pragma once

#include <cstdint>
#include <vector>

#include "emot/events.hpp"
#include "emot/geometry.hpp"

namespace emot {

struct ClusterParams {
  int eps = 2;                           // Chebyshev radius, pixels
  std::uint64_t min_pts = 4;             // weighted neighbours (self included) for a core pixel
  std::uint64_t min_cluster_events = 20;
  double score_saturation = 400.0;       // event count that maps to score 1

  void validate() const;
};

/// Density clustering of active pixels weighted by pos+neg counts. One detection per
/// cluster heavy enough, boxed tightly around its pixels, sorted by (y, x, w, h).
std::vector<Detection> detect(const PolarityFrame& frame, const ClusterParams& params,
                              ClassId class_id = ClassId::vehicle);

}  // namespace emot
