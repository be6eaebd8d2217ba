#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "emot/events.hpp"
#include "emot/metrics.hpp"
#include "emot/tracker.hpp"

namespace emot {

// MOT text files use 1-based frames; everything in memory is 0-based.
// Class column codes follow MOT16: 1 = pedestrian, 3 = vehicle (car); -1 means
// "take the caller's default class".

std::vector<GroundTruthEntry> parse_mot_gt(std::istream& in, ClassId default_class = ClassId::vehicle);
std::vector<GroundTruthEntry> read_mot_gt(const std::filesystem::path& path,
                                          ClassId default_class = ClassId::vehicle);
/// Canonical form: sorted by (frame, id), conf 1, shortest round-trip number formatting.
void write_mot_gt(std::ostream& out, std::span<const GroundTruthEntry> entries);
void write_mot_gt(const std::filesystem::path& path, std::span<const GroundTruthEntry> entries);

/// `frame,id,x,y,w,h,score,-1,-1,-1`, sorted by (frame, id).
void write_results(std::ostream& out, std::span<const FrameResult> results);
void write_results(const std::filesystem::path& path, std::span<const FrameResult> results);
std::vector<FrameResult> parse_results(std::istream& in, ClassId class_id = ClassId::vehicle);
std::vector<FrameResult> read_results(const std::filesystem::path& path, ClassId class_id = ClassId::vehicle);

/// MOT detection format `frame,-1,x,y,w,h,score,-1,-1,-1`.
void write_detections(std::ostream& out, std::span<const Detection> dets);
void write_detections(const std::filesystem::path& path, std::span<const Detection> dets);
std::vector<Detection> parse_detections(std::istream& in, ClassId class_id = ClassId::vehicle);
std::vector<Detection> read_detections(const std::filesystem::path& path, ClassId class_id = ClassId::vehicle);

/// JSON ground truth:
///   {"format": "emot-gt", "version": 1,
///    "frames": [{"frame": <1-based>, "objects": [{"id": n, "bbox": [x, y, w, h],
///                "class": "vehicle"|"pedestrian", "visibility": v (optional)}]}]}
std::vector<GroundTruthEntry> parse_json_gt(const std::string& text);
std::vector<GroundTruthEntry> read_json_gt(const std::filesystem::path& path);
std::string dump_json_gt(std::span<const GroundTruthEntry> entries);
void write_json_gt(const std::filesystem::path& path, std::span<const GroundTruthEntry> entries);

/// Binary frame archive: "EMOTFRM1", u32 width, u32 height, i64 window_len, u64 count, then
/// per frame i64 window_start and H*W u32 positive then H*W u32 negative counts (little-endian).
void write_frames(const std::filesystem::path& path, std::span<const PolarityFrame> frames);
std::vector<PolarityFrame> read_frames(const std::filesystem::path& path);

enum class Split { train, test };

struct FrameRange {
  std::int64_t begin{0};
  std::int64_t end{0};
  std::int64_t size() const { return end - begin; }
  bool contains(std::int64_t f) const { return f >= begin && f < end; }
  friend bool operator==(const FrameRange&, const FrameRange&) = default;
};

struct SequenceManifest {
  std::string name;
  ClassId class_id{ClassId::vehicle};
  std::filesystem::path event_file;
  SensorGeometry geometry{};
  std::int64_t window_len{10000};
  std::optional<std::filesystem::path> gt_path;
  Split split{Split::test};
  std::int64_t frame_count{0};

  /// Throws ConfigError when referenced files are missing or the window is not positive.
  void validate() const;
};

/// Train is the first half [0, floor(N/2)), test the rest.
std::pair<FrameRange, FrameRange> split_sequence(std::int64_t total_frames);
std::pair<FrameRange, FrameRange> split_sequence(const SequenceManifest& manifest, std::int64_t total_frames);

/// Shortest decimal that parses back to the same double.
std::string format_number(double v);

}  // namespace emot
