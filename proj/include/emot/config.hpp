#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include "emot/cluster_detector.hpp"
#include "emot/events.hpp"
#include "emot/io_formats.hpp"
#include "emot/tracker.hpp"

namespace emot {

/// Everything the command line tools read from a config file.
///
/// The file uses a TOML-compatible subset: `[section]` headers, `key = value` lines with
/// strings in double quotes, integers, floats and booleans, and `#` comments.
///
///   class = "vehicle"
///   [events]   window_us | window ("10ms"), width, height, anchor ("first" | "zero")
///   [tracker]  score_threshold, first_gate, second_gate, max_lost, activation_hits,
///              motion_weight, inertia_weight, history_len, init_from_low, enable_second_stage
///   [kalman]   std_weight_position, std_weight_velocity
///   [cluster]  eps, min_pts, min_cluster_events, score_saturation
///   [sequence] name, class, events, gt, split ("train" | "test"), frame_count
///   [paths]    free-form name = "path" entries
struct ToolkitConfig {
  TrackerConfig tracker;
  ClusterParams cluster;
  std::int64_t window_us{10000};
  SensorGeometry geometry{};
  WindowAnchor anchor{WindowAnchor::first_event};
  ClassId class_id{ClassId::vehicle};
  std::optional<SequenceManifest> sequence;
  std::map<std::string, std::filesystem::path> paths;
};

using ConfigValue = std::variant<bool, std::int64_t, double, std::string>;

/// Flat `section.key -> value` view of a config document.
std::map<std::string, ConfigValue> parse_config_table(std::string_view text);

/// Relative paths resolve against `base_dir`. Unknown keys and invalid values are all
/// reported together in one ConfigError.
ToolkitConfig parse_config(std::string_view text, const std::filesystem::path& base_dir = {});
ToolkitConfig load_config(const std::filesystem::path& path);

/// "10ms", "250us", "1s" or a bare integer of microseconds.
std::optional<std::int64_t> parse_duration_us(std::string_view text);

/// "240x180".
std::optional<SensorGeometry> parse_geometry(std::string_view text);

}  // namespace emot
