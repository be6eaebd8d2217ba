#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

namespace emot {

/// Per-pixel event counts, indexed (row, col) = (y, x).
using CountGrid = Eigen::Matrix<std::uint32_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct SensorGeometry {
  int width{240};
  int height{180};

  bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width && y < height; }
  friend bool operator==(const SensorGeometry&, const SensorGeometry&) = default;
};

struct Event {
  std::int64_t t{0};  // microseconds
  int x{0};
  int y{0};
  std::int8_t polarity{1};  // +1 or -1

  friend bool operator==(const Event&, const Event&) = default;
};

struct ParseOptions {
  /// Largest allowed backwards step between consecutive timestamps.
  std::int64_t max_regression_us{0};
};

/// Parses the `t_us,x,y,p` text format. Throws ParseError on the first bad record.
std::vector<Event> parse_event_stream(std::istream& in, const SensorGeometry& geometry,
                                      const ParseOptions& options = {});
std::vector<Event> parse_event_stream(std::string_view text, const SensorGeometry& geometry,
                                      const ParseOptions& options = {});
std::vector<Event> read_event_file(const std::filesystem::path& path,
                                   const SensorGeometry& geometry,
                                   const ParseOptions& options = {});

void write_event_stream(std::ostream& out, std::span<const Event> events);

struct PolarityFrame {
  std::int64_t window_start{0};
  std::int64_t window_len{0};
  std::int64_t frame_index{0};
  CountGrid pos_counts;
  CountGrid neg_counts;

  PolarityFrame() = default;
  PolarityFrame(const SensorGeometry& g, std::int64_t index, std::int64_t start, std::int64_t len)
      : window_start(start),
        window_len(len),
        frame_index(index),
        pos_counts(CountGrid::Zero(g.height, g.width)),
        neg_counts(CountGrid::Zero(g.height, g.width)) {}

  SensorGeometry geometry() const {
    return {static_cast<int>(pos_counts.cols()), static_cast<int>(pos_counts.rows())};
  }
  std::uint64_t total_events() const {
    return pos_counts.cast<std::uint64_t>().sum() + neg_counts.cast<std::uint64_t>().sum();
  }
  CountGrid combined() const { return pos_counts + neg_counts; }

  friend bool operator==(const PolarityFrame& a, const PolarityFrame& b) {
    return a.window_start == b.window_start && a.window_len == b.window_len &&
           a.frame_index == b.frame_index && a.pos_counts.rows() == b.pos_counts.rows() &&
           a.pos_counts.cols() == b.pos_counts.cols() && a.pos_counts == b.pos_counts &&
           a.neg_counts == b.neg_counts;
  }
};

enum class WindowAnchor { first_event, zero };

/// Bins events into half-open windows [t0 + k*len, t0 + (k+1)*len). Empty windows are kept.
std::vector<PolarityFrame> accumulate(std::span<const Event> events, std::int64_t window_len,
                                      const SensorGeometry& geometry,
                                      WindowAnchor anchor = WindowAnchor::first_event);

/// Sums groups of `factor` consecutive frames, giving the frames of a factor-times longer window.
std::vector<PolarityFrame> coarsen(std::span<const PolarityFrame> frames, int factor);

struct RgbImage {
  int width{0};
  int height{0};
  std::vector<std::uint8_t> data;  // row-major RGB triples

  RgbImage() = default;
  RgbImage(int w, int h, std::uint8_t fill = 255)
      : width(w), height(h), data(static_cast<std::size_t>(w) * h * 3, fill) {}

  std::uint8_t* pixel(int x, int y) { return data.data() + (static_cast<std::size_t>(y) * width + x) * 3; }
  const std::uint8_t* pixel(int x, int y) const {
    return data.data() + (static_cast<std::size_t>(y) * width + x) * 3;
  }
};

/// White background; positive events push toward red, negative toward blue.
RgbImage frame_to_image(const PolarityFrame& frame, unsigned gain = 64);

void write_ppm(const std::filesystem::path& path, const RgbImage& image);
std::vector<std::uint8_t> encode_ppm(const RgbImage& image);

}  // namespace emot
