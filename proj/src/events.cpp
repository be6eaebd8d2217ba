#include "emot/events.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "emot/error.hpp"

namespace emot {
namespace {

template <typename T>
bool parse_int(std::string_view field, T& out) {
  if (field.empty()) return false;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc{} && ptr == last;
}

bool parse_polarity(std::string_view token, std::int8_t& out) {
  if (token == "1" || token == "+1" || token == "+") {
    out = 1;
    return true;
  }
  if (token == "0" || token == "-1" || token == "-") {
    out = -1;
    return true;
  }
  return false;
}

Event parse_record(std::string_view line, std::size_t line_no, const SensorGeometry& g) {
  std::string_view fields[4];
  std::size_t n = 0;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (n == 4) throw ParseError("expected 4 fields, found more", line_no);
    fields[n++] = line.substr(start, comma == std::string_view::npos ? comma : comma - start);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  if (n != 4) throw ParseError("expected 4 fields, found " + std::to_string(n), line_no);

  Event e;
  if (!parse_int(fields[0], e.t) || e.t < 0)
    throw ParseError("timestamp is not a non-negative integer: '" + std::string(fields[0]) + "'",
                     line_no);
  if (!parse_int(fields[1], e.x) || !parse_int(fields[2], e.y))
    throw ParseError("non-numeric coordinate", line_no);
  if (!g.contains(e.x, e.y))
    throw ParseError("coordinate (" + std::to_string(e.x) + "," + std::to_string(e.y) +
                         ") outside " + std::to_string(g.width) + "x" + std::to_string(g.height),
                     line_no);
  if (!parse_polarity(fields[3], e.polarity))
    throw ParseError("invalid polarity token '" + std::string(fields[3]) + "'", line_no);
  return e;
}

}  // namespace

std::vector<Event> parse_event_stream(std::istream& in, const SensorGeometry& geometry,
                                      const ParseOptions& options) {
  if (geometry.width <= 0 || geometry.height <= 0) throw ConfigError("sensor geometry must be positive");
  std::vector<Event> events;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    Event e = parse_record(line, line_no, geometry);
    if (!events.empty() && e.t < events.back().t &&
        events.back().t - e.t > options.max_regression_us) {
      throw ParseError("timestamp regression " + std::to_string(events.back().t) + " -> " +
                           std::to_string(e.t),
                       line_no);
    }
    events.push_back(e);
  }
  return events;
}

std::vector<Event> parse_event_stream(std::string_view text, const SensorGeometry& geometry,
                                      const ParseOptions& options) {
  std::istringstream in{std::string(text)};
  return parse_event_stream(in, geometry, options);
}

std::vector<Event> read_event_file(const std::filesystem::path& path,
                                   const SensorGeometry& geometry, const ParseOptions& options) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open event file " + path.string());
  return parse_event_stream(in, geometry, options);
}

void write_event_stream(std::ostream& out, std::span<const Event> events) {
  out << "# t_us,x,y,p\n";
  for (const Event& e : events)
    out << e.t << ',' << e.x << ',' << e.y << ',' << (e.polarity > 0 ? "1" : "-1") << '\n';
}

std::vector<PolarityFrame> accumulate(std::span<const Event> events, std::int64_t window_len,
                                      const SensorGeometry& geometry, WindowAnchor anchor) {
  if (window_len <= 0) throw ConfigError("window length must be positive");
  if (geometry.width <= 0 || geometry.height <= 0) throw ConfigError("sensor geometry must be positive");
  std::vector<PolarityFrame> frames;
  if (events.empty()) return frames;

  const std::int64_t t0 = anchor == WindowAnchor::first_event ? events.front().t : 0;
  auto frame_of = [&](const Event& e) {
    if (e.t < t0) throw Error("events are not time-ordered");
    return (e.t - t0) / window_len;
  };
  std::int64_t last = 0;
  for (const Event& e : events) last = std::max(last, frame_of(e));

  frames.reserve(static_cast<std::size_t>(last + 1));
  for (std::int64_t k = 0; k <= last; ++k)
    frames.emplace_back(geometry, k, t0 + k * window_len, window_len);

  for (const Event& e : events) {
    if (!geometry.contains(e.x, e.y)) throw Error("event outside sensor geometry");
    PolarityFrame& f = frames[static_cast<std::size_t>(frame_of(e))];
    if (e.polarity > 0)
      ++f.pos_counts(e.y, e.x);
    else
      ++f.neg_counts(e.y, e.x);
  }
  return frames;
}

std::vector<PolarityFrame> coarsen(std::span<const PolarityFrame> frames, int factor) {
  if (factor <= 0) throw ConfigError("coarsening factor must be positive");
  std::vector<PolarityFrame> out;
  for (std::size_t i = 0; i < frames.size(); i += static_cast<std::size_t>(factor)) {
    PolarityFrame f = frames[i];
    f.frame_index = static_cast<std::int64_t>(out.size());
    f.window_len = frames[i].window_len * factor;
    for (std::size_t j = i + 1; j < std::min(frames.size(), i + factor); ++j) {
      f.pos_counts += frames[j].pos_counts;
      f.neg_counts += frames[j].neg_counts;
    }
    out.push_back(std::move(f));
  }
  return out;
}

RgbImage frame_to_image(const PolarityFrame& frame, unsigned gain) {
  const int w = static_cast<int>(frame.pos_counts.cols());
  const int h = static_cast<int>(frame.pos_counts.rows());
  RgbImage img(w, h, 255);
  auto channel = [gain](std::uint32_t count) {
    const std::uint64_t v = static_cast<std::uint64_t>(count) * gain;
    return static_cast<std::uint8_t>(std::min<std::uint64_t>(255, v));
  };
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::uint8_t red = channel(frame.pos_counts(y, x));
      const std::uint8_t blue = channel(frame.neg_counts(y, x));
      std::uint8_t* px = img.pixel(x, y);
      px[0] = static_cast<std::uint8_t>(255 - blue);
      px[1] = static_cast<std::uint8_t>(255 - std::max(red, blue));
      px[2] = static_cast<std::uint8_t>(255 - red);
    }
  }
  return img;
}

std::vector<std::uint8_t> encode_ppm(const RgbImage& image) {
  const std::string header =
      "P6\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
  std::vector<std::uint8_t> bytes(header.begin(), header.end());
  bytes.insert(bytes.end(), image.data.begin(), image.data.end());
  return bytes;
}

void write_ppm(const std::filesystem::path& path, const RgbImage& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  const auto bytes = encode_ppm(image);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace emot
