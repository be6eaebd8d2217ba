#include "emot/io_formats.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include <json.hpp>

#include "emot/error.hpp"

namespace emot {
namespace {

using nlohmann::json;

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string_view::npos ? comma : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

double to_double(std::string_view s, std::size_t line, const char* field) {
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v))
    throw ParseError(std::string("field '") + field + "' is not a number: '" + std::string(s) + "'", line);
  return v;
}

std::int64_t to_int(std::string_view s, std::size_t line, const char* field) {
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size())
    throw ParseError(std::string("field '") + field + "' is not an integer: '" + std::string(s) + "'", line);
  return v;
}

ClassId class_from_code(std::int64_t code, ClassId fallback, std::size_t line) {
  switch (code) {
    case -1: return fallback;
    case 1: return ClassId::pedestrian;
    case 3: return ClassId::vehicle;
    default: throw ParseError("unsupported class code " + std::to_string(code), line);
  }
}

int class_code(ClassId c) { return c == ClassId::pedestrian ? 1 : 3; }

BBox parse_box(const std::vector<std::string_view>& f, std::size_t line) {
  BBox b{to_double(f[2], line, "x"), to_double(f[3], line, "y"), to_double(f[4], line, "w"),
         to_double(f[5], line, "h")};
  if (!b.valid()) throw ParseError("box has negative extent", line);
  return b;
}

std::int64_t parse_frame(std::string_view s, std::size_t line) {
  const std::int64_t f = to_int(s, line, "frame");
  if (f < 1) throw ParseError("frame numbers are 1-based", line);
  return f - 1;
}

template <typename Fn>
void for_each_record(std::istream& in, Fn&& fn) {
  std::string line;
  std::size_t no = 0;
  while (std::getline(in, line)) {
    ++no;
    if (line.empty()) continue;
    fn(split_fields(line), no);
  }
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return in;
}

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) throw ParseError("frame archive is truncated");
  return v;
}

}  // namespace

std::string format_number(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) throw Error("cannot format number");
  std::string s(buf, ptr);
  return s == "-0" ? "0" : s;
}

std::vector<GroundTruthEntry> parse_mot_gt(std::istream& in, ClassId default_class) {
  std::vector<GroundTruthEntry> out;
  std::set<std::pair<std::int64_t, int>> seen;
  for_each_record(in, [&](const std::vector<std::string_view>& f, std::size_t line) {
    if (f.size() != 9 && f.size() != 10)
      throw ParseError("expected 9 fields (frame,id,x,y,w,h,conf,class,visibility), found " +
                           std::to_string(f.size()),
                       line);
    GroundTruthEntry e;
    e.frame_index = parse_frame(f[0], line);
    e.object_id = static_cast<int>(to_int(f[1], line, "id"));
    if (e.object_id < 1) throw ParseError("object ids must be positive", line);
    e.bbox = parse_box(f, line);
    const double conf = to_double(f[6], line, "conf");
    e.class_id = class_from_code(to_int(f[7], line, "class"), default_class, line);
    e.visibility = to_double(f[8], line, "visibility");
    if (conf == 0.0) return;
    if (!seen.emplace(e.frame_index, e.object_id).second)
      throw ParseError("duplicate entry for frame " + std::to_string(e.frame_index + 1) + ", id " +
                           std::to_string(e.object_id),
                       line);
    out.push_back(e);
  });
  return out;
}

std::vector<GroundTruthEntry> read_mot_gt(const std::filesystem::path& path, ClassId default_class) {
  auto in = open_in(path);
  return parse_mot_gt(in, default_class);
}

void write_mot_gt(std::ostream& out, std::span<const GroundTruthEntry> entries) {
  std::vector<const GroundTruthEntry*> sorted;
  for (const auto& e : entries) sorted.push_back(&e);
  std::sort(sorted.begin(), sorted.end(), [](auto* a, auto* b) {
    return std::tie(a->frame_index, a->object_id) < std::tie(b->frame_index, b->object_id);
  });
  for (const auto* e : sorted)
    out << e->frame_index + 1 << ',' << e->object_id << ',' << format_number(e->bbox.x) << ','
        << format_number(e->bbox.y) << ',' << format_number(e->bbox.w) << ',' << format_number(e->bbox.h)
        << ",1," << class_code(e->class_id) << ',' << format_number(e->visibility) << '\n';
}

void write_mot_gt(const std::filesystem::path& path, std::span<const GroundTruthEntry> entries) {
  auto out = open_out(path);
  write_mot_gt(out, entries);
}

void write_results(std::ostream& out, std::span<const FrameResult> results) {
  std::vector<std::pair<std::int64_t, const TrackReport*>> rows;
  for (const auto& r : results)
    for (const auto& t : r.tracks) rows.emplace_back(r.frame_index, &t);
  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    return std::tie(a.first, a.second->id) < std::tie(b.first, b.second->id);
  });
  for (const auto& [frame, t] : rows)
    out << frame + 1 << ',' << t->id << ',' << format_number(t->bbox.x) << ',' << format_number(t->bbox.y)
        << ',' << format_number(t->bbox.w) << ',' << format_number(t->bbox.h) << ','
        << format_number(t->score) << ",-1,-1,-1\n";
}

void write_results(const std::filesystem::path& path, std::span<const FrameResult> results) {
  auto out = open_out(path);
  write_results(out, results);
}

std::vector<FrameResult> parse_results(std::istream& in, ClassId class_id) {
  std::map<std::int64_t, FrameResult> frames;
  for_each_record(in, [&](const std::vector<std::string_view>& f, std::size_t line) {
    if (f.size() < 7 || f.size() > 10)
      throw ParseError("expected 10 fields (frame,id,x,y,w,h,score,-1,-1,-1), found " + std::to_string(f.size()),
                       line);
    const std::int64_t frame = parse_frame(f[0], line);
    TrackReport t;
    t.id = static_cast<int>(to_int(f[1], line, "id"));
    if (t.id < 1) throw ParseError("track ids must be positive", line);
    t.bbox = parse_box(f, line);
    t.score = to_double(f[6], line, "score");
    t.class_id = class_id;
    FrameResult& r = frames[frame];
    r.frame_index = frame;
    for (const auto& other : r.tracks)
      if (other.id == t.id)
        throw ParseError("duplicate track " + std::to_string(t.id) + " in frame " + std::to_string(frame + 1), line);
    r.tracks.push_back(t);
  });
  std::vector<FrameResult> out;
  for (auto& [frame, r] : frames) {
    std::sort(r.tracks.begin(), r.tracks.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<FrameResult> read_results(const std::filesystem::path& path, ClassId class_id) {
  auto in = open_in(path);
  return parse_results(in, class_id);
}

void write_detections(std::ostream& out, std::span<const Detection> dets) {
  std::vector<const Detection*> sorted;
  for (const auto& d : dets) sorted.push_back(&d);
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](auto* a, auto* b) { return a->frame_index < b->frame_index; });
  for (const auto* d : sorted)
    out << d->frame_index + 1 << ",-1," << format_number(d->bbox.x) << ',' << format_number(d->bbox.y) << ','
        << format_number(d->bbox.w) << ',' << format_number(d->bbox.h) << ',' << format_number(d->score)
        << ",-1,-1,-1\n";
}

void write_detections(const std::filesystem::path& path, std::span<const Detection> dets) {
  auto out = open_out(path);
  write_detections(out, dets);
}

std::vector<Detection> parse_detections(std::istream& in, ClassId class_id) {
  std::vector<Detection> out;
  for_each_record(in, [&](const std::vector<std::string_view>& f, std::size_t line) {
    if (f.size() < 7 || f.size() > 10)
      throw ParseError("expected 10 fields (frame,-1,x,y,w,h,score,-1,-1,-1), found " + std::to_string(f.size()),
                       line);
    Detection d;
    d.frame_index = parse_frame(f[0], line);
    d.bbox = parse_box(f, line);
    d.score = to_double(f[6], line, "score");
    if (d.score < 0.0 || d.score > 1.0) throw ParseError("score outside [0, 1]", line);
    d.class_id = class_id;
    out.push_back(d);
  });
  return out;
}

std::vector<Detection> read_detections(const std::filesystem::path& path, ClassId class_id) {
  auto in = open_in(path);
  return parse_detections(in, class_id);
}

std::vector<GroundTruthEntry> parse_json_gt(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what());
  }
  auto require = [](const json& node, const char* key, const std::string& path) -> const json& {
    if (!node.is_object() || !node.contains(key)) throw ParseError("missing field " + path + "." + key);
    return node.at(key);
  };
  auto number = [](const json& v, const std::string& path) {
    if (!v.is_number()) throw ParseError(path + ": expected a number");
    return v.get<double>();
  };
  auto integer = [](const json& v, const std::string& path) {
    if (!v.is_number_integer()) throw ParseError(path + ": expected an integer");
    return v.get<std::int64_t>();
  };

  if (!doc.is_object()) throw ParseError("$: expected an object");
  if (doc.contains("format") && doc["format"] != "emot-gt") throw ParseError("$.format: expected \"emot-gt\"");
  const json& frames = require(doc, "frames", "$");
  if (!frames.is_array()) throw ParseError("$.frames: expected an array");

  std::vector<GroundTruthEntry> out;
  std::set<std::pair<std::int64_t, int>> seen;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const std::string fpath = "$.frames[" + std::to_string(i) + "]";
    const std::int64_t frame = integer(require(frames[i], "frame", fpath), fpath + ".frame");
    if (frame < 1) throw ParseError(fpath + ".frame: frames are 1-based");
    const json& objects = require(frames[i], "objects", fpath);
    if (!objects.is_array()) throw ParseError(fpath + ".objects: expected an array");
    for (std::size_t j = 0; j < objects.size(); ++j) {
      const std::string opath = fpath + ".objects[" + std::to_string(j) + "]";
      const json& o = objects[j];
      GroundTruthEntry e;
      e.frame_index = frame - 1;
      e.object_id = static_cast<int>(integer(require(o, "id", opath), opath + ".id"));
      if (e.object_id < 1) throw ParseError(opath + ".id: must be positive");
      const json& bbox = require(o, "bbox", opath);
      if (!bbox.is_array() || bbox.size() != 4) throw ParseError(opath + ".bbox: expected [x, y, w, h]");
      e.bbox = {number(bbox[0], opath + ".bbox[0]"), number(bbox[1], opath + ".bbox[1]"),
                number(bbox[2], opath + ".bbox[2]"), number(bbox[3], opath + ".bbox[3]")};
      if (!e.bbox.valid()) throw ParseError(opath + ".bbox: negative extent");
      const json& cls = require(o, "class", opath);
      if (!cls.is_string()) throw ParseError(opath + ".class: expected a string");
      auto parsed = parse_class(cls.get<std::string>());
      if (!parsed) throw ParseError(opath + ".class: unknown class '" + cls.get<std::string>() + "'");
      e.class_id = *parsed;
      if (o.contains("visibility")) e.visibility = number(o["visibility"], opath + ".visibility");
      if (!seen.emplace(e.frame_index, e.object_id).second)
        throw ParseError(opath + ": duplicate id " + std::to_string(e.object_id) + " in frame");
      out.push_back(e);
    }
  }
  return out;
}

std::vector<GroundTruthEntry> read_json_gt(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_json_gt(ss.str());
}

std::string dump_json_gt(std::span<const GroundTruthEntry> entries) {
  std::map<std::int64_t, std::vector<const GroundTruthEntry*>> frames;
  for (const auto& e : entries) frames[e.frame_index].push_back(&e);
  json doc = {{"format", "emot-gt"}, {"version", 1}, {"frames", json::array()}};
  for (auto& [frame, list] : frames) {
    std::sort(list.begin(), list.end(), [](auto* a, auto* b) { return a->object_id < b->object_id; });
    json objects = json::array();
    for (const auto* e : list)
      objects.push_back({{"id", e->object_id},
                         {"bbox", {e->bbox.x, e->bbox.y, e->bbox.w, e->bbox.h}},
                         {"class", std::string(to_string(e->class_id))},
                         {"visibility", e->visibility}});
    doc["frames"].push_back({{"frame", frame + 1}, {"objects", std::move(objects)}});
  }
  return doc.dump(2) + "\n";
}

void write_json_gt(const std::filesystem::path& path, std::span<const GroundTruthEntry> entries) {
  auto out = open_out(path);
  out << dump_json_gt(entries);
}

void write_frames(const std::filesystem::path& path, std::span<const PolarityFrame> frames) {
  auto out = open_out(path);
  out.write("EMOTFRM1", 8);
  const SensorGeometry g = frames.empty() ? SensorGeometry{} : frames.front().geometry();
  put<std::uint32_t>(out, static_cast<std::uint32_t>(g.width));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(g.height));
  put<std::int64_t>(out, frames.empty() ? 0 : frames.front().window_len);
  put<std::uint64_t>(out, frames.size());
  for (const auto& f : frames) {
    put<std::int64_t>(out, f.window_start);
    out.write(reinterpret_cast<const char*>(f.pos_counts.data()),
              static_cast<std::streamsize>(f.pos_counts.size() * sizeof(std::uint32_t)));
    out.write(reinterpret_cast<const char*>(f.neg_counts.data()),
              static_cast<std::streamsize>(f.neg_counts.size() * sizeof(std::uint32_t)));
  }
}

std::vector<PolarityFrame> read_frames(const std::filesystem::path& path) {
  auto in = open_in(path);
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, "EMOTFRM1", 8) != 0) throw ParseError("not a frame archive");
  SensorGeometry g;
  g.width = static_cast<int>(get<std::uint32_t>(in));
  g.height = static_cast<int>(get<std::uint32_t>(in));
  const auto window = get<std::int64_t>(in);
  const auto count = get<std::uint64_t>(in);
  if (count > 0 && (g.width <= 0 || g.height <= 0 || window <= 0)) throw ParseError("frame archive header is invalid");
  std::vector<PolarityFrame> frames;
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto start = get<std::int64_t>(in);
    PolarityFrame f(g, static_cast<std::int64_t>(i), start, window);
    const auto bytes = static_cast<std::streamsize>(f.pos_counts.size() * sizeof(std::uint32_t));
    if (!in.read(reinterpret_cast<char*>(f.pos_counts.data()), bytes) ||
        !in.read(reinterpret_cast<char*>(f.neg_counts.data()), bytes))
      throw ParseError("frame archive is truncated");
    frames.push_back(std::move(f));
  }
  return frames;
}

void SequenceManifest::validate() const {
  std::string bad;
  if (window_len <= 0) bad += " window_len";
  if (geometry.width <= 0 || geometry.height <= 0) bad += " geometry";
  if (!std::filesystem::exists(event_file)) bad += " event_file (" + event_file.string() + " missing)";
  if (gt_path && !std::filesystem::exists(*gt_path)) bad += " gt (" + gt_path->string() + " missing)";
  if (frame_count < 0) bad += " frame_count";
  if (!bad.empty()) throw ConfigError("invalid sequence '" + name + "':" + bad);
}

std::pair<FrameRange, FrameRange> split_sequence(std::int64_t total_frames) {
  if (total_frames < 2) throw ConfigError("a sequence needs at least 2 frames to split");
  const std::int64_t mid = total_frames / 2;
  return {{0, mid}, {mid, total_frames}};
}

std::pair<FrameRange, FrameRange> split_sequence(const SequenceManifest&, std::int64_t total_frames) {
  return split_sequence(total_frames);
}

}  // namespace emot
