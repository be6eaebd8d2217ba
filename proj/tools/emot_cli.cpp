// emot: command line front end for accumulation, detection, tracking, evaluation and rendering.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <array>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "emot/cluster_detector.hpp"
#include "emot/config.hpp"
#include "emot/error.hpp"
#include "emot/events.hpp"
#include "emot/io_formats.hpp"
#include "emot/metrics.hpp"
#include "emot/nn_blocks.hpp"
#include "emot/parallel.hpp"
#include "emot/tensor_io.hpp"
#include "emot/tracker.hpp"

namespace fs = std::filesystem;
using namespace emot;

namespace {

// Bad flags, configs or weight files. Maps to exit code 2.
struct UsageError : Error {
  using Error::Error;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void print_fps(std::int64_t frames, double seconds) {
  const auto fps = frames_per_second(frames, seconds);
  if (fps)
    std::cout << "fps: " << std::fixed << std::setprecision(1) << *fps << "\n";
  else
    std::cout << "fps: n/a\n";
  std::cout.unsetf(std::ios::floatfield);
}

void prepare_out_dir(const fs::path& dir, bool force) {
  if (fs::exists(dir)) {
    if (!fs::is_directory(dir)) throw UsageError(dir.string() + " exists and is not a directory");
    if (!fs::is_empty(dir) && !force)
      throw UsageError("output directory " + dir.string() + " is not empty (use --force to overwrite)");
  } else {
    fs::create_directories(dir);
  }
}

ToolkitConfig config_or_default(const std::string& path) {
  if (path.empty()) return {};
  try {
    return load_config(path);
  } catch (const ConfigError& e) {
    throw UsageError(e.what());
  }
}

ClassId class_flag(const std::string& s) {
  auto c = parse_class(s);
  if (!c) throw UsageError("--class must be vehicle or pedestrian, got '" + s + "'");
  return *c;
}

fs::path frames_file(const fs::path& dir) { return fs::is_directory(dir) ? dir / "frames.emf" : dir; }

std::vector<std::vector<Detection>> detect_all(const std::vector<PolarityFrame>& frames, const ToolkitConfig& cfg) {
  std::vector<std::vector<Detection>> out(frames.size());
  parallel_for(frames.size(), [&](std::size_t i) {
    out[i] = detect(frames[i], cfg.cluster, cfg.class_id);
    for (auto& d : out[i]) d.frame_index = static_cast<std::int64_t>(i);
  });
  return out;
}

// ---- accumulate ----

struct AccumulateArgs {
  std::string events, dt = "10ms", geometry = "240x180", out, anchor = "first";
  bool force = false, ppm = false;
};

int run_accumulate(const AccumulateArgs& a) {
  const auto dt = parse_duration_us(a.dt);
  if (!dt || *dt <= 0) throw UsageError("--dt must be a positive duration such as 10ms or 250us, got '" + a.dt + "'");
  const auto geometry = parse_geometry(a.geometry);
  if (!geometry) throw UsageError("--geometry must look like 240x180, got '" + a.geometry + "'");
  if (a.anchor != "first" && a.anchor != "zero") throw UsageError("--anchor must be first or zero");
  prepare_out_dir(a.out, a.force);

  const auto t0 = Clock::now();
  const auto events = read_event_file(a.events, *geometry);
  const auto frames = accumulate(events, *dt, *geometry,
                                 a.anchor == "zero" ? WindowAnchor::zero : WindowAnchor::first_event);
  write_frames(fs::path(a.out) / "frames.emf", frames);
  if (a.ppm) {
    parallel_for(frames.size(), [&](std::size_t i) {
      char name[32];
      std::snprintf(name, sizeof name, "frame_%06zu.ppm", i + 1);
      write_ppm(fs::path(a.out) / name, frame_to_image(frames[i]));
    });
  }
  const double elapsed = seconds_since(t0);

  std::cout << "frames: " << frames.size() << "\n";
  std::cout << "events: " << events.size() << "\n";
  if (events.size() > 1 && events.back().t > events.front().t) {
    const double span_s = double(events.back().t - events.front().t) * 1e-6;
    std::cout << "event rate: " << std::fixed << std::setprecision(2) << double(events.size()) / span_s / 1e3
              << " Keps\n";
    std::cout.unsetf(std::ios::floatfield);
  }
  print_fps(static_cast<std::int64_t>(frames.size()), elapsed);
  return 0;
}

// ---- detect ----

struct DetectArgs {
  std::string frames, config, out;
};

int run_detect(const DetectArgs& a) {
  const ToolkitConfig cfg = config_or_default(a.config);
  const auto t0 = Clock::now();
  const auto frames = read_frames(frames_file(a.frames));
  const auto per_frame = detect_all(frames, cfg);
  std::vector<Detection> flat;
  for (const auto& f : per_frame) flat.insert(flat.end(), f.begin(), f.end());
  write_detections(fs::path(a.out), flat);
  std::cout << "frames: " << frames.size() << "\ndetections: " << flat.size() << "\n";
  print_fps(static_cast<std::int64_t>(frames.size()), seconds_since(t0));
  return 0;
}

// ---- track ----

struct TrackArgs {
  std::string frames, detections, config, out;
  std::int64_t frame_count = 0;
};

int run_track(const TrackArgs& a) {
  if (a.frames.empty() == a.detections.empty()) throw UsageError("give exactly one of --frames or --detections");
  const ToolkitConfig cfg = config_or_default(a.config);

  std::vector<std::vector<Detection>> per_frame;
  auto t0 = Clock::now();
  if (!a.frames.empty()) {
    per_frame = detect_all(read_frames(frames_file(a.frames)), cfg);
  } else {
    const auto dets = read_detections(a.detections, cfg.class_id);
    std::int64_t n = a.frame_count;
    if (n == 0 && cfg.sequence) n = cfg.sequence->frame_count;
    for (const auto& d : dets) n = std::max(n, d.frame_index + 1);
    per_frame = group_by_frame(dets, n);
    t0 = Clock::now();  // external detections: time the tracker alone
  }
  const auto results = run_sequence(per_frame, cfg.tracker);
  const double elapsed = seconds_since(t0);
  write_results(fs::path(a.out), results);

  std::set<int> ids;
  for (const auto& r : results)
    for (const auto& t : r.tracks) ids.insert(t.id);
  std::cout << "frames: " << results.size() << "\ntracks: " << ids.size() << "\n";
  print_fps(static_cast<std::int64_t>(results.size()), elapsed);
  return 0;
}

// ---- evaluate ----

struct EvaluateArgs {
  std::string results, gt, cls = "vehicle", report, detections;
  bool motp_distance = false;
};

std::pair<std::int64_t, std::int64_t> frame_span(const std::vector<std::int64_t>& frames) {
  if (frames.empty()) return {0, -1};
  auto [lo, hi] = std::minmax_element(frames.begin(), frames.end());
  return {*lo, *hi};
}

std::string fmt(double v, int digits = 3) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

int run_evaluate(const EvaluateArgs& a) {
  const ClassId cls = class_flag(a.cls);
  const auto t0 = Clock::now();
  auto results = read_results(a.results, cls);
  const fs::path gt_path(a.gt);
  auto gt = gt_path.extension() == ".json" ? read_json_gt(gt_path) : read_mot_gt(gt_path, cls);
  std::erase_if(gt, [cls](const GroundTruthEntry& g) { return g.class_id != cls; });
  for (auto& r : results)
    std::erase_if(r.tracks, [cls](const TrackReport& t) { return t.class_id != cls; });

  std::vector<std::int64_t> rf, gf;
  for (const auto& r : results)
    if (!r.tracks.empty()) rf.push_back(r.frame_index);
  for (const auto& g : gt) gf.push_back(g.frame_index);
  const auto [r0, r1] = frame_span(rf);
  const auto [g0, g1] = frame_span(gf);
  // Results that end before the ground truth are ordinary misses; only results beyond the
  // ground-truth span indicate mismatched sequences.
  const bool mismatch = !rf.empty() && !gf.empty() && (r0 < g0 || r1 > g1);
  if (mismatch) {
    const std::int64_t lo = std::max(r0, g0), hi = std::min(r1, g1);
    std::cerr << "warning: results cover frames " << r0 + 1 << "-" << r1 + 1 << " but ground truth covers "
              << g0 + 1 << "-" << g1 + 1 << "; evaluating frames " << lo + 1 << "-" << hi + 1 << "\n";
    std::erase_if(results, [&](const FrameResult& r) { return r.frame_index < lo || r.frame_index > hi; });
    std::erase_if(gt, [&](const GroundTruthEntry& g) { return g.frame_index < lo || g.frame_index > hi; });
  }

  const MotEvalReport m = evaluate_tracking(results, gt);
  std::optional<DetEvalReport> det;
  if (!a.detections.empty()) {
    auto dets = read_detections(a.detections, cls);
    det = detection_report(dets, gt);
  }
  const double elapsed = seconds_since(t0);
  const std::int64_t frames = gf.empty() ? 0 : (g1 - g0 + 1);

  nlohmann::ordered_json j;
  j["mota"] = m.mota;
  j["motp"] = a.motp_distance ? m.motp_distance() : m.motp;
  j["motp_kind"] = a.motp_distance ? "center_distance_px" : "iou";
  j["mt"] = m.mt;
  j["pt"] = m.pt;
  j["ml"] = m.ml;
  j["fp"] = m.fp;
  j["fn"] = m.fn;
  j["ids"] = m.ids;
  j["idf1"] = m.idf1;
  j["idp"] = m.idp;
  j["idr"] = m.idr;
  j["num_gt"] = m.num_gt;
  j["num_hyp"] = m.num_hyp;
  j["num_matches"] = m.num_matches;
  j["num_frames"] = m.num_frames;
  j["num_trajectories"] = m.num_trajectories;
  j["idtp"] = m.idtp;
  j["idfp"] = m.idfp;
  j["idfn"] = m.idfn;
  if (det) {
    auto opt = [](const std::optional<double>& v) { return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(); };
    j["detection"] = {{"ap50", opt(det->ap50)},         {"ap75", opt(det->ap75)},
                      {"ap_small", opt(det->ap_small)}, {"ap_medium", opt(det->ap_medium)},
                      {"ap_large", opt(det->ap_large)}, {"map", opt(det->map)},
                      {"precision", opt(det->precision)}, {"recall", opt(det->recall)}};
  }
  j["class"] = std::string(to_string(cls));
  j["frame_range_mismatch"] = mismatch;
  if (const auto fps = frames_per_second(frames, elapsed)) j["fps"] = *fps;
  else j["fps"] = nullptr;

  if (!a.report.empty()) {
    std::ofstream out(a.report);
    if (!out) throw Error("cannot write " + a.report);
    out << j.dump(2) << "\n";
  }

  const std::vector<std::pair<std::string, std::string>> row = {
      {"MOTA", fmt(m.mota)}, {"MOTP", a.motp_distance ? fmt(m.motp_distance(), 2) : fmt(m.motp)},
      {"MT", std::to_string(m.mt)}, {"PT", std::to_string(m.pt)}, {"ML", std::to_string(m.ml)},
      {"FP", std::to_string(m.fp)}, {"FN", std::to_string(m.fn)}, {"IDs", std::to_string(m.ids)},
      {"IDF1", fmt(m.idf1)}, {"IDP", fmt(m.idp)}, {"IDR", fmt(m.idr)}};
  std::string head, vals;
  for (const auto& [k, v] : row) {
    const std::size_t w = std::max(k.size(), v.size()) + 2;
    head += std::string(w - k.size(), ' ') + k;
    vals += std::string(w - v.size(), ' ') + v;
  }
  std::cout << head << "\n" << vals << "\n";
  if (det) {
    auto cell = [](const std::optional<double>& v) { return v ? fmt(*v) : std::string("-"); };
    std::cout << "AP50 " << cell(det->ap50) << "  AP75 " << cell(det->ap75) << "  APs " << cell(det->ap_small)
              << "  APm " << cell(det->ap_medium) << "  APl " << cell(det->ap_large) << "  mAP " << cell(det->map)
              << "  P " << cell(det->precision) << "  R " << cell(det->recall) << "\n";
  }
  if (mismatch) std::cout << "note: frame ranges differ, evaluated over the intersection\n";
  print_fps(frames, elapsed);
  return 0;
}

// ---- render ----

// 3x5 glyphs for 0-9, one row per 3-bit group, top first.
constexpr std::array<std::array<std::uint8_t, 5>, 10> kDigits{{{7, 5, 5, 5, 7},
                                                               {2, 6, 2, 2, 7},
                                                               {7, 1, 7, 4, 7},
                                                               {7, 1, 7, 1, 7},
                                                               {5, 5, 7, 1, 1},
                                                               {7, 4, 7, 1, 7},
                                                               {7, 4, 7, 5, 7},
                                                               {7, 1, 1, 1, 1},
                                                               {7, 5, 7, 5, 7},
                                                               {7, 5, 7, 1, 7}}};

std::array<std::uint8_t, 3> id_color(int id) {
  static constexpr std::array<std::array<std::uint8_t, 3>, 8> palette{{{230, 25, 75},
                                                                       {60, 180, 75},
                                                                       {0, 130, 200},
                                                                       {245, 130, 48},
                                                                       {145, 30, 180},
                                                                       {70, 160, 160},
                                                                       {240, 50, 230},
                                                                       {128, 128, 0}}};
  return palette[static_cast<std::size_t>(id) % palette.size()];
}

void put(RgbImage& img, int x, int y, const std::array<std::uint8_t, 3>& c) {
  if (x < 0 || y < 0 || x >= img.width || y >= img.height) return;
  std::copy(c.begin(), c.end(), img.pixel(x, y));
}

void draw_track(RgbImage& img, const TrackReport& t) {
  const auto c = id_color(t.id);
  const int x0 = int(std::floor(t.bbox.x)), y0 = int(std::floor(t.bbox.y));
  const int x1 = int(std::ceil(t.bbox.right())) - 1, y1 = int(std::ceil(t.bbox.bottom())) - 1;
  for (int x = x0; x <= x1; ++x) put(img, x, y0, c), put(img, x, y1, c);
  for (int y = y0; y <= y1; ++y) put(img, x0, y, c), put(img, x1, y, c);
  const std::string label = std::to_string(t.id);
  int cx = x0 + 1, cy = y0 - 6;
  if (cy < 0) cy = y0 + 2;
  for (char ch : label) {
    const auto& g = kDigits[static_cast<std::size_t>(ch - '0')];
    for (int r = 0; r < 5; ++r)
      for (int b = 0; b < 3; ++b)
        if (g[r] & (4 >> b)) put(img, cx + b, cy + r, c);
    cx += 4;
  }
}

struct RenderArgs {
  std::string frames, results, out, cls = "vehicle";
  bool force = false;
};

int run_render(const RenderArgs& a) {
  const ClassId cls = class_flag(a.cls);
  prepare_out_dir(a.out, a.force);
  const auto t0 = Clock::now();
  const auto frames = read_frames(frames_file(a.frames));
  std::map<std::int64_t, std::vector<TrackReport>> by_frame;
  if (!a.results.empty())
    for (auto& r : read_results(a.results, cls)) by_frame[r.frame_index] = std::move(r.tracks);
  parallel_for(frames.size(), [&](std::size_t i) {
    RgbImage img = frame_to_image(frames[i]);
    if (auto it = by_frame.find(static_cast<std::int64_t>(i)); it != by_frame.end())
      for (const auto& t : it->second) draw_track(img, t);
    char name[32];
    std::snprintf(name, sizeof name, "frame_%06zu.ppm", i + 1);
    write_ppm(fs::path(a.out) / name, img);
  });
  std::cout << "frames: " << frames.size() << "\n";
  print_fps(static_cast<std::int64_t>(frames.size()), seconds_since(t0));
  return 0;
}

// ---- demo-nn ----

struct DemoArgs {
  std::string weights, input, tensor = "input";
};

int run_demo_nn(const DemoArgs& a) {
  nn::TensorFile weights;
  nn::MCDWeights<double> mcd;
  std::optional<nn::HeadWeights<double>> head;
  try {
    weights = nn::read_tensor_file(a.weights);
    mcd = nn::load_mcd_weights(weights);
    if (weights.contains("head.cls.project.weight")) head = nn::load_head_weights(weights);
  } catch (const ParseError& e) {
    throw UsageError("weights " + a.weights + ": " + e.what());
  } catch (const ShapeError& e) {
    throw UsageError("weights " + a.weights + ": " + e.what());
  }
  const auto input_file = nn::read_tensor_file(a.input);
  if (!input_file.contains(a.tensor)) throw Error("input file has no tensor named '" + a.tensor + "'");
  const auto x = nn::to_tensor3(input_file.at(a.tensor));

  const auto t0 = Clock::now();
  std::cout << "input " << x.shape_string() << " checksum " << std::hex << nn::checksum(x) << std::dec << "\n";
  const auto y = nn::mcd_block(x, mcd);
  std::cout << "mcd " << y.shape_string() << " checksum " << std::hex << nn::checksum(y) << std::dec << "\n";
  if (head) {
    const auto out = nn::decoupled_head(y, *head, head->cls.project.out_channels);
    std::cout << "cls " << out.cls.shape_string() << " checksum " << std::hex << nn::checksum(out.cls) << "\n"
              << "reg " << out.reg.shape_string() << " checksum " << nn::checksum(out.reg) << "\n"
              << "obj " << out.obj.shape_string() << " checksum " << nn::checksum(out.obj) << std::dec << "\n";
  }
  print_fps(1, seconds_since(t0));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Event-camera multi-object tracking toolkit"};
  app.require_subcommand(1, 1);

  AccumulateArgs acc;
  auto* c_acc = app.add_subcommand("accumulate", "Bin an event stream into polarity count frames");
  c_acc->add_option("--events", acc.events, "Event file (t_us,x,y,p per line)")->required()->check(CLI::ExistingFile);
  c_acc->add_option("--dt", acc.dt, "Window length: 10ms, 20ms, 30ms or microseconds")->capture_default_str();
  c_acc->add_option("--geometry", acc.geometry, "Sensor size WxH")->capture_default_str();
  c_acc->add_option("--out", acc.out, "Output directory")->required();
  c_acc->add_option("--anchor", acc.anchor, "Window anchor: first or zero")->capture_default_str();
  c_acc->add_flag("--force", acc.force, "Allow a non-empty output directory");
  c_acc->add_flag("--ppm", acc.ppm, "Also write frame_NNNNNN.ppm renders");

  DetectArgs det;
  auto* c_det = app.add_subcommand("detect", "Run the cluster detector over accumulated frames");
  c_det->add_option("--frames", det.frames, "Directory written by accumulate")->required()->check(CLI::ExistingPath);
  c_det->add_option("--config", det.config, "Config file")->check(CLI::ExistingFile);
  c_det->add_option("--out", det.out, "Detection file (MOT format)")->required();

  TrackArgs trk;
  auto* c_trk = app.add_subcommand("track", "Detect (or read detections) and track");
  auto* o_frames = c_trk->add_option("--frames", trk.frames, "Directory written by accumulate")->check(CLI::ExistingPath);
  auto* o_dets = c_trk->add_option("--detections", trk.detections, "External MOT detection file")->check(CLI::ExistingFile);
  o_frames->excludes(o_dets);
  c_trk->add_option("--config", trk.config, "Config file");
  c_trk->add_option("--out", trk.out, "Results file (MOT format)")->required();
  c_trk->add_option("--frame-count", trk.frame_count, "Sequence length when tracking external detections");

  EvaluateArgs ev;
  auto* c_ev = app.add_subcommand("evaluate", "Score tracking results against ground truth");
  c_ev->add_option("--results", ev.results, "Results file")->required()->check(CLI::ExistingFile);
  c_ev->add_option("--gt", ev.gt, "Ground truth (MOT text or .json)")->required()->check(CLI::ExistingFile);
  c_ev->add_option("--class", ev.cls, "vehicle or pedestrian")->capture_default_str();
  c_ev->add_option("--report", ev.report, "JSON report path");
  c_ev->add_option("--detections", ev.detections, "Detection file for AP metrics")->check(CLI::ExistingFile);
  c_ev->add_flag("--motp-distance", ev.motp_distance, "Report MOTP as mean centre distance in pixels");

  RenderArgs ren;
  auto* c_ren = app.add_subcommand("render", "Draw tracks over frames as PPM images");
  c_ren->add_option("--frames", ren.frames, "Directory written by accumulate")->required()->check(CLI::ExistingPath);
  c_ren->add_option("--results", ren.results, "Results file")->check(CLI::ExistingFile);
  c_ren->add_option("--class", ren.cls, "vehicle or pedestrian")->capture_default_str();
  c_ren->add_option("--out", ren.out, "Output directory")->required();
  c_ren->add_flag("--force", ren.force, "Allow a non-empty output directory");

  DemoArgs demo;
  auto* c_demo = app.add_subcommand("demo-nn", "Run the MCD block and decoupled head on a tensor");
  c_demo->add_option("--weights", demo.weights, "Weight tensor file")->required()->check(CLI::ExistingFile);
  c_demo->add_option("--input", demo.input, "Input tensor file")->required()->check(CLI::ExistingFile);
  c_demo->add_option("--tensor", demo.tensor, "Name of the input tensor")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*c_acc) return run_accumulate(acc);
    if (*c_det) return run_detect(det);
    if (*c_trk) return run_track(trk);
    if (*c_ev) return run_evaluate(ev);
    if (*c_ren) return run_render(ren);
    if (*c_demo) return run_demo_nn(demo);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
