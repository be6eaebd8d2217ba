// Acceptance runner: one PASS/FAIL line per criterion, non-zero exit if any fails.

#include <chrono>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "emot/assignment.hpp"
#include "emot/cluster_detector.hpp"
#include "emot/events.hpp"
#include "emot/io_formats.hpp"
#include "emot/metrics.hpp"
#include "emot/synthetic.hpp"
#include "emot/tensor_io.hpp"
#include "emot/tracker.hpp"
#include "nn_oracles.hpp"
#include "support.hpp"

using namespace emot;
using namespace emot::testing;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass{true};
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) detail = what;
    pass = pass && ok;
  }
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

Outcome assignment_optimality() {
  Outcome o;
  std::mt19937 rng(1001);
  std::uniform_int_distribution<int> dim(1, 8), value(0, 50);
  const auto t0 = Clock::now();
  for (int trial = 0; trial < 200; ++trial) {
    Eigen::MatrixXd c(dim(rng), dim(rng));
    for (Eigen::Index i = 0; i < c.size(); ++i) c.data()[i] = value(rng);
    const CostMatrix<double> m{c};
    const Assignment a = solve(m);
    const double got = total_cost(m, a), want = brute_force_min(c);
    o.require(got == want, "trial " + std::to_string(trial) + " cost " + fmt("%g", got) + " vs " + fmt("%g", want));
    o.require(a.pairs.size() == std::size_t(std::min(c.rows(), c.cols())), "not a full matching");
  }
  const double s = seconds_since(t0);
  o.require(s < 5.0, "took " + fmt("%.2f s", s));
  if (o.pass) o.detail = "200 matrices, " + fmt("%.2f s", s);
  return o;
}

Outcome event_conservation() {
  Outcome o;
  std::mt19937_64 rng(1002);
  const SensorGeometry g{240, 180};
  std::uniform_real_distribution<double> log_n(3.0, 6.0);
  std::uniform_int_distribution<int> x(0, g.width - 1), y(0, g.height - 1), pol(0, 1);
  std::size_t total = 0;
  for (int s = 0; s < 50; ++s) {
    const auto n = static_cast<std::size_t>(std::pow(10.0, s == 0 ? 6.0 : log_n(rng)));
    const std::int64_t span = std::uniform_int_distribution<std::int64_t>(100'000, 5'000'000)(rng);
    std::uniform_int_distribution<std::int64_t> t(0, span);
    std::vector<std::int64_t> ts(n);
    for (auto& v : ts) v = t(rng);
    std::sort(ts.begin(), ts.end());
    std::vector<Event> ev(n);
    for (std::size_t i = 0; i < n; ++i) ev[i] = {ts[i], x(rng), y(rng), std::int8_t(pol(rng) ? 1 : -1)};
    total += n;

    std::vector<std::vector<PolarityFrame>> by_dt;
    for (std::int64_t dt : {10'000, 20'000, 30'000}) {
      by_dt.push_back(accumulate(ev, dt, g));
      std::uint64_t sum = 0;
      for (const auto& f : by_dt.back()) sum += f.pos_counts.cast<std::uint64_t>().sum() + f.neg_counts.cast<std::uint64_t>().sum();
      o.require(sum == n, "stream " + std::to_string(s) + " lost events at dt " + std::to_string(dt));
    }
    for (int factor : {2, 3}) {
      const auto c = coarsen(by_dt[0], factor);
      const auto& ref = by_dt[std::size_t(factor - 1)];
      bool same = c.size() == ref.size();
      for (std::size_t k = 0; same && k < c.size(); ++k)
        same = c[k].pos_counts == ref[k].pos_counts && c[k].neg_counts == ref[k].neg_counts &&
               c[k].window_start == ref[k].window_start;
      o.require(same, "stream " + std::to_string(s) + " refinement x" + std::to_string(factor));
    }
  }
  if (o.pass) o.detail = "50 streams, " + std::to_string(total) + " events";
  return o;
}

Outcome conv_oracles() {
  Outcome o;
  std::mt19937 rng(1003);
  std::uniform_int_distribution<int> ch(1, 5), sz(2, 9);
  double worst = 0;
  for (int i = 0; i < 20; ++i) {
    const auto x = random_tensor(rng, ch(rng), sz(rng), sz(rng));
    const auto w = random_conv(rng, ch(rng), x.channels(), 3);
    worst = std::max(worst, max_abs_diff(nn::conv2d(x, w), conv_oracle(x, w)));
  }
  for (int i = 0; i < 20; ++i) {
    const auto x = random_tensor(rng, ch(rng), sz(rng), sz(rng));
    const auto w = random_deconv(rng, x.channels(), ch(rng));
    worst = std::max(worst, max_abs_diff(nn::conv_transpose2x2(x, w), deconv_oracle(x, w)));
    auto nobias = w;
    nobias.bias.setZero();
    const auto b = random_tensor(rng, w.out_channels, 2 * x.height(), 2 * x.width());
    const double lhs = inner(nn::conv_transpose2x2(x, nobias), b), rhs = inner(x, strided_conv_oracle(b, nobias));
    o.require(std::abs(lhs - rhs) <= 1e-6 * std::max(1.0, std::abs(rhs)), "adjoint identity");
  }
  o.require(worst <= 1e-6, "max deviation " + fmt("%g", worst));
  if (o.pass) o.detail = "40 instances, max deviation " + fmt("%.1e", worst);
  return o;
}

Outcome mcd_identity() {
  Outcome o;
  std::mt19937 rng(1004);
  for (int s : {8, 16, 32}) {
    const auto x = random_tensor(rng, 4, s, s);
    const auto y = nn::mcd_block(x, null_mcd(rng, 4, 8));
    o.require(y.same_shape(x), "shape at " + std::to_string(s));
    o.require(std::memcmp(y.data().data(), x.data().data(), sizeof(double) * std::size_t(x.data().size())) == 0,
              "not bit-exact at " + std::to_string(s));
    const auto w = random_mcd(rng, 4, 8);
    const auto z = nn::mcd_block(x, w);
    o.require(z.same_shape(x), "random-weight shape at " + std::to_string(s));
    auto residual = z;
    residual.data() -= x.data();
    o.require(max_abs_diff(residual, mcd_transform_oracle(x, w)) < 1e-6, "residual differs at " + std::to_string(s));
  }
  if (o.pass) o.detail = "bit-exact at 8, 16, 32";
  return o;
}

Outcome head_independence() {
  Outcome o;
  std::mt19937 rng(1005);
  for (int trial = 0; trial < 10; ++trial) {
    const auto p = random_tensor(rng, 6, 8, 8, -3, 3);
    const auto w = random_head(rng, 6, 5, 4);
    const auto a = nn::decoupled_head(p, w, 4);
    auto v = w;
    v.cls.reduce.weight.array() *= -1.5;
    v.cls.project.bias.array() += 2.0;
    const auto b = nn::decoupled_head(p, v, 4);
    o.require(a.reg.data().cwiseEqual(b.reg.data()).all() && a.obj.data().cwiseEqual(b.obj.data()).all(),
              "reg/obj moved with cls weights");
    const Eigen::ArrayXd sums = a.cls.as_matrix().colwise().sum().transpose().array();
    o.require(((sums - 1.0).abs() <= 1e-6).all(), "softmax does not sum to 1");
    o.require((a.obj.data() > 0).all() && (a.obj.data() < 1).all(), "objectness outside (0, 1)");
  }
  if (o.pass) o.detail = "10 perturbations";
  return o;
}

Outcome mot_metrics() {
  Outcome o;
  const auto fx = split_id_fixture();
  const auto r = evaluate_tracking(fx.results, fx.gt);
  o.require(std::abs(r.mota - 0.9) < 1e-12 && r.ids == 1 && std::abs(r.idf1 - 0.5) < 1e-12,
            "split-id fixture gave MOTA " + fmt("%g", r.mota) + " IDF1 " + fmt("%g", r.idf1));

  std::mt19937 rng(1006);
  std::uniform_int_distribution<int> coin(0, 3), hyp(1, 5);
  std::uniform_real_distribution<double> jitter(-5, 5);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<GroundTruthEntry> gt;
    std::vector<FrameResult> res;
    for (std::int64_t k = 0; k < 12; ++k) {
      FrameResult fr{k, {}};
      std::set<int> used;
      for (int obj = 1; obj <= 3; ++obj) {
        const BBox b{35.0 * obj, 10, 20, 20};
        if (coin(rng)) gt.push_back({k, obj, b, ClassId::vehicle, 1.0});
        const int h = hyp(rng);
        if (coin(rng) && used.insert(h).second) fr.tracks.push_back({h, b.translated(jitter(rng), 0), 1, ClassId::vehicle});
      }
      std::sort(fr.tracks.begin(), fr.tracks.end(), [](auto& a, auto& b) { return a.id < b.id; });
      res.push_back(fr);
    }
    const auto m = evaluate_tracking(res, gt);
    const double expect = 1.0 - double(m.fp + m.fn + m.ids) / double(std::max<std::int64_t>(m.num_gt, 1));
    o.require(std::abs(m.mota - expect) < 1e-12, "MOTA decomposition");
    o.require(m.idtp == brute_force_idtp(res, gt), "identity pairing not optimal");
    const auto self = evaluate_tracking(results_from_gt(gt), gt);
    o.require(self.mota == 1.0 && self.idf1 == (gt.empty() ? 0.0 : 1.0) && self.ids == 0, "gt vs itself");
  }
  if (o.pass) o.detail = "fixture MOTA 0.9, IDs 1, IDF1 0.5; 50 random cases";
  return o;
}

Outcome detection_ap() {
  Outcome o;
  const std::vector<PrPoint> half{{1, 0.5}, {0.5, 0.5}};
  o.require(std::abs(average_precision(half) - 51.0 / 101.0) < 1e-12, "51/101 fixture");
  std::vector<GroundTruthEntry> gt{{0, 1, {0, 0, 40, 40}, ClassId::vehicle, 1.0}};
  std::vector<Detection> d{{gt[0].bbox, 0.9, ClassId::vehicle, 0}};
  o.require(*detection_report(d, gt).ap50 == 1.0, "perfect detections");
  o.require(size_class(BBox{0, 0, 31, 31}) == SizeClass::small, "31 px small");
  o.require(size_class(BBox{0, 0, 32, 32}) == SizeClass::medium, "32 px medium");
  o.require(size_class(BBox{0, 0, 95, 95}) == SizeClass::medium, "95 px medium");
  o.require(size_class(BBox{0, 0, 96, 96}) == SizeClass::large, "96 px large");
  if (o.pass) o.detail = "AP 51/101, perfect 1, buckets at 32/96";
  return o;
}

std::vector<FrameResult> track_events(const synthetic::SceneSpec& spec, const std::vector<Event>& events,
                                      const TrackerConfig& cfg) {
  const auto frames = accumulate(events, spec.window_us, spec.geometry, WindowAnchor::zero);
  std::vector<std::vector<Detection>> dets;
  for (const auto& f : frames) dets.push_back(detect(f, ClusterParams{}, spec.class_id));
  return run_sequence(dets, cfg);
}

Outcome synthetic_pipeline() {
  Outcome o;
  const auto t0 = Clock::now();
  const auto spec = synthetic::four_object_scene();
  const auto scene = synthetic::generate_scene(spec);
  const auto res = track_events(spec, scene.events, TrackerConfig{});
  const auto m = evaluate_tracking(res, scene.gt);
  const double s = seconds_since(t0);
  o.require(m.mota >= 0.8, "MOTA " + fmt("%.3f", m.mota));
  o.require(m.ids <= 1, "IDs " + std::to_string(m.ids));
  o.require(s < 30.0, "took " + fmt("%.1f s", s));

  // A stretch of low-score detections must not break the identity.
  std::vector<std::vector<Detection>> dip(30);
  for (int k = 0; k < 30; ++k)
    dip[std::size_t(k)].push_back({BBox{30, 40, 16, 16}.translated(1.5 * k, 0.5 * k), k >= 10 && k < 14 ? 0.35 : 0.9,
                                   ClassId::vehicle, k});
  std::set<int> ids;
  for (const auto& fr : run_sequence(dip, TrackerConfig{}))
    for (const auto& t : fr.tracks) ids.insert(t.id);
  o.require(ids.size() == 1, "dip produced " + std::to_string(ids.size()) + " ids");
  if (o.pass) o.detail = "MOTA " + fmt("%.3f", m.mota) + ", IDs " + std::to_string(m.ids) + ", " + fmt("%.1f s", s);
  return o;
}

Outcome motion_term() {
  Outcome o;
  const auto spec = synthetic::crossing_scene();
  const auto gt = synthetic::ground_truth(spec);
  const auto dets = synthetic::scripted_detections(spec);
  MotEvalReport r[2];
  for (int i = 0; i < 2; ++i) {
    TrackerConfig cfg;
    cfg.motion_weight = cfg.inertia_weight = i ? 0.2 : 0.0;
    r[i] = evaluate_tracking(run_sequence(dets, cfg), gt);
  }
  o.require(r[1].idf1 >= r[0].idf1, "IDF1 " + fmt("%.3f", r[1].idf1) + " < " + fmt("%.3f", r[0].idf1));
  o.require(r[1].ids <= r[0].ids, "IDs increased");
  if (o.pass)
    o.detail = "IDF1 " + fmt("%.3f", r[0].idf1) + " -> " + fmt("%.3f", r[1].idf1) + ", IDs " + std::to_string(r[0].ids) +
               " -> " + std::to_string(r[1].ids);
  return o;
}

Outcome round_trips() {
  Outcome o;
  const auto spec = synthetic::four_object_scene(40);
  const auto gt = synthetic::ground_truth(spec);
  const auto per_frame = synthetic::scripted_detections(spec);
  const auto res = run_sequence(per_frame, TrackerConfig{});

  auto twice = [&](const std::string& name, auto write, auto read) {
    std::ostringstream a;
    write(a);
    std::istringstream in(a.str());
    std::ostringstream b;
    read(in, b);
    o.require(!a.str().empty() && a.str() == b.str(), name + " not byte-identical");
  };
  twice("results", [&](std::ostream& s) { write_results(s, res); },
        [&](std::istream& i, std::ostream& s) { write_results(s, parse_results(i)); });
  twice("mot gt", [&](std::ostream& s) { write_mot_gt(s, gt); },
        [&](std::istream& i, std::ostream& s) { write_mot_gt(s, parse_mot_gt(i)); });
  std::vector<Detection> flat;
  for (const auto& f : per_frame) flat.insert(flat.end(), f.begin(), f.end());
  twice("detections", [&](std::ostream& s) { write_detections(s, flat); },
        [&](std::istream& i, std::ostream& s) { write_detections(s, parse_detections(i)); });
  o.require(dump_json_gt(parse_json_gt(dump_json_gt(gt))) == dump_json_gt(gt), "json gt not byte-identical");

  const auto dir = scratch_dir("acceptance");
  const auto frames = accumulate(synthetic::generate_scene(spec).events, spec.window_us, spec.geometry);
  write_frames(dir / "a.emf", frames);
  write_frames(dir / "b.emf", read_frames(dir / "a.emf"));
  std::ifstream fa(dir / "a.emf", std::ios::binary), fb(dir / "b.emf", std::ios::binary);
  o.require(std::string(std::istreambuf_iterator<char>(fa), {}) == std::string(std::istreambuf_iterator<char>(fb), {}),
            "frame archive not byte-identical");

  std::mt19937 rng(1010);
  nn::TensorFile tf;
  nn::store_mcd_weights(tf, random_mcd(rng, 3, 4));
  const auto bytes = nn::encode_tensor_file(tf);
  o.require(nn::encode_tensor_file(nn::decode_tensor_file(bytes)) == bytes, "tensor file not byte-identical");

  for (std::int64_t n : {2, 10, 11, 4540}) {
    const auto [train, test] = split_sequence(n);
    o.require(train.begin == 0 && train.end == n / 2 && test.begin == n / 2 && test.end == n,
              "split of " + std::to_string(n));
  }
  if (o.pass) o.detail = "results, gt (MOT, JSON), detections, frames, tensors, splits";
  return o;
}

Outcome tracker_throughput() {
  Outcome o;
  const auto spec = synthetic::four_object_scene();
  const auto dets = synthetic::scripted_detections(spec);
  const auto t = measure_throughput([&] { run_sequence(dets, TrackerConfig{}); }, std::int64_t(dets.size()), 5);
  o.require(t.fps && *t.fps >= 1000.0, "fps " + (t.fps ? fmt("%.0f", *t.fps) : std::string("n/a")));
  if (o.pass) o.detail = fmt("%.0f fps", *t.fps);
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"assignment matches brute force", assignment_optimality},
      {"event conservation and window refinement", event_conservation},
      {"convolution and transposed convolution oracles", conv_oracles},
      {"MCD residual identity and shapes", mcd_identity},
      {"decoupled head branch independence", head_independence},
      {"tracking metrics fixtures and identities", mot_metrics},
      {"detection AP and size buckets", detection_ap},
      {"synthetic scene end to end", synthetic_pipeline},
      {"motion term on crossing objects", motion_term},
      {"format round trips and splits", round_trips},
      {"tracker throughput", tracker_throughput},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome r;
    try {
      r = criteria[i].second();
    } catch (const std::exception& e) {
      r = {false, std::string("exception: ") + e.what()};
    }
    failed += !r.pass;
    std::printf("%s  %2zu  %s: %s\n", r.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), r.detail.c_str());
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - std::size_t(failed), criteria.size());
  return failed ? 1 : 0;
}
