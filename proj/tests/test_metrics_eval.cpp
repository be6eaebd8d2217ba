#include <doctest.h>

#include <set>
#include <thread>

#include "emot/metrics.hpp"
#include "support.hpp"

using namespace emot;
using namespace emot::testing;

namespace {

GroundTruthEntry gt_at(std::int64_t frame, int id, BBox b) { return {frame, id, b, ClassId::vehicle, 1.0}; }

Detection det_at(std::int64_t frame, BBox b, double score) { return {b, score, ClassId::vehicle, frame}; }

}  // namespace

TEST_CASE("pr curve fixtures") {
  const BBox a{0, 0, 10, 10}, b{50, 50, 10, 10};
  std::vector<GroundTruthEntry> gt{gt_at(1, 1, a), gt_at(1, 2, b)};

  std::vector<Detection> perfect{det_at(1, a, 0.9), det_at(1, b, 0.9)};
  const auto c = pr_curve(perfect, gt, 0.5);
  REQUIRE(c.size() == 1);
  CHECK(c[0] == PrPoint{1, 1});

  CHECK(pr_curve({}, gt, 0.5).empty());

  // A hit then a miss at a lower score.
  std::vector<Detection> half{det_at(1, a, 0.9), det_at(1, BBox{100, 100, 5, 5}, 0.4)};
  const auto h = pr_curve(half, gt, 0.5);
  REQUIRE(h.size() == 2);
  CHECK(h[0] == PrPoint{1, 0.5});
  CHECK(h[1] == PrPoint{0.5, 0.5});
}

TEST_CASE("pr curve groups equal scores") {
  const BBox a{0, 0, 10, 10};
  std::vector<GroundTruthEntry> gt{gt_at(1, 1, a)};
  std::vector<Detection> d{det_at(1, a, 0.5), det_at(1, BBox{40, 40, 5, 5}, 0.5)};
  const auto c = pr_curve(d, gt, 0.5);
  REQUIRE(c.size() == 1);
  CHECK(c[0] == PrPoint{0.5, 1});
}

TEST_CASE("average precision fixtures") {
  const std::vector<PrPoint> half{{1, 0.5}, {0.5, 0.5}};
  CHECK(average_precision(half) == doctest::Approx(51.0 / 101.0));
  const std::vector<PrPoint> perfect{{1, 1}};
  CHECK(average_precision(perfect) == 1.0);
  CHECK(average_precision(std::vector<PrPoint>{}) == 0.0);
  // Interpolation takes the best precision to the right.
  const std::vector<PrPoint> dip{{0.5, 0.2}, {0.8, 0.6}};
  CHECK(average_precision(dip) == doctest::Approx(61 * 0.8 / 101.0));
}

TEST_CASE("detection report") {
  std::vector<GroundTruthEntry> gt;
  std::vector<Detection> dets;
  for (int k = 1; k <= 5; ++k) {
    const BBox b{10.0 * k, 10, 40, 40};
    gt.push_back(gt_at(k, 1, b));
    dets.push_back(det_at(k, b, 0.8));
  }
  const auto r = detection_report(dets, gt);
  CHECK(*r.ap50 == 1.0);
  CHECK(*r.ap75 == 1.0);
  CHECK(*r.map == 1.0);
  CHECK(*r.ap_medium == 1.0);
  CHECK_FALSE(r.ap_small.has_value());
  CHECK_FALSE(r.ap_large.has_value());
  CHECK(*r.precision == 1.0);
  CHECK(*r.recall == 1.0);

  std::vector<Detection> shifted;
  for (const auto& d : dets) shifted.push_back(det_at(d.frame_index, d.bbox.translated(30, 0), d.score));
  const auto s = detection_report(shifted, gt);
  CHECK(*s.ap50 == 0.0);
  CHECK(*s.precision == 0.0);

  const auto none = detection_report(dets, std::vector<GroundTruthEntry>{});
  CHECK_FALSE(none.ap50.has_value());
  CHECK_FALSE(none.recall.has_value());
}

TEST_CASE("detection report: size buckets") {
  std::vector<GroundTruthEntry> gt{gt_at(1, 1, {0, 0, 20, 20}), gt_at(1, 2, {100, 0, 50, 50}),
                                   gt_at(1, 3, {0, 100, 100, 100})};
  std::vector<Detection> d{det_at(1, gt[0].bbox, 0.9), det_at(1, gt[2].bbox, 0.9)};
  const auto r = detection_report(d, gt);
  CHECK(*r.ap_small == 1.0);
  CHECK(*r.ap_medium == 0.0);
  CHECK(*r.ap_large == 1.0);
  CHECK(*r.ap50 == doctest::Approx(67.0 / 101.0));
}

TEST_CASE("clear mot: perfect and empty") {
  const auto fx = split_id_fixture();
  const auto same = clear_mot(results_from_gt(fx.gt), fx.gt);
  CHECK(same.mota == 1.0);
  CHECK(same.motp == 1.0);
  CHECK(same.fp == 0);
  CHECK(same.fn == 0);
  CHECK(same.ids == 0);
  CHECK(same.num_matches == 10);

  const auto empty = evaluate_tracking({}, fx.gt);
  CHECK(empty.mota == 0.0);
  CHECK(empty.fn == 10);
  CHECK(empty.ml == 1);
  CHECK(empty.idf1 == 0.0);

  const auto nothing = evaluate_tracking({}, {});
  CHECK(nothing.mota == 1.0);
  CHECK(nothing.num_frames == 0);
}

TEST_CASE("split-id fixture") {
  const auto fx = split_id_fixture();
  const auto r = evaluate_tracking(fx.results, fx.gt);
  CHECK(r.mota == doctest::Approx(0.9));
  CHECK(r.ids == 1);
  CHECK(r.idtp == 5);
  CHECK(r.idfp == 5);
  CHECK(r.idfn == 5);
  CHECK(r.idf1 == doctest::Approx(0.5));
  CHECK(r.mt == 1);
}

TEST_CASE("clear mot keeps a correspondence while it stays valid") {
  // Two hypotheses overlap the object; the earlier match persists even when the other fits better.
  std::vector<GroundTruthEntry> gt;
  std::vector<FrameResult> res;
  const BBox g{0, 0, 20, 20};
  for (std::int64_t k = 1; k <= 4; ++k) {
    gt.push_back(gt_at(k, 1, g));
    std::vector<TrackReport> t{{1, g.translated(4, 0), 1.0, ClassId::vehicle}};
    if (k > 1) t.push_back({2, g, 1.0, ClassId::vehicle});
    res.push_back({k, t});
  }
  const auto r = clear_mot(res, gt);
  CHECK(r.ids == 0);
  CHECK(r.fp == 3);
}

TEST_CASE("trajectory coverage thresholds") {
  std::vector<GroundTruthEntry> gt;
  std::vector<FrameResult> res;
  const BBox a{0, 0, 20, 20}, b{50, 0, 20, 20}, c{100, 0, 20, 20};
  for (std::int64_t k = 1; k <= 10; ++k) {
    gt.push_back(gt_at(k, 1, a));
    gt.push_back(gt_at(k, 2, b));
    gt.push_back(gt_at(k, 3, c));
    FrameResult fr{k, {}};
    fr.tracks.push_back({1, a, 1, ClassId::vehicle});                      // 10/10
    if (k <= 5) fr.tracks.push_back({2, b, 1, ClassId::vehicle});          // 5/10
    if (k <= 2) fr.tracks.push_back({3, c, 1, ClassId::vehicle});          // 2/10
    res.push_back(fr);
  }
  const auto cov = trajectory_coverage(res, gt);
  CHECK(cov.mt == 1);
  CHECK(cov.pt == 1);
  CHECK(cov.ml == 1);
}

TEST_CASE("oracle: identity pairing against brute force") {
  std::mt19937 rng(61);
  std::uniform_int_distribution<int> nobj(1, 4), nhyp(1, 6), coin(0, 3);
  for (int trial = 0; trial < 60; ++trial) {
    const int n = nobj(rng), m = nhyp(rng);
    std::vector<GroundTruthEntry> gt;
    std::vector<FrameResult> res;
    for (std::int64_t k = 1; k <= 12; ++k) {
      FrameResult fr{k, {}};
      std::vector<int> used;
      for (int o = 1; o <= n; ++o) {
        const BBox b{30.0 * o, 10, 20, 20};
        gt.push_back(gt_at(k, o, b));
        if (coin(rng) == 0) continue;
        int h = std::uniform_int_distribution<int>(1, m)(rng);
        if (std::find(used.begin(), used.end(), h) != used.end()) continue;
        used.push_back(h);
        fr.tracks.push_back({h, b.translated(coin(rng), 0), 1, ClassId::vehicle});
      }
      std::sort(fr.tracks.begin(), fr.tracks.end(), [](auto& x, auto& y) { return x.id < y.id; });
      res.push_back(fr);
    }
    const auto s = identity_metrics(res, gt);
    CHECK(s.idtp == brute_force_idtp(res, gt));
    CHECK(s.idtp + s.idfn == std::int64_t(gt.size()));
  }
}

TEST_CASE("property: mota decomposition") {
  std::mt19937 rng(62);
  std::uniform_real_distribution<double> jitter(-6, 6);
  std::uniform_int_distribution<int> coin(0, 4);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<GroundTruthEntry> gt;
    std::vector<FrameResult> res;
    for (std::int64_t k = 1; k <= 15; ++k) {
      FrameResult fr{k, {}};
      for (int o = 1; o <= 3; ++o) {
        const BBox b{40.0 * o, 20, 20, 20};
        if (coin(rng)) gt.push_back(gt_at(k, o, b));
        if (coin(rng)) fr.tracks.push_back({o + 10 * (coin(rng) == 0), b.translated(jitter(rng), jitter(rng)), 1, ClassId::vehicle});
      }
      std::sort(fr.tracks.begin(), fr.tracks.end(), [](auto& x, auto& y) { return x.id < y.id; });
      res.push_back(fr);
    }
    const auto r = evaluate_tracking(res, gt);
    CHECK(r.mota == doctest::Approx(1.0 - double(r.fp + r.fn + r.ids) / double(std::max<std::int64_t>(r.num_gt, 1))));
    CHECK(r.num_matches + r.fn == r.num_gt);
    CHECK(r.num_matches + r.fp == r.num_hyp);
    std::set<int> objects;
    for (const auto& g : gt) objects.insert(g.object_id);
    CHECK(r.mt + r.pt + r.ml == std::int64_t(objects.size()));
    CHECK(r.idf1 >= 0.0);
    CHECK(r.idf1 <= 1.0);
  }
}

TEST_CASE("mota from counts") {
  CHECK(mota_from_counts(1, 2, 3, 10) == doctest::Approx(0.4));
  CHECK(mota_from_counts(5, 0, 0, 0) == -4.0);
  CHECK(mota_from_counts(0, 0, 0, 0) == 1.0);
}

TEST_CASE("merge reports micro-averages") {
  const auto fx = split_id_fixture();
  const auto a = evaluate_tracking(fx.results, fx.gt);
  const auto b = evaluate_tracking(results_from_gt(fx.gt), fx.gt);
  const std::vector<MotEvalReport> both{a, b};
  const auto m = merge_reports(both);
  CHECK(m.num_gt == 20);
  CHECK(m.ids == 1);
  CHECK(m.mota == doctest::Approx(0.95));
  CHECK(m.idtp == 15);
  CHECK(m.idf1 == doctest::Approx(0.75));
  CHECK(m.mt == 2);
}

TEST_CASE("throughput") {
  CHECK_FALSE(frames_per_second(0, 1.0).has_value());
  CHECK_FALSE(frames_per_second(10, 0.0).has_value());
  CHECK(*frames_per_second(100, 2.0) == 50.0);
  const auto t = measure_throughput([] { std::this_thread::sleep_for(std::chrono::milliseconds(2)); }, 10, 3);
  CHECK(t.runs == 3);
  REQUIRE(t.fps.has_value());
  CHECK(*t.fps > 0);
  CHECK(*t.fps < 5001);
  REQUIRE(t.cv.has_value());
  CHECK(*t.cv >= 0);
}
