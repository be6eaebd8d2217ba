#include "emot/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "emot/assignment.hpp"

namespace emot {
namespace {

struct ScoredOutcome {
  double score;
  bool tp;
};

/// Greedy score-ordered matching. With `bucket`, ground truth outside the bucket is ignored
/// and so are detections that land on it or fall outside the bucket unmatched.
std::vector<ScoredOutcome> match_detections(std::span<const Detection> dets,
                                            std::span<const GroundTruthEntry> gt, double iou_thresh,
                                            std::optional<SizeClass> bucket, std::int64_t& num_gt) {
  std::map<std::int64_t, std::vector<std::size_t>> gt_by_frame;
  num_gt = 0;
  std::vector<char> ignored(gt.size(), 0);
  for (std::size_t i = 0; i < gt.size(); ++i) {
    gt_by_frame[gt[i].frame_index].push_back(i);
    ignored[i] = bucket && size_class(gt[i].bbox) != *bucket;
    if (!ignored[i]) ++num_gt;
  }

  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return dets[a].score > dets[b].score; });

  std::vector<char> taken(gt.size(), 0);
  std::vector<ScoredOutcome> out;
  out.reserve(dets.size());
  for (std::size_t di : order) {
    const Detection& d = dets[di];
    auto it = gt_by_frame.find(d.frame_index);
    std::optional<std::size_t> best;
    double best_iou = -1;
    for (int pass = 0; pass < 2 && !best; ++pass) {
      if (it == gt_by_frame.end()) break;
      for (std::size_t gi : it->second) {
        if (taken[gi] || ignored[gi] != (pass == 1)) continue;
        const double v = iou(d.bbox, gt[gi].bbox);
        if (v >= iou_thresh && v > best_iou) {
          best_iou = v;
          best = gi;
        }
      }
    }
    if (best) {
      taken[*best] = 1;
      if (ignored[*best]) continue;
      out.push_back({d.score, true});
    } else {
      if (bucket && size_class(d.bbox) != *bucket) continue;
      out.push_back({d.score, false});
    }
  }
  return out;
}

std::vector<PrPoint> curve_from(const std::vector<ScoredOutcome>& outcomes, std::int64_t num_gt) {
  std::vector<PrPoint> curve;
  std::int64_t tp = 0;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    tp += outcomes[i].tp;
    const bool level_ends = i + 1 == outcomes.size() || outcomes[i + 1].score != outcomes[i].score;
    if (!level_ends) continue;
    const double n = static_cast<double>(i + 1);
    curve.push_back({tp / n, num_gt ? double(tp) / double(num_gt) : 0.0});
  }
  return curve;
}

std::optional<double> swept_ap(std::span<const Detection> dets, std::span<const GroundTruthEntry> gt,
                               std::span<const double> thresholds, std::optional<SizeClass> bucket) {
  double sum = 0;
  for (double t : thresholds) {
    std::int64_t num_gt = 0;
    const auto outcomes = match_detections(dets, gt, t, bucket, num_gt);
    if (num_gt == 0) return std::nullopt;
    sum += average_precision(curve_from(outcomes, num_gt));
  }
  return sum / double(thresholds.size());
}

struct FrameView {
  std::vector<const GroundTruthEntry*> gt;
  std::vector<const TrackReport*> hyp;
};

std::map<std::int64_t, FrameView> by_frame(std::span<const FrameResult> results,
                                           std::span<const GroundTruthEntry> gt) {
  std::map<std::int64_t, FrameView> frames;
  for (const auto& g : gt) frames[g.frame_index].gt.push_back(&g);
  for (const auto& r : results)
    for (const auto& t : r.tracks) frames[r.frame_index].hyp.push_back(&t);
  return frames;
}

struct ClearState {
  MotEvalReport report;
  std::map<int, std::int64_t> gt_frames;   // object id -> frames present
  std::map<int, std::int64_t> gt_matched;  // object id -> frames matched
};

ClearState run_clear(std::span<const FrameResult> results, std::span<const GroundTruthEntry> gt,
                     const MotEvalOptions& opt) {
  ClearState st;
  MotEvalReport& rep = st.report;
  std::map<int, int> last_match;  // gt id -> last matched hyp id

  for (const auto& [frame, view] : by_frame(results, gt)) {
    ++rep.num_frames;
    rep.num_gt += static_cast<std::int64_t>(view.gt.size());
    rep.num_hyp += static_cast<std::int64_t>(view.hyp.size());
    std::vector<char> gt_used(view.gt.size(), 0), hyp_used(view.hyp.size(), 0);
    std::vector<std::pair<std::size_t, std::size_t>> matches;

    for (std::size_t g = 0; g < view.gt.size(); ++g) {
      ++st.gt_frames[view.gt[g]->object_id];
      auto it = last_match.find(view.gt[g]->object_id);
      if (it == last_match.end()) continue;
      for (std::size_t h = 0; h < view.hyp.size(); ++h) {
        if (hyp_used[h] || view.hyp[h]->id != it->second) continue;
        if (iou(view.gt[g]->bbox, view.hyp[h]->bbox) >= opt.iou_thresh) {
          gt_used[g] = hyp_used[h] = 1;
          matches.emplace_back(g, h);
        }
        break;
      }
    }

    std::vector<std::size_t> free_gt, free_hyp;
    for (std::size_t g = 0; g < view.gt.size(); ++g)
      if (!gt_used[g]) free_gt.push_back(g);
    for (std::size_t h = 0; h < view.hyp.size(); ++h)
      if (!hyp_used[h]) free_hyp.push_back(h);
    if (!free_gt.empty() && !free_hyp.empty()) {
      CostMatrix<double> cm{Eigen::MatrixXd(free_gt.size(), free_hyp.size())};
      for (std::size_t a = 0; a < free_gt.size(); ++a) {
        for (std::size_t b = 0; b < free_hyp.size(); ++b) {
          const double v = iou(view.gt[free_gt[a]]->bbox, view.hyp[free_hyp[b]]->bbox);
          cm.cost(a, b) = 1.0 - v;
          cm.forbidden(a, b) = v < opt.iou_thresh;
        }
      }
      for (auto [a, b] : solve(cm).pairs) {
        const std::size_t g = free_gt[a], h = free_hyp[b];
        gt_used[g] = hyp_used[h] = 1;
        matches.emplace_back(g, h);
        auto it = last_match.find(view.gt[g]->object_id);
        if (it != last_match.end() && it->second != view.hyp[h]->id) ++rep.ids;
      }
    }

    for (auto [g, h] : matches) {
      const BBox& a = view.gt[g]->bbox;
      const BBox& b = view.hyp[h]->bbox;
      last_match[view.gt[g]->object_id] = view.hyp[h]->id;
      ++st.gt_matched[view.gt[g]->object_id];
      ++rep.num_matches;
      rep.iou_sum += iou(a, b);
      rep.distance_sum += std::hypot(a.cx() - b.cx(), a.cy() - b.cy());
    }
    rep.fn += static_cast<std::int64_t>(view.gt.size()) - static_cast<std::int64_t>(matches.size());
    rep.fp += static_cast<std::int64_t>(view.hyp.size()) - static_cast<std::int64_t>(matches.size());
  }

  rep.num_trajectories = static_cast<std::int64_t>(st.gt_frames.size());
  rep.mota = mota_from_counts(rep.fp, rep.fn, rep.ids, rep.num_gt);
  rep.motp = rep.num_matches ? rep.iou_sum / double(rep.num_matches) : 0.0;
  return st;
}

Coverage coverage_from(const ClearState& st, const MotEvalOptions& opt) {
  Coverage c;
  for (const auto& [id, total] : st.gt_frames) {
    auto it = st.gt_matched.find(id);
    const double ratio = double(it == st.gt_matched.end() ? 0 : it->second) / double(total);
    if (ratio >= opt.mostly_tracked) ++c.mt;
    else if (ratio <= opt.mostly_lost) ++c.ml;
    else ++c.pt;
  }
  return c;
}

void finish_identity(IdentityScores& s) {
  const double tp = double(s.idtp);
  s.idp = s.idtp + s.idfp ? tp / double(s.idtp + s.idfp) : 0.0;
  s.idr = s.idtp + s.idfn ? tp / double(s.idtp + s.idfn) : 0.0;
  const double denom = 2.0 * tp + double(s.idfp + s.idfn);
  s.idf1 = denom > 0 ? 2.0 * tp / denom : 0.0;
}

}  // namespace

std::vector<PrPoint> pr_curve(std::span<const Detection> dets, std::span<const GroundTruthEntry> gt,
                              double iou_thresh) {
  std::int64_t num_gt = 0;
  const auto outcomes = match_detections(dets, gt, iou_thresh, std::nullopt, num_gt);
  return curve_from(outcomes, num_gt);
}

double average_precision(std::span<const PrPoint> curve) {
  double sum = 0;
  for (int i = 0; i <= 100; ++i) {
    const double r = i / 100.0;
    double best = 0;
    for (const PrPoint& p : curve)
      if (p.recall >= r - 1e-12) best = std::max(best, p.precision);
    sum += best;
  }
  return sum / 101.0;
}

DetEvalReport detection_report(std::span<const Detection> dets, std::span<const GroundTruthEntry> gt,
                               const DetEvalOptions& options) {
  DetEvalReport rep;
  const double single50[] = {0.5};
  const double single75[] = {0.75};
  std::vector<double> sweep;
  for (int k = 0; k < 10; ++k) sweep.push_back(0.5 + 0.05 * k);

  rep.ap50 = swept_ap(dets, gt, single50, std::nullopt);
  rep.ap75 = swept_ap(dets, gt, single75, std::nullopt);
  rep.map = swept_ap(dets, gt, sweep, std::nullopt);
  rep.ap_small = swept_ap(dets, gt, sweep, SizeClass::small);
  rep.ap_medium = swept_ap(dets, gt, sweep, SizeClass::medium);
  rep.ap_large = swept_ap(dets, gt, sweep, SizeClass::large);

  std::vector<Detection> kept;
  for (const Detection& d : dets)
    if (d.score >= options.operating_score) kept.push_back(d);
  std::int64_t num_gt = 0;
  const auto outcomes = match_detections(kept, gt, options.operating_iou, std::nullopt, num_gt);
  const auto tp = std::count_if(outcomes.begin(), outcomes.end(), [](const ScoredOutcome& o) { return o.tp; });
  if (!outcomes.empty()) rep.precision = double(tp) / double(outcomes.size());
  if (num_gt > 0) rep.recall = double(tp) / double(num_gt);
  return rep;
}

double mota_from_counts(std::int64_t fp, std::int64_t fn, std::int64_t ids, std::int64_t num_gt) {
  return 1.0 - double(fp + fn + ids) / double(std::max<std::int64_t>(num_gt, 1));
}

MotEvalReport clear_mot(std::span<const FrameResult> results, std::span<const GroundTruthEntry> gt,
                        const MotEvalOptions& options) {
  return run_clear(results, gt, options).report;
}

IdentityScores identity_metrics(std::span<const FrameResult> results, std::span<const GroundTruthEntry> gt,
                                const MotEvalOptions& options) {
  std::map<int, int> gt_index, hyp_index;
  std::vector<std::int64_t> gt_len, hyp_len;
  for (const auto& g : gt) {
    auto [it, fresh] = gt_index.try_emplace(g.object_id, static_cast<int>(gt_len.size()));
    if (fresh) gt_len.push_back(0);
    ++gt_len[it->second];
  }
  for (const auto& r : results) {
    for (const auto& t : r.tracks) {
      auto [it, fresh] = hyp_index.try_emplace(t.id, static_cast<int>(hyp_len.size()));
      if (fresh) hyp_len.push_back(0);
      ++hyp_len[it->second];
    }
  }

  Eigen::MatrixXd overlap = Eigen::MatrixXd::Zero(gt_len.size(), hyp_len.size());
  for (const auto& [frame, view] : by_frame(results, gt))
    for (const auto* g : view.gt)
      for (const auto* h : view.hyp)
        if (iou(g->bbox, h->bbox) >= options.iou_thresh) overlap(gt_index[g->object_id], hyp_index[h->id]) += 1;

  IdentityScores s;
  const std::int64_t total_gt = std::accumulate(gt_len.begin(), gt_len.end(), std::int64_t{0});
  const std::int64_t total_hyp = std::accumulate(hyp_len.begin(), hyp_len.end(), std::int64_t{0});
  if (overlap.size() > 0) {
    // Maximise shared frames: minimise (max - overlap); a pairing with zero overlap is
    // equivalent to leaving both trajectories unpaired.
    const double top = overlap.maxCoeff();
    const Assignment a = solve(CostMatrix<double>{(Eigen::MatrixXd::Constant(overlap.rows(), overlap.cols(), top) - overlap).eval()});
    for (auto [g, h] : a.pairs) s.idtp += static_cast<std::int64_t>(overlap(g, h));
  }
  s.idfn = total_gt - s.idtp;
  s.idfp = total_hyp - s.idtp;
  finish_identity(s);
  return s;
}

Coverage trajectory_coverage(std::span<const FrameResult> results, std::span<const GroundTruthEntry> gt,
                             const MotEvalOptions& options) {
  return coverage_from(run_clear(results, gt, options), options);
}

MotEvalReport evaluate_tracking(std::span<const FrameResult> results, std::span<const GroundTruthEntry> gt,
                                const MotEvalOptions& options) {
  ClearState st = run_clear(results, gt, options);
  MotEvalReport rep = st.report;
  const Coverage c = coverage_from(st, options);
  rep.mt = c.mt;
  rep.pt = c.pt;
  rep.ml = c.ml;
  const IdentityScores id = identity_metrics(results, gt, options);
  rep.idtp = id.idtp;
  rep.idfp = id.idfp;
  rep.idfn = id.idfn;
  rep.idf1 = id.idf1;
  rep.idp = id.idp;
  rep.idr = id.idr;
  return rep;
}

MotEvalReport merge_reports(std::span<const MotEvalReport> reports) {
  MotEvalReport m;
  for (const auto& r : reports) {
    m.mt += r.mt;
    m.pt += r.pt;
    m.ml += r.ml;
    m.fp += r.fp;
    m.fn += r.fn;
    m.ids += r.ids;
    m.num_gt += r.num_gt;
    m.num_hyp += r.num_hyp;
    m.num_matches += r.num_matches;
    m.num_frames += r.num_frames;
    m.num_trajectories += r.num_trajectories;
    m.idtp += r.idtp;
    m.idfp += r.idfp;
    m.idfn += r.idfn;
    m.iou_sum += r.iou_sum;
    m.distance_sum += r.distance_sum;
  }
  m.mota = mota_from_counts(m.fp, m.fn, m.ids, m.num_gt);
  m.motp = m.num_matches ? m.iou_sum / double(m.num_matches) : 0.0;
  IdentityScores s{0, 0, 0, m.idtp, m.idfp, m.idfn};
  finish_identity(s);
  m.idf1 = s.idf1;
  m.idp = s.idp;
  m.idr = s.idr;
  return m;
}

std::optional<double> frames_per_second(std::int64_t frames, double seconds) {
  if (frames <= 0 || !(seconds > 0)) return std::nullopt;
  return double(frames) / seconds;
}

Throughput measure_throughput(const std::function<void()>& run, std::int64_t frames, int repeats) {
  Throughput t;
  std::vector<double> rates;
  for (int i = 0; i < std::max(1, repeats); ++i) {
    const auto start = std::chrono::steady_clock::now();
    run();
    const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - start;
    if (auto f = frames_per_second(frames, dt.count())) rates.push_back(*f);
  }
  t.runs = static_cast<int>(rates.size());
  if (rates.empty()) return t;
  const double mean = std::accumulate(rates.begin(), rates.end(), 0.0) / double(rates.size());
  double var = 0;
  for (double r : rates) var += (r - mean) * (r - mean);
  var /= double(rates.size());
  t.fps = mean;
  if (rates.size() > 1 && mean > 0) t.cv = std::sqrt(var) / mean;
  return t;
}

}  // namespace emot
