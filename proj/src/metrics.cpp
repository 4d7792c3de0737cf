#include "saved/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include "saved/io.hpp"

namespace saved {

std::size_t histogram_bin(double v, std::size_t bins) {
  const double c = std::clamp(v, 0.0, 1.0);
  return std::min(static_cast<std::size_t>(c * static_cast<double>(bins)), bins - 1);
}

Histogram make_histogram(const std::vector<double>& counts, double smoothing) {
  if (counts.size() < 2) throw std::invalid_argument("histogram needs at least 2 bins");
  double total = 0.0;
  for (double c : counts) total += c;
  if (!(total > 0.0)) throw std::invalid_argument("histogram has no samples");
  Histogram h;
  h.mass.resize(counts.size());
  const double norm = 1.0 + smoothing * static_cast<double>(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) h.mass[i] = (counts[i] / total + smoothing) / norm;
  return h;
}

Histogram pixel_histogram(const Frame& frame, const BoxAnnotation& box, std::size_t bins, double smoothing) {
  if (bins < 2) throw std::invalid_argument("pixel_histogram: bins must be >= 2");
  if (!box.fits(frame.height(), frame.width())) throw std::invalid_argument("pixel_histogram: box outside frame");
  std::vector<double> counts(bins, 0.0);
  for (int y = box.y; y < box.bottom(); ++y) {
    for (int x = box.x; x < box.right(); ++x) counts[histogram_bin(frame(y, x), bins)] += 1.0;
  }
  return make_histogram(counts, smoothing);
}

double kl_divergence(const Histogram& p, const Histogram& q) {
  if (p.bins() != q.bins()) throw std::invalid_argument("kl_divergence: bin count mismatch");
  double sum = 0.0;
  for (std::size_t i = 0; i < p.bins(); ++i) {
    if (p.mass[i] > 0.0) sum += p.mass[i] * std::log(p.mass[i] / q.mass[i]);
  }
  // Rounding can leave a tiny negative value for near-identical inputs.
  return std::max(sum, 0.0);
}

std::optional<std::size_t> find_background_frame(std::size_t clip_length, const std::vector<BoxAnnotation>& boxes,
                                                 const BoxAnnotation& box) {
  const auto t0 = static_cast<std::ptrdiff_t>(box.frame_index);
  const auto len = static_cast<std::ptrdiff_t>(clip_length);
  std::vector<char> occupied(clip_length, 0);
  for (const BoxAnnotation& b : boxes) {
    if (b.frame_index >= 0 && b.frame_index < len && b.overlaps(box)) occupied[static_cast<std::size_t>(b.frame_index)] = 1;
  }
  for (std::ptrdiff_t d = 1; d < len; ++d) {
    for (std::ptrdiff_t t : {t0 - d, t0 + d}) {
      if (t >= 0 && t < len && !occupied[static_cast<std::size_t>(t)]) return static_cast<std::size_t>(t);
    }
  }
  return std::nullopt;
}

FbdReport fbd(const Clip& clip, const std::vector<BoxAnnotation>& boxes, std::size_t bins) {
  if (boxes.empty()) throw std::invalid_argument("fbd: no annotations");
  validate_annotations(boxes, clip);
  std::vector<BoxAnnotation> sorted = boxes;
  std::stable_sort(sorted.begin(), sorted.end(), [](const BoxAnnotation& a, const BoxAnnotation& b) {
    return std::tie(a.frame_index, a.y, a.x, a.h, a.w) < std::tie(b.frame_index, b.y, b.x, b.h, b.w);
  });
  FbdReport report;
  double sum = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const BoxAnnotation& b = sorted[i];
    const auto bg = find_background_frame(clip.size(), sorted, b);
    if (!bg) {
      ++report.skipped;
      continue;
    }
    const Histogram fg_hist = pixel_histogram(clip[static_cast<std::size_t>(b.frame_index)], b, bins);
    const Histogram bg_hist = pixel_histogram(clip[*bg], b, bins);
    const double kl = kl_divergence(fg_hist, bg_hist);
    report.rows.push_back({i, b.frame_index, *bg, kl});
    sum += kl;
  }
  report.evaluated = report.rows.size();
  if (report.evaluated == 0) throw std::invalid_argument("fbd: no box has an object-free frame to compare against");
  report.mean = sum / static_cast<double>(report.evaluated);
  return report;
}

std::string format_fbd_report(const FbdReport& report) {
  std::ostringstream out;
  out << "box_index,frame,kl\n";
  for (const FbdRow& r : report.rows) out << r.box_index << ',' << r.frame << ',' << format_double(r.kl) << '\n';
  out << "evaluated=" << report.evaluated << '\n';
  out << "skipped=" << report.skipped << '\n';
  out << "mean_fbd=" << format_double(report.mean) << '\n';
  return out.str();
}

double mse(const Frame& a, const Frame& b) {
  if (!a.same_size(b)) throw std::invalid_argument("mse: frame size mismatch");
  double sum = 0.0;
  const double* pa = a.pixels().data();
  const double* pb = b.pixels().data();
  const Eigen::Index n = a.pixels().size();
  for (Eigen::Index i = 0; i < n; ++i) sum += (pa[i] - pb[i]) * (pa[i] - pb[i]);
  return sum / static_cast<double>(n);
}

double psnr(const Frame& clean, const Frame& test) {
  const double m = mse(clean, test);
  if (m == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / m);
}

double ssim(const Frame& clean, const Frame& test, int window, double k1, double k2) {
  if (!clean.same_size(test)) throw std::invalid_argument("ssim: frame size mismatch");
  if (window < 1 || clean.height() < window || clean.width() < window) {
    throw std::invalid_argument("ssim: frame smaller than the window");
  }
  const double c1 = k1 * k1;
  const double c2 = k2 * k2;
  const double n = static_cast<double>(window) * window;
  double total = 0.0;
  int tiles = 0;
  for (Eigen::Index y0 = 0; y0 + window <= clean.height(); y0 += window) {
    for (Eigen::Index x0 = 0; x0 + window <= clean.width(); x0 += window) {
      const auto a = clean.pixels().block(y0, x0, window, window);
      const auto b = test.pixels().block(y0, x0, window, window);
      double ma = 0.0, mb = 0.0;
      for (int y = 0; y < window; ++y) {
        for (int x = 0; x < window; ++x) {
          ma += a(y, x);
          mb += b(y, x);
        }
      }
      ma /= n;
      mb /= n;
      double va = 0.0, vb = 0.0, cov = 0.0;
      for (int y = 0; y < window; ++y) {
        for (int x = 0; x < window; ++x) {
          const double da = a(y, x) - ma;
          const double db = b(y, x) - mb;
          va += da * da;
          vb += db * db;
          cov += da * db;
        }
      }
      va /= n;
      vb /= n;
      cov /= n;
      total += ((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
      ++tiles;
    }
  }
  return total / tiles;
}

QualityReport quality(const Clip& clean, const Clip& test) {
  if (clean.size() != test.size()) throw std::invalid_argument("quality: clips differ in length");
  QualityReport r;
  double psnr_sum = 0.0, ssim_sum = 0.0, mse_sum = 0.0;
  for (std::size_t t = 0; t < clean.size(); ++t) {
    QualityRow row{t, psnr(clean[t], test[t]), ssim(clean[t], test[t])};
    psnr_sum += row.psnr;
    ssim_sum += row.ssim;
    mse_sum += mse(clean[t], test[t]);
    r.rows.push_back(row);
  }
  const double n = static_cast<double>(clean.size());
  r.mean_psnr = psnr_sum / n;
  r.mean_ssim = ssim_sum / n;
  r.clip_psnr = mse_sum == 0.0 ? std::numeric_limits<double>::infinity() : 10.0 * std::log10(n / mse_sum);
  return r;
}

namespace {
std::string format_metric(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return format_double(v);
}
}  // namespace

std::string format_quality_report(const QualityReport& report) {
  std::ostringstream out;
  out << "frame_index,psnr,ssim\n";
  for (const QualityRow& r : report.rows) {
    out << r.frame << ',' << format_metric(r.psnr) << ',' << format_metric(r.ssim) << '\n';
  }
  out << "mean_psnr=" << format_metric(report.mean_psnr) << '\n';
  out << "mean_ssim=" << format_metric(report.mean_ssim) << '\n';
  out << "clip_psnr=" << format_metric(report.clip_psnr) << '\n';
  return out.str();
}

std::vector<BoxAnnotation> detect_blobs(const Frame& frame, double threshold, int min_area, int frame_index) {
  const Eigen::Index H = frame.height();
  const Eigen::Index W = frame.width();
  std::vector<char> seen(static_cast<std::size_t>(H * W), 0);
  std::vector<BoxAnnotation> out;
  std::deque<Eigen::Index> queue;
  int next_id = 0;
  for (Eigen::Index start = 0; start < H * W; ++start) {
    if (seen[static_cast<std::size_t>(start)] || frame.pixels().data()[start] < threshold) continue;
    seen[static_cast<std::size_t>(start)] = 1;
    queue.push_back(start);
    Eigen::Index x0 = W, y0 = H, x1 = -1, y1 = -1;
    int area = 0;
    while (!queue.empty()) {
      const Eigen::Index p = queue.front();
      queue.pop_front();
      const Eigen::Index y = p / W;
      const Eigen::Index x = p % W;
      ++area;
      x0 = std::min(x0, x);
      x1 = std::max(x1, x);
      y0 = std::min(y0, y);
      y1 = std::max(y1, y);
      const Eigen::Index nb[4][2] = {{y - 1, x}, {y + 1, x}, {y, x - 1}, {y, x + 1}};
      for (const auto& q : nb) {
        if (q[0] < 0 || q[0] >= H || q[1] < 0 || q[1] >= W) continue;
        const Eigen::Index idx = q[0] * W + q[1];
        if (seen[static_cast<std::size_t>(idx)] || frame.pixels().data()[idx] < threshold) continue;
        seen[static_cast<std::size_t>(idx)] = 1;
        queue.push_back(idx);
      }
    }
    if (area >= min_area) {
      out.push_back({frame_index, next_id++, static_cast<int>(x0), static_cast<int>(y0), static_cast<int>(x1 - x0 + 1),
                     static_cast<int>(y1 - y0 + 1)});
    }
  }
  return out;
}

double iou(const BoxAnnotation& a, const BoxAnnotation& b) {
  const int iw = std::min(a.right(), b.right()) - std::max(a.x, b.x);
  const int ih = std::min(a.bottom(), b.bottom()) - std::max(a.y, b.y);
  if (iw <= 0 || ih <= 0) return 0.0;
  const double inter = static_cast<double>(iw) * ih;
  const double uni = static_cast<double>(a.w) * a.h + static_cast<double>(b.w) * b.h - inter;
  return inter / uni;
}

double DetectionCounts::precision() const {
  const std::size_t d = true_positives + false_positives;
  return d == 0 ? 0.0 : static_cast<double>(true_positives) / static_cast<double>(d);
}

double DetectionCounts::recall() const {
  const std::size_t d = true_positives + false_negatives;
  return d == 0 ? 0.0 : static_cast<double>(true_positives) / static_cast<double>(d);
}

DetectionCounts& DetectionCounts::operator+=(const DetectionCounts& o) {
  true_positives += o.true_positives;
  false_positives += o.false_positives;
  false_negatives += o.false_negatives;
  return *this;
}

DetectionCounts match_detections(const std::vector<BoxAnnotation>& predicted,
                                 const std::vector<BoxAnnotation>& ground_truth, double iou_threshold) {
  struct Pair {
    double iou;
    std::size_t p;
    std::size_t g;
  };
  std::vector<Pair> pairs;
  for (std::size_t p = 0; p < predicted.size(); ++p) {
    for (std::size_t g = 0; g < ground_truth.size(); ++g) {
      const double v = iou(predicted[p], ground_truth[g]);
      if (v >= iou_threshold) pairs.push_back({v, p, g});
    }
  }
  std::stable_sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) { return a.iou > b.iou; });
  std::vector<char> used_p(predicted.size(), 0), used_g(ground_truth.size(), 0);
  DetectionCounts c;
  for (const Pair& pr : pairs) {
    if (used_p[pr.p] || used_g[pr.g]) continue;
    used_p[pr.p] = used_g[pr.g] = 1;
    ++c.true_positives;
  }
  c.false_positives = predicted.size() - c.true_positives;
  c.false_negatives = ground_truth.size() - c.true_positives;
  return c;
}

PrecisionRecall detection_pr(const std::vector<BoxAnnotation>& predicted,
                             const std::vector<BoxAnnotation>& ground_truth, double iou_threshold) {
  const DetectionCounts c = match_detections(predicted, ground_truth, iou_threshold);
  return {c.precision(), c.recall()};
}

DetectionCounts evaluate_detection(const Clip& clip, const std::vector<BoxAnnotation>& ground_truth, double threshold,
                                   int min_area, double iou_threshold) {
  std::vector<std::vector<BoxAnnotation>> per_frame(clip.size());
  for (const BoxAnnotation& b : ground_truth) {
    if (b.frame_index >= 0 && static_cast<std::size_t>(b.frame_index) < clip.size()) {
      per_frame[static_cast<std::size_t>(b.frame_index)].push_back(b);
    }
  }
  DetectionCounts total;
  for (std::size_t t = 0; t < clip.size(); ++t) {
    total += match_detections(detect_blobs(clip[t], threshold, min_area, static_cast<int>(t)), per_frame[t],
                              iou_threshold);
  }
  return total;
}

}  // namespace saved
