#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "saved/types.hpp"

namespace saved {

/// Uniform-bin intensity density over [0,1] with additive smoothing.
struct Histogram {
  std::vector<double> mass;
  std::size_t bins() const { return mass.size(); }
};

inline constexpr double kHistogramSmoothing = 1e-8;
inline constexpr std::size_t kDefaultBins = 256;

/// Bin index of intensity v among `bins` uniform bins; 1.0 lands in the last bin.
std::size_t histogram_bin(double v, std::size_t bins);

/// Density of the pixels inside `box`: counts/n + eps per bin, renormalised.
Histogram pixel_histogram(const Frame& frame, const BoxAnnotation& box, std::size_t bins = kDefaultBins,
                          double smoothing = kHistogramSmoothing);
Histogram make_histogram(const std::vector<double>& counts, double smoothing = kHistogramSmoothing);

/// sum p_i ln(p_i / q_i), in nats.
double kl_divergence(const Histogram& p, const Histogram& q);

/// Nearest frame to the box's own frame (earlier on ties) where no
/// annotation overlaps the box; nullopt when every frame is occupied.
std::optional<std::size_t> find_background_frame(std::size_t clip_length, const std::vector<BoxAnnotation>& boxes,
                                                 const BoxAnnotation& box);

struct FbdRow {
  std::size_t box_index = 0;  // position in the (sorted) annotation list
  int frame = 0;
  std::size_t background_frame = 0;
  double kl = 0.0;
};

struct FbdReport {
  std::vector<FbdRow> rows;
  double mean = 0.0;
  std::size_t evaluated = 0;
  std::size_t skipped = 0;
};

/// Foreground-to-background divergence averaged over all evaluable boxes.
/// Annotations are processed in (frame, y, x, h, w) order, so the result
/// does not depend on file order or object ids.
/// Throws std::invalid_argument when no box can be evaluated.
FbdReport fbd(const Clip& clip, const std::vector<BoxAnnotation>& boxes, std::size_t bins = kDefaultBins);

/// `box_index,frame,kl` rows then `mean_fbd=<value>`.
std::string format_fbd_report(const FbdReport& report);

double mse(const Frame& a, const Frame& b);
/// 10 log10(1/MSE); +inf for identical frames.
double psnr(const Frame& clean, const Frame& test);
/// Mean SSIM over non-overlapping window x window tiles.
double ssim(const Frame& clean, const Frame& test, int window = 8, double k1 = 0.01, double k2 = 0.03);

struct QualityRow {
  std::size_t frame = 0;
  double psnr = 0.0;
  double ssim = 0.0;
};
struct QualityReport {
  std::vector<QualityRow> rows;
  double mean_psnr = 0.0;  // mean of per-frame values (inf if any frame is exact)
  double mean_ssim = 0.0;
  double clip_psnr = 0.0;  // from the MSE pooled over the whole clip
};
QualityReport quality(const Clip& clean, const Clip& test);
/// `frame_index,psnr,ssim` rows then `mean_psnr=`, `mean_ssim=`, `clip_psnr=` lines.
std::string format_quality_report(const QualityReport& report);

/// Tight boxes of the 4-connected components of {v >= threshold} with at
/// least `min_area` pixels, in raster order of each component's first pixel.
std::vector<BoxAnnotation> detect_blobs(const Frame& frame, double threshold, int min_area, int frame_index = 0);

double iou(const BoxAnnotation& a, const BoxAnnotation& b);

struct DetectionCounts {
  std::size_t true_positives = 0;
  std::size_t false_positives = 0;
  std::size_t false_negatives = 0;

  /// 0 when there are no predictions.
  double precision() const;
  /// 0 when there is no ground truth.
  double recall() const;
  DetectionCounts& operator+=(const DetectionCounts& o);
};

/// Greedy one-to-one matching by descending IoU (ties: prediction order,
/// then ground-truth order); pairs below `iou_threshold` never match.
DetectionCounts match_detections(const std::vector<BoxAnnotation>& predicted,
                                 const std::vector<BoxAnnotation>& ground_truth, double iou_threshold = 0.5);

struct PrecisionRecall {
  double precision = 0.0;
  double recall = 0.0;
};
PrecisionRecall detection_pr(const std::vector<BoxAnnotation>& predicted,
                             const std::vector<BoxAnnotation>& ground_truth, double iou_threshold = 0.5);

/// Runs detect_blobs on every frame and matches per frame against the
/// annotations of that frame; counts are summed over the clip.
DetectionCounts evaluate_detection(const Clip& clip, const std::vector<BoxAnnotation>& ground_truth, double threshold,
                                   int min_area, double iou_threshold = 0.5);

}  // namespace saved
