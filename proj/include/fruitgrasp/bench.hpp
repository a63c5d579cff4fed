#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "fruitgrasp/config.hpp"

namespace fruitgrasp::bench {

enum class Method { pointnet, ransac, hough };

std::string_view to_string(Method m);
Method method_from_string(std::string_view s);
const std::vector<Method>& all_methods();

enum class FailureKind {
  none,
  insufficient_points,
  degenerate_output,
  no_consensus,
  empty_accumulator,
  degenerate_fit,
  pose_out_of_range,
};

std::string_view to_string(FailureKind k);

/// Outcome of one estimator run on one cloud. A failed sphere fit carries no
/// sphere; a valid sphere whose grasp rule left the angle range keeps its
/// sphere but has no pose.
struct Prediction {
  FailureKind failure = FailureKind::none;
  std::optional<geom::SphereModel> sphere;
  std::optional<geom::GraspPose> pose;
};

struct GroundTruth {
  geom::SphereModel sphere;
  double theta = 0.0;
  double phi = 0.0;
};

/// One (method x condition) row of the evaluation report. Failures count as
/// misses for the accuracy and success-rate fractions and are excluded from
/// the mean-error averages, which are absent when nothing succeeded.
struct ReportRow {
  std::string method;
  std::string condition;
  int count = 0;
  int fitted = 0;  // predictions that produced a sphere
  int posed = 0;   // predictions that produced a grasp pose
  std::vector<std::pair<std::string, int>> failures;  // kind -> count, fixed order
  double shape_accuracy = 0.0;
  std::optional<double> mean_iou;
  std::optional<double> mean_orientation_error_deg;
  double orientation_success_rate = 0.0;
  double grasp_success_proxy = 0.0;  // orientation success gated on the IoU threshold
};

ReportRow evaluate(const std::vector<Prediction>& predictions,
                   const std::vector<GroundTruth>& truths, const EvalThresholds& thresholds);

struct Report {
  std::uint64_t seed = 0;
  EvalThresholds thresholds;
  std::vector<std::string> methods;
  std::vector<std::string> conditions;
  std::vector<ReportRow> rows;
  // Note carried into every rendered report: grasp success is a proxy
  // (orientation threshold plus IoU gate), not a physical grasp.
  std::string success_note;
};

/// Run one estimator over one cloud, mapping every counted failure type.
Prediction run_method(Method method, nn::RegressorModel* model, const std::vector<geom::Point3>& cloud,
                      const AppConfig& cfg, std::uint64_t cloud_seed);

/// The condition-matrix suite: corrupt the test samples per condition with
/// seeds derived from (seed, condition, sample), run every method through its
/// full pipeline, and aggregate one row per (method x condition).
/// Deterministic given (samples, checkpoint, seed).
Report run_suite(const std::vector<synth::LabeledSample>& test_samples,
                 const std::vector<Method>& methods, const std::vector<synth::Condition>& conditions,
                 nn::RegressorModel* model, const AppConfig& cfg, std::uint64_t seed);

/// Aligned text tables (3 decimals), mirroring the shape-accuracy,
/// orientation-error and success-rate summaries.
std::string render_text(const Report& report);

/// Full-precision structured form; serializing it twice from the same report
/// is byte-identical.
nlohmann::json render_structured(const Report& report);

void save_report(const Report& report, const std::filesystem::path& path);
Report load_report(const std::filesystem::path& path);

struct TimingStats {
  int count = 0;
  double mean_ms = 0.0;
  double median_ms = 0.0;
  double p95_ms = 0.0;
};

/// Wall-clock per-cloud latency of `fn` over `repetitions` passes of the
/// dataset, after one untimed warm-up pass. repetitions <= 0 yields empty
/// stats.
TimingStats timing_probe(const std::function<void(const std::vector<geom::Point3>&)>& fn,
                         const std::vector<synth::LabeledSample>& samples, int repetitions);

/// Expand labeled samples into preprocessed training tensors following the
/// training recipe: per sample, the clean cloud plus `augment_copies`
/// augmented variants (random similarity transform, then noise / outliers
/// with the configured probabilities). Samples that fall below the fixed
/// point count are skipped and counted.
struct PreparedSet {
  std::vector<nn::TrainSample> samples;
  int skipped = 0;
};
PreparedSet prepare_training_set(const std::vector<synth::LabeledSample>& samples,
                                 const AppConfig& cfg, bool with_augmentation, std::uint64_t seed);

}  // namespace fruitgrasp::bench
