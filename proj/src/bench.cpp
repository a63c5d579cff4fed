#include "fruitgrasp/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "fruitgrasp/errors.hpp"
#include "fruitgrasp/rng.hpp"

namespace fruitgrasp::bench {
namespace {

const std::vector<FailureKind>& counted_failures() {
  static const std::vector<FailureKind> kinds{
      FailureKind::insufficient_points, FailureKind::degenerate_output,
      FailureKind::no_consensus,        FailureKind::empty_accumulator,
      FailureKind::degenerate_fit,      FailureKind::pose_out_of_range};
  return kinds;
}

std::string format3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

nlohmann::json row_to_json(const ReportRow& r) {
  nlohmann::json failures = nlohmann::json::object();
  for (const auto& [kind, count] : r.failures) failures[kind] = count;
  nlohmann::json j{{"method", r.method},
                   {"condition", r.condition},
                   {"count", r.count},
                   {"fitted", r.fitted},
                   {"posed", r.posed},
                   {"failures", std::move(failures)},
                   {"shape_accuracy", r.shape_accuracy},
                   {"orientation_success_rate", r.orientation_success_rate},
                   {"grasp_success_proxy", r.grasp_success_proxy}};
  j["mean_iou"] = r.mean_iou ? nlohmann::json(*r.mean_iou) : nlohmann::json(nullptr);
  j["mean_orientation_error_deg"] =
      r.mean_orientation_error_deg ? nlohmann::json(*r.mean_orientation_error_deg)
                                   : nlohmann::json(nullptr);
  return j;
}

ReportRow row_from_json(const nlohmann::json& j) {
  ReportRow r;
  r.method = j.at("method").get<std::string>();
  r.condition = j.at("condition").get<std::string>();
  r.count = j.at("count").get<int>();
  r.fitted = j.at("fitted").get<int>();
  r.posed = j.at("posed").get<int>();
  for (const auto& [key, value] : j.at("failures").items())
    r.failures.emplace_back(key, value.get<int>());
  r.shape_accuracy = j.at("shape_accuracy").get<double>();
  r.orientation_success_rate = j.at("orientation_success_rate").get<double>();
  r.grasp_success_proxy = j.at("grasp_success_proxy").get<double>();
  if (!j.at("mean_iou").is_null()) r.mean_iou = j.at("mean_iou").get<double>();
  if (!j.at("mean_orientation_error_deg").is_null())
    r.mean_orientation_error_deg = j.at("mean_orientation_error_deg").get<double>();
  return r;
}

/// One metric grid: methods down, conditions across.
void render_grid(std::ostringstream& out, const Report& report, const std::string& title,
                 const std::function<std::string(const ReportRow&)>& cell) {
  out << title << '\n';
  std::size_t name_w = 8;
  for (const auto& m : report.methods) name_w = std::max(name_w, m.size());

  auto cell_at = [&](const std::string& m, const std::string& c) -> std::string {
    const auto it = std::find_if(report.rows.begin(), report.rows.end(), [&](const ReportRow& r) {
      return r.method == m && r.condition == c;
    });
    return it == report.rows.end() ? "-" : cell(*it);
  };

  std::vector<std::size_t> col_w(report.conditions.size());
  for (std::size_t ci = 0; ci < report.conditions.size(); ++ci) {
    col_w[ci] = report.conditions[ci].size();
    for (const auto& m : report.methods)
      col_w[ci] = std::max(col_w[ci], cell_at(m, report.conditions[ci]).size());
  }

  out << std::string(name_w, ' ');
  for (std::size_t ci = 0; ci < report.conditions.size(); ++ci)
    out << "  " << std::string(col_w[ci] - report.conditions[ci].size(), ' ')
        << report.conditions[ci];
  out << '\n';
  for (const auto& m : report.methods) {
    out << m << std::string(name_w - m.size(), ' ');
    for (std::size_t ci = 0; ci < report.conditions.size(); ++ci) {
      const std::string v = cell_at(m, report.conditions[ci]);
      out << "  " << std::string(col_w[ci] - v.size(), ' ') << v;
    }
    out << '\n';
  }
  out << '\n';
}

}  // namespace

std::string_view to_string(Method m) {
  switch (m) {
    case Method::pointnet: return "pointnet";
    case Method::ransac: return "ransac";
    case Method::hough: return "hough";
  }
  return "pointnet";
}

Method method_from_string(std::string_view s) {
  for (Method m : all_methods())
    if (s == to_string(m)) return m;
  throw ParseError("unknown method: " + std::string(s));
}

const std::vector<Method>& all_methods() {
  static const std::vector<Method> all{Method::pointnet, Method::ransac, Method::hough};
  return all;
}

std::string_view to_string(FailureKind k) {
  switch (k) {
    case FailureKind::none: return "none";
    case FailureKind::insufficient_points: return "insufficient_points";
    case FailureKind::degenerate_output: return "degenerate_output";
    case FailureKind::no_consensus: return "no_consensus";
    case FailureKind::empty_accumulator: return "empty_accumulator";
    case FailureKind::degenerate_fit: return "degenerate_fit";
    case FailureKind::pose_out_of_range: return "pose_out_of_range";
  }
  return "none";
}

ReportRow evaluate(const std::vector<Prediction>& predictions,
                   const std::vector<GroundTruth>& truths, const EvalThresholds& thresholds) {
  if (predictions.size() != truths.size())
    throw ShapeMismatchError("evaluate: prediction/ground-truth length mismatch");
  ReportRow row;
  row.count = static_cast<int>(predictions.size());
  for (FailureKind k : counted_failures()) row.failures.emplace_back(std::string(to_string(k)), 0);

  double iou_sum = 0.0, orient_sum = 0.0;
  int shape_hits = 0, orient_hits = 0, proxy_hits = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const auto& pred = predictions[i];
    const auto& gt = truths[i];
    if (pred.failure != FailureKind::none) {
      for (auto& [kind, count] : row.failures)
        if (kind == to_string(pred.failure)) ++count;
    }
    double iou = 0.0;
    if (pred.sphere) {
      ++row.fitted;
      iou = geom::iou_3d(geom::sphere_aabb(*pred.sphere), geom::sphere_aabb(gt.sphere));
      iou_sum += iou;
      if (iou >= thresholds.iou) ++shape_hits;
    }
    if (pred.pose) {
      ++row.posed;
      geom::GraspPose gt_pose;
      gt_pose.position = gt.sphere.center;
      gt_pose.theta = gt.theta;
      gt_pose.phi = gt.phi;
      const double err = geom::orientation_error_deg(*pred.pose, gt_pose);
      orient_sum += err;
      if (err <= thresholds.orientation_deg) {
        ++orient_hits;
        if (iou >= thresholds.iou) ++proxy_hits;
      }
    }
  }
  const double n = static_cast<double>(row.count);
  row.shape_accuracy = n > 0 ? static_cast<double>(shape_hits) / n : 0.0;
  row.orientation_success_rate = n > 0 ? static_cast<double>(orient_hits) / n : 0.0;
  row.grasp_success_proxy = n > 0 ? static_cast<double>(proxy_hits) / n : 0.0;
  if (row.fitted > 0) row.mean_iou = iou_sum / row.fitted;
  if (row.posed > 0) row.mean_orientation_error_deg = orient_sum / row.posed;
  return row;
}

Prediction run_method(Method method, nn::RegressorModel* model,
                      const std::vector<geom::Point3>& cloud, const AppConfig& cfg,
                      std::uint64_t cloud_seed) {
  Prediction pred;
  try {
    switch (method) {
      case Method::pointnet: {
        if (!model) throw ConfigError("pointnet method requires a checkpoint");
        est::PointnetConfig pcfg;
        pcfg.norm = cfg.norm;
        pcfg.pre = cfg.preprocess;
        pcfg.radius_floor = cfg.radius_floor;
        std::mt19937_64 rng(cloud_seed);
        const auto est = est::pointnet_estimate(*model, cloud, pcfg, rng);
        pred.sphere = est.sphere;
        pred.pose = est.pose;
        break;
      }
      case Method::ransac:
      case Method::hough: {
        // classical fitters consume the conditioned cloud without the fixed
        // 200-point cap
        const auto filtered = prep::reject_outliers(cloud, cfg.preprocess.outlier_multiplier,
                                                    cfg.preprocess.outlier_passes);
        const auto voxeled = prep::voxel_downsample(filtered, cfg.preprocess.voxel_resolution);
        geom::SphereModel sphere;
        if (method == Method::ransac) {
          est::RansacConfig rcfg = cfg.ransac;
          rcfg.seed = cloud_seed;
          sphere = est::ransac_fit(voxeled, rcfg);
        } else {
          sphere = est::hough_fit(voxeled, cfg.hough);
        }
        pred.sphere = sphere;
        try {
          pred.pose = est::grasp_from_sphere(sphere, voxeled);
        } catch (const OutOfRangeError&) {
          pred.failure = FailureKind::pose_out_of_range;
        } catch (const DegenerateError&) {
          pred.failure = FailureKind::pose_out_of_range;
        }
        break;
      }
    }
  } catch (const InsufficientPointsError&) {
    pred.failure = FailureKind::insufficient_points;
  } catch (const TooFewPointsError&) {
    pred.failure = FailureKind::insufficient_points;
  } catch (const DegenerateOutputError&) {
    pred.failure = FailureKind::degenerate_output;
  } catch (const NoConsensusError&) {
    pred.failure = FailureKind::no_consensus;
  } catch (const EmptyAccumulatorError&) {
    pred.failure = FailureKind::empty_accumulator;
  } catch (const DegenerateError&) {
    pred.failure = FailureKind::degenerate_fit;
  }
  return pred;
}

Report run_suite(const std::vector<synth::LabeledSample>& test_samples,
                 const std::vector<Method>& methods,
                 const std::vector<synth::Condition>& conditions, nn::RegressorModel* model,
                 const AppConfig& cfg, std::uint64_t seed) {
  if (test_samples.empty()) throw EmptyDatasetError("run_suite: empty test set");
  Report report;
  report.seed = seed;
  report.thresholds = cfg.eval;
  for (Method m : methods) report.methods.emplace_back(to_string(m));
  for (synth::Condition c : conditions) report.conditions.emplace_back(synth::to_string(c));
  report.success_note =
      "grasp_success_proxy = orientation error <= threshold AND IoU3D >= threshold; "
      "physical gripper execution is not simulated";

  std::vector<GroundTruth> truths;
  truths.reserve(test_samples.size());
  for (const auto& s : test_samples) truths.push_back({s.sphere, s.theta, s.phi});

  for (std::size_t ci = 0; ci < conditions.size(); ++ci) {
    // corrupt once per condition; every method sees the same corrupted clouds
    std::vector<std::vector<geom::Point3>> clouds;
    clouds.reserve(test_samples.size());
    for (std::size_t si = 0; si < test_samples.size(); ++si) {
      std::mt19937_64 rng(derive_seed(seed, ci + 1, si));
      clouds.push_back(corrupt(test_samples[si], cfg.gen, conditions[ci], rng).points);
    }
    for (std::size_t mi = 0; mi < methods.size(); ++mi) {
      std::vector<Prediction> preds;
      preds.reserve(clouds.size());
      for (std::size_t si = 0; si < clouds.size(); ++si)
        preds.push_back(run_method(methods[mi], model, clouds[si], cfg,
                                   derive_seed(seed, (mi + 1) * 1000 + ci, si)));
      ReportRow row = evaluate(preds, truths, cfg.eval);
      row.method = to_string(methods[mi]);
      row.condition = synth::to_string(conditions[ci]);
      report.rows.push_back(std::move(row));
    }
  }
  return report;
}

std::string render_text(const Report& report) {
  std::ostringstream out;
  out << "seed: " << report.seed << "  iou_threshold: " << format3(report.thresholds.iou)
      << "  orientation_threshold_deg: " << format3(report.thresholds.orientation_deg) << "\n\n";
  render_grid(out, report, "shape accuracy (fraction IoU3D >= threshold)",
              [](const ReportRow& r) { return format3(r.shape_accuracy); });
  render_grid(out, report, "mean IoU3D (over fitted)", [](const ReportRow& r) {
    return r.mean_iou ? format3(*r.mean_iou) : std::string("-");
  });
  render_grid(out, report, "mean orientation error (deg, over posed)", [](const ReportRow& r) {
    return r.mean_orientation_error_deg ? format3(*r.mean_orientation_error_deg)
                                        : std::string("-");
  });
  render_grid(out, report, "orientation success rate (error <= threshold)",
              [](const ReportRow& r) { return format3(r.orientation_success_rate); });
  render_grid(out, report, "grasp success proxy (orientation AND IoU gates)",
              [](const ReportRow& r) { return format3(r.grasp_success_proxy); });
  render_grid(out, report, "failures / count", [](const ReportRow& r) {
    int fails = 0;
    for (const auto& [kind, count] : r.failures) fails += count;
    return std::to_string(fails) + "/" + std::to_string(r.count);
  });
  if (!report.success_note.empty()) out << "note: " << report.success_note << '\n';
  return out.str();
}

nlohmann::json render_structured(const Report& report) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : report.rows) rows.push_back(row_to_json(r));
  return {{"schema", "fruitgrasp-report-v1"},
          {"seed", report.seed},
          {"thresholds",
           {{"iou", report.thresholds.iou},
            {"orientation_deg", report.thresholds.orientation_deg}}},
          {"methods", report.methods},
          {"conditions", report.conditions},
          {"rows", std::move(rows)},
          {"success_note", report.success_note}};
}

void save_report(const Report& report, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << render_structured(report).dump(1) << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

Report load_report(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open for reading: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("report: ") + e.what());
  }
  if (j.value("schema", "") != "fruitgrasp-report-v1")
    throw ParseError("report: unknown schema tag");
  Report report;
  report.seed = j.at("seed").get<std::uint64_t>();
  report.thresholds.iou = j.at("thresholds").at("iou").get<double>();
  report.thresholds.orientation_deg = j.at("thresholds").at("orientation_deg").get<double>();
  report.methods = j.at("methods").get<std::vector<std::string>>();
  report.conditions = j.at("conditions").get<std::vector<std::string>>();
  for (const auto& r : j.at("rows")) report.rows.push_back(row_from_json(r));
  report.success_note = j.value("success_note", "");
  return report;
}

TimingStats timing_probe(const std::function<void(const std::vector<geom::Point3>&)>& fn,
                         const std::vector<synth::LabeledSample>& samples, int repetitions) {
  TimingStats stats;
  if (repetitions <= 0 || samples.empty()) return stats;
  for (const auto& s : samples) fn(s.points);  // warm-up pass, untimed

  std::vector<double> ms;
  ms.reserve(samples.size() * static_cast<std::size_t>(repetitions));
  for (int rep = 0; rep < repetitions; ++rep) {
    for (const auto& s : samples) {
      const auto t0 = std::chrono::steady_clock::now();
      fn(s.points);
      const auto t1 = std::chrono::steady_clock::now();
      ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
    }
  }
  std::sort(ms.begin(), ms.end());
  stats.count = static_cast<int>(ms.size());
  double sum = 0.0;
  for (double v : ms) sum += v;
  stats.mean_ms = sum / static_cast<double>(ms.size());
  stats.median_ms = ms[ms.size() / 2];
  stats.p95_ms = ms[std::min(ms.size() - 1, static_cast<std::size_t>(
                                                std::floor(0.95 * static_cast<double>(ms.size()))))];
  return stats;
}

PreparedSet prepare_training_set(const std::vector<synth::LabeledSample>& samples,
                                 const AppConfig& cfg, bool with_augmentation,
                                 std::uint64_t seed) {
  PreparedSet out;
  for (std::size_t si = 0; si < samples.size(); ++si) {
    const auto& base = samples[si];
    const int copies = with_augmentation ? cfg.train.augment_copies : 0;
    for (int c = 0; c <= copies; ++c) {
      std::mt19937_64 rng(derive_seed(seed, si, static_cast<std::uint64_t>(c)));
      synth::LabeledSample variant = base;
      if (c > 0) {
        variant = synth::augment(variant, cfg.augment, rng);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        if (u(rng) < cfg.train.augment_noise_prob) {
          synth::GenConfig noisy_gen = cfg.gen;
          std::uniform_real_distribution<double> sigma(cfg.train.augment_noise_sigma_min,
                                                       cfg.train.augment_noise_sigma_max);
          noisy_gen.noise_sigma = sigma(rng);
          variant = synth::corrupt(variant, noisy_gen, synth::Condition::noise, rng);
        }
        if (u(rng) < cfg.train.augment_outlier_prob)
          variant = synth::corrupt(variant, cfg.gen, synth::Condition::outlier, rng);
      }
      try {
        const auto centered = prep::run_pipeline(variant.points, cfg.preprocess, rng);
        const auto united = geom::normalize_label(centered.centroid, variant.sphere,
                                                  variant.theta, variant.phi, cfg.norm);
        nn::TrainSample ts;
        ts.points.reserve(centered.points.size() * 3);
        for (const auto& p : centered.points) {
          ts.points.push_back(p.x);
          ts.points.push_back(p.y);
          ts.points.push_back(p.z);
        }
        ts.target = {united.x, united.y, united.z, united.r, united.theta, united.phi};
        out.samples.push_back(std::move(ts));
      } catch (const InsufficientPointsError&) {
        ++out.skipped;
      } catch (const TooFewPointsError&) {
        ++out.skipped;
      }
    }
  }
  return out;
}

}  // namespace fruitgrasp::bench
