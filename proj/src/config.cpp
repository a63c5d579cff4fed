#include "fruitgrasp/config.hpp"

#include <fstream>

#include "fruitgrasp/errors.hpp"

namespace fruitgrasp {
namespace {

template <typename T>
void get_if_present(const nlohmann::json& j, const char* key, T& out) {
  if (const auto it = j.find(key); it != j.end()) out = it->get<T>();
}

}  // namespace

void apply_config_json(AppConfig& cfg, const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config: top level must be an object");
  if (const auto it = j.find("gen"); it != j.end()) {
    const auto& g = *it;
    get_if_present(g, "radius_min", cfg.gen.radius_min);
    get_if_present(g, "radius_max", cfg.gen.radius_max);
    get_if_present(g, "points_per_fruit", cfg.gen.points_per_fruit);
    get_if_present(g, "noise_sigma", cfg.gen.noise_sigma);
    get_if_present(g, "outlier_fraction_min", cfg.gen.outlier_fraction_min);
    get_if_present(g, "outlier_fraction_max", cfg.gen.outlier_fraction_max);
    get_if_present(g, "clutter_neighbors_min", cfg.gen.clutter_neighbors_min);
    get_if_present(g, "clutter_neighbors_max", cfg.gen.clutter_neighbors_max);
    get_if_present(g, "camera_distance_min", cfg.gen.camera_distance_min);
    get_if_present(g, "camera_distance_max", cfg.gen.camera_distance_max);
    if (cfg.gen.radius_min <= 0.0 || cfg.gen.radius_max < cfg.gen.radius_min ||
        cfg.gen.points_per_fruit < 1 || cfg.gen.camera_distance_min <= 0.0 ||
        cfg.gen.camera_distance_max < cfg.gen.camera_distance_min)
      throw ConfigError("config: invalid gen ranges");
  }
  if (const auto it = j.find("augment"); it != j.end()) {
    const auto& a = *it;
    get_if_present(a, "scale_min", cfg.augment.scale_min);
    get_if_present(a, "scale_max", cfg.augment.scale_max);
    get_if_present(a, "translation", cfg.augment.translation);
    get_if_present(a, "rotation_deg", cfg.augment.rotation_deg);
  }
  if (const auto it = j.find("normalization"); it != j.end()) {
    get_if_present(*it, "scale", cfg.norm.scale);
    if (cfg.norm.scale <= 0.0) throw ConfigError("config: normalization scale must be positive");
  }
  if (const auto it = j.find("preprocess"); it != j.end()) {
    const auto& p = *it;
    get_if_present(p, "outlier_multiplier", cfg.preprocess.outlier_multiplier);
    get_if_present(p, "outlier_passes", cfg.preprocess.outlier_passes);
    get_if_present(p, "voxel_resolution", cfg.preprocess.voxel_resolution);
    get_if_present(p, "sample_points", cfg.preprocess.sample_points);
    if (cfg.preprocess.voxel_resolution <= 0.0 || cfg.preprocess.sample_points < 1)
      throw ConfigError("config: invalid preprocess values");
  }
  if (const auto it = j.find("ransac"); it != j.end()) {
    const auto& r = *it;
    get_if_present(r, "iterations", cfg.ransac.iterations);
    get_if_present(r, "inlier_threshold", cfg.ransac.inlier_threshold);
    get_if_present(r, "min_inlier_fraction", cfg.ransac.min_inlier_fraction);
    get_if_present(r, "radius_min", cfg.ransac.radius_min);
    get_if_present(r, "radius_max", cfg.ransac.radius_max);
    get_if_present(r, "seed", cfg.ransac.seed);
    if (cfg.ransac.iterations < 1 || cfg.ransac.inlier_threshold <= 0.0)
      throw ConfigError("config: invalid ransac values");
  }
  if (const auto it = j.find("hough"); it != j.end()) {
    const auto& h = *it;
    get_if_present(h, "center_bin", cfg.hough.center_bin);
    get_if_present(h, "radius_bin", cfg.hough.radius_bin);
    get_if_present(h, "radius_min", cfg.hough.radius_min);
    get_if_present(h, "radius_max", cfg.hough.radius_max);
    get_if_present(h, "directions", cfg.hough.directions);
    if (cfg.hough.center_bin <= 0.0 || cfg.hough.radius_bin <= 0.0 || cfg.hough.directions < 1)
      throw ConfigError("config: invalid hough values");
  }
  if (const auto it = j.find("eval"); it != j.end()) {
    get_if_present(*it, "iou_threshold", cfg.eval.iou);
    get_if_present(*it, "orientation_threshold_deg", cfg.eval.orientation_deg);
    if (cfg.eval.iou <= 0.0 || cfg.eval.orientation_deg <= 0.0)
      throw ConfigError("config: thresholds must be positive");
  }
  if (const auto it = j.find("model"); it != j.end()) {
    const auto& m = *it;
    get_if_present(m, "encoder_widths", cfg.model.encoder_widths);
    get_if_present(m, "head_widths", cfg.model.head_widths);
    get_if_present(m, "dropout", cfg.model.dropout);
    get_if_present(m, "batchnorm", cfg.model.batchnorm);
    get_if_present(m, "bn_momentum", cfg.model.bn_momentum);
    get_if_present(m, "bn_epsilon", cfg.model.bn_epsilon);
  }
  if (const auto it = j.find("train"); it != j.end()) {
    const auto& t = *it;
    get_if_present(t, "epochs", cfg.train.epochs);
    get_if_present(t, "batch_size", cfg.train.batch_size);
    get_if_present(t, "learning_rate", cfg.train.adam.learning_rate);
    get_if_present(t, "lr_decay", cfg.train.adam.decay);
    get_if_present(t, "augment_copies", cfg.train.augment_copies);
    get_if_present(t, "augment_noise_prob", cfg.train.augment_noise_prob);
    get_if_present(t, "augment_noise_sigma_min", cfg.train.augment_noise_sigma_min);
    get_if_present(t, "augment_noise_sigma_max", cfg.train.augment_noise_sigma_max);
    get_if_present(t, "augment_outlier_prob", cfg.train.augment_outlier_prob);
  }
  if (const auto it = j.find("estimate"); it != j.end()) {
    get_if_present(*it, "radius_floor", cfg.radius_floor);
  }
}

AppConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  AppConfig cfg;
  apply_config_json(cfg, j);
  return cfg;
}

nlohmann::json config_to_json(const AppConfig& cfg) {
  return {
      {"gen",
       {{"radius_min", cfg.gen.radius_min},
        {"radius_max", cfg.gen.radius_max},
        {"points_per_fruit", cfg.gen.points_per_fruit},
        {"noise_sigma", cfg.gen.noise_sigma},
        {"outlier_fraction_min", cfg.gen.outlier_fraction_min},
        {"outlier_fraction_max", cfg.gen.outlier_fraction_max},
        {"clutter_neighbors_min", cfg.gen.clutter_neighbors_min},
        {"clutter_neighbors_max", cfg.gen.clutter_neighbors_max},
        {"camera_distance_min", cfg.gen.camera_distance_min},
        {"camera_distance_max", cfg.gen.camera_distance_max}}},
      {"augment",
       {{"scale_min", cfg.augment.scale_min},
        {"scale_max", cfg.augment.scale_max},
        {"translation", cfg.augment.translation},
        {"rotation_deg", cfg.augment.rotation_deg}}},
      {"normalization", {{"scale", cfg.norm.scale}}},
      {"preprocess",
       {{"outlier_multiplier", cfg.preprocess.outlier_multiplier},
        {"outlier_passes", cfg.preprocess.outlier_passes},
        {"voxel_resolution", cfg.preprocess.voxel_resolution},
        {"sample_points", cfg.preprocess.sample_points}}},
      {"ransac",
       {{"iterations", cfg.ransac.iterations},
        {"inlier_threshold", cfg.ransac.inlier_threshold},
        {"min_inlier_fraction", cfg.ransac.min_inlier_fraction},
        {"radius_min", cfg.ransac.radius_min},
        {"radius_max", cfg.ransac.radius_max},
        {"seed", cfg.ransac.seed}}},
      {"hough",
       {{"center_bin", cfg.hough.center_bin},
        {"radius_bin", cfg.hough.radius_bin},
        {"radius_min", cfg.hough.radius_min},
        {"radius_max", cfg.hough.radius_max},
        {"directions", cfg.hough.directions}}},
      {"eval",
       {{"iou_threshold", cfg.eval.iou},
        {"orientation_threshold_deg", cfg.eval.orientation_deg}}},
      {"model",
       {{"encoder_widths", cfg.model.encoder_widths},
        {"head_widths", cfg.model.head_widths},
        {"dropout", cfg.model.dropout},
        {"batchnorm", cfg.model.batchnorm},
        {"bn_momentum", cfg.model.bn_momentum},
        {"bn_epsilon", cfg.model.bn_epsilon}}},
      {"train",
       {{"epochs", cfg.train.epochs},
        {"batch_size", cfg.train.batch_size},
        {"learning_rate", cfg.train.adam.learning_rate},
        {"lr_decay", cfg.train.adam.decay},
        {"augment_copies", cfg.train.augment_copies},
        {"augment_noise_prob", cfg.train.augment_noise_prob},
        {"augment_noise_sigma_min", cfg.train.augment_noise_sigma_min},
        {"augment_noise_sigma_max", cfg.train.augment_noise_sigma_max},
        {"augment_outlier_prob", cfg.train.augment_outlier_prob}}},
      {"estimate", {{"radius_floor", cfg.radius_floor}}}};
}

}  // namespace fruitgrasp
