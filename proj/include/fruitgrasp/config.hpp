#pragma once

#include <filesystem>

#include "json.hpp"

#include "fruitgrasp/estimators.hpp"
#include "fruitgrasp/geometry.hpp"
#include "fruitgrasp/preprocess.hpp"
#include "fruitgrasp/synthgen.hpp"
#include "fruitgrasp/tinynn.hpp"

namespace fruitgrasp {

struct EvalThresholds {
  double iou = 0.75;
  double orientation_deg = 8.0;
};

struct TrainConfig {
  int epochs = 100;
  int batch_size = 32;
  nn::AdamConfig adam;         // learning_rate 1e-4, decay 0.6 per epoch
  int augment_copies = 2;      // augmented variants added per training sample
  double augment_noise_prob = 0.5;
  // training-time noise sigma is drawn per copy from this range; kept
  // separate from gen.noise_sigma, which defines the benchmark corruption
  double augment_noise_sigma_min = 0.005;
  double augment_noise_sigma_max = 0.02;
  double augment_outlier_prob = 0.5;
};

/// Everything the CLI and benchmark can configure, with the defaults the
/// rest of the library uses. A config file is a JSON object with any subset
/// of the sections; present keys override defaults.
struct AppConfig {
  synth::GenConfig gen;
  synth::AugmentConfig augment;
  geom::NormalizationConfig norm;
  prep::PreprocessConfig preprocess;
  est::RansacConfig ransac;
  est::HoughConfig hough;
  EvalThresholds eval;
  nn::ModelConfig model;
  TrainConfig train;
  double radius_floor = 0.01;  // degenerate-output filter for the learned estimator
};

AppConfig load_config(const std::filesystem::path& path);
void apply_config_json(AppConfig& cfg, const nlohmann::json& j);
nlohmann::json config_to_json(const AppConfig& cfg);

}  // namespace fruitgrasp
