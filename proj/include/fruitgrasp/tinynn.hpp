#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <random>
#include <vector>

#include "json.hpp"

namespace fruitgrasp::nn {

/// Dense row-major numeric buffer; shape is (batch, points, channels) for
/// clouds and (batch, features) for everything downstream. 64-bit floats
/// throughout so gradients can be checked against finite differences.
struct Tensor {
  std::vector<std::int64_t> shape;
  std::vector<double> data;

  std::int64_t numel() const {
    std::int64_t n = 1;
    for (auto d : shape) n *= d;
    return n;
  }
  static Tensor zeros(std::vector<std::int64_t> shape);
};

struct ModelConfig {
  std::vector<int> encoder_widths{64, 128, 256};  // shared per-point encoder
  std::vector<int> head_widths{128, 64, 6};       // MLP head; last must be 6
  double dropout = 0.3;                           // head hidden layers only
  bool batchnorm = true;
  double bn_momentum = 0.9;
  double bn_epsilon = 1e-5;
};

struct DenseLayer {
  int in = 0, out = 0;
  std::vector<double> w;  // out x in, row-major
  std::vector<double> b;
  std::vector<double> gw, gb;
};

struct BatchNorm {
  int ch = 0;
  std::vector<double> gamma, beta;
  std::vector<double> running_mean, running_var;
  std::vector<double> ggamma, gbeta;
};

/// PointNet-style regressor: a shared per-point encoder, channel-wise max
/// pooling as the symmetric aggregation, and an MLP head emitting the six
/// raw outputs (pre-activation united parameters).
struct RegressorModel {
  ModelConfig cfg;
  std::vector<DenseLayer> encoder;
  std::vector<BatchNorm> encoder_bn;  // one per encoder layer
  std::vector<DenseLayer> head;
  std::vector<BatchNorm> head_bn;  // one per hidden head layer (none on the output layer)
  bool training = false;

  static RegressorModel init(const ModelConfig& cfg, std::mt19937_64& rng);

  struct ParamRef {
    double* value;
    double* grad;
    std::size_t n;
  };
  /// All trainable parameter blocks in a canonical, stable order.
  std::vector<ParamRef> params();
  void zero_grads();
};

struct BnCache {
  std::vector<double> xhat;
  std::vector<double> inv_std;
};

struct ForwardCache {
  std::int64_t batch = 0, points = 0;
  std::vector<std::vector<double>> enc_act;   // enc_act[0] is the flattened input
  std::vector<BnCache> enc_bn;
  std::vector<std::int32_t> pool_arg;         // batch x C absolute row index into encoder rows
  std::vector<std::vector<double>> head_act;  // head_act[0] is the pooled global feature
  std::vector<BnCache> head_bn;
  std::vector<std::vector<double>> head_dropmask;
  std::vector<double> raw;  // batch x 6
};

/// Forward pass over a (B, N, 3) batch of centered clouds; returns the raw
/// (B, 6) outputs. In training mode batch statistics are used, dropout is
/// active (rng required) and `cache` retains everything backward needs. In
/// inference mode running statistics are used and outputs are invariant to
/// point order, bitwise.
Tensor forward(RegressorModel& model, const Tensor& batch, ForwardCache* cache = nullptr,
               std::mt19937_64* rng = nullptr);

/// Mean over the batch of the summed squared error between the activated
/// outputs and the six united-parameter targets. Fills the model's gradient
/// buffers by exact backpropagation; returns the loss.
double loss_and_gradients(RegressorModel& model, const Tensor& batch, const Tensor& targets,
                          std::mt19937_64& rng);

/// Loss only (inference mode, no dropout, running statistics); for validation.
double evaluate_loss(RegressorModel& model, const Tensor& batch, const Tensor& targets);

struct AdamConfig {
  double learning_rate = 1e-4;
  double decay = 0.6;  // learning-rate multiplier applied per epoch
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamConfig cfg;
  std::int64_t step = 0;
  int epoch = 0;  // effective lr = learning_rate * decay^epoch
  std::vector<std::vector<double>> m, v;

  static AdamState init(RegressorModel& model, const AdamConfig& cfg);
  double effective_lr() const;
};

/// One Adam update with bias correction from the gradients currently stored
/// in the model.
void adam_step(RegressorModel& model, AdamState& state);

struct TrainSample {
  std::vector<double> points;     // N x 3, centered
  std::array<double, 6> target;   // united parameters
};

struct TrainResult {
  std::vector<double> train_loss;
  std::vector<double> val_loss;
};

/// Shuffled mini-batch training with dropout and batch-norm statistics
/// updates; deterministic given the rng seed. Throws EmptyDatasetError on an
/// empty training set.
TrainResult train(RegressorModel& model, const std::vector<TrainSample>& train_set,
                  const std::vector<TrainSample>& val_set, int epochs, int batch_size,
                  const AdamConfig& adam, std::mt19937_64& rng);

/// Convenience single-cloud inference: raw outputs for one centered cloud.
std::array<double, 6> predict_raw(RegressorModel& model, const std::vector<double>& points_xyz);

/// Checkpoint: layer shapes, parameters, batch-norm running statistics and
/// the caller's provenance block. Loading validates every shape and fails
/// loudly on mismatch.
void save_checkpoint(const RegressorModel& model, const std::filesystem::path& path,
                     const nlohmann::json& provenance);
struct Checkpoint {
  RegressorModel model;
  nlohmann::json provenance;
};
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace fruitgrasp::nn
