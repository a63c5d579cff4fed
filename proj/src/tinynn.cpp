#include "fruitgrasp/tinynn.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "fruitgrasp/errors.hpp"
#include "fruitgrasp/geometry.hpp"
#include "fruitgrasp/kernels.hpp"

namespace fruitgrasp::nn {
namespace {

using kernels::Ops;

// Tile size for the dense-layer loops: a 64-row slab of activations and a
// 64-row slab of weights stay cache-resident together, so the weight matrix
// is not re-streamed for every input row.
constexpr std::int64_t kTile = 64;

// rows x in -> rows x out: y = x W^T + b. Tiled so a slab of weights stays
// cache-resident across a slab of rows; four output channels per step share
// each activation load through the fused dot4 kernel.
void dense_forward(const Ops& k, const DenseLayer& l, const double* x, std::int64_t rows,
                   double* y) {
  const auto in = static_cast<std::size_t>(l.in);
  for (std::int64_t r0 = 0; r0 < rows; r0 += kTile) {
    const std::int64_t r1 = std::min(rows, r0 + kTile);
    for (int o0 = 0; o0 < l.out; o0 += kTile) {
      const int o1 = std::min<std::int64_t>(l.out, o0 + kTile);
      for (std::int64_t r = r0; r < r1; ++r) {
        const double* xr = x + r * l.in;
        double* yr = y + r * l.out;
        int o = o0;
        for (; o + 4 <= o1; o += 4) {
          const double* wq[4] = {l.w.data() + o * l.in, l.w.data() + (o + 1) * l.in,
                                 l.w.data() + (o + 2) * l.in, l.w.data() + (o + 3) * l.in};
          double sums[4];
          k.dot4(xr, wq, in, sums);
          yr[o] = sums[0] + l.b[o];
          yr[o + 1] = sums[1] + l.b[o + 1];
          yr[o + 2] = sums[2] + l.b[o + 2];
          yr[o + 3] = sums[3] + l.b[o + 3];
        }
        for (; o < o1; ++o) yr[o] = k.dot(xr, l.w.data() + o * l.in, in) + l.b[o];
      }
    }
  }
}

// Accumulates gw/gb and writes dx (dx may be null for the first layer).
// dX rows gather four weight rows per fused step; dW rows accumulate four
// activation rows per fused step.
void dense_backward(const Ops& k, DenseLayer& l, const double* x, const double* dy,
                    std::int64_t rows, double* dx) {
  const auto in = static_cast<std::size_t>(l.in);
  if (dx) std::fill(dx, dx + rows * l.in, 0.0);

  for (std::int64_t r0 = 0; r0 < rows; r0 += kTile) {
    const std::int64_t r1 = std::min(rows, r0 + kTile);
    for (int o0 = 0; o0 < l.out; o0 += kTile) {
      const int o1 = std::min<std::int64_t>(l.out, o0 + kTile);

      if (dx) {
        for (std::int64_t r = r0; r < r1; ++r) {
          const double* dyr = dy + r * l.out;
          double* dxr = dx + r * l.in;
          // relu zeros much of dy; compact the live terms before fusing
          double g[4];
          const double* wq[4];
          int live = 0;
          for (int o = o0; o < o1; ++o) {
            if (dyr[o] == 0.0) continue;
            g[live] = dyr[o];
            wq[live] = l.w.data() + o * l.in;
            if (++live == 4) {
              k.axpy4(g, wq, dxr, in);
              live = 0;
            }
          }
          if (live == 1) {
            k.axpy(g[0], wq[0], dxr, in);
          } else if (live > 1) {
            for (; live < 4; ++live) {
              g[live] = 0.0;
              wq[live] = wq[0];
            }
            k.axpy4(g, wq, dxr, in);
          }
        }
      }

      for (int o = o0; o < o1; ++o) {
        double* gw = l.gw.data() + o * l.in;
        double gb = 0.0;
        double g[4];
        const double* xq[4];
        int live = 0;
        for (std::int64_t r = r0; r < r1; ++r) {
          const double gr = dy[r * l.out + o];
          if (gr == 0.0) continue;
          gb += gr;
          g[live] = gr;
          xq[live] = x + r * l.in;
          if (++live == 4) {
            k.axpy4(g, xq, gw, in);
            live = 0;
          }
        }
        if (live == 1) {
          k.axpy(g[0], xq[0], gw, in);
        } else if (live > 1) {
          for (; live < 4; ++live) {
            g[live] = 0.0;
            xq[live] = xq[0];
          }
          k.axpy4(g, xq, gw, in);
        }
        l.gb[o] += gb;
      }
    }
  }
}

void batchnorm_forward(BatchNorm& bn, double* x, std::int64_t rows, bool training,
                       double momentum, double eps, BnCache* cache) {
  const int C = bn.ch;
  if (training) {
    cache->xhat.resize(static_cast<std::size_t>(rows * C));
    cache->inv_std.resize(static_cast<std::size_t>(C));
    const double m = static_cast<double>(rows);
    for (int c = 0; c < C; ++c) {
      double mean = 0.0;
      for (std::int64_t r = 0; r < rows; ++r) mean += x[r * C + c];
      mean /= m;
      double var = 0.0;
      for (std::int64_t r = 0; r < rows; ++r) {
        const double d = x[r * C + c] - mean;
        var += d * d;
      }
      var /= m;
      const double inv = 1.0 / std::sqrt(var + eps);
      cache->inv_std[static_cast<std::size_t>(c)] = inv;
      for (std::int64_t r = 0; r < rows; ++r) {
        const double xh = (x[r * C + c] - mean) * inv;
        cache->xhat[static_cast<std::size_t>(r * C + c)] = xh;
        x[r * C + c] = bn.gamma[static_cast<std::size_t>(c)] * xh +
                       bn.beta[static_cast<std::size_t>(c)];
      }
      bn.running_mean[static_cast<std::size_t>(c)] =
          momentum * bn.running_mean[static_cast<std::size_t>(c)] + (1.0 - momentum) * mean;
      bn.running_var[static_cast<std::size_t>(c)] =
          momentum * bn.running_var[static_cast<std::size_t>(c)] + (1.0 - momentum) * var;
    }
  } else {
    for (int c = 0; c < C; ++c) {
      const double inv = 1.0 / std::sqrt(bn.running_var[static_cast<std::size_t>(c)] + eps);
      const double g = bn.gamma[static_cast<std::size_t>(c)] * inv;
      const double off = bn.beta[static_cast<std::size_t>(c)] -
                         g * bn.running_mean[static_cast<std::size_t>(c)];
      for (std::int64_t r = 0; r < rows; ++r) x[r * C + c] = g * x[r * C + c] + off;
    }
  }
}

// dy in-place becomes dx.
void batchnorm_backward(BatchNorm& bn, const BnCache& cache, double* dy, std::int64_t rows) {
  const int C = bn.ch;
  const double m = static_cast<double>(rows);
  for (int c = 0; c < C; ++c) {
    double sum_dy = 0.0, sum_dy_xhat = 0.0;
    for (std::int64_t r = 0; r < rows; ++r) {
      const double g = dy[r * C + c];
      sum_dy += g;
      sum_dy_xhat += g * cache.xhat[static_cast<std::size_t>(r * C + c)];
    }
    bn.gbeta[static_cast<std::size_t>(c)] += sum_dy;
    bn.ggamma[static_cast<std::size_t>(c)] += sum_dy_xhat;
    const double scale =
        bn.gamma[static_cast<std::size_t>(c)] * cache.inv_std[static_cast<std::size_t>(c)] / m;
    for (std::int64_t r = 0; r < rows; ++r) {
      const double xh = cache.xhat[static_cast<std::size_t>(r * C + c)];
      dy[r * C + c] = scale * (m * dy[r * C + c] - sum_dy - xh * sum_dy_xhat);
    }
  }
}

void relu_forward(double* x, std::int64_t n) {
  for (std::int64_t i = 0; i < n; ++i) x[i] = x[i] > 0.0 ? x[i] : 0.0;
}

// act is the post-relu activation: gradient passes where it is positive.
void relu_backward(const double* act, double* dy, std::int64_t n) {
  for (std::int64_t i = 0; i < n; ++i)
    if (act[i] <= 0.0) dy[i] = 0.0;
}

std::array<double, 6> activated(const double* raw) {
  const auto u = geom::activate({raw[0], raw[1], raw[2], raw[3], raw[4], raw[5]});
  return {u.x, u.y, u.z, u.r, u.theta, u.phi};
}

void check_batch_shape(const Tensor& batch) {
  if (batch.shape.size() != 3 || batch.shape[2] != 3)
    throw ShapeMismatchError("forward: batch must have shape (B, N, 3)");
  if (batch.shape[0] < 1 || batch.shape[1] < 1)
    throw ShapeMismatchError("forward: batch and point dimensions must be positive");
  if (batch.numel() != static_cast<std::int64_t>(batch.data.size()))
    throw ShapeMismatchError("forward: tensor data does not match its shape");
}

nlohmann::json dense_to_json(const DenseLayer& l) {
  return {{"in", l.in}, {"out", l.out}, {"w", l.w}, {"b", l.b}};
}

nlohmann::json bn_to_json(const BatchNorm& bn) {
  return {{"ch", bn.ch},
          {"gamma", bn.gamma},
          {"beta", bn.beta},
          {"running_mean", bn.running_mean},
          {"running_var", bn.running_var}};
}

DenseLayer dense_from_json(const nlohmann::json& j) {
  DenseLayer l;
  l.in = j.at("in").get<int>();
  l.out = j.at("out").get<int>();
  l.w = j.at("w").get<std::vector<double>>();
  l.b = j.at("b").get<std::vector<double>>();
  if (l.in <= 0 || l.out <= 0 ||
      l.w.size() != static_cast<std::size_t>(l.in) * static_cast<std::size_t>(l.out) ||
      l.b.size() != static_cast<std::size_t>(l.out))
    throw ShapeMismatchError("checkpoint: dense layer arrays do not match declared shape");
  l.gw.assign(l.w.size(), 0.0);
  l.gb.assign(l.b.size(), 0.0);
  return l;
}

BatchNorm bn_from_json(const nlohmann::json& j) {
  BatchNorm bn;
  bn.ch = j.at("ch").get<int>();
  bn.gamma = j.at("gamma").get<std::vector<double>>();
  bn.beta = j.at("beta").get<std::vector<double>>();
  bn.running_mean = j.at("running_mean").get<std::vector<double>>();
  bn.running_var = j.at("running_var").get<std::vector<double>>();
  const auto n = static_cast<std::size_t>(bn.ch);
  if (bn.ch <= 0 || bn.gamma.size() != n || bn.beta.size() != n || bn.running_mean.size() != n ||
      bn.running_var.size() != n)
    throw ShapeMismatchError("checkpoint: batch-norm arrays do not match declared shape");
  bn.ggamma.assign(n, 0.0);
  bn.gbeta.assign(n, 0.0);
  return bn;
}

BatchNorm make_bn(int ch) {
  BatchNorm bn;
  bn.ch = ch;
  const auto n = static_cast<std::size_t>(ch);
  bn.gamma.assign(n, 1.0);
  bn.beta.assign(n, 0.0);
  bn.running_mean.assign(n, 0.0);
  bn.running_var.assign(n, 1.0);
  bn.ggamma.assign(n, 0.0);
  bn.gbeta.assign(n, 0.0);
  return bn;
}

DenseLayer make_dense(int in, int out, std::mt19937_64& rng) {
  DenseLayer l;
  l.in = in;
  l.out = out;
  const double bound = std::sqrt(6.0 / static_cast<double>(in + out));
  std::uniform_real_distribution<double> u(-bound, bound);
  l.w.resize(static_cast<std::size_t>(in) * static_cast<std::size_t>(out));
  for (auto& w : l.w) w = u(rng);
  l.b.assign(static_cast<std::size_t>(out), 0.0);
  l.gw.assign(l.w.size(), 0.0);
  l.gb.assign(l.b.size(), 0.0);
  return l;
}

}  // namespace

Tensor Tensor::zeros(std::vector<std::int64_t> shape) {
  Tensor t;
  t.shape = std::move(shape);
  t.data.assign(static_cast<std::size_t>(t.numel()), 0.0);
  return t;
}

RegressorModel RegressorModel::init(const ModelConfig& cfg, std::mt19937_64& rng) {
  if (cfg.encoder_widths.empty() || cfg.head_widths.empty())
    throw ConfigError("model: encoder and head need at least one layer each");
  if (cfg.head_widths.back() != 6)
    throw ConfigError("model: final output width must be 6");
  RegressorModel m;
  m.cfg = cfg;
  int in = 3;
  for (int w : cfg.encoder_widths) {
    m.encoder.push_back(make_dense(in, w, rng));
    m.encoder_bn.push_back(make_bn(w));
    in = w;
  }
  for (std::size_t i = 0; i < cfg.head_widths.size(); ++i) {
    const int w = cfg.head_widths[i];
    m.head.push_back(make_dense(in, w, rng));
    if (i + 1 < cfg.head_widths.size()) m.head_bn.push_back(make_bn(w));
    in = w;
  }
  return m;
}

std::vector<RegressorModel::ParamRef> RegressorModel::params() {
  std::vector<ParamRef> refs;
  auto add = [&refs](std::vector<double>& v, std::vector<double>& g) {
    refs.push_back({v.data(), g.data(), v.size()});
  };
  for (std::size_t i = 0; i < encoder.size(); ++i) {
    add(encoder[i].w, encoder[i].gw);
    add(encoder[i].b, encoder[i].gb);
    add(encoder_bn[i].gamma, encoder_bn[i].ggamma);
    add(encoder_bn[i].beta, encoder_bn[i].gbeta);
  }
  for (std::size_t i = 0; i < head.size(); ++i) {
    add(head[i].w, head[i].gw);
    add(head[i].b, head[i].gb);
    if (i < head_bn.size()) {
      add(head_bn[i].gamma, head_bn[i].ggamma);
      add(head_bn[i].beta, head_bn[i].gbeta);
    }
  }
  return refs;
}

void RegressorModel::zero_grads() {
  for (auto& ref : params()) std::fill(ref.grad, ref.grad + ref.n, 0.0);
}

Tensor forward(RegressorModel& model, const Tensor& batch, ForwardCache* cache,
               std::mt19937_64* rng) {
  check_batch_shape(batch);
  const Ops& k = kernels::active();
  const std::int64_t B = batch.shape[0];
  const std::int64_t N = batch.shape[1];
  const std::int64_t rows = B * N;
  const bool training = model.training;
  if (training && (!cache || !rng))
    throw ConfigError("forward: training mode requires a cache and an rng");

  // buffers are resized, never reassigned, so a reused cache keeps its
  // allocations across batches of the same shape
  ForwardCache local;
  ForwardCache& c = cache ? *cache : local;
  c.batch = B;
  c.points = N;
  c.enc_act.resize(model.encoder.size() + 1);
  c.enc_bn.resize(model.encoder.size());
  c.head_act.resize(model.head.size());
  c.head_bn.resize(model.head_bn.size());
  c.head_dropmask.resize(model.head_bn.size());

  // shared per-point encoder
  c.enc_act[0] = batch.data;
  for (std::size_t l = 0; l < model.encoder.size(); ++l) {
    auto& layer = model.encoder[l];
    auto& out = c.enc_act[l + 1];
    out.resize(static_cast<std::size_t>(rows * layer.out));
    dense_forward(k, layer, c.enc_act[l].data(), rows, out.data());
    if (model.cfg.batchnorm)
      batchnorm_forward(model.encoder_bn[l], out.data(), rows, training, model.cfg.bn_momentum,
                        model.cfg.bn_epsilon, training ? &c.enc_bn[l] : nullptr);
    relu_forward(out.data(), rows * layer.out);
  }

  // channel-wise max over each sample's points (the symmetric aggregation)
  const int C = model.encoder.back().out;
  auto& pooled = c.head_act[0];
  pooled.resize(static_cast<std::size_t>(B * C));
  c.pool_arg.resize(static_cast<std::size_t>(B * C));
  const auto& feats = c.enc_act.back();
  std::vector<std::int32_t> arg(static_cast<std::size_t>(C));
  for (std::int64_t b = 0; b < B; ++b) {
    k.colwise_max_argmax(feats.data() + b * N * C, static_cast<std::size_t>(N),
                         static_cast<std::size_t>(C), pooled.data() + b * C, arg.data());
    for (int ch = 0; ch < C; ++ch)
      c.pool_arg[static_cast<std::size_t>(b * C + ch)] =
          static_cast<std::int32_t>(b * N) + arg[static_cast<std::size_t>(ch)];
  }

  // MLP head; dropout after each hidden activation while training
  for (std::size_t l = 0; l < model.head.size(); ++l) {
    auto& layer = model.head[l];
    auto& cur = l + 1 < model.head.size() ? c.head_act[l + 1] : c.raw;
    cur.resize(static_cast<std::size_t>(B * layer.out));
    dense_forward(k, layer, c.head_act[l].data(), B, cur.data());
    if (l < model.head_bn.size()) {
      if (model.cfg.batchnorm)
        batchnorm_forward(model.head_bn[l], cur.data(), B, training, model.cfg.bn_momentum,
                          model.cfg.bn_epsilon, training ? &c.head_bn[l] : nullptr);
      relu_forward(cur.data(), B * layer.out);
      auto& mask = c.head_dropmask[l];
      if (training && model.cfg.dropout > 0.0) {
        mask.resize(cur.size());
        std::uniform_real_distribution<double> u(0.0, 1.0);
        const double keep = 1.0 - model.cfg.dropout;
        for (std::size_t i = 0; i < cur.size(); ++i) {
          mask[i] = u(*rng) < keep ? 1.0 / keep : 0.0;
          cur[i] *= mask[i];
        }
      } else {
        mask.clear();  // a reused cache must not leak a stale mask
      }
    }
  }

  Tensor out;
  out.shape = {B, 6};
  out.data = c.raw;
  return out;
}

double loss_and_gradients(RegressorModel& model, const Tensor& batch, const Tensor& targets,
                          std::mt19937_64& rng) {
  if (targets.shape.size() != 2 || targets.shape[1] != 6 || targets.shape[0] != batch.shape[0])
    throw ShapeMismatchError("loss_and_gradients: targets must have shape (B, 6)");
  model.zero_grads();
  const bool was_training = model.training;
  model.training = true;
  // training is single-threaded per model; reusing the cache and scratch
  // buffers across batches avoids re-faulting tens of megabytes per step
  thread_local ForwardCache cache;
  thread_local std::vector<double> dy, dx;
  const Tensor raw = forward(model, batch, &cache, &rng);
  model.training = was_training;

  const Ops& k = kernels::active();
  const std::int64_t B = batch.shape[0];
  const std::int64_t N = batch.shape[1];

  // loss and gradient through the output activations
  double loss = 0.0;
  dy.assign(static_cast<std::size_t>(B * 6), 0.0);
  for (std::int64_t b = 0; b < B; ++b) {
    const double* rb = raw.data.data() + b * 6;
    const std::array<double, 6> u = activated(rb);
    for (int i = 0; i < 6; ++i) {
      const double e = u[static_cast<std::size_t>(i)] - targets.data[b * 6 + i];
      loss += e * e;
      double d = 2.0 * e / static_cast<double>(B);
      if (i == 3) d *= u[3];                     // d exp(x)/dx = exp(x)
      if (i >= 4) d *= 1.0 - u[static_cast<std::size_t>(i)] * u[static_cast<std::size_t>(i)];
      dy[static_cast<std::size_t>(b * 6 + i)] = d;  // tanh' = 1 - tanh^2
    }
  }
  loss /= static_cast<double>(B);

  // head backward
  for (std::size_t li = model.head.size(); li-- > 0;) {
    auto& layer = model.head[li];
    if (li < model.head_bn.size()) {
      // this is a hidden layer output path: dropout -> relu -> bn
      auto& mask = cache.head_dropmask[li];
      if (!mask.empty())
        for (std::size_t i = 0; i < dy.size(); ++i) dy[i] *= mask[i];
      // head_act[li+1] holds the post-dropout activation; dropped units carry
      // zero gradient already, so its sign is the relu mask for kept units
      relu_backward(cache.head_act[li + 1].data(), dy.data(),
                    static_cast<std::int64_t>(dy.size()));
      if (model.cfg.batchnorm)
        batchnorm_backward(model.head_bn[li], cache.head_bn[li], dy.data(), B);
    }
    dx.resize(static_cast<std::size_t>(B * layer.in));
    dense_backward(k, layer, cache.head_act[li].data(), dy.data(), B, dx.data());
    std::swap(dy, dx);
  }

  // max-pool backward: route each channel's gradient to its argmax point
  const int C = model.encoder.back().out;
  dx.assign(static_cast<std::size_t>(B * N * C), 0.0);
  for (std::int64_t b = 0; b < B; ++b)
    for (int ch = 0; ch < C; ++ch) {
      const std::int32_t row = cache.pool_arg[static_cast<std::size_t>(b * C + ch)];
      dx[static_cast<std::size_t>(row) * static_cast<std::size_t>(C) +
         static_cast<std::size_t>(ch)] += dy[static_cast<std::size_t>(b * C + ch)];
    }
  std::swap(dy, dx);

  // encoder backward
  const std::int64_t rows = B * N;
  for (std::size_t li = model.encoder.size(); li-- > 0;) {
    auto& layer = model.encoder[li];
    relu_backward(cache.enc_act[li + 1].data(), dy.data(), static_cast<std::int64_t>(dy.size()));
    if (model.cfg.batchnorm)
      batchnorm_backward(model.encoder_bn[li], cache.enc_bn[li], dy.data(), rows);
    const bool need_dx = li > 0;
    if (need_dx) {
      dx.resize(static_cast<std::size_t>(rows * layer.in));
      dense_backward(k, layer, cache.enc_act[li].data(), dy.data(), rows, dx.data());
      std::swap(dy, dx);
    } else {
      dense_backward(k, layer, cache.enc_act[li].data(), dy.data(), rows, nullptr);
    }
  }

  return loss;
}

double evaluate_loss(RegressorModel& model, const Tensor& batch, const Tensor& targets) {
  const bool was_training = model.training;
  model.training = false;
  const Tensor raw = forward(model, batch);
  model.training = was_training;
  const std::int64_t B = batch.shape[0];
  double loss = 0.0;
  for (std::int64_t b = 0; b < B; ++b) {
    const std::array<double, 6> u = activated(raw.data.data() + b * 6);
    for (int i = 0; i < 6; ++i) {
      const double e = u[static_cast<std::size_t>(i)] - targets.data[b * 6 + i];
      loss += e * e;
    }
  }
  return loss / static_cast<double>(B);
}

AdamState AdamState::init(RegressorModel& model, const AdamConfig& cfg) {
  AdamState s;
  s.cfg = cfg;
  for (const auto& ref : model.params()) {
    s.m.emplace_back(ref.n, 0.0);
    s.v.emplace_back(ref.n, 0.0);
  }
  return s;
}

double AdamState::effective_lr() const {
  return cfg.learning_rate * std::pow(cfg.decay, static_cast<double>(epoch));
}

void adam_step(RegressorModel& model, AdamState& state) {
  const auto refs = model.params();
  if (refs.size() != state.m.size())
    throw ShapeMismatchError("adam_step: state does not match the model");
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double lr = state.effective_lr();
  const double bc1 = 1.0 - std::pow(state.cfg.beta1, t);
  const double bc2 = 1.0 - std::pow(state.cfg.beta2, t);
  for (std::size_t p = 0; p < refs.size(); ++p) {
    double* w = refs[p].value;
    const double* g = refs[p].grad;
    auto& m = state.m[p];
    auto& v = state.v[p];
    for (std::size_t i = 0; i < refs[p].n; ++i) {
      m[i] = state.cfg.beta1 * m[i] + (1.0 - state.cfg.beta1) * g[i];
      v[i] = state.cfg.beta2 * v[i] + (1.0 - state.cfg.beta2) * g[i] * g[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      w[i] -= lr * mhat / (std::sqrt(vhat) + state.cfg.epsilon);
    }
  }
}

TrainResult train(RegressorModel& model, const std::vector<TrainSample>& train_set,
                  const std::vector<TrainSample>& val_set, int epochs, int batch_size,
                  const AdamConfig& adam, std::mt19937_64& rng) {
  if (train_set.empty()) throw EmptyDatasetError("train: empty training set");
  if (batch_size < 1) throw ConfigError("train: batch size must be >= 1");
  const std::size_t n_pts = train_set.front().points.size();
  if (n_pts == 0 || n_pts % 3 != 0) throw ShapeMismatchError("train: samples must be N x 3");
  for (const auto& s : train_set)
    if (s.points.size() != n_pts)
      throw ShapeMismatchError("train: all samples must share one point count");
  for (const auto& s : val_set)
    if (s.points.size() != n_pts)
      throw ShapeMismatchError("train: validation samples must share the point count");
  const std::int64_t N = static_cast<std::int64_t>(n_pts / 3);

  auto make_batch = [N](const std::vector<TrainSample>& set, const std::vector<std::size_t>& idx,
                        std::size_t begin, std::size_t end, Tensor& batch, Tensor& targets) {
    const auto B = static_cast<std::int64_t>(end - begin);
    batch.shape = {B, N, 3};
    batch.data.resize(static_cast<std::size_t>(B * N * 3));
    targets.shape = {B, 6};
    targets.data.resize(static_cast<std::size_t>(B * 6));
    for (std::size_t i = begin; i < end; ++i) {
      const auto& s = set[idx[i]];
      std::copy(s.points.begin(), s.points.end(),
                batch.data.begin() + static_cast<std::ptrdiff_t>((i - begin) * s.points.size()));
      std::copy(s.target.begin(), s.target.end(),
                targets.data.begin() + static_cast<std::ptrdiff_t>((i - begin) * 6));
    }
  };

  AdamState state = AdamState::init(model, adam);
  TrainResult result;
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0u);
  std::vector<std::size_t> val_order(val_set.size());
  std::iota(val_order.begin(), val_order.end(), 0u);

  const bool was_training = model.training;
  for (int epoch = 0; epoch < epochs; ++epoch) {
    state.epoch = epoch;
    std::shuffle(order.begin(), order.end(), rng);
    model.training = true;
    double epoch_loss = 0.0;
    for (std::size_t begin = 0; begin < order.size(); begin += static_cast<std::size_t>(batch_size)) {
      const std::size_t end = std::min(order.size(), begin + static_cast<std::size_t>(batch_size));
      Tensor batch, targets;
      make_batch(train_set, order, begin, end, batch, targets);
      const double loss = loss_and_gradients(model, batch, targets, rng);
      adam_step(model, state);
      epoch_loss += loss * static_cast<double>(end - begin);
    }
    result.train_loss.push_back(epoch_loss / static_cast<double>(train_set.size()));

    if (!val_set.empty()) {
      Tensor batch, targets;
      make_batch(val_set, val_order, 0, val_set.size(), batch, targets);
      result.val_loss.push_back(evaluate_loss(model, batch, targets));
    } else {
      result.val_loss.push_back(0.0);
    }
  }
  model.training = was_training;
  return result;
}

std::array<double, 6> predict_raw(RegressorModel& model, const std::vector<double>& points_xyz) {
  if (points_xyz.empty() || points_xyz.size() % 3 != 0)
    throw ShapeMismatchError("predict_raw: cloud must be N x 3");
  Tensor batch;
  batch.shape = {1, static_cast<std::int64_t>(points_xyz.size() / 3), 3};
  batch.data = points_xyz;
  const bool was_training = model.training;
  model.training = false;
  const Tensor raw = forward(model, batch);
  model.training = was_training;
  return {raw.data[0], raw.data[1], raw.data[2], raw.data[3], raw.data[4], raw.data[5]};
}

void save_checkpoint(const RegressorModel& model, const std::filesystem::path& path,
                     const nlohmann::json& provenance) {
  nlohmann::json j;
  j["format"] = "fruitgrasp-checkpoint-v1";
  j["model"] = {{"encoder_widths", model.cfg.encoder_widths},
                {"head_widths", model.cfg.head_widths},
                {"dropout", model.cfg.dropout},
                {"batchnorm", model.cfg.batchnorm},
                {"bn_momentum", model.cfg.bn_momentum},
                {"bn_epsilon", model.cfg.bn_epsilon}};
  nlohmann::json enc = nlohmann::json::array();
  for (std::size_t i = 0; i < model.encoder.size(); ++i) {
    nlohmann::json layer = dense_to_json(model.encoder[i]);
    layer["bn"] = bn_to_json(model.encoder_bn[i]);
    enc.push_back(std::move(layer));
  }
  j["encoder"] = std::move(enc);
  nlohmann::json head = nlohmann::json::array();
  for (std::size_t i = 0; i < model.head.size(); ++i) {
    nlohmann::json layer = dense_to_json(model.head[i]);
    if (i < model.head_bn.size()) layer["bn"] = bn_to_json(model.head_bn[i]);
    head.push_back(std::move(layer));
  }
  j["head"] = std::move(head);
  j["provenance"] = provenance;

  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << j.dump(1) << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream file(path);
  if (!file) throw IoError("cannot open for reading: " + path.string());
  nlohmann::json j;
  try {
    file >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("checkpoint: ") + e.what());
  }
  if (j.value("format", "") != "fruitgrasp-checkpoint-v1")
    throw ParseError("checkpoint: unknown format tag");

  Checkpoint ckpt;
  auto& m = ckpt.model;
  const auto& jm = j.at("model");
  m.cfg.encoder_widths = jm.at("encoder_widths").get<std::vector<int>>();
  m.cfg.head_widths = jm.at("head_widths").get<std::vector<int>>();
  m.cfg.dropout = jm.at("dropout").get<double>();
  m.cfg.batchnorm = jm.value("batchnorm", true);
  m.cfg.bn_momentum = jm.at("bn_momentum").get<double>();
  m.cfg.bn_epsilon = jm.at("bn_epsilon").get<double>();
  if (m.cfg.head_widths.empty() || m.cfg.head_widths.back() != 6)
    throw ShapeMismatchError("checkpoint: final output width must be 6");

  int in = 3;
  const auto& enc = j.at("encoder");
  if (enc.size() != m.cfg.encoder_widths.size())
    throw ShapeMismatchError("checkpoint: encoder layer count mismatch");
  for (std::size_t i = 0; i < enc.size(); ++i) {
    DenseLayer l = dense_from_json(enc[i]);
    if (l.in != in || l.out != m.cfg.encoder_widths[i])
      throw ShapeMismatchError("checkpoint: encoder layer shape mismatch");
    BatchNorm bn = bn_from_json(enc[i].at("bn"));
    if (bn.ch != l.out) throw ShapeMismatchError("checkpoint: encoder batch-norm mismatch");
    in = l.out;
    m.encoder.push_back(std::move(l));
    m.encoder_bn.push_back(std::move(bn));
  }
  const auto& head = j.at("head");
  if (head.size() != m.cfg.head_widths.size())
    throw ShapeMismatchError("checkpoint: head layer count mismatch");
  for (std::size_t i = 0; i < head.size(); ++i) {
    DenseLayer l = dense_from_json(head[i]);
    if (l.in != in || l.out != m.cfg.head_widths[i])
      throw ShapeMismatchError("checkpoint: head layer shape mismatch");
    in = l.out;
    if (i + 1 < head.size()) {
      BatchNorm bn = bn_from_json(head[i].at("bn"));
      if (bn.ch != l.out) throw ShapeMismatchError("checkpoint: head batch-norm mismatch");
      m.head_bn.push_back(std::move(bn));
    }
    m.head.push_back(std::move(l));
  }
  ckpt.provenance = j.value("provenance", nlohmann::json::object());
  return ckpt;
}

}  // namespace fruitgrasp::nn
