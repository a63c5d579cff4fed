#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"

#include "fruitgrasp/kernels.hpp"
#include "fruitgrasp/tinynn.hpp"

using namespace fruitgrasp;

namespace {

std::vector<double> random_vec(std::size_t n, std::mt19937_64& rng, double lo = -2.0,
                               double hi = 2.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

}  // namespace

TEST_CASE("scalar dot and axpy match hand values") {
  const auto& k = kernels::scalar_ops();
  const double a[] = {1, 2, 3};
  const double b[] = {4, 5, 6};
  CHECK(k.dot(a, b, 3) == doctest::Approx(32.0));
  double y[] = {1, 1, 1};
  k.axpy(2.0, a, y, 3);
  CHECK(y[0] == doctest::Approx(3.0));
  CHECK(y[2] == doctest::Approx(7.0));
  CHECK(k.dot(a, b, 0) == 0.0);
}

TEST_CASE("scalar colwise max keeps the first row on ties") {
  const auto& k = kernels::scalar_ops();
  // 3 rows x 2 cols, ties in column 0
  const double m[] = {5.0, 1.0, 5.0, 3.0, 2.0, 3.0};
  double mx[2];
  std::int32_t arg[2];
  k.colwise_max_argmax(m, 3, 2, mx, arg);
  CHECK(mx[0] == 5.0);
  CHECK(arg[0] == 0);  // first of the tied rows
  CHECK(mx[1] == 3.0);
  CHECK(arg[1] == 1);
}

TEST_CASE("avx2 kernels agree with the scalar reference") {
  if (!kernels::avx2_available()) {
    MESSAGE("avx2 unavailable on this host; equivalence suite skipped");
    return;
  }
  const auto& s = kernels::scalar_ops();
  const auto& v = kernels::avx2_ops();
  std::mt19937_64 rng(21);

  SUBCASE("dot and axpy across sizes including tails") {
    for (std::size_t n : {0u, 1u, 2u, 3u, 4u, 5u, 7u, 8u, 9u, 15u, 16u, 17u, 64u, 255u, 1000u}) {
      const auto a = random_vec(n, rng);
      const auto b = random_vec(n, rng);
      const double ds = s.dot(a.data(), b.data(), n);
      const double dv = v.dot(a.data(), b.data(), n);
      CHECK(std::abs(ds - dv) <=
            1e-13 * std::max(1.0, std::abs(ds)));  // reassociation + fma rounding only

      auto ys = random_vec(n, rng);
      auto yv = ys;
      s.axpy(0.37, a.data(), ys.data(), n);
      v.axpy(0.37, a.data(), yv.data(), n);
      for (std::size_t i = 0; i < n; ++i)
        CHECK(std::abs(ys[i] - yv[i]) <= 1e-15 * std::max(1.0, std::abs(ys[i])));
    }
  }

  SUBCASE("fused dot4/axpy4 match four plain calls") {
    for (std::size_t n : {0u, 1u, 3u, 4u, 5u, 8u, 13u, 64u, 129u}) {
      const auto a = random_vec(n, rng);
      const auto b0 = random_vec(n, rng), b1 = random_vec(n, rng), b2 = random_vec(n, rng),
                 b3 = random_vec(n, rng);
      const double* bq[4] = {b0.data(), b1.data(), b2.data(), b3.data()};
      double outs[4], outv[4];
      s.dot4(a.data(), bq, n, outs);
      v.dot4(a.data(), bq, n, outv);
      for (int q = 0; q < 4; ++q) {
        CHECK(std::abs(outs[q] - outv[q]) <= 1e-13 * std::max(1.0, std::abs(outs[q])));
        CHECK(std::abs(outs[q] - s.dot(a.data(), bq[q], n)) <=
              1e-13 * std::max(1.0, std::abs(outs[q])));
      }

      const double alpha[4] = {0.3, -1.1, 0.0, 2.2};
      auto ys = random_vec(n, rng);
      auto yv = ys;
      s.axpy4(alpha, bq, ys.data(), n);
      v.axpy4(alpha, bq, yv.data(), n);
      for (std::size_t i = 0; i < n; ++i)
        CHECK(std::abs(ys[i] - yv[i]) <= 1e-13 * std::max(1.0, std::abs(ys[i])));
    }
  }

  SUBCASE("colwise max/argmax bitwise identical, ties included") {
    for (int trial = 0; trial < 50; ++trial) {
      std::uniform_int_distribution<std::size_t> rows_d(1, 40), cols_d(1, 70);
      const std::size_t rows = rows_d(rng), cols = cols_d(rng);
      auto m = random_vec(rows * cols, rng, -1.0, 1.0);
      // inject duplicates to exercise tie handling
      if (rows > 2)
        for (std::size_t c = 0; c < cols; c += 3) m[c] = m[(rows - 1) * cols + c];
      std::vector<double> mx_s(cols), mx_v(cols);
      std::vector<std::int32_t> arg_s(cols), arg_v(cols);
      s.colwise_max_argmax(m.data(), rows, cols, mx_s.data(), arg_s.data());
      v.colwise_max_argmax(m.data(), rows, cols, mx_v.data(), arg_v.data());
      for (std::size_t c = 0; c < cols; ++c) {
        CHECK(mx_s[c] == mx_v[c]);
        CHECK(arg_s[c] == arg_v[c]);
      }
    }
  }

  SUBCASE("sphere inlier counts identical on random clouds") {
    for (int trial = 0; trial < 50; ++trial) {
      std::uniform_int_distribution<std::size_t> n_d(1, 700);
      const std::size_t n = n_d(rng);
      const auto xyz = random_vec(3 * n, rng, -0.6, 0.6);
      const double center[3] = {0.05, -0.02, 0.4};
      const std::size_t cs = s.count_sphere_inliers(xyz.data(), n, center, 0.35, 0.1);
      const std::size_t cv = v.count_sphere_inliers(xyz.data(), n, center, 0.35, 0.1);
      CHECK(cs == cv);
    }
  }
}

TEST_CASE("scalar and avx2 backends agree through the network layers") {
  if (!kernels::avx2_available()) return;
  std::mt19937_64 rng(22);
  fruitgrasp::nn::ModelConfig cfg;
  cfg.encoder_widths = {16, 32};
  cfg.head_widths = {16, 6};
  cfg.dropout = 0.0;
  auto model = fruitgrasp::nn::RegressorModel::init(cfg, rng);
  fruitgrasp::nn::Tensor batch;
  batch.shape = {3, 24, 3};
  std::uniform_real_distribution<double> u(-0.05, 0.05);
  batch.data.resize(3 * 24 * 3);
  for (auto& x : batch.data) x = u(rng);
  fruitgrasp::nn::Tensor targets;
  targets.shape = {3, 6};
  targets.data.resize(18);
  for (auto& x : targets.data) x = u(rng);

  std::mt19937_64 r1(1), r2(1);
  kernels::force_backend("scalar");
  const double loss_s = fruitgrasp::nn::loss_and_gradients(model, batch, targets, r1);
  std::vector<double> grads_s;
  for (auto& ref : model.params()) grads_s.insert(grads_s.end(), ref.grad, ref.grad + ref.n);

  kernels::force_backend("avx2");
  const double loss_v = fruitgrasp::nn::loss_and_gradients(model, batch, targets, r2);
  std::vector<double> grads_v;
  for (auto& ref : model.params()) grads_v.insert(grads_v.end(), ref.grad, ref.grad + ref.n);
  kernels::force_backend("auto");

  CHECK(std::abs(loss_s - loss_v) <= 1e-12 * std::max(1.0, std::abs(loss_s)));
  REQUIRE(grads_s.size() == grads_v.size());
  for (std::size_t i = 0; i < grads_s.size(); ++i)
    CHECK(std::abs(grads_s[i] - grads_v[i]) <= 1e-10 * std::max(1.0, std::abs(grads_s[i])));
}

TEST_CASE("force_backend switches the active ops and rejects bad names") {
  kernels::force_backend("scalar");
  CHECK(std::string(kernels::active().name) == "scalar");
  CHECK_THROWS(kernels::force_backend("neon"));
  kernels::force_backend("auto");
  if (kernels::avx2_available()) {
    kernels::force_backend("avx2");
    CHECK(std::string(kernels::active().name) == "avx2");
    kernels::force_backend("auto");
  }
}
