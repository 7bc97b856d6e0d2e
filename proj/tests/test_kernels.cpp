#include <doctest.h>

#include "identiface/kernels.hpp"
#include "oracles.hpp"

using namespace identiface;
namespace k = identiface::kernels;

namespace {

template <typename Fn>
void for_both(Fn fn) {
  SUBCASE("serial") { fn(k::serial::conv2d_forward, k::serial::maxpool_forward, k::serial::dense_forward); }
  SUBCASE("parallel") {
    fn(k::parallel::conv2d_forward, k::parallel::maxpool_forward, k::parallel::dense_forward);
  }
}

std::vector<double> vec(const Tensor& t) { return {t.data().begin(), t.data().end()}; }

}  // namespace

TEST_CASE("conv delta kernel is the identity") {
  for_both([](auto conv, auto, auto) {
    const Tensor x = oracle::random_tensor({1, 1, 3, 3}, 1);
    std::vector<double> w(9, 0.0), b{0.0}, y(9);
    w[4] = 1.0;
    conv(k::ConvDims{1, 1, 3, 3, 1}, x.data(), w, b, y);
    for (std::size_t i = 0; i < 9; ++i) CHECK(y[i] == x[i]);
  });
}

TEST_CASE("conv of a constant with an all-ones kernel sums the window") {
  for_both([](auto conv, auto, auto) {
    std::vector<double> x(25, 2.5), w(9, 1.0), b{0.0}, y(25);
    conv(k::ConvDims{1, 1, 5, 5, 1}, x, w, b, y);
    CHECK(y[2 * 5 + 2] == doctest::Approx(9 * 2.5));
    CHECK(y[0] == doctest::Approx(4 * 2.5));
  });
}

TEST_CASE("conv matches the nested-loop oracle") {
  for_both([](auto conv, auto, auto) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const std::size_t n = 1 + seed % 3, c = 2, h = 5, w = 4 + seed % 3, f = 3;
      const Tensor x = oracle::random_tensor({n, c, h, w}, seed);
      const Tensor wt = oracle::random_tensor({f, c, 3, 3}, seed + 100);
      const Tensor b = oracle::random_tensor({f}, seed + 200);
      std::vector<double> y(n * f * h * w);
      conv(k::ConvDims{n, c, h, w, f}, x.data(), wt.data(), b.data(), y);
      const auto ref = oracle::conv3x3(vec(x), vec(wt), vec(b), n, c, h, w, f);
      for (std::size_t i = 0; i < y.size(); ++i) CHECK(std::abs(y[i] - ref[i]) <= 1e-12);
    }
  });
}

TEST_CASE("maxpool picks window maxima, first index on ties") {
  for_both([](auto, auto pool, auto) {
    std::vector<double> x{1, 2, 3, 4}, y(1);
    std::vector<std::size_t> idx(1);
    pool(k::PoolDims{1, 1, 2, 2}, x, y, idx);
    CHECK(y[0] == 4.0);
    CHECK(idx[0] == 3);

    std::vector<double> flat(16, 5.0), out(4);
    std::vector<std::size_t> arg(4);
    pool(k::PoolDims{1, 1, 4, 4}, flat, out, arg);
    for (double v : out) CHECK(v == 5.0);
    CHECK(arg[0] == 0);
    CHECK(arg[1] == 2);
    CHECK(arg[2] == 8);
  });
}

TEST_CASE("maxpool matches the brute-force oracle, odd sizes floor") {
  for_both([](auto, auto pool, auto) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const std::size_t h = 6 + seed % 2, w = 6;
      const Tensor x = oracle::random_tensor({2, 2, h, w}, seed);
      const k::PoolDims d{2, 2, h, w};
      std::vector<double> y(d.output_size());
      std::vector<std::size_t> idx(d.output_size());
      pool(d, x.data(), y, idx);
      const auto ref = oracle::maxpool2x2(vec(x), 2, 2, h, w);
      REQUIRE(ref.size() == y.size());
      for (std::size_t i = 0; i < y.size(); ++i) {
        CHECK(y[i] == ref[i]);
        CHECK(x[idx[i]] == y[i]);
      }
    }
  });
}

TEST_CASE("dense identity, bias-only and matmul oracle") {
  for_both([](auto, auto, auto dense) {
    const Tensor x = oracle::random_tensor({2, 3}, 4);
    std::vector<double> eye{1, 0, 0, 0, 1, 0, 0, 0, 1}, zero_b(3, 0.0), y(6);
    dense(k::DenseDims{2, 3, 3}, x.data(), eye, zero_b, y);
    for (std::size_t i = 0; i < 6; ++i) CHECK(y[i] == x[i]);

    std::vector<double> zero_w(9, 0.0), b{1.5, -2.0, 0.25};
    dense(k::DenseDims{2, 3, 3}, x.data(), zero_w, b, y);
    for (std::size_t i = 0; i < 6; ++i) CHECK(y[i] == b[i % 3]);

    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const Tensor a = oracle::random_tensor({2, 3}, seed);
      const Tensor w = oracle::random_tensor({3, 4}, seed + 50);
      const Tensor bb = oracle::random_tensor({4}, seed + 90);
      std::vector<double> out(8);
      dense(k::DenseDims{2, 3, 4}, a.data(), w.data(), bb.data(), out);
      const auto ref = oracle::matmul_bias(vec(a), vec(w), vec(bb), 2, 3, 4);
      for (std::size_t i = 0; i < 8; ++i) CHECK(std::abs(out[i] - ref[i]) <= 1e-12);
    }
  });
}

TEST_CASE("serial and parallel backward passes agree") {
  const k::ConvDims d{3, 4, 7, 6, 5};
  const Tensor x = oracle::random_tensor({3, 4, 7, 6}, 11);
  const Tensor w = oracle::random_tensor({5, 4, 3, 3}, 12);
  const Tensor gy = oracle::random_tensor({3, 5, 7, 6}, 13);
  std::vector<double> gx1(d.input_size()), gw1(d.weight_size()), gb1(5);
  std::vector<double> gx2(d.input_size()), gw2(d.weight_size()), gb2(5);
  k::serial::conv2d_backward(d, x.data(), w.data(), gy.data(), gx1, gw1, gb1);
  k::parallel::conv2d_backward(d, x.data(), w.data(), gy.data(), gx2, gw2, gb2);
  for (std::size_t i = 0; i < gx1.size(); ++i) CHECK(std::abs(gx1[i] - gx2[i]) <= 1e-12);
  for (std::size_t i = 0; i < gw1.size(); ++i) CHECK(std::abs(gw1[i] - gw2[i]) <= 1e-12);
  for (std::size_t i = 0; i < 5; ++i) CHECK(std::abs(gb1[i] - gb2[i]) <= 1e-12);

  const k::DenseDims dd{4, 6, 3};
  const Tensor a = oracle::random_tensor({4, 6}, 21);
  const Tensor wd = oracle::random_tensor({6, 3}, 22);
  const Tensor g = oracle::random_tensor({4, 3}, 23);
  std::vector<double> ga1(24), gwd1(18), gbd1(3), ga2(24), gwd2(18), gbd2(3);
  k::serial::dense_backward(dd, a.data(), wd.data(), g.data(), ga1, gwd1, gbd1);
  k::parallel::dense_backward(dd, a.data(), wd.data(), g.data(), ga2, gwd2, gbd2);
  for (std::size_t i = 0; i < 24; ++i) CHECK(std::abs(ga1[i] - ga2[i]) <= 1e-12);
  for (std::size_t i = 0; i < 18; ++i) CHECK(std::abs(gwd1[i] - gwd2[i]) <= 1e-12);
  for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(gbd1[i] - gbd2[i]) <= 1e-12);
}
