#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "identiface/error.hpp"
#include "identiface/rng.hpp"
#include "identiface/tensor.hpp"

using namespace identiface;

TEST_CASE("tensor construction and indexing") {
  Tensor t({2, 3, 4, 5}, 1.5);
  CHECK(t.size() == 120);
  CHECK(t.rank() == 4);
  CHECK(t.at(1, 2, 3, 4) == 1.5);
  t.at(1, 2, 3, 4) = 7.0;
  CHECK(t[119] == 7.0);
  CHECK(t.at(0, 0, 0, 1) == t[1]);
  CHECK(shape_to_string(t.shape()) == "[2,3,4,5]");
}

TEST_CASE("tensor rejects empty or mismatched shapes") {
  CHECK_THROWS_AS(Tensor(Shape{}), DimensionError);
  CHECK_THROWS_AS(Tensor(Shape{3, 0}), DimensionError);
  CHECK_THROWS_AS(Tensor(Shape{2, 2}, std::vector<double>{1, 2, 3}), DimensionError);
  Tensor t({2, 6});
  CHECK_THROWS_AS(t.reshaped({5, 2}), DimensionError);
  CHECK(t.reshaped({3, 4}).shape() == Shape{3, 4});
  CHECK_THROWS_AS(require_rank(t, 4, "input"), DimensionError);
}

TEST_CASE("check_finite names the offending place") {
  Tensor t({3}, 0.0);
  t[1] = std::numeric_limits<double>::quiet_NaN();
  try {
    t.check_finite("conv1 input");
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("conv1 input") != std::string::npos);
  }
  t[1] = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(t.check_finite("x"), NumericError);
}

TEST_CASE("rng streams are reproducible") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  Rng c(7);
  for (int i = 0; i < 1000; ++i) {
    const double u = c.uniform01();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    CHECK(c.uniform_index(13) < 13);
  }
  CHECK(derive_seed(1, 2) != derive_seed(1, 3));
  CHECK(derive_seed(1, 2) == derive_seed(1, 2));
}

TEST_CASE("normal draws have roughly unit variance") {
  Rng r(3);
  double sum = 0, sq = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double z = r.normal();
    sum += z;
    sq += z * z;
  }
  CHECK(std::abs(sum / n) < 0.05);
  CHECK(std::abs(sq / n - 1.0) < 0.05);
}

TEST_CASE("shuffle is a permutation") {
  Rng r(9);
  std::vector<int> v(50);
  for (int i = 0; i < 50; ++i) v[static_cast<std::size_t>(i)] = i;
  r.shuffle(v);
  std::vector<int> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 50; ++i) CHECK(sorted[static_cast<std::size_t>(i)] == i);
}
