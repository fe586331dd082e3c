#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "modeq/parallel.hpp"
#include "modeq/rng.hpp"

using namespace modeq;

TEST_CASE("philox blocks are deterministic and distinct") {
  const auto a = rng::philox_block(42, 7, 0);
  const auto b = rng::philox_block(42, 7, 0);
  CHECK(a[0] == b[0]);
  CHECK(a[1] == b[1]);
  const auto c = rng::philox_block(42, 7, 1);
  CHECK(a[0] != c[0]);
  const auto d = rng::philox_block(43, 7, 0);
  CHECK(a[0] != d[0]);
  const auto e = rng::philox_block(42, 8, 0);
  CHECK(a[0] != e[0]);
}

TEST_CASE("vector kernel matches the scalar reference bit for bit") {
  const int n = 1037;  // odd on purpose: exercises the scalar tail
  std::vector<double> fast(2 * n), ref(2 * n);
  rng::fill_normals(123456789, 55, 17, n, fast.data());
  rng::fill_normals_reference(123456789, 55, 17, n, ref.data());
  for (int i = 0; i < 2 * n; ++i) {
    CHECK(fast[i] == ref[i]);
  }
}

TEST_CASE("fill_normals is independent of chunking") {
  std::vector<double> whole(2 * 64), split(2 * 64);
  rng::fill_normals(9, 3, 100, 64, whole.data());
  rng::fill_normals(9, 3, 100, 20, split.data());
  rng::fill_normals(9, 3, 120, 44, split.data() + 40);
  for (int i = 0; i < 128; ++i) CHECK(whole[i] == split[i]);
}

TEST_CASE("normal moments match a standard Gaussian") {
  const int n_blocks = 1 << 19;
  std::vector<double> z(2 * n_blocks);
  rng::fill_normals(2024, rng::stream_id(rng::Purpose::kIncrements, 0), 0,
                    n_blocks, z.data());
  const std::size_t n = z.size();
  double m1 = 0, m2 = 0, m3 = 0, m4 = 0;
  for (double v : z) {
    m1 += v;
    m2 += v * v;
    m3 += v * v * v;
    m4 += v * v * v * v;
  }
  m1 /= n;
  m2 /= n;
  m3 /= n;
  m4 /= n;
  const double se = 1.0 / std::sqrt(static_cast<double>(n));
  CHECK(std::abs(m1) < 5 * se);
  CHECK(std::abs(m2 - 1.0) < 5 * std::sqrt(2.0) * se);
  CHECK(std::abs(m3) < 5 * std::sqrt(15.0) * se);
  CHECK(std::abs(m4 - 3.0) < 5 * std::sqrt(96.0) * se);
}

TEST_CASE("uniforms are in (0,1) with the right mean") {
  const int n_blocks = 1 << 16;
  std::vector<double> u(2 * n_blocks);
  rng::fill_uniforms(7, 1, 0, n_blocks, u.data());
  double mean = 0;
  for (double v : u) {
    REQUIRE(v > 0.0);
    REQUIRE(v < 1.0);
    mean += v;
  }
  mean /= u.size();
  CHECK(std::abs(mean - 0.5) < 5.0 / std::sqrt(12.0 * u.size()));
}

TEST_CASE("gaussian_vector layout matches fill_normals") {
  // d = 3 consumes 2 blocks per vector; components are the first 3 of 4 values.
  const int d = 3;
  double direct[3];
  rng::gaussian_vector(77, 5, 4, d, direct);
  std::vector<double> raw(2 * 2);
  rng::fill_normals(77, 5, 8, 2, raw.data());
  CHECK(direct[0] == raw[0]);
  CHECK(direct[1] == raw[1]);
  CHECK(direct[2] == raw[2]);
}

TEST_CASE("pairwise sum is order-deterministic and accurate") {
  std::vector<double> v(10001);
  for (std::size_t i = 0; i < v.size(); ++i) {
    v[i] = std::sin(0.1 * static_cast<double>(i)) * 1e-3 + 1.0;
  }
  const double s1 = pairwise_sum(v);
  const double s2 = pairwise_sum(v);
  CHECK(s1 == s2);
  long double exact = 0;
  for (double x : v) exact += x;
  CHECK(std::abs(s1 - static_cast<double>(exact)) < 1e-9);
}
