#include <atomic>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "lrpq/parallel.hpp"
#include "lrpq/rng.hpp"

using lrpq::mix_seed;
using lrpq::parallel_for;
using lrpq::Rng;

TEST_CASE("rng streams are deterministic") {
  Rng a(42);
  Rng b(42);
  for (int i = 0; i < 1000; ++i) CHECK(a.uniform() == b.uniform());
  Rng c(42);
  Rng d(43);
  bool all_equal = true;
  for (int i = 0; i < 100; ++i) {
    if (c.uniform() != d.uniform()) all_equal = false;
  }
  CHECK_FALSE(all_equal);
}

TEST_CASE("uniform stays in [0,1) and centers near one half") {
  Rng rng(7);
  double sum = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += u;
  }
  CHECK(std::abs(sum / n - 0.5) < 0.005);
}

TEST_CASE("normal moments match the standard law") {
  Rng rng(11);
  const int n = 200000;
  double mean = 0.0;
  double sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    mean += z;
    sq += z * z;
  }
  mean /= n;
  sq /= n;
  CHECK(std::abs(mean) < 0.01);
  CHECK(std::abs(sq - 1.0) < 0.02);
}

TEST_CASE("student t3 is symmetric with heavy tails") {
  Rng rng(13);
  const int n = 200000;
  double mean = 0.0;
  int beyond3 = 0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.student_t3();
    mean += z;
    if (std::abs(z) > 3.0) ++beyond3;
  }
  mean /= n;
  CHECK(std::abs(mean) < 0.02);
  const double tail = static_cast<double>(beyond3) / n;
  CHECK(tail > 0.02);  // normal tail mass beyond 3 is ~0.0027
  CHECK(tail < 0.08);
}

TEST_CASE("beta_int(2,5) has the Beta(2,5) mean") {
  Rng rng(17);
  const int n = 100000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const double b = rng.beta_int(2, 5);
    REQUIRE(b >= 0.0);
    REQUIRE(b <= 1.0);
    sum += b;
  }
  CHECK(std::abs(sum / n - 2.0 / 7.0) < 0.005);
}

TEST_CASE("below(n) is in range and roughly uniform") {
  Rng rng(19);
  std::vector<int> counts(5, 0);
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const auto v = rng.below(5);
    REQUIRE(v < 5);
    ++counts[static_cast<std::size_t>(v)];
  }
  for (int c : counts) CHECK(std::abs(c - n / 5) < 800);
}

TEST_CASE("mix_seed separates streams and indices") {
  CHECK(mix_seed(1, 2, 3) == mix_seed(1, 2, 3));
  CHECK(mix_seed(1, 2, 3) != mix_seed(1, 2, 4));
  CHECK(mix_seed(1, 2, 3) != mix_seed(1, 3, 3));
  CHECK(mix_seed(1, 2, 3) != mix_seed(2, 2, 3));
}

TEST_CASE("parallel_for covers every index once for any worker count") {
  for (int workers : {1, 2, 5}) {
    std::vector<int> hits(500, 0);
    parallel_for(hits.size(), workers,
                 [&](std::size_t i) { hits[i] += 1; });
    CHECK(std::accumulate(hits.begin(), hits.end(), 0) == 500);
    for (int h : hits) CHECK(h == 1);
  }
}

TEST_CASE("parallel_for rethrows the worker exception") {
  CHECK_THROWS_AS(parallel_for(16, 3,
                               [&](std::size_t i) {
                                 if (i == 7) throw std::runtime_error("boom");
                               }),
                  std::runtime_error);
}

TEST_CASE("per-slot outputs are identical across worker counts") {
  auto fill = [](int workers) {
    std::vector<double> out(64);
    parallel_for(out.size(), workers, [&](std::size_t i) {
      Rng rng(mix_seed(99, 1, i));
      out[i] = rng.normal();
    });
    return out;
  };
  const auto seq = fill(1);
  const auto par = fill(4);
  for (std::size_t i = 0; i < seq.size(); ++i) CHECK(seq[i] == par[i]);
}
