#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

#include "bads/batching.hpp"
#include "bads/rng.hpp"

using namespace bads;

TEST_CASE("same seed and stream give the same draws") {
  Rng a(42, 3), b(42, 3);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  Rng c(42, 3);
  c.next_u64();
  CHECK(c.counter() == 1);
}

TEST_CASE("substreams do not share draws") {
  const Rng root(7);
  Rng s1 = root.substream(1), s2 = root.substream(2);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 1000; ++i) seen.insert(s1.next_u64());
  int shared = 0;
  for (int i = 0; i < 1000; ++i) shared += seen.count(s2.next_u64()) ? 1 : 0;
  CHECK(shared == 0);
  CHECK(root.substream(1).next_u64() == Rng(7).substream(1).next_u64());
}

TEST_CASE("uniform and normal moments") {
  Rng rng(11);
  const int n = 200000;
  double su = 0, su2 = 0, sn = 0, sn2 = 0, sn4 = 0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    su += u;
    su2 += u * u;
    const double z = rng.normal();
    sn += z;
    sn2 += z * z;
    sn4 += z * z * z * z;
  }
  // 5 standard errors
  CHECK(std::abs(su / n - 0.5) < 5 * std::sqrt(1.0 / 12 / n));
  CHECK(std::abs(su2 / n - 1.0 / 3) < 5 * std::sqrt(4.0 / 45 / n));
  CHECK(std::abs(sn / n) < 5 / std::sqrt(double(n)));
  CHECK(std::abs(sn2 / n - 1.0) < 5 * std::sqrt(2.0 / n));
  CHECK(std::abs(sn4 / n - 3.0) < 5 * std::sqrt(96.0 / n));
}

TEST_CASE("below is unbiased over a non power of two") {
  Rng rng(5);
  const int k = 7, n = 70000;
  std::vector<int> counts(k, 0);
  for (int i = 0; i < n; ++i) {
    const auto v = rng.below(k);
    REQUIRE(v < static_cast<std::uint64_t>(k));
    ++counts[v];
  }
  double chi2 = 0;
  for (int c : counts) chi2 += (c - n / double(k)) * (c - n / double(k)) / (n / double(k));
  // 6 degrees of freedom; P(chi2 > 22.46) = 0.001
  CHECK(chi2 < 22.46);
}

TEST_CASE("batch stream covers each id once per epoch") {
  BatchStream stream(iota_ids(10), 3, Rng(1));
  std::multiset<std::size_t> seen;
  for (int b = 0; b < 3; ++b) {
    for (auto id : stream.next()) seen.insert(id);
  }
  CHECK(seen.size() == 9);
  CHECK(std::set<std::size_t>(seen.begin(), seen.end()).size() == 9);
  stream.next();
  CHECK(stream.epoch() == 1);
  CHECK_THROWS(BatchStream(iota_ids(2), 3, Rng(1)));
}
