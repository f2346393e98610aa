#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "corridorflow/errors.hpp"
#include "corridorflow/geometry.hpp"

using namespace corridorflow;
using namespace corridorflow::geometry;

namespace {

Polyline random_polyline(std::mt19937_64& gen, std::size_t n) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<Vec3> pts(n);
  for (auto& p : pts) p = {u(gen), u(gen), u(gen)};
  return Polyline(pts);
}

// Exhaustive oracle: every K-subset of interior points, lexicographic order.
MinimaxSelection brute_force(const Polyline& poly, std::size_t k) {
  const std::size_t n = poly.size();
  MinimaxSelection best{{}, std::numeric_limits<double>::infinity()};
  std::vector<bool> pick(n - 2, false);
  std::fill(pick.begin(), pick.begin() + static_cast<long>(k), true);
  do {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < pick.size(); ++i)
      if (pick[i]) idx.push_back(i + 1);
    double worst = 0.0;
    std::size_t prev = 0;
    for (std::size_t j : idx) {
      worst = std::max(worst, segment_max_error(poly, prev, j));
      prev = j;
    }
    worst = std::max(worst, segment_max_error(poly, prev, n - 1));
    if (worst < best.objective) best = {idx, worst};
  } while (std::prev_permutation(pick.begin(), pick.end()));
  return best;
}

}  // namespace

TEST_CASE("point_segment_distance") {
  CHECK(point_segment_distance({0, 1, 0}, {0, 0, 0}, {1, 0, 0}) == 1.0);
  CHECK(point_segment_distance({0, 0, 0}, {0, 0, 0}, {1, 0, 0}) == 0.0);
  CHECK(point_segment_distance({2, 1, 0}, {0, 0, 0}, {1, 0, 0}) ==
        doctest::Approx(std::hypot(1.0, 1.0)).epsilon(1e-15));
  CHECK(point_segment_distance({3, 4, 0}, {0, 0, 0}, {0, 0, 0}) == doctest::Approx(5.0));
  const double nan = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(point_segment_distance({nan, 0, 0}, {0, 0, 0}, {1, 0, 0}), InvalidArgument);
}

TEST_CASE("segment_max_error") {
  const Polyline tri({{0, 0, 0}, {0.5, 0.4, 0}, {1, 0, 0}});
  CHECK(segment_max_error(tri, 0, 2) == doctest::Approx(0.4).epsilon(1e-15));
  CHECK(segment_max_error(tri, 0, 1) == 0.0);
  CHECK(segment_max_error(tri, 1, 2) == 0.0);
  const Polyline line({{0, 0, 0}, {1, 1, 1}, {2, 2, 2}, {3, 3, 3}});
  CHECK(segment_max_error(line, 0, 3) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK_THROWS_AS(segment_max_error(tri, 2, 1), InvalidArgument);
  CHECK_THROWS_AS(segment_max_error(tri, 0, 3), InvalidArgument);
  CHECK_THROWS_AS(segment_max_error(tri, 1, 1), InvalidArgument);
}

TEST_CASE("polyline invariants") {
  CHECK_THROWS_AS(Polyline({{0, 0, 0}}), InvalidArgument);
  CHECK_THROWS_AS(Polyline({{0, 0, 0}, {std::numeric_limits<double>::infinity(), 0, 0}}),
                  InvalidArgument);
}

TEST_CASE("rdp_simplify examples") {
  std::vector<Vec3> pts;
  for (int i = 0; i < 10; ++i) pts.push_back({0.1 * i, 0.2 * i, 0.0});
  CHECK(rdp_simplify(Polyline(pts), 0.01) == std::vector<std::size_t>{0, 9});
  const Polyline tri({{0, 0, 0}, {0.5, 0.4, 0}, {1, 0, 0}});
  CHECK(rdp_simplify(tri, 0.3) == std::vector<std::size_t>{0, 1, 2});
  CHECK(rdp_simplify(tri, 0.5) == std::vector<std::size_t>{0, 2});
  CHECK_THROWS_AS(rdp_simplify(tri, -1.0), InvalidArgument);
}

TEST_CASE("rdp error bound and idempotence on random polylines") {
  std::mt19937_64 gen(17);
  std::uniform_real_distribution<double> eps_dist(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const auto poly = random_polyline(gen, 2 + gen() % 30);
    const double eps = eps_dist(gen);
    const auto kept = rdp_simplify(poly, eps);
    REQUIRE(kept.front() == 0);
    REQUIRE(kept.back() == poly.size() - 1);
    for (std::size_t i = 0; i + 1 < kept.size(); ++i)
      CHECK(segment_max_error(poly, kept[i], kept[i + 1]) <= eps);
    std::vector<Vec3> sub;
    for (auto i : kept) sub.push_back(poly[i]);
    CHECK(rdp_simplify(Polyline(sub), eps).size() == kept.size());
  }
}

TEST_CASE("dp_minimax_select examples") {
  std::vector<Vec3> line;
  for (int i = 0; i < 6; ++i) line.push_back({1.0 * i, 0, 0});
  const auto one = dp_minimax_select(Polyline(line), 1);
  CHECK(one.indices == std::vector<std::size_t>{1});
  CHECK(one.objective == 0.0);

  std::mt19937_64 gen(3);
  const auto poly = random_polyline(gen, 7);
  const auto full = dp_minimax_select(poly, 5);
  CHECK(full.indices == std::vector<std::size_t>{1, 2, 3, 4, 5});
  CHECK(full.objective == 0.0);

  std::vector<Vec3> zig;
  for (int i = 0; i < 8; ++i) zig.push_back({1.0 * i, (i % 2) ? 0.5 : -0.5 + 0.1 * i, 0.0});
  const Polyline zz(zig);
  const auto dp = dp_minimax_select(zz, 2);
  const auto bf = brute_force(zz, 2);
  CHECK(dp.objective == bf.objective);
  CHECK(dp.indices == bf.indices);

  CHECK_THROWS_AS(dp_minimax_select(zz, 7), InvalidArgument);
  const auto none = dp_minimax_select(zz, 0);
  CHECK(none.indices.empty());
  CHECK(none.objective == segment_max_error(zz, 0, 7));
}

TEST_CASE("dp_minimax_select matches exhaustive enumeration") {
  std::mt19937_64 gen(99);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 3 + gen() % 10;
    const std::size_t k = 1 + gen() % std::min<std::size_t>(4, n - 2);
    const auto poly = random_polyline(gen, n);
    const auto dp = dp_minimax_select(poly, k);
    const auto bf = brute_force(poly, k);
    CHECK(dp.objective == bf.objective);
    CHECK(dp.indices == bf.indices);
  }
}

TEST_CASE("dp objective is non-increasing in K on circular arcs") {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> span(0.5, 6.0);
  for (int trial = 0; trial < 20; ++trial) {
    const double a = span(gen);
    std::vector<Vec3> pts;
    for (int i = 0; i < 12; ++i) pts.push_back({std::cos(a * i / 11.0), std::sin(a * i / 11.0), 0.0});
    const Polyline poly(pts);
    double prev = std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k <= 10; ++k) {
      const double obj = dp_minimax_select(poly, k).objective;
      CHECK(obj <= prev);
      prev = obj;
    }
  }
}

TEST_CASE("uniform_select") {
  CHECK(uniform_select(12, 3).indices == std::vector<std::size_t>{3, 7, 11});
  CHECK(uniform_select(4, 1).indices == std::vector<std::size_t>{3});
  CHECK(uniform_select(9, 3).indices == std::vector<std::size_t>{2, 5, 8});
  CHECK(uniform_select(9, 3).method == AnchorMethod::uniform);
  CHECK(uniform_select(7, 6).indices == std::vector<std::size_t>{1, 2, 3, 4, 5, 6});
  for (std::size_t t = 2; t <= 40; ++t)
    for (std::size_t k = 1; k <= t - 1; ++k) {
      const auto idx = uniform_select(t, k).indices;
      REQUIRE(idx.size() == k);
      CHECK(idx.front() >= 1);
      CHECK(idx.back() <= t - 1);
      for (std::size_t i = 1; i < k; ++i) CHECK(idx[i] > idx[i - 1]);
      // round(m T / K) - 1 clamped to [1, T-1], whenever that is already strictly increasing
      std::vector<std::size_t> raw;
      for (std::size_t m = 1; m <= k; ++m) {
        const double r = std::floor(static_cast<double>(m * t) / static_cast<double>(k) + 0.5);
        raw.push_back(static_cast<std::size_t>(std::clamp(r - 1.0, 1.0, t - 1.0)));
      }
      if (std::adjacent_find(raw.begin(), raw.end(), std::greater_equal<>()) == raw.end())
        CHECK(idx == raw);
    }
  CHECK_THROWS_AS(uniform_select(4, 4), InvalidArgument);
  CHECK_THROWS_AS(uniform_select(4, 0), InvalidArgument);
}

TEST_CASE("two-stage anchor selection") {
  std::mt19937_64 gen(11);
  for (int trial = 0; trial < 50; ++trial) {
    const auto poly = random_polyline(gen, 17);
    const auto sel = select_anchors_rdp_dp(poly, 3);
    REQUIRE(sel.anchors.size() == 3);
    CHECK(sel.anchors.method == AnchorMethod::rdp_dp);
    CHECK(sel.anchors.indices.front() >= 1);
    CHECK(sel.anchors.indices.back() <= 16);
    CHECK(sel.candidate_count >= 5);
    std::vector<std::size_t> retained{0};
    retained.insert(retained.end(), sel.anchors.indices.begin(), sel.anchors.indices.end());
    retained.push_back(16);
    CHECK(approximation_error(poly, retained) == sel.objective);
    // Restricting candidates can only make the minimax objective worse.
    CHECK(sel.objective >= dp_minimax_select(poly, 3).objective);
  }
  std::vector<Vec3> line;
  for (int i = 0; i < 5; ++i) line.push_back({0.1 * i, 0, 0});
  CHECK(select_anchors_rdp_dp(Polyline(line), 1).anchors.indices == std::vector<std::size_t>{1});
  CHECK_THROWS_AS(select_anchors_rdp_dp(Polyline(line), 4), InvalidArgument);
}
