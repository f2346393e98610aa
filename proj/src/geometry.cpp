#include "corridorflow/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "corridorflow/errors.hpp"

namespace corridorflow::geometry {

namespace {

bool finite(const Vec3& v) {
  return std::isfinite(v[0]) && std::isfinite(v[1]) && std::isfinite(v[2]);
}

double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

}  // namespace

Vec3 operator-(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }

double norm(const Vec3& v) { return std::sqrt(dot(v, v)); }

Polyline::Polyline(std::vector<Vec3> points) : points_(std::move(points)) {
  if (points_.size() < 2) throw InvalidArgument("polyline needs at least 2 points");
  for (const auto& p : points_)
    if (!finite(p)) throw InvalidArgument("polyline has a non-finite coordinate");
}

double Polyline::diameter() const {
  double d = 0.0;
  for (std::size_t i = 0; i < points_.size(); ++i)
    for (std::size_t j = i + 1; j < points_.size(); ++j)
      d = std::max(d, norm(points_[j] - points_[i]));
  return d;
}

std::string_view to_string(AnchorMethod m) {
  return m == AnchorMethod::rdp_dp ? "rdp_dp" : "uniform";
}

AnchorMethod anchor_method_from_string(std::string_view s) {
  if (s == "rdp_dp") return AnchorMethod::rdp_dp;
  if (s == "uniform") return AnchorMethod::uniform;
  throw InvalidArgument("unknown anchor method '" + std::string(s) + "'");
}

double point_segment_distance(const Vec3& p, const Vec3& a, const Vec3& b) {
  if (!finite(p) || !finite(a) || !finite(b))
    throw InvalidArgument("point_segment_distance: non-finite input");
  const Vec3 ab = b - a;
  const Vec3 ap = p - a;
  const double len2 = dot(ab, ab);
  if (len2 == 0.0) return norm(ap);
  const double s = std::clamp(dot(ap, ab) / len2, 0.0, 1.0);
  const Vec3 foot{a[0] + s * ab[0], a[1] + s * ab[1], a[2] + s * ab[2]};
  return norm(p - foot);
}

double segment_max_error(const Polyline& poly, std::size_t i, std::size_t j) {
  if (!(i < j) || j >= poly.size())
    throw InvalidArgument("segment_max_error: need 0 <= i < j <= N-1");
  double worst = 0.0;
  for (std::size_t k = i + 1; k < j; ++k)
    worst = std::max(worst, point_segment_distance(poly[k], poly[i], poly[j]));
  return worst;
}

double approximation_error(const Polyline& poly, std::span<const std::size_t> retained) {
  double worst = 0.0;
  for (std::size_t r = 1; r < retained.size(); ++r)
    worst = std::max(worst, segment_max_error(poly, retained[r - 1], retained[r]));
  return worst;
}

std::vector<std::size_t> rdp_simplify(const Polyline& poly, double epsilon) {
  if (!(epsilon >= 0.0)) throw InvalidArgument("rdp_simplify: epsilon must be >= 0");
  const std::size_t n = poly.size();
  std::vector<bool> keep(n, false);
  keep.front() = keep.back() = true;

  // Explicit stack instead of recursion; spans are [first, last].
  std::vector<std::pair<std::size_t, std::size_t>> stack{{0, n - 1}};
  while (!stack.empty()) {
    const auto [first, last] = stack.back();
    stack.pop_back();
    double worst = -1.0;
    std::size_t split = first;
    for (std::size_t k = first + 1; k < last; ++k) {
      const double d = point_segment_distance(poly[k], poly[first], poly[last]);
      if (d > worst) {
        worst = d;
        split = k;
      }
    }
    if (split != first && worst > epsilon) {
      keep[split] = true;
      stack.emplace_back(split, last);
      stack.emplace_back(first, split);
    }
  }

  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < n; ++k)
    if (keep[k]) out.push_back(k);
  return out;
}

MinimaxSelection dp_minimax_select(const Polyline& poly, std::size_t k) {
  std::vector<std::size_t> all(poly.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return dp_minimax_select(poly, k, all);
}

MinimaxSelection dp_minimax_select(const Polyline& poly, std::size_t k,
                                   std::span<const std::size_t> candidates) {
  const std::size_t m = candidates.size();
  if (m < 2 || candidates.front() != 0 || candidates.back() != poly.size() - 1)
    throw InvalidArgument("dp_minimax_select: candidates must span both endpoints");
  for (std::size_t c = 1; c < m; ++c)
    if (candidates[c] <= candidates[c - 1])
      throw InvalidArgument("dp_minimax_select: candidates must be strictly increasing");
  if (k + 2 > m)
    throw InvalidArgument("dp_minimax_select: K=" + std::to_string(k) + " infeasible for " +
                          std::to_string(m) + " points");

  // cost[a][b]: chord error between candidates a < b.
  std::vector<std::vector<double>> cost(m, std::vector<double>(m, 0.0));
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = a + 1; b < m; ++b)
      cost[a][b] = segment_max_error(poly, candidates[a], candidates[b]);

  // best[r][a]: minimal worst error from candidate a to the last point using
  // exactly r more interior picks. Suffix form makes the lexicographic
  // reconstruction a forward greedy scan.
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<std::vector<double>> best(k + 1, std::vector<double>(m, inf));
  for (std::size_t a = 0; a + 1 < m; ++a) best[0][a] = cost[a][m - 1];
  best[0][m - 1] = 0.0;
  for (std::size_t r = 1; r <= k; ++r) {
    for (std::size_t a = 0; a + 1 < m; ++a) {
      double v = inf;
      for (std::size_t b = a + 1; b + 1 < m; ++b)
        v = std::min(v, std::max(cost[a][b], best[r - 1][b]));
      best[r][a] = v;
    }
  }

  MinimaxSelection sel;
  sel.objective = best[k][0];
  std::size_t at = 0;
  for (std::size_t r = k; r >= 1; --r) {
    for (std::size_t b = at + 1; b + 1 < m; ++b) {
      if (std::max(cost[at][b], best[r - 1][b]) <= sel.objective) {
        sel.indices.push_back(candidates[b]);
        at = b;
        break;
      }
    }
  }
  return sel;
}

AnchorIndexSet uniform_select(std::size_t chunk_length, std::size_t k) {
  const std::size_t t = chunk_length;
  if (k < 1 || t < 2 || k > t - 1)
    throw InvalidArgument("uniform_select: need 1 <= K <= T-1 (T=" + std::to_string(t) +
                          ", K=" + std::to_string(k) + ")");
  AnchorIndexSet out{.indices = {}, .method = AnchorMethod::uniform};
  for (std::size_t m = 1; m <= k; ++m) {
    // Integer round-half-up of m*T/K.
    const std::size_t rounded = (2 * m * t + k) / (2 * k);
    std::size_t idx = std::clamp<std::size_t>(rounded, 2, t) - 1;
    // Collisions (K close to T) shift right, keeping room for the rest.
    if (!out.indices.empty()) idx = std::max(idx, out.indices.back() + 1);
    idx = std::min(idx, t - 1 - (k - m));
    out.indices.push_back(idx);
  }
  return out;
}

AnchorSelection select_anchors_rdp_dp(const Polyline& poly, std::size_t k) {
  const std::size_t n = poly.size();
  if (k < 1 || k + 2 > n)
    throw InvalidArgument("select_anchors: K=" + std::to_string(k) + " infeasible for " +
                          std::to_string(n) + " points");
  const std::size_t budget = k + 2;

  AnchorSelection out;
  std::vector<std::size_t> candidates = rdp_simplify(poly, 0.0);
  if (candidates.size() <= budget) {
    candidates.resize(n);
    std::iota(candidates.begin(), candidates.end(), std::size_t{0});
  } else {
    double lo = 0.0;
    double hi = poly.diameter();
    for (int it = 0; it < kEpsilonBisectionIterations; ++it) {
      const double mid = 0.5 * (lo + hi);
      auto kept = rdp_simplify(poly, mid);
      if (kept.size() <= budget) {
        hi = mid;
      } else {
        lo = mid;
        candidates = std::move(kept);
      }
    }
    out.epsilon = hi;
  }

  auto sel = dp_minimax_select(poly, k, candidates);
  out.anchors = AnchorIndexSet{.indices = std::move(sel.indices), .method = AnchorMethod::rdp_dp};
  out.objective = sel.objective;
  out.candidate_count = candidates.size();
  return out;
}

}  // namespace corridorflow::geometry
