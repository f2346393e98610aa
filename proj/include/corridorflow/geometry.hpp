#pragma once

// Polyline error metrics and anchor-step selection: RDP simplification,
// DP minimax down-selection, and the uniform-interval baseline.

#include <array>
#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace corridorflow::geometry {

using Vec3 = std::array<double, 3>;

/// Ordered 3D positions (meters), N >= 2, all coordinates finite.
class Polyline {
 public:
  explicit Polyline(std::vector<Vec3> points);

  std::size_t size() const noexcept { return points_.size(); }
  const Vec3& operator[](std::size_t i) const { return points_[i]; }
  std::span<const Vec3> points() const noexcept { return points_; }

  /// Largest pairwise distance between points.
  double diameter() const;

 private:
  std::vector<Vec3> points_;
};

enum class AnchorMethod { rdp_dp, uniform };

std::string_view to_string(AnchorMethod m);
AnchorMethod anchor_method_from_string(std::string_view s);

/// K strictly increasing step indices into a length-T chunk, 0 < idx <= T-1.
struct AnchorIndexSet {
  std::vector<std::size_t> indices;
  AnchorMethod method = AnchorMethod::rdp_dp;

  std::size_t size() const noexcept { return indices.size(); }
  friend bool operator==(const AnchorIndexSet&, const AnchorIndexSet&) = default;
};

/// DP selection result: interior indices plus the achieved worst-case error.
struct MinimaxSelection {
  std::vector<std::size_t> indices;
  double objective = 0.0;
};

double norm(const Vec3& v);
Vec3 operator-(const Vec3& a, const Vec3& b);

/// Distance from p to the closed segment [a, b]; distance to a when a == b.
double point_segment_distance(const Vec3& p, const Vec3& a, const Vec3& b);

/// Max distance of points strictly between i and j to the chord [i, j].
double segment_max_error(const Polyline& poly, std::size_t i, std::size_t j);

/// Worst segment_max_error over consecutive pairs of `retained`.
double approximation_error(const Polyline& poly, std::span<const std::size_t> retained);

/// Ramer-Douglas-Peucker. Returns retained indices including 0 and N-1.
std::vector<std::size_t> rdp_simplify(const Polyline& poly, double epsilon);

/// Exactly K interior indices (endpoints implicit) minimizing the worst
/// chord error; ties resolve to the lexicographically smallest sequence.
MinimaxSelection dp_minimax_select(const Polyline& poly, std::size_t k);

/// Same, restricted to a candidate subset. `candidates` must be strictly
/// increasing and start/end at 0 and N-1; errors are still measured
/// against every point of `poly`.
MinimaxSelection dp_minimax_select(const Polyline& poly, std::size_t k,
                                   std::span<const std::size_t> candidates);

/// round(m*T/K) - 1 clamped to [1, T-1] for m = 1..K. Where two indices
/// would coincide the later one moves right to the next free step.
AnchorIndexSet uniform_select(std::size_t chunk_length, std::size_t k);

/// Two-stage pipeline: RDP at a bisected epsilon proposes candidates, DP
/// minimax down-selects exactly K of them. `poly` is the chunk segment
/// (T+1 points); the returned indices are its interior points 1..T-1.
struct AnchorSelection {
  AnchorIndexSet anchors;
  double objective = 0.0;
  double epsilon = 0.0;
  std::size_t candidate_count = 0;
};

AnchorSelection select_anchors_rdp_dp(const Polyline& poly, std::size_t k);

inline constexpr int kEpsilonBisectionIterations = 12;

}  // namespace corridorflow::geometry
