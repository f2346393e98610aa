#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "corridorflow/corridor.hpp"
#include "corridorflow/geometry.hpp"
#include "corridorflow/tensor.hpp"

namespace corridorflow::synth {

using geometry::Vec3;

enum class Family { line, arc, min_jerk_pick_place };

std::string_view to_string(Family f);
Family family_from_string(std::string_view s);
inline constexpr std::size_t kFamilyCount = 3;

// Extended action layout: [dx dy dz gripper | dpx dpy dpz].
inline constexpr Eigen::Index kActionDim = 4;
inline constexpr Eigen::Index kDeltaOffset = kActionDim;
inline constexpr Eigen::Index kExtendedDim = kActionDim + 3;

/// Task descriptor standing in for observation + instruction.
struct TaskContext {
  Vec3 start_pos{};  // EE position where the described window starts
  Vec3 goal_pos{};
  std::optional<Vec3> via_pos;
  Family family = Family::line;
  double progress = 0.0;  // window start / (T_full - 1)

  /// [start, goal, via (zeros if absent), one-hot family, progress].
  std::vector<double> vector() const;
  friend bool operator==(const TaskContext&, const TaskContext&) = default;
};

inline constexpr std::size_t kContextDim = 3 + 3 + 3 + kFamilyCount + 1;

struct GeneratorConfig {
  std::size_t steps = 64;  // T_full: number of trajectory samples
  double dt = 0.05;        // s
  double v_max = 1.0;      // m/s
  Vec3 workspace_min{-0.3, -0.3, 0.05};
  Vec3 workspace_max{0.3, 0.3, 0.35};
  double min_travel = 0.15;  // m, start-to-goal

  void validate() const;
};

struct Episode {
  std::vector<Vec3> positions;  // T_full samples
  std::vector<double> gripper;  // per sample, in [0, 1]
  TaskContext context;          // episode-level: start_pos is the first sample
  double dt = 0.05;
  std::uint64_t seed = 0;

  /// Position after `k` steps; holds the final sample past the end.
  const Vec3& position(std::size_t k) const;
  double gripper_at(std::size_t k) const;
};

/// Deterministic trajectory for the given endpoints. Throws InvalidArgument
/// when the path would exceed v_max * dt per step.
Episode make_episode(Family family, const Vec3& start, const Vec3& goal,
                     const std::optional<Vec3>& via, const GeneratorConfig& cfg);

/// Samples endpoints (and via point) from `seed`, then make_episode.
Episode gen_episode(Family family, std::uint64_t seed, const GeneratorConfig& cfg);

/// One sliding window of an episode.
struct Chunk {
  TaskContext context;
  Matrix actions;            // T x kExtendedDim, raw units
  std::vector<Vec3> segment;  // T + 1 positions, chunk start first
  std::size_t start = 0;
};

/// Windows of T steps every `stride` samples. Commanded deltas carry
/// Gaussian actuation noise; the displacement columns never do.
std::vector<Chunk> chunk_episode(const Episode& ep, std::size_t chunk_length, double noise_std,
                                 std::size_t stride, std::uint64_t noise_seed);

/// Positions reconstructed from the displacement columns, starting at the origin.
std::vector<Vec3> segment_from_chunk(const Matrix& actions, Eigen::Index delta_offset = kDeltaOffset);

/// Anchor indices, targets, corridor width and consistency weights.
corridor::AnchorSpec build_anchor_spec(const Matrix& actions, const std::vector<Vec3>& segment,
                                       const corridor::CorridorConfig& cfg);

}  // namespace corridorflow::synth
