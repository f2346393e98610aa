#include "corridorflow/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "corridorflow/errors.hpp"
#include "corridorflow/rng.hpp"

namespace corridorflow::synth {

using geometry::norm;
using geometry::operator-;

namespace {

Vec3 lerp(const Vec3& a, const Vec3& b, double s) {
  return {a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1]), a[2] + s * (b[2] - a[2])};
}

double min_jerk(double s) { return s * s * s * (10.0 - 15.0 * s + 6.0 * s * s); }

Eigen::Vector3d to_eigen(const Vec3& v) { return {v[0], v[1], v[2]}; }
Vec3 from_eigen(const Eigen::Vector3d& v) { return {v.x(), v.y(), v.z()}; }

// Constant angular speed along the circle through start, via and goal,
// sweeping the side that contains the via point.
std::vector<Vec3> circular_arc(const Vec3& start, const Vec3& via, const Vec3& goal, std::size_t n) {
  const Eigen::Vector3d s = to_eigen(start);
  const Eigen::Vector3d u = to_eigen(via) - s;
  const Eigen::Vector3d w = to_eigen(goal) - s;
  const Eigen::Vector3d normal = u.cross(w);
  if (normal.norm() < 1e-9 * u.norm() * w.norm())
    throw InvalidArgument("arc: start, via and goal are collinear");

  Eigen::Matrix3d lhs;
  lhs.row(0) = u.transpose();
  lhs.row(1) = w.transpose();
  lhs.row(2) = normal.transpose();
  const Eigen::Vector3d rhs(0.5 * u.squaredNorm(), 0.5 * w.squaredNorm(), 0.0);
  const Eigen::Vector3d center = s + lhs.colPivHouseholderQr().solve(rhs);

  const Eigen::Vector3d e1 = (s - center).normalized();
  const double radius = (s - center).norm();
  Eigen::Vector3d e2 = normal.normalized().cross(e1);
  auto angle = [&](const Eigen::Vector3d& p, const Eigen::Vector3d& axis2) {
    const Eigen::Vector3d d = p - center;
    double a = std::atan2(d.dot(axis2), d.dot(e1));
    return a < 0.0 ? a + 2.0 * std::numbers::pi : a;
  };
  double via_angle = angle(to_eigen(via), e2);
  double goal_angle = angle(to_eigen(goal), e2);
  if (via_angle > goal_angle) {
    e2 = -e2;
    goal_angle = angle(to_eigen(goal), e2);
  }

  std::vector<Vec3> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double a = goal_angle * static_cast<double>(k) / static_cast<double>(n - 1);
    out[k] = from_eigen(center + radius * (std::cos(a) * e1 + std::sin(a) * e2));
  }
  out.front() = start;
  out.back() = goal;
  return out;
}

Vec3 sample_box(Rng& rng, const GeneratorConfig& cfg) {
  Vec3 p;
  for (int i = 0; i < 3; ++i)
    p[i] = cfg.workspace_min[i] + rng.uniform() * (cfg.workspace_max[i] - cfg.workspace_min[i]);
  return p;
}

}  // namespace

std::string_view to_string(Family f) {
  switch (f) {
    case Family::line: return "line";
    case Family::arc: return "arc";
    case Family::min_jerk_pick_place: return "min_jerk_pick_place";
  }
  return "line";
}

Family family_from_string(std::string_view s) {
  if (s == "line") return Family::line;
  if (s == "arc") return Family::arc;
  if (s == "min_jerk_pick_place") return Family::min_jerk_pick_place;
  throw InvalidArgument("unknown trajectory family '" + std::string(s) + "'");
}

std::vector<double> TaskContext::vector() const {
  std::vector<double> v;
  v.reserve(kContextDim);
  v.insert(v.end(), start_pos.begin(), start_pos.end());
  v.insert(v.end(), goal_pos.begin(), goal_pos.end());
  const Vec3 via = via_pos.value_or(Vec3{0.0, 0.0, 0.0});
  v.insert(v.end(), via.begin(), via.end());
  for (std::size_t f = 0; f < kFamilyCount; ++f)
    v.push_back(static_cast<std::size_t>(family) == f ? 1.0 : 0.0);
  v.push_back(progress);
  return v;
}

void GeneratorConfig::validate() const {
  if (steps < 8) throw InvalidArgument("generator: T_full must be >= 8");
  if (!(v_max > 0.0)) throw InvalidArgument("generator: v_max must be > 0");
  if (!(dt > 0.0)) throw InvalidArgument("generator: dt must be > 0");
  for (int i = 0; i < 3; ++i)
    if (!(workspace_max[i] > workspace_min[i]))
      throw InvalidArgument("generator: empty workspace box");
  if (!(min_travel > 0.0)) throw InvalidArgument("generator: min_travel must be > 0");
}

const Vec3& Episode::position(std::size_t k) const {
  return positions[std::min(k, positions.size() - 1)];
}

double Episode::gripper_at(std::size_t k) const { return gripper[std::min(k, gripper.size() - 1)]; }

Episode make_episode(Family family, const Vec3& start, const Vec3& goal,
                     const std::optional<Vec3>& via, const GeneratorConfig& cfg) {
  cfg.validate();
  if (norm(goal - start) <= 0.0) throw InvalidArgument("episode: goal equals start");
  const std::size_t n = cfg.steps;

  Episode ep;
  ep.dt = cfg.dt;
  ep.context = TaskContext{start, goal, via, family, 0.0};
  ep.gripper.assign(n, 1.0);
  switch (family) {
    case Family::line:
      ep.context.via_pos.reset();
      for (std::size_t k = 0; k < n; ++k)
        ep.positions.push_back(lerp(start, goal, static_cast<double>(k) / static_cast<double>(n - 1)));
      break;
    case Family::arc:
      if (!via) throw InvalidArgument("arc episode needs a via point");
      ep.positions = circular_arc(start, *via, goal, n);
      break;
    case Family::min_jerk_pick_place: {
      if (!via) throw InvalidArgument("pick-place episode needs a via point");
      const std::size_t mid = (n - 1) / 2;
      for (std::size_t k = 0; k <= mid; ++k)
        ep.positions.push_back(lerp(start, *via, min_jerk(static_cast<double>(k) / static_cast<double>(mid))));
      for (std::size_t k = mid + 1; k < n; ++k)
        ep.positions.push_back(lerp(*via, goal, min_jerk(static_cast<double>(k - mid) / static_cast<double>(n - 1 - mid))));
      for (std::size_t k = mid; k < n; ++k) ep.gripper[k] = 0.0;
      break;
    }
  }

  const double max_step = cfg.v_max * cfg.dt;
  for (std::size_t k = 1; k < n; ++k)
    if (norm(ep.positions[k] - ep.positions[k - 1]) > max_step)
      throw InvalidArgument("episode exceeds v_max between samples " + std::to_string(k - 1) +
                            " and " + std::to_string(k));
  return ep;
}

Episode gen_episode(Family family, std::uint64_t seed, const GeneratorConfig& cfg) {
  cfg.validate();
  constexpr int kAttempts = 256;
  for (int attempt = 0; attempt < kAttempts; ++attempt) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(attempt)));
    const Vec3 start = sample_box(rng, cfg);
    const Vec3 goal = sample_box(rng, cfg);
    if (norm(goal - start) < cfg.min_travel) continue;

    std::optional<Vec3> via;
    if (family == Family::arc) {
      // Bulge sideways from the chord so the arc stays under a half circle.
      const Vec3 mid = lerp(start, goal, 0.5);
      const Eigen::Vector3d chord = to_eigen(goal - start);
      Eigen::Vector3d side = chord.cross(Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal()));
      if (side.norm() < 1e-6) continue;
      side *= (0.15 + 0.3 * rng.uniform()) * chord.norm() / side.norm();
      via = Vec3{mid[0] + side.x(), mid[1] + side.y(), mid[2] + side.z()};
    } else if (family == Family::min_jerk_pick_place) {
      via = sample_box(rng, cfg);
      if (norm(*via - start) < 0.5 * cfg.min_travel || norm(goal - *via) < 0.5 * cfg.min_travel)
        continue;
    }
    try {
      Episode ep = make_episode(family, start, goal, via, cfg);
      ep.seed = seed;
      return ep;
    } catch (const InvalidArgument&) {
      continue;
    }
  }
  throw InvalidArgument("gen_episode: no admissible episode for this configuration");
}

std::vector<Chunk> chunk_episode(const Episode& ep, std::size_t chunk_length, double noise_std,
                                 std::size_t stride, std::uint64_t noise_seed) {
  const std::size_t n = ep.positions.size();
  if (chunk_length == 0 || chunk_length > n)
    throw InvalidArgument("chunk_episode: need 1 <= T <= T_full");
  if (!(noise_std >= 0.0)) throw InvalidArgument("chunk_episode: noise_std must be >= 0");
  if (stride == 0) throw InvalidArgument("chunk_episode: stride must be >= 1");

  Rng rng(noise_seed);
  std::vector<Chunk> out;
  const auto t = static_cast<Eigen::Index>(chunk_length);
  for (std::size_t s = 0; s + chunk_length <= n; s += stride) {
    Chunk c;
    c.start = s;
    c.context = ep.context;
    c.context.start_pos = ep.position(s);
    c.context.progress = static_cast<double>(s) / static_cast<double>(n - 1);
    c.actions.resize(t, kExtendedDim);
    for (std::size_t j = 0; j <= chunk_length; ++j) c.segment.push_back(ep.position(s + j));
    for (Eigen::Index j = 0; j < t; ++j) {
      const auto sj = static_cast<std::size_t>(j);
      const Vec3 delta = c.segment[sj + 1] - c.segment[sj];
      for (Eigen::Index d = 0; d < 3; ++d) {
        c.actions(j, d) = delta[static_cast<std::size_t>(d)] + noise_std * rng.normal();
        c.actions(j, kDeltaOffset + d) = delta[static_cast<std::size_t>(d)];
      }
      c.actions(j, 3) = ep.gripper_at(s + sj + 1);
    }
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<Vec3> segment_from_chunk(const Matrix& actions, Eigen::Index delta_offset) {
  if (delta_offset < 0 || delta_offset + 3 > actions.cols())
    throw InvalidArgument("segment_from_chunk: displacement columns outside chunk");
  std::vector<Vec3> seg{{0.0, 0.0, 0.0}};
  for (Eigen::Index j = 0; j < actions.rows(); ++j) {
    Vec3 p = seg.back();
    for (Eigen::Index d = 0; d < 3; ++d) p[static_cast<std::size_t>(d)] += actions(j, delta_offset + d);
    seg.push_back(p);
  }
  return seg;
}

corridor::AnchorSpec build_anchor_spec(const Matrix& actions, const std::vector<Vec3>& segment,
                                       const corridor::CorridorConfig& cfg) {
  cfg.validate();
  const std::size_t t = static_cast<std::size_t>(actions.rows());
  const std::size_t k = cfg.anchors;
  if (segment.size() != t + 1)
    throw InvalidArgument("build_anchor_spec: segment must have T+1 points");
  if (t < 2 || k > t - 1)
    throw InvalidArgument("build_anchor_spec: K=" + std::to_string(k) + " exceeds T-1=" +
                          std::to_string(t < 1 ? 0 : t - 1));

  corridor::AnchorSpec spec;
  if (cfg.anchor_method == geometry::AnchorMethod::uniform)
    spec.indices = geometry::uniform_select(t, k);
  else
    spec.indices = geometry::select_anchors_rdp_dp(geometry::Polyline(segment), k).anchors;

  const auto kk = static_cast<Eigen::Index>(k);
  spec.delta_targets.resize(kk, 3);
  spec.pos_targets.resize(kk, 3);
  std::size_t prev = 0;
  for (std::size_t a = 0; a < k; ++a) {
    const std::size_t idx = spec.indices.indices[a];
    const Vec3 inc = cfg.anchor_target == corridor::AnchorTarget::inter_anchor
                         ? segment[idx] - segment[prev]
                         : segment[idx + 1] - segment[idx];
    const Vec3 rel = segment[idx] - segment[0];
    for (Eigen::Index d = 0; d < 3; ++d) {
      spec.delta_targets(static_cast<Eigen::Index>(a), d) = inc[static_cast<std::size_t>(d)];
      spec.pos_targets(static_cast<Eigen::Index>(a), d) = rel[static_cast<std::size_t>(d)];
    }
    prev = idx;
  }

  const Eigen::Index offset = cfg.enable_extra_a ? kDeltaOffset : 0;
  const Matrix g_star = corridor::extract_anchors_g(actions, spec.indices, offset);
  spec.width = corridor::corridor_width(g_star, spec.targets(cfg.target_mode), cfg.alpha);
  spec.weights = corridor::consistency_weights(k);
  return spec;
}

}  // namespace corridorflow::synth
