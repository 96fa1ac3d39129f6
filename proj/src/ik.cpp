#include "retarget_kit/ik.hpp"

#include "retarget_kit/errors.hpp"

#include <cmath>
#include <numbers>
#include <unordered_map>

namespace rkit {

KeypointFrame keypoints_from_pose(const Skeleton& skeleton, const Pose& pose) {
  const FkResult world = fk(skeleton, pose);
  KeypointFrame frame;
  frame.positions.resize(static_cast<Eigen::Index>(skeleton.joint_count()), 3);
  for (size_t i = 0; i < skeleton.joint_count(); ++i) {
    frame.labels.push_back(skeleton.joints()[i].name);
    frame.positions.row(static_cast<Eigen::Index>(i)) = world.positions[i].transpose();
  }
  return frame;
}

namespace {

// Keypoint rows reordered to skeleton joint order.
std::vector<Vector3> orderedKeypoints(const Skeleton& skeleton, const KeypointFrame& frame) {
  const size_t n = skeleton.joint_count();
  if (frame.labels.size() != n || static_cast<size_t>(frame.positions.rows()) != n) {
    throw DimensionMismatch(
        "keypoint frame has " + std::to_string(frame.positions.rows()) + " rows and " +
        std::to_string(frame.labels.size()) + " labels; skeleton '" + skeleton.name() +
        "' has " + std::to_string(n) + " joints");
  }
  std::vector<Vector3> out(n);
  std::vector<bool> filled(n, false);
  for (size_t r = 0; r < n; ++r) {
    const auto j = skeleton.find_joint(frame.labels[r]);
    if (!j) {
      throw ValidationError("keypoint label '" + frame.labels[r] + "' is not a joint of '" + skeleton.name() + "'");
    }
    if (filled[*j]) {
      throw ValidationError("keypoint label '" + frame.labels[r] + "' appears twice");
    }
    out[*j] = frame.positions.row(static_cast<Eigen::Index>(r)).transpose();
    if (!out[*j].allFinite()) {
      throw ValidationError("keypoint '" + frame.labels[r] + "' is not finite");
    }
    filled[*j] = true;
  }
  return out;
}

// Local rotation that maps the rest child offsets of `joint` onto the
// observed child directions given in the joint's parent frame.
Rotation alignChildren(
    const Skeleton& skeleton,
    size_t joint,
    const std::vector<Vector3>& keypoints,
    const Rotation& parentWorld) {
  const auto& kids = skeleton.children(joint);
  const Matrix3 toParent = parentWorld.matrix().transpose();
  auto observed = [&](int c) -> Vector3 { return toParent * (keypoints[c] - keypoints[joint]); };

  if (kids.size() == 1) {
    const int c = kids.front();
    try {
      return rodrigues_align(skeleton.joints()[c].rest_offset, observed(c));
    } catch (const DegenerateBone& e) {
      throw DegenerateBone(
          "bone '" + skeleton.joints()[joint].name + "' -> '" + skeleton.joints()[c].name + "': " + e.what());
    }
  }

  Matrix3X templ(3, kids.size());
  Matrix3X obs(3, kids.size());
  for (size_t k = 0; k < kids.size(); ++k) {
    const int c = kids[k];
    const Vector3 t = skeleton.joints()[c].rest_offset;
    const Vector3 p = observed(c);
    if (!(t.norm() > tol::kDegenerateNorm) || !(p.norm() > tol::kDegenerateNorm)) {
      throw DegenerateBone(
          "bone '" + skeleton.joints()[joint].name + "' -> '" + skeleton.joints()[c].name +
          "' has (near) zero length");
    }
    templ.col(k) = t.normalized();
    obs.col(k) = p.normalized();
  }
  try {
    return procrustes(templ, obs);
  } catch (const RankDeficient& e) {
    throw RankDeficient("joint '" + skeleton.joints()[joint].name + "': " + e.what());
  }
}

} // namespace

Pose reconstruct_frame(const Skeleton& skeleton, const KeypointFrame& frame) {
  const std::vector<Vector3> keypoints = orderedKeypoints(skeleton, frame);
  const size_t n = skeleton.joint_count();

  Pose pose = Pose::zero(skeleton);
  pose.root_position = keypoints[0];

  std::vector<Rotation> world(n);
  world[0] = skeleton.children(0).empty() ? Rotation() : alignChildren(skeleton, 0, keypoints, Rotation());
  pose.root_orientation = world[0];

  for (size_t i = 1; i < n; ++i) {
    const Joint& j = skeleton.joints()[i];
    const Rotation& parentWorld = world[skeleton.parent(i)];
    Rotation local;
    if (j.dof == DofType::Spherical && !skeleton.children(i).empty()) {
      local = alignChildren(skeleton, i, keypoints, parentWorld);
      pose.joint_values.segment<3>(skeleton.dof_offset(i)) = local.rotation_vector();
    }
    // revolute and fixed joints cannot absorb an arbitrary alignment; they
    // stay at zero and their children are aligned from this frame onward
    world[i] = parentWorld * local;
  }
  return pose;
}

Eigen::Quaterniond rotation_vector_quaternion(const Vector3& v) {
  const double theta = v.norm();
  if (theta == 0.0) {
    return Eigen::Quaterniond::Identity();
  }
  const Vector3 xyz = std::sin(0.5 * theta) / theta * v;
  return {std::cos(0.5 * theta), xyz.x(), xyz.y(), xyz.z()};
}

std::vector<Pose> reconstruct_sequence(
    const Skeleton& skeleton,
    const std::vector<KeypointFrame>& frames,
    bool continuity) {
  if (frames.empty()) {
    throw ValidationError("reconstruct_sequence: empty keypoint sequence");
  }
  std::vector<Pose> poses;
  poses.reserve(frames.size());
  for (const auto& f : frames) {
    poses.push_back(reconstruct_frame(skeleton, f));
  }
  if (!continuity) {
    return poses;
  }

  constexpr double twoPi = 2.0 * std::numbers::pi;
  for (size_t t = 1; t < poses.size(); ++t) {
    for (size_t i = 0; i < skeleton.joint_count(); ++i) {
      if (skeleton.joints()[i].dof != DofType::Spherical) {
        continue;
      }
      const int off = skeleton.dof_offset(i);
      const Vector3 prev = poses[t - 1].joint_values.segment<3>(off);
      Vector3 cur = poses[t].joint_values.segment<3>(off);
      if (rotation_vector_quaternion(prev).dot(rotation_vector_quaternion(cur)) >= 0.0) {
        continue;
      }
      // -q is the same rotation: angle 2*pi - theta about the negated axis
      const double theta = cur.norm();
      if (theta > 0.0) {
        cur -= (twoPi / theta) * cur;
      } else {
        cur = twoPi * prev.normalized();
      }
      poses[t].joint_values.segment<3>(off) = cur;
    }
  }
  return poses;
}

} // namespace rkit
