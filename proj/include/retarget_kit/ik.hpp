#pragma once

#include "retarget_kit/skeleton.hpp"

#include <Eigen/Core>

#include <string>
#include <vector>

namespace rkit {

using KeypointMatrix = Eigen::Matrix<double, Eigen::Dynamic, 3>;

/// World-frame keypoint positions for one frame, one row per label.
struct KeypointFrame {
  std::vector<std::string> labels;
  KeypointMatrix positions;
};

/// Keypoints of every skeleton joint for `pose`, labelled by joint name.
KeypointFrame keypoints_from_pose(const Skeleton& skeleton, const Pose& pose);

/// Recovers a pose on `skeleton` from keypoints, root outward.
///
/// The root position is the root keypoint. Each joint's local rotation aligns
/// its rest child offsets with the observed child directions expressed in the
/// parent's accumulated frame: Rodrigues alignment for a single child,
/// Procrustes over unit directions for several children, identity for leaves
/// and fixed joints. Only directions are matched; bone lengths are never
/// rescaled. Single-child joints get the zero-twist (pure swing) solution.
///
/// Throws ValidationError when labels do not cover the skeleton joints,
/// DegenerateBone for coincident keypoints and RankDeficient for a
/// multi-child joint whose children are collinear.
Pose reconstruct_frame(const Skeleton& skeleton, const KeypointFrame& frame);

/// Per-frame reconstruct_frame. With `continuity` set, spherical joint values
/// are re-expressed so the implied quaternions stay in one hemisphere from
/// frame to frame (angles may then exceed pi).
std::vector<Pose> reconstruct_sequence(
    const Skeleton& skeleton,
    const std::vector<KeypointFrame>& frames,
    bool continuity = true);

/// Quaternion of a rotation vector without hemisphere canonicalization,
/// (cos(|v|/2), sin(|v|/2) v/|v|).
Eigen::Quaterniond rotation_vector_quaternion(const Vector3& v);

} // namespace rkit
