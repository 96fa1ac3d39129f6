#pragma once

#include "retarget_kit/ik.hpp"
#include "retarget_kit/skeleton.hpp"

#include <Eigen/Core>

#include <optional>
#include <string>
#include <vector>

namespace rkit {

/// T frames of world-space keypoints sharing one label set.
struct KeypointMotion {
  double fps = 30.0;
  std::string skeleton;
  std::vector<std::string> labels;
  std::vector<KeypointMatrix> frames;

  size_t size() const {
    return frames.size();
  }
  KeypointFrame frame(size_t t) const {
    return {labels, frames[t]};
  }
};

/// Per-frame joint values plus root transform on one skeleton.
struct JointTrajectory {
  double fps = 30.0;
  std::string skeleton;
  std::vector<std::string> dof_names;
  std::vector<Vector3> root_positions;
  std::vector<Rotation> root_orientations;
  Eigen::MatrixXd joint_values; // T x DoF
  /// Optional center-of-mass proxy height per frame, meters.
  std::optional<Eigen::VectorXd> heights;

  size_t size() const {
    return root_positions.size();
  }
  Pose pose(size_t t) const;
  std::vector<Pose> poses() const;

  static JointTrajectory from_poses(const Skeleton& skeleton, const std::vector<Pose>& poses, double fps);

  /// Throws ValidationError when per-frame arrays disagree in length.
  void validate() const;
};

KeypointMotion keypoint_motion_from_poses(const Skeleton& skeleton, const std::vector<Pose>& poses, double fps);

} // namespace rkit
