#include "retarget_kit/motion.hpp"

#include "retarget_kit/errors.hpp"

#include <cmath>

namespace rkit {

Pose JointTrajectory::pose(size_t t) const {
  return {root_positions[t], root_orientations[t], joint_values.row(static_cast<Eigen::Index>(t)).transpose()};
}

std::vector<Pose> JointTrajectory::poses() const {
  std::vector<Pose> out;
  out.reserve(size());
  for (size_t t = 0; t < size(); ++t) {
    out.push_back(pose(t));
  }
  return out;
}

JointTrajectory JointTrajectory::from_poses(const Skeleton& skeleton, const std::vector<Pose>& poses, double fps) {
  JointTrajectory traj;
  traj.fps = fps;
  traj.skeleton = skeleton.name();
  traj.dof_names = skeleton.dof_names();
  traj.joint_values.resize(static_cast<Eigen::Index>(poses.size()), skeleton.total_dofs());
  for (size_t t = 0; t < poses.size(); ++t) {
    if (poses[t].joint_values.size() != skeleton.total_dofs()) {
      throw PoseMismatch("trajectory frame " + std::to_string(t) + " does not match skeleton '" + skeleton.name() + "'");
    }
    traj.root_positions.push_back(poses[t].root_position);
    traj.root_orientations.push_back(poses[t].root_orientation);
    traj.joint_values.row(static_cast<Eigen::Index>(t)) = poses[t].joint_values.transpose();
  }
  return traj;
}

void JointTrajectory::validate() const {
  const auto t = static_cast<Eigen::Index>(root_positions.size());
  if (!(fps > 0.0) || !std::isfinite(fps)) {
    throw ValidationError("trajectory fps must be positive");
  }
  if (static_cast<Eigen::Index>(root_orientations.size()) != t || joint_values.rows() != t) {
    throw ValidationError("trajectory per-frame arrays disagree in length");
  }
  if (joint_values.cols() != static_cast<Eigen::Index>(dof_names.size())) {
    throw ValidationError("trajectory joint value width does not match dof names");
  }
  if (heights && heights->size() != t) {
    throw ValidationError("trajectory heights do not match the frame count");
  }
}

KeypointMotion keypoint_motion_from_poses(const Skeleton& skeleton, const std::vector<Pose>& poses, double fps) {
  KeypointMotion motion;
  motion.fps = fps;
  motion.skeleton = skeleton.name();
  for (const Joint& j : skeleton.joints()) {
    motion.labels.push_back(j.name);
  }
  for (const Pose& p : poses) {
    motion.frames.push_back(keypoints_from_pose(skeleton, p).positions);
  }
  return motion;
}

} // namespace rkit
