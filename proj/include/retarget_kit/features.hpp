#pragma once

#include "retarget_kit/motion.hpp"
#include "retarget_kit/skeleton.hpp"

#include <Eigen/Core>

#include <string>
#include <vector>

namespace rkit {

/// Width of one pose-feature frame for `j` non-root joints.
constexpr int pose_feature_dim(int j) {
  return 8 + 12 * j;
}

struct FeatureOptions {
  /// Contact when the squared marker speed (m^2/s^2) is below this value.
  double contact_threshold = 1e-3;
  /// Heel and toe markers of both feet; names resolve to markers first,
  /// then joints.
  std::vector<std::string> contact_markers = {"left_ankle", "left_foot", "right_ankle", "right_foot"};
};

/// Per-frame pose features, one row per frame pair (t, t + 1), T - 1 rows.
///
/// Layout of each row:
///   [0]            root angular velocity about +Y
///   [1, 2]         root linear velocity on the XZ plane, root frame
///   [3]            root height
///   [4, 4 + 3j)    joint positions in root space
///   next 3j        joint velocities in root space
///   next 6j        local joint rotations, 6D
///   last 4         foot contacts in {0, 1}
///
/// Root space at frame t is translated to the ground projection of the root
/// and rotated by the inverse root heading. Velocities are differences
/// between frames t and t + 1 scaled by fps, so they are central differences
/// about t + 1/2. Throws MissingContactMarkers when a contact name does not
/// resolve and LengthMismatch for T < 2.
Eigen::MatrixXd build_pose_features(
    const Skeleton& skeleton,
    const std::vector<Pose>& poses,
    double fps,
    const FeatureOptions& opts = {});

/// Reconstructs poses from keypoints, then builds features.
Eigen::MatrixXd build_pose_features(
    const Skeleton& skeleton,
    const KeypointMotion& motion,
    const FeatureOptions& opts = {});

} // namespace rkit
