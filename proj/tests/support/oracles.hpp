#pragma once

// Test-only reference implementations and fixture generators. Nothing here
// calls into the library's math for the quantity under test.

#include "retarget_kit/skeleton.hpp"

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <random>
#include <string>
#include <vector>

namespace rkit::testing {

using Rng = std::mt19937_64;

std::string data_path(const std::string& relative);

double uniform(Rng& rng, double lo, double hi);
Vector3 random_unit(Rng& rng);
/// Haar-uniform rotation matrix from a normalized Gaussian quaternion.
Matrix3 random_rotation_matrix(Rng& rng);
Rotation random_rotation(Rng& rng);
/// Rotation by a uniform angle in [0, max_angle] about a random axis.
Matrix3 random_small_rotation(Rng& rng, double max_angle);

/// Rodrigues' formula written out term by term.
Matrix3 axis_angle_matrix(const Vector3& axis, double angle);

/// Unit quaternion (w, x, y, z) to matrix, written out entry by entry.
Matrix3 quaternion_matrix(double w, double x, double y, double z);

/// Rotation angle from the trace, in long double.
double trace_angle(const Matrix3& m);

/// Random tree in topological order: root fixed, the rest spherical (or a
/// random mix of revolute and spherical when `mixed`). Offsets 0.1 to 0.5 m.
Skeleton random_tree(Rng& rng, int joints, bool mixed = false);

/// Random pose. Spherical values have angle < max_angle; revolute values
/// are uniform in [-max_angle, max_angle].
Pose random_pose(Rng& rng, const Skeleton& skeleton, double max_angle);

/// A pose whose rotations keypoints fully determine: leaves and fixed joints
/// at identity, single-child joints pure swing about an axis orthogonal to
/// the child bone, multi-child joints arbitrary. Angles stay below max_angle.
Pose twist_free_pose(Rng& rng, const Skeleton& skeleton, double max_angle);

/// Local joint rotation from the raw pose value via Eigen::AngleAxis.
Matrix3 naive_local_rotation(const Skeleton& skeleton, size_t joint, const Pose& pose);

struct NaiveFk {
  std::vector<Vector3> positions;
  std::vector<Matrix3> rotations;
};

/// Recursive evaluator over homogeneous 4x4 transforms.
NaiveFk naive_fk(const Skeleton& skeleton, const Pose& pose);

/// Smooth twist-free walking cycle on the 24-joint human fixture: forward
/// travel along +Z, swinging legs and arms, gentle torso sway.
std::vector<Pose> walking_sequence(const Skeleton& human, int frames, double fps);

} // namespace rkit::testing
