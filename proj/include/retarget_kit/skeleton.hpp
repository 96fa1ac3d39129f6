#pragma once

#include "retarget_kit/rotations.hpp"

#include <Eigen/Core>

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace rkit {

using VectorX = Eigen::VectorXd;

enum class DofType { Fixed, Revolute, Spherical };

/// Number of scalar joint values a joint of this type contributes.
int dof_count(DofType type);

struct JointLimit {
  double min = -std::numeric_limits<double>::infinity();
  double max = std::numeric_limits<double>::infinity();

  bool bounded() const {
    return std::isfinite(min) || std::isfinite(max);
  }
};

struct Joint {
  std::string name;
  std::optional<std::string> parent; // absent for the root
  Vector3 rest_offset = Vector3::Zero(); // meters, parent frame
  DofType dof = DofType::Fixed;
  Vector3 axis = Vector3::UnitZ(); // revolute only
  // revolute: one pair; spherical: three pairs on intrinsic XYZ Euler angles
  std::vector<JointLimit> limits;
};

/// A point rigidly attached to a joint frame.
struct Marker {
  std::string name;
  std::string joint;
  Vector3 offset = Vector3::Zero();
};

/// Resolved attachment point used by retargeting targets.
struct Attachment {
  int joint = 0;
  Vector3 offset = Vector3::Zero();
};

/// Articulated joint tree in topological order (parents before children).
///
/// Construction validates the tree: exactly one root stored first, unique
/// names, parents listed before their children, no cycles, unit revolute
/// axes, min <= max on every limit. The root must be a fixed joint with zero
/// rest offset since the root transform comes from the pose.
class Skeleton {
 public:
  Skeleton() = default;
  Skeleton(std::string name, std::vector<Joint> joints, std::vector<Marker> markers = {});

  const std::string& name() const {
    return name_;
  }
  const std::vector<Joint>& joints() const {
    return joints_;
  }
  const std::vector<Marker>& markers() const {
    return markers_;
  }
  size_t joint_count() const {
    return joints_.size();
  }
  int total_dofs() const {
    return totalDofs_;
  }

  /// Parent index per joint, -1 for the root.
  int parent(size_t joint) const {
    return parents_[joint];
  }
  const std::vector<int>& children(size_t joint) const {
    return children_[joint];
  }
  /// Offset of the joint's first value in the flat joint-value vector.
  int dof_offset(size_t joint) const {
    return dofOffsets_[joint];
  }

  int marker_joint(size_t marker) const {
    return markerJoints_[marker];
  }

  std::optional<int> find_joint(const std::string& name) const;
  std::optional<int> find_marker(const std::string& name) const;

  /// Marker name first, then joint name (zero offset).
  std::optional<Attachment> resolve(const std::string& name) const;

  /// Per-value labels: the joint name for revolute joints, name.x/.y/.z for
  /// spherical joints.
  std::vector<std::string> dof_names() const;

  /// Flat [min, max] per joint value, spherical joints unbounded here.
  std::pair<VectorX, VectorX> revolute_bounds() const;

 private:
  std::string name_;
  std::vector<Joint> joints_;
  std::vector<Marker> markers_;
  std::vector<int> parents_;
  std::vector<std::vector<int>> children_;
  std::vector<int> dofOffsets_;
  std::vector<int> markerJoints_;
  std::unordered_map<std::string, int> jointIndex_;
  std::unordered_map<std::string, int> markerIndex_;
  int totalDofs_ = 0;
};

struct Pose {
  Vector3 root_position = Vector3::Zero();
  Rotation root_orientation;
  VectorX joint_values;

  static Pose zero(const Skeleton& skeleton) {
    return {Vector3::Zero(), Rotation(), VectorX::Zero(skeleton.total_dofs())};
  }
};

struct FkResult {
  std::vector<Vector3> positions;
  std::vector<Rotation> rotations; // world orientation of each joint frame
  std::vector<Vector3> marker_positions;
};

/// Local rotation of `joint` given the flat joint-value vector.
Rotation joint_rotation(const Skeleton& skeleton, size_t joint, const VectorX& values);

/// Forward kinematics. Throws PoseMismatch on a wrong joint-value length.
FkResult fk(const Skeleton& skeleton, const Pose& pose);

Vector3 attachment_position(const FkResult& fk, const Attachment& a);

struct LimitViolation {
  int joint = 0;
  int dof = 0; // index within the joint
  double amount = 0.0; // value - max (> 0) or value - min (< 0)
};

std::vector<LimitViolation> check_limits(const Skeleton& skeleton, const Pose& pose);

/// Clamps every joint value into its limits. Spherical joints are clamped
/// on their intrinsic XYZ Euler decomposition.
Pose project_to_limits(const Skeleton& skeleton, const Pose& pose);

/// Intrinsic XYZ Euler angles (a, b, c) with R = Rx(a) Ry(b) Rz(c).
Vector3 euler_xyz(const Rotation& r);
Rotation from_euler_xyz(const Vector3& abc);

/// Sum of rest-offset lengths along the chain from `ancestor` down to
/// `descendant`. Throws UnresolvableCorrespondence if not an ancestor.
double chain_length(const Skeleton& skeleton, const std::string& ancestor, const std::string& descendant);

/// External actuator ordering with per-joint affine maps.
struct DofConfig {
  struct Entry {
    std::string name;
    double scale = 1.0;
    double offset = 0.0;
    std::optional<double> default_value;
    // PD gains ride along untouched.
    std::optional<double> kp;
    std::optional<double> kd;
  };
  std::vector<Entry> joints;

  /// Throws ValidationError on duplicate names or zero scale.
  void validate() const;
};

/// Reorders/rescales `values` from `src` ordering into `dst` ordering.
/// A dst joint present in src gets (v - src.offset) / src.scale * dst.scale
/// + dst.offset; otherwise its default. Throws MissingDefault when neither
/// exists and DimensionMismatch when `values` does not match `src`.
VectorX remap_dofs(const VectorX& values, const DofConfig& src, const DofConfig& dst);

} // namespace rkit
