#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace rkit {

using Vector3 = Eigen::Vector3d;
using Matrix3 = Eigen::Matrix3d;
using Vector6 = Eigen::Matrix<double, 6, 1>;
using Matrix3X = Eigen::Matrix<double, 3, Eigen::Dynamic>;

/// Default tolerances of the rotation module. Every operation that uses one
/// takes it as a trailing argument so callers can override it per call.
namespace tol {
inline constexpr double kOrthonormal = 1e-9;
inline constexpr double kDegenerateNorm = 1e-8;
inline constexpr double kAntiparallel = 1e-12;
inline constexpr double kRank = 1e-12;
} // namespace tol

/// Angle in [0, pi]. The axis is unit length when angle > 0 and the zero
/// vector when angle == 0.
struct AxisAngle {
  Vector3 axis = Vector3::Zero();
  double angle = 0.0;
};

/// An element of SO(3), stored as an orthonormal 3x3 matrix with det = +1.
///
/// Every factory either validates or constructs a proper rotation, so a
/// Rotation value always satisfies the orthonormality invariant.
class Rotation {
 public:
  Rotation() : m_(Matrix3::Identity()) {}

  static Rotation identity() {
    return {};
  }

  /// Validates orthonormality and det = +1 within `tolerance`; throws
  /// InvalidRotation otherwise. The matrix is stored verbatim.
  static Rotation from_matrix(
      const Matrix3& m,
      double tolerance = tol::kOrthonormal);

  /// Closest rotation in the Frobenius sense (polar projection).
  static Rotation nearest(const Matrix3& m);

  /// Normalizes `q`; throws InvalidRotation on a zero quaternion.
  static Rotation from_quaternion(const Eigen::Quaterniond& q);
  static Rotation from_quaternion(double w, double x, double y, double z) {
    return from_quaternion(Eigen::Quaterniond(w, x, y, z));
  }

  /// `axis` need not be unit length but must be nonzero unless angle == 0.
  static Rotation from_axis_angle(const Vector3& axis, double angle);

  /// Exponential map: rotation of |v| radians about v / |v|. Any magnitude
  /// is accepted.
  static Rotation from_rotation_vector(const Vector3& v);

  const Matrix3& matrix() const {
    return m_;
  }

  /// Unit quaternion with w >= 0.
  Eigen::Quaterniond quaternion() const;

  AxisAngle axis_angle() const;

  /// Logarithm map, angle * axis with angle in [0, pi]. Zero at identity.
  Vector3 rotation_vector() const;

  double angle() const;

  Rotation inverse() const {
    return Rotation(m_.transpose());
  }

  Rotation operator*(const Rotation& rhs) const {
    return Rotation(m_ * rhs.m_);
  }

  Vector3 operator*(const Vector3& v) const {
    return m_ * v;
  }

  bool operator==(const Rotation& rhs) const {
    return m_ == rhs.m_;
  }

 private:
  explicit Rotation(const Matrix3& m) : m_(m) {}

  Matrix3 m_;
};

/// Skew-symmetric cross-product matrix of `v`.
Matrix3 skew(const Vector3& v);

/// Rotation taking the direction of `template_bone` onto the direction of
/// `observed_bone`. Minimal-angle (swing only) except in the antiparallel
/// case, where the axis is the coordinate axis least aligned with the
/// template, orthogonalized against it.
///
/// Throws DegenerateBone if either vector has norm <= `degenerate_norm`.
Rotation rodrigues_align(
    const Vector3& template_bone,
    const Vector3& observed_bone,
    double degenerate_norm = tol::kDegenerateNorm,
    double antiparallel = tol::kAntiparallel);

/// Rotation R in SO(3) minimizing ||R * template_cols - observed_cols||_F^2.
///
/// Solved through the SVD of observed * template^T with a determinant
/// correction on the smallest singular direction. Throws RankDeficient when
/// the cross-covariance has rank < 2 and DimensionMismatch when the column
/// counts differ or are < 2.
Rotation procrustes(
    const Eigen::Ref<const Matrix3X>& template_cols,
    const Eigen::Ref<const Matrix3X>& observed_cols,
    double rank_tolerance = tol::kRank);

/// ||R * template_cols - observed_cols||_F^2
double procrustes_objective(
    const Rotation& r,
    const Eigen::Ref<const Matrix3X>& template_cols,
    const Eigen::Ref<const Matrix3X>& observed_cols);

/// Angle of a^T b in [0, pi].
double geodesic_distance(const Rotation& a, const Rotation& b);

/// First two matrix columns, flattened column-major.
Vector6 to_rot6d(const Rotation& r);

/// Gram-Schmidt on the two 3-vectors followed by a cross product. Throws
/// DegenerateFrame when the first vector is (near) zero or the pair is
/// (near) collinear.
Rotation from_rot6d(
    const Vector6& v,
    double degenerate_norm = tol::kDegenerateNorm);

/// Heading angle about +Y of the rotated +Z axis, atan2(f.x, f.z).
double yaw_about_y(const Rotation& r);

} // namespace rkit
