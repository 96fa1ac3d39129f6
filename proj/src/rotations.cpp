#include "retarget_kit/rotations.hpp"

#include "retarget_kit/errors.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace rkit {

namespace {

Matrix3 properFromSvd(const Matrix3& u, const Matrix3& v) {
  const double d = (u * v.transpose()).determinant() < 0.0 ? -1.0 : 1.0;
  return u * Eigen::Vector3d(1.0, 1.0, d).asDiagonal() * v.transpose();
}

Matrix3 rodriguesMatrix(const Vector3& unitAxis, double s, double c) {
  const Matrix3 k = skew(unitAxis);
  return Matrix3::Identity() + s * k + (1.0 - c) * k * k;
}

} // namespace

Matrix3 skew(const Vector3& v) {
  Matrix3 k;
  k << 0.0, -v.z(), v.y(), //
      v.z(), 0.0, -v.x(), //
      -v.y(), v.x(), 0.0;
  return k;
}

Rotation Rotation::from_matrix(const Matrix3& m, double tolerance) {
  if (!m.allFinite()) {
    throw InvalidRotation("rotation matrix has non-finite entries");
  }
  const double orthoErr =
      (m.transpose() * m - Matrix3::Identity()).norm();
  const double detErr = std::abs(m.determinant() - 1.0);
  if (orthoErr > tolerance || detErr > tolerance) {
    std::ostringstream os;
    os << "matrix is not in SO(3): ||R^T R - I||_F = " << orthoErr
       << ", |det - 1| = " << detErr;
    throw InvalidRotation(os.str());
  }
  return Rotation(m);
}

Rotation Rotation::nearest(const Matrix3& m) {
  Eigen::JacobiSVD<Matrix3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return Rotation(properFromSvd(svd.matrixU(), svd.matrixV()));
}

Rotation Rotation::from_quaternion(const Eigen::Quaterniond& q) {
  const double n = q.norm();
  if (!(n > 0.0) || !std::isfinite(n)) {
    throw InvalidRotation("quaternion must be finite and nonzero");
  }
  return Rotation(Eigen::Quaterniond(q.coeffs() / n).toRotationMatrix());
}

Rotation Rotation::from_axis_angle(const Vector3& axis, double angle) {
  if (angle == 0.0) {
    return {};
  }
  const double n = axis.norm();
  if (!(n > 0.0) || !std::isfinite(n) || !std::isfinite(angle)) {
    throw InvalidRotation("axis-angle needs a finite nonzero axis");
  }
  return Rotation(
      rodriguesMatrix(axis / n, std::sin(angle), std::cos(angle)));
}

Rotation Rotation::from_rotation_vector(const Vector3& v) {
  if (!v.allFinite()) {
    throw InvalidRotation("rotation vector has non-finite entries");
  }
  const double theta2 = v.squaredNorm();
  const Matrix3 k = skew(v);
  double a = 0.0;
  double b = 0.0;
  if (theta2 < 1e-8) {
    // series of sin(t)/t and (1 - cos(t))/t^2
    a = 1.0 - theta2 / 6.0 + theta2 * theta2 / 120.0;
    b = 0.5 - theta2 / 24.0 + theta2 * theta2 / 720.0;
  } else {
    const double theta = std::sqrt(theta2);
    a = std::sin(theta) / theta;
    b = (1.0 - std::cos(theta)) / theta2;
  }
  return Rotation(Matrix3::Identity() + a * k + b * k * k);
}

Eigen::Quaterniond Rotation::quaternion() const {
  // Shepperd's method: branch on the largest diagonal term.
  const Matrix3& m = m_;
  const double tr = m.trace();
  double w, x, y, z;
  if (tr > 0.0) {
    const double s = 2.0 * std::sqrt(tr + 1.0);
    w = 0.25 * s;
    x = (m(2, 1) - m(1, 2)) / s;
    y = (m(0, 2) - m(2, 0)) / s;
    z = (m(1, 0) - m(0, 1)) / s;
  } else if (m(0, 0) > m(1, 1) && m(0, 0) > m(2, 2)) {
    const double s = 2.0 * std::sqrt(1.0 + m(0, 0) - m(1, 1) - m(2, 2));
    w = (m(2, 1) - m(1, 2)) / s;
    x = 0.25 * s;
    y = (m(0, 1) + m(1, 0)) / s;
    z = (m(0, 2) + m(2, 0)) / s;
  } else if (m(1, 1) > m(2, 2)) {
    const double s = 2.0 * std::sqrt(1.0 + m(1, 1) - m(0, 0) - m(2, 2));
    w = (m(0, 2) - m(2, 0)) / s;
    x = (m(0, 1) + m(1, 0)) / s;
    y = 0.25 * s;
    z = (m(1, 2) + m(2, 1)) / s;
  } else {
    const double s = 2.0 * std::sqrt(1.0 + m(2, 2) - m(0, 0) - m(1, 1));
    w = (m(1, 0) - m(0, 1)) / s;
    x = (m(0, 2) + m(2, 0)) / s;
    y = (m(1, 2) + m(2, 1)) / s;
    z = 0.25 * s;
  }
  Eigen::Quaterniond q(w, x, y, z);
  q.normalize();
  if (q.w() < 0.0) {
    q.coeffs() = -q.coeffs();
  }
  return q;
}

AxisAngle Rotation::axis_angle() const {
  const Eigen::Quaterniond q = quaternion();
  const Vector3 v = q.vec();
  const double s = v.norm();
  if (s == 0.0) {
    return {};
  }
  return {v / s, 2.0 * std::atan2(s, q.w())};
}

Vector3 Rotation::rotation_vector() const {
  const Eigen::Quaterniond q = quaternion();
  const Vector3 v = q.vec();
  const double s = v.norm();
  if (s < 1e-12) {
    // theta / sin(theta / 2) -> 2 / cos(theta / 2)
    return (2.0 / q.w()) * v;
  }
  return (2.0 * std::atan2(s, q.w()) / s) * v;
}

double Rotation::angle() const {
  return geodesic_distance(Rotation(), *this);
}

Rotation rodrigues_align(
    const Vector3& template_bone,
    const Vector3& observed_bone,
    double degenerate_norm,
    double antiparallel) {
  const double nt = template_bone.norm();
  const double np = observed_bone.norm();
  if (!(nt > degenerate_norm) || !(np > degenerate_norm) ||
      !std::isfinite(nt) || !std::isfinite(np)) {
    std::ostringstream os;
    os << "bone vector too short for alignment (|t| = " << nt
       << ", |p| = " << np << ")";
    throw DegenerateBone(os.str());
  }
  const Vector3 t = template_bone / nt;
  const Vector3 p = observed_bone / np;
  const Vector3 cross = t.cross(p);
  const double s = cross.norm();
  const double c = t.dot(p);

  if (s > antiparallel) {
    const double theta = std::atan2(s, c);
    return Rotation::from_matrix(
        rodriguesMatrix(cross / s, std::sin(theta), std::cos(theta)), 1e-6);
  }
  if (c > 0.0) {
    return {};
  }

  // Antiparallel: half turn about the coordinate axis least aligned with t,
  // made orthogonal to t.
  Eigen::Index minIdx = 0;
  t.cwiseAbs().minCoeff(&minIdx);
  Vector3 axis = Vector3::Unit(minIdx);
  axis -= axis.dot(t) * t;
  axis.normalize();
  return Rotation::from_matrix(rodriguesMatrix(axis, 0.0, -1.0), 1e-6);
}

Rotation procrustes(
    const Eigen::Ref<const Matrix3X>& template_cols,
    const Eigen::Ref<const Matrix3X>& observed_cols,
    double rank_tolerance) {
  if (template_cols.cols() != observed_cols.cols()) {
    throw DimensionMismatch(
        "procrustes: template and observed column counts differ");
  }
  if (template_cols.cols() < 2) {
    throw DimensionMismatch("procrustes: needs at least two columns");
  }
  const Matrix3 cov = observed_cols * template_cols.transpose();
  if (!cov.allFinite()) {
    throw RankDeficient("procrustes: non-finite cross-covariance");
  }
  Eigen::JacobiSVD<Matrix3> svd(
      cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Vector3d sigma = svd.singularValues();
  if (!(sigma(0) > 0.0) || sigma(1) <= rank_tolerance * sigma(0)) {
    std::ostringstream os;
    os << "procrustes: cross-covariance rank < 2 (singular values "
       << sigma.transpose() << ")";
    throw RankDeficient(os.str());
  }
  return Rotation::from_matrix(
      properFromSvd(svd.matrixU(), svd.matrixV()), 1e-6);
}

double procrustes_objective(
    const Rotation& r,
    const Eigen::Ref<const Matrix3X>& template_cols,
    const Eigen::Ref<const Matrix3X>& observed_cols) {
  return (r.matrix() * template_cols - observed_cols).squaredNorm();
}

double geodesic_distance(const Rotation& a, const Rotation& b) {
  // atan2 form of arccos((tr - 1) / 2); keeps full precision near 0 and pi.
  const Matrix3 m = a.matrix().transpose() * b.matrix();
  const double c = 0.5 * (m.trace() - 1.0);
  const Vector3 vee(m(2, 1) - m(1, 2), m(0, 2) - m(2, 0), m(1, 0) - m(0, 1));
  const double s = 0.5 * vee.norm();
  return std::atan2(s, std::clamp(c, -1.0, 1.0));
}

Vector6 to_rot6d(const Rotation& r) {
  Vector6 v;
  v.head<3>() = r.matrix().col(0);
  v.tail<3>() = r.matrix().col(1);
  return v;
}

Rotation from_rot6d(const Vector6& v, double degenerate_norm) {
  const Vector3 a1 = v.head<3>();
  const Vector3 a2 = v.tail<3>();
  const double n1 = a1.norm();
  if (!(n1 > degenerate_norm) || !std::isfinite(n1)) {
    throw DegenerateFrame("6D rotation: first vector is (near) zero");
  }
  const Vector3 b1 = a1 / n1;
  const Vector3 u = a2 - b1.dot(a2) * b1;
  const double nu = u.norm();
  if (!(nu > degenerate_norm * std::max(1.0, a2.norm())) ||
      !std::isfinite(nu)) {
    throw DegenerateFrame("6D rotation: vectors are (near) collinear");
  }
  const Vector3 b2 = u / nu;
  Matrix3 m;
  m.col(0) = b1;
  m.col(1) = b2;
  m.col(2) = b1.cross(b2);
  return Rotation::from_matrix(m, 1e-6);
}

double yaw_about_y(const Rotation& r) {
  const Vector3 f = r.matrix().col(2);
  return std::atan2(f.x(), f.z());
}

} // namespace rkit
