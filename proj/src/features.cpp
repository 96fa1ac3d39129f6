#include "retarget_kit/features.hpp"

#include "retarget_kit/errors.hpp"
#include "retarget_kit/ik.hpp"

#include <cmath>
#include <numbers>

namespace rkit {

namespace {

double wrapAngle(double a) {
  return std::remainder(a, 2.0 * std::numbers::pi);
}

Matrix3 inverseHeading(double yaw) {
  return Eigen::AngleAxisd(-yaw, Vector3::UnitY()).toRotationMatrix();
}

} // namespace

Eigen::MatrixXd build_pose_features(
    const Skeleton& skel,
    const std::vector<Pose>& poses,
    double fps,
    const FeatureOptions& opts) {
  if (poses.size() < 2) {
    throw LengthMismatch("pose features need at least 2 frames");
  }
  if (!(fps > 0.0)) {
    throw ValidationError("fps must be > 0");
  }
  if (opts.contact_markers.size() != 4) {
    throw ValidationError("exactly four contact markers expected (heel and toe of both feet)");
  }
  std::vector<Attachment> contacts;
  for (const auto& name : opts.contact_markers) {
    const auto a = skel.resolve(name);
    if (!a) {
      throw MissingContactMarkers("contact marker \"" + name + "\" not found on skeleton " + skel.name());
    }
    contacts.push_back(*a);
  }

  const auto j = static_cast<int>(skel.joint_count()) - 1;
  const int dim = pose_feature_dim(j);
  const auto frames = static_cast<Eigen::Index>(poses.size()) - 1;

  std::vector<FkResult> fks;
  fks.reserve(poses.size());
  for (const Pose& p : poses) {
    fks.push_back(fk(skel, p));
  }

  Eigen::MatrixXd out(frames, dim);
  for (Eigen::Index t = 0; t < frames; ++t) {
    const FkResult& a = fks[static_cast<size_t>(t)];
    const FkResult& b = fks[static_cast<size_t>(t) + 1];
    const Pose& pose = poses[static_cast<size_t>(t)];
    const double yaw = yaw_about_y(a.rotations[0]);
    const double yawNext = yaw_about_y(b.rotations[0]);
    const Matrix3 toRoot = inverseHeading(yaw);
    const Vector3 root = a.positions[0];
    const Vector3 ground(root.x(), 0.0, root.z());

    auto row = out.row(t);
    row[0] = wrapAngle(yawNext - yaw) * fps;
    const Vector3 rootVel = toRoot * ((b.positions[0] - root) * fps);
    row[1] = rootVel.x();
    row[2] = rootVel.z();
    row[3] = root.y();

    Eigen::Index pos = 4;
    Eigen::Index vel = 4 + 3 * j;
    Eigen::Index rot = 4 + 6 * j;
    for (size_t k = 1; k < skel.joint_count(); ++k) {
      row.segment<3>(pos) = toRoot * (a.positions[k] - ground);
      row.segment<3>(vel) = toRoot * ((b.positions[k] - a.positions[k]) * fps);
      row.segment<6>(rot) = to_rot6d(joint_rotation(skel, k, pose.joint_values));
      pos += 3;
      vel += 3;
      rot += 6;
    }
    for (size_t c = 0; c < contacts.size(); ++c) {
      const Vector3 v = (attachment_position(b, contacts[c]) - attachment_position(a, contacts[c])) * fps;
      row[rot + static_cast<Eigen::Index>(c)] = v.squaredNorm() < opts.contact_threshold ? 1.0 : 0.0;
    }
  }
  return out;
}

Eigen::MatrixXd build_pose_features(const Skeleton& skel, const KeypointMotion& motion, const FeatureOptions& opts) {
  std::vector<KeypointFrame> frames;
  frames.reserve(motion.size());
  for (size_t t = 0; t < motion.size(); ++t) {
    frames.push_back(motion.frame(t));
  }
  return build_pose_features(skel, reconstruct_sequence(skel, frames), motion.fps, opts);
}

} // namespace rkit
