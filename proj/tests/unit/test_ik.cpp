#include "oracles.hpp"

#include "retarget_kit/errors.hpp"
#include "retarget_kit/ik.hpp"
#include "retarget_kit/io.hpp"

#include <gtest/gtest.h>

#include <numbers>

namespace rkit {
namespace {

using testing::Rng;
constexpr double kPi = std::numbers::pi;

// Rotation angle between two matrices from their Frobenius chord,
// |A - B|_F = 2 sqrt(2) sin(theta / 2); well conditioned near zero.
double chordAngle(const Matrix3& a, const Matrix3& b) {
  return 2.0 * std::asin(std::min(1.0, (a - b).norm() / (2.0 * std::numbers::sqrt2)));
}

double localError(const Skeleton& s, size_t i, const Pose& a, const Pose& b) {
  return chordAngle(testing::naive_local_rotation(s, i, a), testing::naive_local_rotation(s, i, b));
}

double rootError(const Pose& a, const Pose& b) {
  return chordAngle(a.root_orientation.matrix(), b.root_orientation.matrix());
}

double directionAngle(const Vector3& a, const Vector3& b) {
  return std::atan2(a.cross(b).norm(), a.dot(b));
}

Skeleton treeWithBranchingRoot(Rng& rng, int n) {
  for (;;) {
    Skeleton s = testing::random_tree(rng, n);
    if (s.children(0).size() >= 2) {
      return s;
    }
  }
}

TEST(Ik, ZeroPoseGivesIdentity) {
  const Skeleton human = io::load_skeleton(testing::data_path("skeletons/human24.skel"));
  const Pose p = reconstruct_frame(human, keypoints_from_pose(human, Pose::zero(human)));
  EXPECT_LE(p.root_position.norm(), 1e-15);
  EXPECT_LE(p.root_orientation.angle(), 1e-12);
  EXPECT_LE(p.joint_values.cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Ik, TwistFreeRoundTrip) {
  Rng rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = std::uniform_int_distribution<int>(8, 24)(rng);
    const Skeleton s = testing::random_tree(rng, n);
    const Pose truth = testing::twist_free_pose(rng, s, 2.8);
    const Pose got = reconstruct_frame(s, keypoints_from_pose(s, truth));
    EXPECT_LE((got.root_position - truth.root_position).norm(), 1e-12);
    EXPECT_LE(rootError(got, truth), 1e-6);
    for (size_t i = 1; i < s.joint_count(); ++i) {
      EXPECT_LE(localError(s, i, got, truth), 1e-6) << "trial " << trial << " joint " << i;
    }
  }
}

TEST(Ik, ThreeChildRootRecoversRotation) {
  Joint root;
  root.name = "pelvis";
  std::vector<Joint> joints{root};
  const std::vector<Vector3> offsets{{0.1, -0.1, 0.0}, {-0.1, -0.1, 0.0}, {0.0, 0.12, -0.02}};
  for (int k = 0; k < 3; ++k) {
    Joint j;
    j.name = "c" + std::to_string(k);
    j.parent = "pelvis";
    j.rest_offset = offsets[k];
    j.dof = DofType::Spherical;
    joints.push_back(j);
  }
  const Skeleton s("tri", joints);
  Rng rng(22);
  for (int trial = 0; trial < 200; ++trial) {
    const Matrix3 r0 = testing::random_rotation_matrix(rng);
    KeypointFrame f;
    f.positions.resize(4, 3);
    f.positions.row(0).setZero();
    f.labels.push_back("pelvis");
    for (int k = 0; k < 3; ++k) {
      f.labels.push_back("c" + std::to_string(k));
      f.positions.row(k + 1) = (r0 * offsets[k]).transpose();
    }
    const Pose p = reconstruct_frame(s, f);
    EXPECT_LE((p.root_orientation.matrix() - r0).norm(), 1e-9);
  }
}

TEST(Ik, RootInvariance) {
  Rng rng(23);
  for (int trial = 0; trial < 100; ++trial) {
    const Skeleton s = treeWithBranchingRoot(rng, 12);
    const Pose truth = testing::random_pose(rng, s, 2.5);
    const KeypointFrame base = keypoints_from_pose(s, truth);
    const Pose p0 = reconstruct_frame(s, base);

    const Vector3 v(testing::uniform(rng, -3, 3), testing::uniform(rng, -3, 3), testing::uniform(rng, -3, 3));
    KeypointFrame moved = base;
    moved.positions.rowwise() += v.transpose();
    const Pose pt = reconstruct_frame(s, moved);
    EXPECT_LE((pt.root_position - (p0.root_position + v)).norm(), 1e-12);
    EXPECT_LE(rootError(pt, p0), 1e-9);

    const Matrix3 q = testing::random_rotation_matrix(rng);
    KeypointFrame turned = base;
    const Vector3 root = base.positions.row(0).transpose();
    for (Eigen::Index r = 0; r < turned.positions.rows(); ++r) {
      const Vector3 k = base.positions.row(r).transpose();
      turned.positions.row(r) = (root + q * (k - root)).transpose();
    }
    const Pose pr = reconstruct_frame(s, turned);
    EXPECT_LE((pr.root_position - p0.root_position).norm(), 1e-12);
    EXPECT_LE((pr.root_orientation.matrix() - q * p0.root_orientation.matrix()).norm(), 1e-9);
    for (size_t i = 1; i < s.joint_count(); ++i) {
      EXPECT_LE(localError(s, i, pr, p0), 1e-9);
    }
  }
}

TEST(Ik, IdempotentThroughFk) {
  Rng rng(24);
  for (int trial = 0; trial < 100; ++trial) {
    const Skeleton s = testing::random_tree(rng, 16);
    const Pose q = testing::random_pose(rng, s, 3.0);
    const KeypointFrame k = keypoints_from_pose(s, q);
    const KeypointFrame back = keypoints_from_pose(s, reconstruct_frame(s, k));
    EXPECT_LE((back.positions - k.positions).cwiseAbs().maxCoeff(), 1e-6);
  }
}

TEST(Ik, DirectionFidelityUnderLengthMismatch) {
  Rng rng(25);
  for (int trial = 0; trial < 100; ++trial) {
    const Skeleton s = testing::random_tree(rng, 14);
    std::vector<Joint> stretched = s.joints();
    for (size_t i = 1; i < stretched.size(); ++i) {
      stretched[i].rest_offset *= testing::uniform(rng, 0.7, 1.3);
    }
    const Skeleton other("stretched", stretched);
    const KeypointFrame observed = keypoints_from_pose(other, testing::twist_free_pose(rng, other, 2.5));
    const FkResult predicted = fk(s, reconstruct_frame(s, observed));
    for (size_t i = 1; i < s.joint_count(); ++i) {
      const int p = s.parent(i);
      const Vector3 obs = (observed.positions.row(i) - observed.positions.row(p)).transpose();
      const Vector3 pred = predicted.positions[i] - predicted.positions[p];
      EXPECT_LE(directionAngle(obs, pred), 1e-6);
      EXPECT_NEAR(pred.norm(), s.joints()[i].rest_offset.norm(), 1e-9);
    }
  }
}

TEST(Ik, WalkingSequenceRecovered) {
  const Skeleton human = io::load_skeleton(testing::data_path("skeletons/human24.skel"));
  const auto truth = testing::walking_sequence(human, 120, 30.0);
  std::vector<KeypointFrame> frames;
  for (const auto& p : truth) {
    frames.push_back(keypoints_from_pose(human, p));
  }
  const auto got = reconstruct_sequence(human, frames);
  ASSERT_EQ(got.size(), truth.size());
  for (size_t t = 0; t < truth.size(); ++t) {
    EXPECT_LE(rootError(got[t], truth[t]), 1e-6);
    for (size_t i = 1; i < human.joint_count(); ++i) {
      EXPECT_LE(localError(human, i, got[t], truth[t]), 1e-6) << "frame " << t << " joint " << i;
    }
  }
}

TEST(Ik, ConstantSequenceIsConstant) {
  Rng rng(26);
  const Skeleton s = testing::random_tree(rng, 10);
  const KeypointFrame f = keypoints_from_pose(s, testing::random_pose(rng, s, 3.0));
  const auto poses = reconstruct_sequence(s, std::vector<KeypointFrame>(5, f));
  for (const auto& p : poses) {
    EXPECT_EQ(p.joint_values, poses[0].joint_values);
    EXPECT_EQ(p.root_position, poses[0].root_position);
    EXPECT_EQ(p.root_orientation.matrix(), poses[0].root_orientation.matrix());
  }
}

TEST(Ik, ContinuityAcrossDoubleCover) {
  Joint root;
  root.name = "root";
  Joint a;
  a.name = "a";
  a.parent = "root";
  a.rest_offset = {0, 1, 0};
  a.dof = DofType::Spherical;
  Joint b;
  b.name = "b";
  b.parent = "a";
  b.rest_offset = {0, 1, 0};
  Joint c = b;
  c.name = "c";
  c.parent = "root";
  c.rest_offset = {1, 0, 0};
  const Skeleton s("swing", {root, a, b, c});

  // swing about x sweeping through pi, then back
  std::vector<KeypointFrame> frames;
  std::vector<double> angles;
  for (int t = 0; t <= 60; ++t) {
    const double ang = 2.6 + 1.2 * std::sin(kPi * t / 30.0);
    angles.push_back(ang);
    Pose p = Pose::zero(s);
    p.joint_values.segment<3>(0) = ang * Vector3::UnitX();
    frames.push_back(keypoints_from_pose(s, p));
  }
  const auto poses = reconstruct_sequence(s, frames);
  for (size_t t = 1; t < poses.size(); ++t) {
    const auto q0 = rotation_vector_quaternion(poses[t - 1].joint_values.segment<3>(0));
    const auto q1 = rotation_vector_quaternion(poses[t].joint_values.segment<3>(0));
    EXPECT_GE(q0.dot(q1), 0.0) << "frame " << t;
  }
  // continuity makes the chart follow the unwrapped sweep
  for (size_t t = 0; t < poses.size(); ++t) {
    const Vector3 v = poses[t].joint_values.segment<3>(0);
    EXPECT_LE((v - angles[t] * Vector3::UnitX()).norm(), 1e-6) << "frame " << t;
  }

  const auto raw = reconstruct_sequence(s, frames, false);
  bool flipped = false;
  for (size_t t = 1; t < raw.size(); ++t) {
    flipped |= rotation_vector_quaternion(raw[t - 1].joint_values.segment<3>(0))
                   .dot(rotation_vector_quaternion(raw[t].joint_values.segment<3>(0))) < 0.0;
  }
  EXPECT_TRUE(flipped);
}

TEST(Ik, Errors) {
  Rng rng(27);
  const Skeleton s = testing::random_tree(rng, 6);
  KeypointFrame f = keypoints_from_pose(s, Pose::zero(s));

  KeypointFrame missing = f;
  missing.labels[2] = "nobody";
  EXPECT_THROW(reconstruct_frame(s, missing), ValidationError);

  KeypointFrame collapsed = f;
  for (Eigen::Index r = 0; r < collapsed.positions.rows(); ++r) {
    collapsed.positions.row(r).setZero();
  }
  EXPECT_THROW(reconstruct_frame(s, collapsed), DegenerateBone);

  KeypointFrame nan = f;
  nan.positions(1, 1) = std::nan("");
  EXPECT_THROW(reconstruct_frame(s, nan), ValidationError);

  EXPECT_THROW(reconstruct_sequence(s, {}), ValidationError);

  Joint root;
  root.name = "root";
  Joint a;
  a.name = "a";
  a.parent = "root";
  a.rest_offset = {0, 1, 0};
  Joint b = a;
  b.name = "b";
  b.rest_offset = {0, 2, 0};
  const Skeleton line("line", {root, a, b});
  EXPECT_THROW(reconstruct_frame(line, keypoints_from_pose(line, Pose::zero(line))), RankDeficient);
}

} // namespace
} // namespace rkit
