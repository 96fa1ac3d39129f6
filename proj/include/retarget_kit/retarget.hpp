#pragma once

#include "retarget_kit/motion.hpp"
#include "retarget_kit/skeleton.hpp"
#include "retarget_kit/solver.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace rkit {

/// Human point <-> robot point with weights. Names resolve against markers
/// first, then joints.
struct CorrespondencePair {
  std::string human;
  std::string robot;
  double position_weight = 1.0; // per m^2
  double orientation_weight = 0.0; // per rad^2
};

struct FingertipPair {
  std::string human;
  std::string robot;
  double weight = 1.0;
};

/// Hip -> ankle chains whose rest lengths define the default scale.
struct LegChain {
  std::string human_hip;
  std::string human_ankle;
  std::string robot_hip;
  std::string robot_ankle;
};

struct CorrespondenceSet {
  std::vector<CorrespondencePair> pairs;
  std::vector<FingertipPair> fingertips;
  std::optional<double> scale;
  std::optional<LegChain> leg_chain;

  /// Weights finite and >= 0, at least one positional pair.
  void validate() const;
};

/// Default orientation weight applied by map loaders when a pair omits it:
/// 0.5 for wrist pairs and the robot root, 0 elsewhere.
double default_orientation_weight(const Skeleton& robot, const std::string& robot_name);

/// Every joint paired with itself.
CorrespondenceSet identity_correspondence(
    const Skeleton& skeleton,
    double position_weight = 1.0,
    double orientation_weight = 0.0);

/// Explicit scale if set, else robot / human hip->ankle rest length. Throws
/// UnresolvableCorrespondence when neither is available.
double resolve_scale(const CorrespondenceSet& corr, const Skeleton& human, const Skeleton& robot);

struct RetargetOptions {
  double joint_limit_weight = 10.0;
  double limit_margin = 0.05; // barrier starts this far inside each limit, rad
  double smoothness_weight = 0.1;
  double reference_weight = 1e-3;
  /// Reference posture; the zero pose clamped into limits when absent.
  std::optional<VectorX> reference;
  bool warm_start = true;
  SolverSettings solver;

  void validate() const;

  /// All regularizers off.
  static RetargetOptions unregularized() {
    RetargetOptions o;
    o.joint_limit_weight = 0.0;
    o.smoothness_weight = 0.0;
    o.reference_weight = 0.0;
    return o;
  }
};

struct PairResidual {
  std::string human;
  std::string robot;
  double position = 0.0; // meters
  double orientation = 0.0; // radians
};

struct RetargetReport {
  double initial_objective = 0.0;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
  bool failed = false; // solution carried forward from the previous frame
  std::string failure;
  std::vector<PairResidual> residuals;
  int limit_violations = 0; // after projection
  std::vector<double> objective_history; // accepted steps

  double max_position_residual() const;
};

/// Solves one frame. The robot root follows the scaled human root; joint
/// values minimize
///   sum_pairs [wp |p_robot - s p_human|^2 + wr d(R_robot, R_human)^2]
///   + limit barrier + smoothness against `previous` + reference posture,
/// then get clamped into their limits.
///
/// `warm_start` seeds the solver (else the reference posture).
std::pair<Pose, RetargetReport> retarget_frame(
    const Skeleton& human,
    const Pose& human_pose,
    const Skeleton& robot,
    const CorrespondenceSet& corr,
    const RetargetOptions& opts = {},
    const std::optional<Pose>& warm_start = std::nullopt,
    const std::optional<VectorX>& previous = std::nullopt);

/// Frame-by-frame retargeting. Frame t warm-starts from t - 1 when enabled
/// and the smoothness term always references t - 1. A frame that fails with
/// a NumericError keeps the previous solution and is flagged in its report.
std::pair<JointTrajectory, std::vector<RetargetReport>> retarget_sequence(
    const Skeleton& human,
    const std::vector<Pose>& human_motion,
    const Skeleton& robot,
    const CorrespondenceSet& corr,
    const RetargetOptions& opts = {},
    double fps = 30.0);

/// Places human fingertips relative to the robot wrist:
/// robot_wrist.p + R_robot R_human^T s (p - human_wrist.p).
std::vector<Vector3> map_fingertips(
    const std::vector<Vector3>& human_fingertips,
    const Vector3& human_wrist_position,
    const Rotation& human_wrist_orientation,
    const Vector3& robot_wrist_position,
    const Rotation& robot_wrist_orientation,
    double scale);

/// Hand solve: fingertip position terms plus the joint-limit barrier, with
/// the hand root (wrist) held at `wrist`. `targets[i]` is the world target of
/// `pairs[i].robot`.
std::pair<Pose, RetargetReport> retarget_hand(
    const std::vector<Vector3>& targets,
    const Skeleton& hand,
    const std::vector<FingertipPair>& pairs,
    const RetargetOptions& opts = {},
    const Pose& wrist = {},
    const std::optional<Pose>& warm_start = std::nullopt);

} // namespace rkit
