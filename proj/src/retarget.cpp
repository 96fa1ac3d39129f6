#include "retarget_kit/retarget.hpp"

#include "retarget_kit/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace rkit {

void CorrespondenceSet::validate() const {
  bool anyPosition = false;
  for (const auto& p : pairs) {
    if (!std::isfinite(p.position_weight) || p.position_weight < 0.0 ||
        !std::isfinite(p.orientation_weight) || p.orientation_weight < 0.0) {
      throw ValidationError("correspondence '" + p.human + "' -> '" + p.robot + "' has a negative or non-finite weight");
    }
    anyPosition |= p.position_weight > 0.0;
  }
  for (const auto& f : fingertips) {
    if (!std::isfinite(f.weight) || f.weight < 0.0) {
      throw ValidationError("fingertip pair '" + f.human + "' -> '" + f.robot + "' has a negative or non-finite weight");
    }
  }
  if (!pairs.empty() && !anyPosition) {
    throw ValidationError("correspondence set needs at least one pair with a positive position weight");
  }
  if (scale && (!std::isfinite(*scale) || *scale <= 0.0)) {
    throw ValidationError("correspondence scale must be positive and finite");
  }
}

double default_orientation_weight(const Skeleton& robot, const std::string& robotName) {
  std::string lower = robotName;
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  if (lower.find("wrist") != std::string::npos) {
    return 0.5;
  }
  const auto a = robot.resolve(robotName);
  return (a && a->joint == 0) ? 0.5 : 0.0;
}

CorrespondenceSet identity_correspondence(const Skeleton& skeleton, double positionWeight, double orientationWeight) {
  CorrespondenceSet corr;
  for (const Joint& j : skeleton.joints()) {
    corr.pairs.push_back({j.name, j.name, positionWeight, orientationWeight});
  }
  corr.scale = 1.0;
  return corr;
}

double resolve_scale(const CorrespondenceSet& corr, const Skeleton& human, const Skeleton& robot) {
  if (corr.scale) {
    return *corr.scale;
  }
  if (!corr.leg_chain) {
    throw UnresolvableCorrespondence("correspondence set has neither a scale nor a leg chain");
  }
  const auto& leg = *corr.leg_chain;
  const double h = chain_length(human, leg.human_hip, leg.human_ankle);
  const double r = chain_length(robot, leg.robot_hip, leg.robot_ankle);
  if (!(h > 0.0)) {
    throw UnresolvableCorrespondence("human leg chain has zero length");
  }
  return r / h;
}

void RetargetOptions::validate() const {
  for (double w : {joint_limit_weight, limit_margin, smoothness_weight, reference_weight}) {
    if (!std::isfinite(w) || w < 0.0) {
      throw ValidationError("retarget option weights must be finite and >= 0");
    }
  }
  if (solver.max_iterations < 1) {
    throw ValidationError("retarget options need max_iterations >= 1");
  }
}

double RetargetReport::max_position_residual() const {
  double m = 0.0;
  for (const auto& r : residuals) {
    m = std::max(m, r.position);
  }
  return m;
}

namespace {

struct ResolvedPair {
  Attachment human;
  Attachment robot;
  double positionWeight;
  double orientationWeight;
  const CorrespondencePair* source;
};

Attachment resolveOrThrow(const Skeleton& s, const std::string& name, const char* side) {
  auto a = s.resolve(name);
  if (!a) {
    throw UnresolvableCorrespondence(
        std::string(side) + " point '" + name + "' is neither a marker nor a joint of '" + s.name() + "'");
  }
  return *a;
}

std::vector<ResolvedPair> resolvePairs(const Skeleton& human, const Skeleton& robot, const CorrespondenceSet& corr) {
  std::vector<ResolvedPair> out;
  for (const auto& p : corr.pairs) {
    out.push_back({resolveOrThrow(human, p.human, "human"), resolveOrThrow(robot, p.robot, "robot"),
                   p.position_weight, p.orientation_weight, &p});
  }
  return out;
}

struct PositionTerm {
  Attachment robot;
  Vector3 target;
  double sqrtWeight;
};

struct OrientationTerm {
  int robotJoint;
  Rotation target;
  double sqrtWeight;
};

// Stacked residuals of the per-frame objective.
struct FrameProblem {
  const Skeleton* robot = nullptr;
  Vector3 rootPosition = Vector3::Zero();
  Rotation rootOrientation;
  std::vector<PositionTerm> positions;
  std::vector<OrientationTerm> orientations;
  VectorX lower, upper;
  double limitWeight = 0.0;
  double margin = 0.0;
  std::optional<VectorX> previous;
  double smoothWeight = 0.0;
  VectorX reference;
  double referenceWeight = 0.0;

  void residuals(const VectorX& q, VectorX& r) const {
    const FkResult world = fk(*robot, Pose{rootPosition, rootOrientation, q});
    std::vector<double> out;
    out.reserve(3 * (positions.size() + orientations.size()) + 4 * static_cast<size_t>(q.size()));
    for (const auto& t : positions) {
      const Vector3 d = t.sqrtWeight * (attachment_position(world, t.robot) - t.target);
      out.insert(out.end(), {d.x(), d.y(), d.z()});
    }
    for (const auto& t : orientations) {
      const Vector3 d = t.sqrtWeight * (t.target.inverse() * world.rotations[t.robotJoint]).rotation_vector();
      out.insert(out.end(), {d.x(), d.y(), d.z()});
    }
    if (limitWeight > 0.0) {
      const double sw = std::sqrt(limitWeight);
      for (Eigen::Index i = 0; i < q.size(); ++i) {
        if (std::isfinite(lower[i])) {
          out.push_back(sw * std::max(0.0, lower[i] + margin - q[i]));
        }
        if (std::isfinite(upper[i])) {
          out.push_back(sw * std::max(0.0, q[i] - (upper[i] - margin)));
        }
      }
    }
    if (smoothWeight > 0.0 && previous) {
      const double sw = std::sqrt(smoothWeight);
      for (Eigen::Index i = 0; i < q.size(); ++i) {
        out.push_back(sw * (q[i] - (*previous)[i]));
      }
    }
    if (referenceWeight > 0.0) {
      const double sw = std::sqrt(referenceWeight);
      for (Eigen::Index i = 0; i < q.size(); ++i) {
        out.push_back(sw * (q[i] - reference[i]));
      }
    }
    r = Eigen::Map<const VectorX>(out.data(), static_cast<Eigen::Index>(out.size()));
  }
};

VectorX referencePosture(const Skeleton& robot, const RetargetOptions& opts, const VectorX& lower, const VectorX& upper) {
  if (opts.reference) {
    if (opts.reference->size() != robot.total_dofs()) {
      throw PoseMismatch("reference posture does not match skeleton '" + robot.name() + "'");
    }
    return *opts.reference;
  }
  return VectorX::Zero(robot.total_dofs()).cwiseMax(lower).cwiseMin(upper);
}

bool poseFinite(const Pose& p) {
  return p.root_position.allFinite() && p.root_orientation.matrix().allFinite() && p.joint_values.allFinite();
}

std::pair<Pose, RetargetReport> solveFrame(
    const FrameProblem& problem,
    const RetargetOptions& opts,
    const std::optional<Pose>& warmStart) {
  const Skeleton& robot = *problem.robot;
  VectorX x0 = problem.reference;
  if (warmStart) {
    if (warmStart->joint_values.size() != robot.total_dofs()) {
      throw PoseMismatch("warm start does not match skeleton '" + robot.name() + "'");
    }
    x0 = warmStart->joint_values;
  }
  auto f = [&problem](const VectorX& q, VectorX& r) { problem.residuals(q, r); };
  const SolverResult sol = minimize_least_squares(f, x0, problem.lower, problem.upper, opts.solver);

  Pose pose{problem.rootPosition, problem.rootOrientation, sol.x};
  pose = project_to_limits(robot, pose);

  RetargetReport report;
  report.initial_objective = sol.initial_objective;
  report.iterations = sol.iterations;
  report.converged = sol.converged;
  report.objective_history = sol.accepted_objectives;
  VectorX r;
  problem.residuals(pose.joint_values, r);
  report.objective = r.squaredNorm();
  if (!std::isfinite(report.objective)) {
    throw NonFiniteObjective("objective is not finite after the solve");
  }
  report.limit_violations = static_cast<int>(check_limits(robot, pose).size());
  return {pose, report};
}

FrameProblem bodyProblem(
    const Skeleton& human,
    const Pose& humanPose,
    const Skeleton& robot,
    const std::vector<ResolvedPair>& pairs,
    double scale,
    const RetargetOptions& opts,
    const std::optional<VectorX>& previous) {
  if (!poseFinite(humanPose)) {
    throw NonFiniteObjective("human pose has non-finite entries");
  }
  const FkResult hw = fk(human, humanPose);
  FrameProblem p;
  p.robot = &robot;
  p.rootPosition = scale * humanPose.root_position;
  p.rootOrientation = humanPose.root_orientation;
  for (const auto& rp : pairs) {
    if (rp.positionWeight > 0.0) {
      p.positions.push_back({rp.robot, scale * attachment_position(hw, rp.human), std::sqrt(rp.positionWeight)});
    }
    if (rp.orientationWeight > 0.0) {
      p.orientations.push_back({rp.robot.joint, hw.rotations[rp.human.joint], std::sqrt(rp.orientationWeight)});
    }
  }
  std::tie(p.lower, p.upper) = robot.revolute_bounds();
  p.limitWeight = opts.joint_limit_weight;
  p.margin = opts.limit_margin;
  p.smoothWeight = opts.smoothness_weight;
  if (previous) {
    if (previous->size() != robot.total_dofs()) {
      throw PoseMismatch("previous frame does not match skeleton '" + robot.name() + "'");
    }
    p.previous = previous;
  }
  p.reference = referencePosture(robot, opts, p.lower, p.upper);
  p.referenceWeight = opts.reference_weight;
  return p;
}

void fillPairResiduals(
    RetargetReport& report,
    const Skeleton& human,
    const Pose& humanPose,
    const Skeleton& robot,
    const Pose& robotPose,
    const std::vector<ResolvedPair>& pairs,
    double scale) {
  const FkResult hw = fk(human, humanPose);
  const FkResult rw = fk(robot, robotPose);
  report.residuals.clear();
  for (const auto& rp : pairs) {
    PairResidual res;
    res.human = rp.source->human;
    res.robot = rp.source->robot;
    res.position = (attachment_position(rw, rp.robot) - scale * attachment_position(hw, rp.human)).norm();
    res.orientation = geodesic_distance(rw.rotations[rp.robot.joint], hw.rotations[rp.human.joint]);
    report.residuals.push_back(res);
  }
}

} // namespace

std::pair<Pose, RetargetReport> retarget_frame(
    const Skeleton& human,
    const Pose& humanPose,
    const Skeleton& robot,
    const CorrespondenceSet& corr,
    const RetargetOptions& opts,
    const std::optional<Pose>& warmStart,
    const std::optional<VectorX>& previous) {
  corr.validate();
  opts.validate();
  const auto pairs = resolvePairs(human, robot, corr);
  const double scale = resolve_scale(corr, human, robot);
  const FrameProblem problem = bodyProblem(human, humanPose, robot, pairs, scale, opts, previous);
  auto [pose, report] = solveFrame(problem, opts, warmStart);
  fillPairResiduals(report, human, humanPose, robot, pose, pairs, scale);
  return {pose, report};
}

std::pair<JointTrajectory, std::vector<RetargetReport>> retarget_sequence(
    const Skeleton& human,
    const std::vector<Pose>& motion,
    const Skeleton& robot,
    const CorrespondenceSet& corr,
    const RetargetOptions& opts,
    double fps) {
  if (motion.empty()) {
    throw ValidationError("retarget_sequence: empty motion");
  }
  corr.validate();
  opts.validate();
  const auto pairs = resolvePairs(human, robot, corr);
  const double scale = resolve_scale(corr, human, robot);

  std::vector<Pose> out;
  std::vector<RetargetReport> reports;
  out.reserve(motion.size());
  reports.reserve(motion.size());
  for (size_t t = 0; t < motion.size(); ++t) {
    std::optional<VectorX> previous;
    std::optional<Pose> warm;
    if (t > 0) {
      previous = out.back().joint_values;
      if (opts.warm_start) {
        warm = out.back();
      }
    }
    try {
      const FrameProblem problem = bodyProblem(human, motion[t], robot, pairs, scale, opts, previous);
      auto [pose, report] = solveFrame(problem, opts, warm);
      fillPairResiduals(report, human, motion[t], robot, pose, pairs, scale);
      out.push_back(std::move(pose));
      reports.push_back(std::move(report));
    } catch (const NumericError& e) {
      RetargetReport report;
      report.failed = true;
      report.failure = e.what();
      Pose carried;
      if (!out.empty()) {
        carried = out.back();
      } else {
        auto [lo, hi] = robot.revolute_bounds();
        carried = Pose::zero(robot);
        carried.joint_values = referencePosture(robot, opts, lo, hi);
      }
      out.push_back(std::move(carried));
      reports.push_back(std::move(report));
    }
  }
  return {JointTrajectory::from_poses(robot, out, fps), std::move(reports)};
}

std::vector<Vector3> map_fingertips(
    const std::vector<Vector3>& humanTips,
    const Vector3& humanWristPosition,
    const Rotation& humanWristOrientation,
    const Vector3& robotWristPosition,
    const Rotation& robotWristOrientation,
    double scale) {
  const Rotation rel = robotWristOrientation * humanWristOrientation.inverse();
  std::vector<Vector3> out;
  out.reserve(humanTips.size());
  for (const Vector3& p : humanTips) {
    out.push_back(robotWristPosition + rel * (scale * (p - humanWristPosition)));
  }
  return out;
}

std::pair<Pose, RetargetReport> retarget_hand(
    const std::vector<Vector3>& targets,
    const Skeleton& hand,
    const std::vector<FingertipPair>& pairs,
    const RetargetOptions& opts,
    const Pose& wrist,
    const std::optional<Pose>& warmStart) {
  opts.validate();
  if (pairs.empty()) {
    throw ValidationError("retarget_hand needs at least one fingertip pair");
  }
  if (targets.size() != pairs.size()) {
    throw DimensionMismatch("retarget_hand: one target per fingertip pair expected");
  }
  FrameProblem p;
  p.robot = &hand;
  p.rootPosition = wrist.root_position;
  p.rootOrientation = wrist.root_orientation;
  for (size_t i = 0; i < pairs.size(); ++i) {
    if (!std::isfinite(pairs[i].weight) || pairs[i].weight < 0.0) {
      throw ValidationError("fingertip weight must be finite and >= 0");
    }
    if (!targets[i].allFinite()) {
      throw NonFiniteObjective("fingertip target '" + pairs[i].human + "' is not finite");
    }
    p.positions.push_back({resolveOrThrow(hand, pairs[i].robot, "robot"), targets[i], std::sqrt(pairs[i].weight)});
  }
  std::tie(p.lower, p.upper) = hand.revolute_bounds();
  p.limitWeight = opts.joint_limit_weight;
  p.margin = opts.limit_margin;
  p.reference = referencePosture(hand, opts, p.lower, p.upper);

  auto [pose, report] = solveFrame(p, opts, warmStart);
  const FkResult world = fk(hand, pose);
  for (size_t i = 0; i < pairs.size(); ++i) {
    PairResidual res;
    res.human = pairs[i].human;
    res.robot = pairs[i].robot;
    res.position = (attachment_position(world, p.positions[i].robot) - targets[i]).norm();
    report.residuals.push_back(res);
  }
  return {pose, report};
}

} // namespace rkit
