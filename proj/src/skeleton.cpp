#include "retarget_kit/skeleton.hpp"

#include "retarget_kit/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_set>

namespace rkit {

int dof_count(DofType type) {
  switch (type) {
    case DofType::Fixed:
      return 0;
    case DofType::Revolute:
      return 1;
    case DofType::Spherical:
      return 3;
  }
  return 0;
}

Skeleton::Skeleton(std::string name, std::vector<Joint> joints, std::vector<Marker> markers)
    : name_(std::move(name)), joints_(std::move(joints)), markers_(std::move(markers)) {
  const size_t n = joints_.size();
  if (n == 0) {
    throw InvalidSkeleton("skeleton '" + name_ + "' has no joints");
  }

  for (size_t i = 0; i < n; ++i) {
    if (!jointIndex_.emplace(joints_[i].name, static_cast<int>(i)).second) {
      throw InvalidSkeleton("duplicate joint name '" + joints_[i].name + "'");
    }
  }

  // Resolve parent names before checking order so that cycles are reported
  // as cycles rather than as ordering errors.
  std::vector<int> parents(n, -1);
  size_t rootCount = 0;
  for (size_t i = 0; i < n; ++i) {
    const Joint& j = joints_[i];
    if (!j.parent) {
      ++rootCount;
      continue;
    }
    auto it = jointIndex_.find(*j.parent);
    if (it == jointIndex_.end()) {
      throw InvalidSkeleton(
          "joint '" + j.name + "' references unknown parent '" + *j.parent + "'");
    }
    parents[i] = it->second;
  }

  for (size_t i = 0; i < n; ++i) {
    std::vector<int> path;
    std::unordered_set<int> seen;
    int cur = static_cast<int>(i);
    while (cur >= 0) {
      if (!seen.insert(cur).second) {
        auto start = std::find(path.begin(), path.end(), cur);
        std::ostringstream os;
        os << "joint parent cycle: ";
        for (auto p = start; p != path.end(); ++p) {
          os << joints_[*p].name << " -> ";
        }
        os << joints_[cur].name;
        throw InvalidSkeleton(os.str());
      }
      path.push_back(cur);
      cur = parents[cur];
    }
  }

  if (rootCount != 1) {
    throw InvalidSkeleton(
        "skeleton '" + name_ + "' must have exactly one root, found " + std::to_string(rootCount));
  }
  if (joints_[0].parent) {
    throw InvalidSkeleton("root joint must be listed first");
  }
  if (joints_[0].dof != DofType::Fixed || !joints_[0].rest_offset.isZero(0.0)) {
    throw InvalidSkeleton(
        "root joint '" + joints_[0].name + "' must be fixed with zero offset");
  }

  for (size_t i = 1; i < n; ++i) {
    if (parents[i] >= static_cast<int>(i)) {
      throw InvalidSkeleton(
          "joint '" + joints_[i].name + "' is listed before its parent '" +
          joints_[parents[i]].name + "'");
    }
  }

  children_.assign(n, {});
  dofOffsets_.assign(n, 0);
  totalDofs_ = 0;
  for (size_t i = 0; i < n; ++i) {
    Joint& j = joints_[i];
    if (!j.rest_offset.allFinite()) {
      throw InvalidSkeleton("joint '" + j.name + "' has a non-finite offset");
    }
    if (j.dof == DofType::Revolute) {
      const double len = j.axis.norm();
      if (!std::isfinite(len) || std::abs(len - 1.0) > 1e-6) {
        throw InvalidSkeleton("joint '" + j.name + "' axis must be unit length");
      }
      j.axis /= len;
    }
    const int count = dof_count(j.dof);
    if (!j.limits.empty() && static_cast<int>(j.limits.size()) != count) {
      throw InvalidSkeleton(
          "joint '" + j.name + "' has " + std::to_string(j.limits.size()) +
          " limit pairs, expected " + std::to_string(count));
    }
    for (const auto& l : j.limits) {
      if (std::isnan(l.min) || std::isnan(l.max) || l.min > l.max) {
        throw InvalidSkeleton("joint '" + j.name + "' has an invalid limit (min > max)");
      }
    }
    dofOffsets_[i] = totalDofs_;
    totalDofs_ += count;
    if (parents[i] >= 0) {
      children_[parents[i]].push_back(static_cast<int>(i));
    }
  }
  parents_ = std::move(parents);

  for (size_t m = 0; m < markers_.size(); ++m) {
    const Marker& mk = markers_[m];
    auto it = jointIndex_.find(mk.joint);
    if (it == jointIndex_.end()) {
      throw InvalidSkeleton(
          "marker '" + mk.name + "' references unknown joint '" + mk.joint + "'");
    }
    if (!mk.offset.allFinite()) {
      throw InvalidSkeleton("marker '" + mk.name + "' has a non-finite offset");
    }
    if (!markerIndex_.emplace(mk.name, static_cast<int>(m)).second) {
      throw InvalidSkeleton("duplicate marker name '" + mk.name + "'");
    }
    markerJoints_.push_back(it->second);
  }
}

std::optional<int> Skeleton::find_joint(const std::string& name) const {
  auto it = jointIndex_.find(name);
  if (it == jointIndex_.end()) {
    return std::nullopt;
  }
  return it->second;
}

std::optional<int> Skeleton::find_marker(const std::string& name) const {
  auto it = markerIndex_.find(name);
  if (it == markerIndex_.end()) {
    return std::nullopt;
  }
  return it->second;
}

std::optional<Attachment> Skeleton::resolve(const std::string& name) const {
  if (auto m = find_marker(name)) {
    return Attachment{markerJoints_[*m], markers_[*m].offset};
  }
  if (auto j = find_joint(name)) {
    return Attachment{*j, Vector3::Zero()};
  }
  return std::nullopt;
}

std::vector<std::string> Skeleton::dof_names() const {
  std::vector<std::string> names;
  names.reserve(totalDofs_);
  for (const Joint& j : joints_) {
    if (j.dof == DofType::Revolute) {
      names.push_back(j.name);
    } else if (j.dof == DofType::Spherical) {
      names.push_back(j.name + ".x");
      names.push_back(j.name + ".y");
      names.push_back(j.name + ".z");
    }
  }
  return names;
}

std::pair<VectorX, VectorX> Skeleton::revolute_bounds() const {
  constexpr double inf = std::numeric_limits<double>::infinity();
  VectorX lo = VectorX::Constant(totalDofs_, -inf);
  VectorX hi = VectorX::Constant(totalDofs_, inf);
  for (size_t i = 0; i < joints_.size(); ++i) {
    const Joint& j = joints_[i];
    if (j.dof == DofType::Revolute && !j.limits.empty()) {
      lo[dofOffsets_[i]] = j.limits[0].min;
      hi[dofOffsets_[i]] = j.limits[0].max;
    }
  }
  return {lo, hi};
}

namespace {

void checkPose(const Skeleton& skeleton, const Pose& pose) {
  if (pose.joint_values.size() != skeleton.total_dofs()) {
    std::ostringstream os;
    os << "pose has " << pose.joint_values.size() << " joint values, skeleton '"
       << skeleton.name() << "' expects " << skeleton.total_dofs();
    throw PoseMismatch(os.str());
  }
}

} // namespace

Rotation joint_rotation(const Skeleton& skeleton, size_t joint, const VectorX& values) {
  const Joint& j = skeleton.joints()[joint];
  const int off = skeleton.dof_offset(joint);
  switch (j.dof) {
    case DofType::Fixed:
      return {};
    case DofType::Revolute:
      return Rotation::from_axis_angle(j.axis, values[off]);
    case DofType::Spherical:
      return Rotation::from_rotation_vector(values.segment<3>(off));
  }
  return {};
}

FkResult fk(const Skeleton& skeleton, const Pose& pose) {
  checkPose(skeleton, pose);
  const size_t n = skeleton.joint_count();
  FkResult out;
  out.positions.resize(n);
  out.rotations.resize(n);
  out.positions[0] = pose.root_position;
  out.rotations[0] = pose.root_orientation;
  for (size_t i = 1; i < n; ++i) {
    const int p = skeleton.parent(i);
    const Joint& j = skeleton.joints()[i];
    out.positions[i] = out.positions[p] + out.rotations[p] * j.rest_offset;
    out.rotations[i] = out.rotations[p] * joint_rotation(skeleton, i, pose.joint_values);
  }
  out.marker_positions.reserve(skeleton.markers().size());
  for (size_t m = 0; m < skeleton.markers().size(); ++m) {
    const int j = skeleton.marker_joint(m);
    out.marker_positions.push_back(out.positions[j] + out.rotations[j] * skeleton.markers()[m].offset);
  }
  return out;
}

Vector3 attachment_position(const FkResult& result, const Attachment& a) {
  return result.positions[a.joint] + result.rotations[a.joint] * a.offset;
}

Vector3 euler_xyz(const Rotation& r) {
  const Matrix3& m = r.matrix();
  const double sb = std::clamp(m(0, 2), -1.0, 1.0);
  const double b = std::asin(sb);
  if (std::abs(sb) > 1.0 - 1e-12) {
    // gimbal lock: only a +/- c is observable; put it all in a
    return {std::atan2(m(2, 1), m(1, 1)), b, 0.0};
  }
  return {std::atan2(-m(1, 2), m(2, 2)), b, std::atan2(-m(0, 1), m(0, 0))};
}

Rotation from_euler_xyz(const Vector3& abc) {
  return Rotation::from_axis_angle(Vector3::UnitX(), abc.x()) *
      Rotation::from_axis_angle(Vector3::UnitY(), abc.y()) *
      Rotation::from_axis_angle(Vector3::UnitZ(), abc.z());
}

std::vector<LimitViolation> check_limits(const Skeleton& skeleton, const Pose& pose) {
  checkPose(skeleton, pose);
  std::vector<LimitViolation> out;
  for (size_t i = 0; i < skeleton.joint_count(); ++i) {
    const Joint& j = skeleton.joints()[i];
    if (j.limits.empty()) {
      continue;
    }
    const int off = skeleton.dof_offset(i);
    VectorX v;
    double tol = 0.0;
    if (j.dof == DofType::Revolute) {
      v = pose.joint_values.segment<1>(off);
    } else if (j.dof == DofType::Spherical) {
      v = euler_xyz(Rotation::from_rotation_vector(pose.joint_values.segment<3>(off)));
      // Euler extraction round-off
      tol = 1e-12;
    }
    for (int k = 0; k < v.size(); ++k) {
      if (v[k] > j.limits[k].max + tol) {
        out.push_back({static_cast<int>(i), k, v[k] - j.limits[k].max});
      } else if (v[k] < j.limits[k].min - tol) {
        out.push_back({static_cast<int>(i), k, v[k] - j.limits[k].min});
      }
    }
  }
  return out;
}

Pose project_to_limits(const Skeleton& skeleton, const Pose& pose) {
  checkPose(skeleton, pose);
  Pose out = pose;
  for (size_t i = 0; i < skeleton.joint_count(); ++i) {
    const Joint& j = skeleton.joints()[i];
    if (j.limits.empty()) {
      continue;
    }
    const int off = skeleton.dof_offset(i);
    if (j.dof == DofType::Revolute) {
      out.joint_values[off] = std::clamp(out.joint_values[off], j.limits[0].min, j.limits[0].max);
    } else if (j.dof == DofType::Spherical) {
      Vector3 e = euler_xyz(Rotation::from_rotation_vector(out.joint_values.segment<3>(off)));
      bool changed = false;
      for (int k = 0; k < 3; ++k) {
        const double c = std::clamp(e[k], j.limits[k].min, j.limits[k].max);
        changed |= (c != e[k]);
        e[k] = c;
      }
      if (changed) {
        out.joint_values.segment<3>(off) = from_euler_xyz(e).rotation_vector();
      }
    }
  }
  return out;
}

double chain_length(const Skeleton& skeleton, const std::string& ancestor, const std::string& descendant) {
  const auto a = skeleton.find_joint(ancestor);
  const auto d = skeleton.find_joint(descendant);
  if (!a || !d) {
    throw UnresolvableCorrespondence(
        "chain '" + ancestor + "' -> '" + descendant + "' names unknown joints on '" +
        skeleton.name() + "'");
  }
  double length = 0.0;
  int cur = *d;
  while (cur != *a) {
    if (cur < 0) {
      throw UnresolvableCorrespondence(
          "'" + ancestor + "' is not an ancestor of '" + descendant + "'");
    }
    length += skeleton.joints()[cur].rest_offset.norm();
    cur = skeleton.parent(cur);
  }
  return length;
}

void DofConfig::validate() const {
  std::unordered_set<std::string> seen;
  for (const auto& e : joints) {
    if (!seen.insert(e.name).second) {
      throw ValidationError("DofConfig: duplicate joint name '" + e.name + "'");
    }
    if (e.scale == 0.0 || !std::isfinite(e.scale) || !std::isfinite(e.offset)) {
      throw ValidationError("DofConfig: joint '" + e.name + "' needs a finite nonzero scale");
    }
  }
}

VectorX remap_dofs(const VectorX& values, const DofConfig& src, const DofConfig& dst) {
  src.validate();
  dst.validate();
  if (values.size() != static_cast<Eigen::Index>(src.joints.size())) {
    throw DimensionMismatch(
        "remap_dofs: " + std::to_string(values.size()) + " values for " +
        std::to_string(src.joints.size()) + " source joints");
  }
  std::unordered_map<std::string, size_t> srcIndex;
  for (size_t i = 0; i < src.joints.size(); ++i) {
    srcIndex.emplace(src.joints[i].name, i);
  }
  VectorX out(dst.joints.size());
  for (size_t i = 0; i < dst.joints.size(); ++i) {
    const auto& d = dst.joints[i];
    auto it = srcIndex.find(d.name);
    if (it != srcIndex.end()) {
      const auto& s = src.joints[it->second];
      out[i] = (values[it->second] - s.offset) / s.scale * d.scale + d.offset;
    } else if (d.default_value) {
      out[i] = *d.default_value;
    } else {
      throw MissingDefault(
          "remap_dofs: joint '" + d.name + "' is absent from the source and has no default");
    }
  }
  return out;
}

} // namespace rkit
