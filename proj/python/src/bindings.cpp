#include "retarget_kit/errors.hpp"
#include "retarget_kit/features.hpp"
#include "retarget_kit/ik.hpp"
#include "retarget_kit/io.hpp"
#include "retarget_kit/metrics.hpp"
#include "retarget_kit/retarget.hpp"
#include "retarget_kit/vq.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
using namespace rkit;

namespace {

Rotation checked(const Matrix3& m) {
  return Rotation::from_matrix(m);
}

Pose makePose(const Vector3& root, const Matrix3& orientation, const VectorX& q) {
  return {root, checked(orientation), q};
}

py::tuple poseTuple(const Pose& p) {
  return py::make_tuple(p.root_position, p.root_orientation.matrix(), p.joint_values);
}

Eigen::MatrixXd stackRows(const std::vector<Vector3>& v) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(v.size()), 3);
  for (size_t i = 0; i < v.size(); ++i) {
    m.row(static_cast<Eigen::Index>(i)) = v[i].transpose();
  }
  return m;
}

JointTrajectory plainTrajectory(const Eigen::MatrixXd& q, double fps) {
  JointTrajectory t;
  t.fps = fps;
  t.joint_values = q;
  t.root_positions.assign(static_cast<size_t>(q.rows()), Vector3::Zero());
  t.root_orientations.assign(static_cast<size_t>(q.rows()), Rotation());
  return t;
}

TrajectoryPair plainPair(const Eigen::MatrixXd& ref, const Eigen::MatrixXd& exec, double fps) {
  return {plainTrajectory(ref, fps), plainTrajectory(exec, fps)};
}

} // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Motion retargeting toolkit: rotations, kinematics, retargeting, quantization and metrics";

  auto validation = py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);
  py::register_exception<ParseError>(m, "ParseError", validation.ptr());

  // rotations
  m.def("rotation_from_vector", [](const Vector3& v) { return Rotation::from_rotation_vector(v).matrix(); });
  m.def("rotation_vector", [](const Matrix3& r) { return checked(r).rotation_vector(); });
  m.def("quaternion", [](const Matrix3& r) {
    const auto q = checked(r).quaternion();
    return Eigen::Vector4d(q.w(), q.x(), q.y(), q.z());
  }, "Unit quaternion (w, x, y, z) with w >= 0");
  m.def("nearest_rotation", [](const Matrix3& m3) { return Rotation::nearest(m3).matrix(); });
  m.def("rodrigues_align", [](const Vector3& t, const Vector3& p) { return rodrigues_align(t, p).matrix(); },
        py::arg("template_bone"), py::arg("observed_bone"));
  m.def("procrustes", [](const Matrix3X& t, const Matrix3X& p) { return procrustes(t, p).matrix(); },
        py::arg("template_cols"), py::arg("observed_cols"));
  m.def("geodesic_distance", [](const Matrix3& a, const Matrix3& b) { return geodesic_distance(checked(a), checked(b)); });
  m.def("to_rot6d", [](const Matrix3& r) { return to_rot6d(checked(r)); });
  m.def("from_rot6d", [](const Vector6& v) { return from_rot6d(v).matrix(); });

  // skeleton and kinematics
  py::class_<Skeleton>(m, "Skeleton")
      .def_static("load", [](const std::filesystem::path& p) { return io::load_skeleton(p); })
      .def_property_readonly("name", &Skeleton::name)
      .def_property_readonly("total_dofs", &Skeleton::total_dofs)
      .def_property_readonly("joint_names", [](const Skeleton& s) {
        std::vector<std::string> names;
        for (const auto& j : s.joints()) {
          names.push_back(j.name);
        }
        return names;
      })
      .def_property_readonly("dof_names", &Skeleton::dof_names)
      .def("__len__", &Skeleton::joint_count)
      .def("__repr__", [](const Skeleton& s) {
        return "<Skeleton '" + s.name() + "' joints=" + std::to_string(s.joint_count()) +
               " dofs=" + std::to_string(s.total_dofs()) + ">";
      });

  m.def("forward_kinematics",
        [](const Skeleton& s, const Vector3& root, const Matrix3& orientation, const VectorX& q) {
          return stackRows(fk(s, makePose(root, orientation, q)).positions);
        },
        py::arg("skeleton"), py::arg("root_position"), py::arg("root_orientation"), py::arg("joint_values"),
        "World joint positions, one row per joint");
  m.def("reconstruct_frame",
        [](const Skeleton& s, const std::vector<std::string>& labels, const KeypointMatrix& positions) {
          return poseTuple(reconstruct_frame(s, {labels, positions}));
        },
        py::arg("skeleton"), py::arg("labels"), py::arg("positions"),
        "(root_position, root_orientation, joint_values) from world keypoints");
  m.def("check_limits", [](const Skeleton& s, const Vector3& root, const Matrix3& orientation, const VectorX& q) {
    return check_limits(s, makePose(root, orientation, q)).size();
  }, "Number of limit violations");

  // retargeting
  m.def("retarget_file",
        [](const std::filesystem::path& human, const std::filesystem::path& humanSkel,
           const std::filesystem::path& robotSkel, const std::filesystem::path& map) {
          const Skeleton h = io::load_skeleton(humanSkel);
          const Skeleton r = io::load_skeleton(robotSkel);
          const io::MapFile mf = io::load_map(map, &r);
          const io::Motion motion = io::load_motion(human);
          std::vector<Pose> poses;
          double fps = 30.0;
          if (const auto* tr = std::get_if<JointTrajectory>(&motion)) {
            poses = tr->poses();
            fps = tr->fps;
          } else {
            const auto& kp = std::get<KeypointMotion>(motion);
            std::vector<KeypointFrame> frames;
            for (size_t t = 0; t < kp.size(); ++t) {
              frames.push_back(kp.frame(t));
            }
            poses = reconstruct_sequence(h, frames, true);
            fps = kp.fps;
          }
          std::pair<JointTrajectory, std::vector<RetargetReport>> result;
          {
            py::gil_scoped_release release;
            result = retarget_sequence(h, poses, r, mf.correspondence, mf.options, fps);
          }
          const auto& [traj, reports] = result;
          std::vector<double> residuals;
          for (const auto& rep : reports) {
            residuals.push_back(rep.max_position_residual());
          }
          py::dict out;
          out["joint_values"] = traj.joint_values;
          out["root_positions"] = stackRows(traj.root_positions);
          out["dof_names"] = traj.dof_names;
          out["max_position_residual"] = residuals;
          return out;
        },
        py::arg("human"), py::arg("human_skeleton"), py::arg("robot_skeleton"), py::arg("map"));

  m.def("save_trajectory",
        [](const std::filesystem::path& path, const Skeleton& s, const Eigen::MatrixXd& rootPositions,
           const std::vector<Matrix3>& rootOrientations, const Eigen::MatrixXd& q, double fps) {
          std::vector<Pose> poses;
          for (Eigen::Index t = 0; t < q.rows(); ++t) {
            if (t >= rootPositions.rows() || static_cast<size_t>(t) >= rootOrientations.size()) {
              throw DimensionMismatch("root arrays are shorter than joint_values");
            }
            poses.push_back(makePose(rootPositions.row(t).transpose(), rootOrientations[static_cast<size_t>(t)],
                                     q.row(t).transpose()));
          }
          io::save_motion(path, JointTrajectory::from_poses(s, poses, fps));
        },
        py::arg("path"), py::arg("skeleton"), py::arg("root_positions"), py::arg("root_orientations"),
        py::arg("joint_values"), py::arg("fps"));

  // quantization
  m.def("assign", [](const Eigen::MatrixXd& codes, const Eigen::MatrixXd& latents) {
    return assign(Codebook::from_entries(codes), latents).indices;
  }, py::arg("codes"), py::arg("latents"));

  // metrics
  m.def("mpjpe", [](const Eigen::MatrixXd& r, const Eigen::MatrixXd& e) { return mpjpe(plainPair(r, e, 30.0)); },
        py::arg("reference"), py::arg("executed"));
  m.def("vel_err", [](const Eigen::MatrixXd& r, const Eigen::MatrixXd& e, double fps) {
    return vel_err(plainPair(r, e, fps));
  }, py::arg("reference"), py::arg("executed"), py::arg("fps"));
  m.def("accel_err", [](const Eigen::MatrixXd& r, const Eigen::MatrixXd& e, double fps) {
    return accel_err(plainPair(r, e, fps));
  }, py::arg("reference"), py::arg("executed"), py::arg("fps"));
  m.def("fid", &fid, py::arg("a"), py::arg("b"));
  m.def("diversity", &diversity, py::arg("x"), py::arg("pair_count"), py::arg("seed") = kDefaultMetricSeed);
  m.def("multimodality", &multimodality, py::arg("x"), py::arg("labels"), py::arg("pair_count"),
        py::arg("seed") = kDefaultMetricSeed);
  m.def("mm_dist", &mm_dist, py::arg("text"), py::arg("motion"));
  m.def("r_precision", &r_precision, py::arg("text"), py::arg("motion"), py::arg("pool_size"), py::arg("k"),
        py::arg("seed") = kDefaultMetricSeed);

  // features
  m.def("pose_feature_dim", &pose_feature_dim, py::arg("joints"));
  m.def("build_pose_features", [](const Skeleton& s, const std::filesystem::path& motion) {
    const io::Motion mo = io::load_motion(motion);
    if (const auto* tr = std::get_if<JointTrajectory>(&mo)) {
      return build_pose_features(s, tr->poses(), tr->fps);
    }
    return build_pose_features(s, std::get<KeypointMotion>(mo));
  }, py::arg("skeleton"), py::arg("motion"));
}
