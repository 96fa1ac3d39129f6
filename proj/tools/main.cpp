// retarget-kit: batch command line front end.
//
// Exit codes: 0 success, 2 invalid input, 3 numeric failure, 1 anything else.

#include "retarget_kit/errors.hpp"
#include "retarget_kit/features.hpp"
#include "retarget_kit/ik.hpp"
#include "retarget_kit/io.hpp"
#include "retarget_kit/metrics.hpp"
#include "retarget_kit/retarget.hpp"
#include "retarget_kit/vq.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

using rkit::io::Json;

constexpr int kExitValidation = 2;
constexpr int kExitNumeric = 3;

// Prefixes library errors with the flag that named the offending input.
template <typename F>
auto fromFlag(const std::string& flag, F&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const rkit::NumericError& e) {
    throw rkit::NumericError(flag + ": " + e.what());
  } catch (const rkit::ValidationError& e) {
    throw rkit::ValidationError(flag + ": " + e.what());
  }
}

std::uint64_t resolveSeed(const std::optional<std::uint64_t>& flag) {
  if (flag) {
    return *flag;
  }
  if (const char* env = std::getenv("RETARGET_KIT_SEED")) {
    try {
      size_t used = 0;
      const auto v = std::stoull(env, &used);
      if (used == std::string(env).size()) {
        return v;
      }
    } catch (const std::exception&) {
    }
    throw rkit::ValidationError(std::string("RETARGET_KIT_SEED is not an unsigned integer: ") + env);
  }
  return rkit::kDefaultMetricSeed;
}

std::string formatNumber(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

struct TableRow {
  std::string name;
  double value;
  long long n;
};

void printTable(const std::vector<TableRow>& rows) {
  std::printf("%-16s %18s %10s\n", "metric", "value", "n");
  for (const auto& r : rows) {
    std::printf("%-16s %18s %10lld\n", r.name.c_str(), formatNumber(r.value).c_str(), r.n);
  }
}

void maybeReport(const std::string& path, const std::string& command, Json body) {
  if (!path.empty()) {
    fromFlag("--report", [&] { rkit::io::save_report(path, command, std::move(body)); });
  }
}

std::vector<rkit::Pose> posesFromMotion(const rkit::Skeleton& skel, const rkit::io::Motion& motion, bool continuity) {
  if (const auto* tr = std::get_if<rkit::JointTrajectory>(&motion)) {
    return tr->poses();
  }
  const auto& kp = std::get<rkit::KeypointMotion>(motion);
  std::vector<rkit::KeypointFrame> frames;
  frames.reserve(kp.size());
  for (size_t t = 0; t < kp.size(); ++t) {
    frames.push_back(kp.frame(t));
  }
  return rkit::reconstruct_sequence(skel, frames, continuity);
}

double motionFps(const rkit::io::Motion& motion) {
  return std::visit([](const auto& m) { return m.fps; }, motion);
}

// ---------------------------------------------------------------------------

struct FkArgs {
  std::string skeleton, motion, out, report;
  size_t sidecar = 0;
};

void runFk(const FkArgs& a) {
  const auto skel = fromFlag("--skel", [&] { return rkit::io::load_skeleton(a.skeleton); });
  const auto traj = fromFlag("--motion", [&] { return rkit::io::load_trajectory(a.motion); });
  const auto poses = fromFlag("--motion", [&] { return traj.poses(); });
  const auto kp = fromFlag("--motion", [&] { return rkit::keypoint_motion_from_poses(skel, poses, traj.fps); });
  fromFlag("--out", [&] { rkit::io::save_motion(a.out, kp, {a.sidecar}); });
  maybeReport(a.report, "fk", Json{{"frames", kp.size()}, {"joints", kp.labels.size()}, {"skeleton", skel.name()}});
}

struct IkArgs {
  std::string skeleton, keypoints, out, report;
  bool noContinuity = false;
  size_t sidecar = 0;
};

void runIk(const IkArgs& a) {
  const auto skel = fromFlag("--skel", [&] { return rkit::io::load_skeleton(a.skeleton); });
  const auto kp = fromFlag("--keypoints", [&] { return rkit::io::load_keypoints(a.keypoints); });
  const auto poses = fromFlag("--keypoints", [&] {
    return posesFromMotion(skel, rkit::io::Motion(kp), !a.noContinuity);
  });
  const auto traj = rkit::JointTrajectory::from_poses(skel, poses, kp.fps);
  fromFlag("--out", [&] { rkit::io::save_motion(a.out, traj, {a.sidecar}); });
  maybeReport(a.report, "ik", Json{{"frames", traj.size()}, {"dofs", skel.total_dofs()}, {"skeleton", skel.name()}});
}

struct RetargetArgs {
  std::string human, humanSkel, robotSkel, map, out, report;
  size_t sidecar = 0;
};

void runRetarget(const RetargetArgs& a) {
  const auto human = fromFlag("--human-skel", [&] { return rkit::io::load_skeleton(a.humanSkel); });
  const auto robot = fromFlag("--robot-skel", [&] { return rkit::io::load_skeleton(a.robotSkel); });
  const auto map = fromFlag("--map", [&] { return rkit::io::load_map(a.map, &robot); });
  const auto motion = fromFlag("--human", [&] { return rkit::io::load_motion(a.human); });
  const auto poses = fromFlag("--human", [&] { return posesFromMotion(human, motion, true); });

  const auto [traj, reports] = fromFlag("--map", [&] {
    return rkit::retarget_sequence(human, poses, robot, map.correspondence, map.options, motionFps(motion));
  });
  fromFlag("--out", [&] { rkit::io::save_motion(a.out, traj, {a.sidecar}); });

  double maxResidual = 0.0;
  int failed = 0;
  int violations = 0;
  int converged = 0;
  Json frames = Json::array();
  for (const auto& r : reports) {
    maxResidual = std::max(maxResidual, r.max_position_residual());
    failed += r.failed ? 1 : 0;
    converged += r.converged ? 1 : 0;
    violations += r.limit_violations;
    frames.push_back(rkit::io::retarget_report_to_json(r));
  }
  const double scale = rkit::resolve_scale(map.correspondence, human, robot);
  maybeReport(
      a.report,
      "retarget",
      Json{{"frames", reports.size()},
           {"failed_frames", failed},
           {"converged_frames", converged},
           {"limit_violations", violations},
           {"max_position_residual", maxResidual},
           {"scale", scale},
           {"human_skeleton", human.name()},
           {"robot_skeleton", robot.name()},
           {"per_frame", std::move(frames)}});
  std::printf("retargeted %zu frames to %s: max position residual %s m, %d failed\n",
              reports.size(), robot.name().c_str(), formatNumber(maxResidual).c_str(), failed);
}

struct TrackArgs {
  std::vector<std::string> ref, exec;
  std::optional<double> heightThreshold;
  std::string report;
};

void runTrack(const TrackArgs& a) {
  if (a.ref.size() != a.exec.size()) {
    throw rkit::ValidationError("--ref and --exec need the same number of files");
  }
  std::vector<rkit::TrajectoryPair> pairs;
  for (size_t i = 0; i < a.ref.size(); ++i) {
    pairs.push_back({fromFlag("--ref", [&] { return rkit::io::load_trajectory(a.ref[i]); }),
                     fromFlag("--exec", [&] { return rkit::io::load_trajectory(a.exec[i]); })});
  }
  double mpjpe = 0.0, vel = 0.0, accel = 0.0;
  long long frames = 0;
  for (const auto& p : pairs) {
    const auto t = static_cast<double>(p.reference.size());
    mpjpe += rkit::mpjpe(p) * t;
    vel += rkit::vel_err(p) * t;
    accel += rkit::accel_err(p) * t;
    frames += static_cast<long long>(p.reference.size());
  }
  const auto total = static_cast<double>(frames);
  Json metrics{{"mpjpe", mpjpe / total}, {"vel_err", vel / total}, {"accel_err", accel / total}};
  std::vector<TableRow> rows{
      {"MPJPE[mrad]", 1e3 * mpjpe / total, frames},
      {"VEL[mrad/s]", 1e3 * vel / total, frames},
      {"ACCEL[mrad/s2]", 1e3 * accel / total, frames}};
  if (a.heightThreshold) {
    const double sr = rkit::success_rate(pairs, *a.heightThreshold);
    metrics["success_rate"] = sr;
    rows.push_back({"SR", sr, static_cast<long long>(pairs.size())});
  }
  printTable(rows);
  maybeReport(a.report, "metrics track", Json{{"metrics", metrics}, {"motions", pairs.size()}, {"frames", frames}});
}

struct GenArgs {
  std::string real, generated, text, report;
  int divPairs = 300;
  int mmPairs = 10;
  int pool = 32;
  std::optional<std::uint64_t> seed;
};

void runGen(const GenArgs& a) {
  const std::uint64_t seed = resolveSeed(a.seed);
  const auto real = fromFlag("--real", [&] { return rkit::io::load_matrix(a.real); });
  const auto gen = fromFlag("--gen", [&] { return rkit::io::load_matrix(a.generated); });
  const auto n = static_cast<long long>(gen.data.rows());
  if (gen.data.rows() <= gen.data.cols() || real.data.rows() <= real.data.cols()) {
    std::cerr << "warning: fewer samples than feature dimensions, covariance is singular\n";
  }
  Json metrics{{"fid", rkit::fid(real.data, gen.data)}};
  std::vector<TableRow> rows{{"FID", metrics["fid"].get<double>(), n}};
  if (n >= 2LL * a.divPairs) {
    metrics["diversity"] = rkit::diversity(gen.data, a.divPairs, seed);
    rows.push_back({"DIV", metrics["diversity"].get<double>(), n});
  }
  if (gen.labels) {
    metrics["multimodality"] = rkit::multimodality(gen.data, *gen.labels, a.mmPairs, seed);
    rows.push_back({"MModality", metrics["multimodality"].get<double>(), n});
  }
  if (!a.text.empty()) {
    const auto text = fromFlag("--text", [&] { return rkit::io::load_matrix(a.text); });
    metrics["mm_dist"] = rkit::mm_dist(text.data, gen.data);
    rows.push_back({"MM-Dist", metrics["mm_dist"].get<double>(), n});
    for (int k = 1; k <= 3 && k < a.pool; ++k) {
      const std::string key = "r_precision_top" + std::to_string(k);
      metrics[key] = rkit::r_precision(text.data, gen.data, a.pool, k, seed);
      rows.push_back({"R-Top" + std::to_string(k), metrics[key].get<double>(), n});
    }
  }
  printTable(rows);
  maybeReport(a.report, "metrics gen", Json{{"metrics", metrics}, {"samples", n}, {"seed", seed}});
}

struct QuantizeArgs {
  std::string codebook, latents, tokens, out, report;
  int downsample = 1;
  double threshold = 1.0;
};

void runAssign(const QuantizeArgs& a) {
  const auto cb = fromFlag("--codebook", [&] { return rkit::io::load_codebook(a.codebook); });
  const auto z = fromFlag("--latents", [&] { return rkit::io::load_matrix(a.latents); });
  auto tokens = rkit::assign(cb, z.data);
  tokens.downsample = a.downsample;
  fromFlag("--out", [&] { rkit::io::save_tokens(a.out, tokens); });
  maybeReport(
      a.report,
      "quantize assign",
      Json{{"tokens", tokens.indices.size()},
           {"quantization_error", rkit::quantization_error(cb, z.data, tokens.indices)}});
}

void runUpdate(const QuantizeArgs& a) {
  const auto cb = fromFlag("--codebook", [&] { return rkit::io::load_codebook(a.codebook); });
  const auto z = fromFlag("--latents", [&] { return rkit::io::load_matrix(a.latents); });
  const std::vector<int> assignments = a.tokens.empty()
      ? rkit::assign(cb, z.data).indices
      : fromFlag("--tokens", [&] { return rkit::io::load_tokens(a.tokens).indices; });
  const auto updated = rkit::ema_update(cb, z.data, assignments);
  fromFlag("--out", [&] { rkit::io::save_codebook(a.out, updated); });
  maybeReport(
      a.report,
      "quantize update",
      Json{{"latents", z.data.rows()},
           {"quantization_error_before", rkit::quantization_error(cb, z.data, assignments)},
           {"quantization_error_after", rkit::quantization_error(updated, z.data, assignments)}});
}

void runReset(const QuantizeArgs& a) {
  const auto cb = fromFlag("--codebook", [&] { return rkit::io::load_codebook(a.codebook); });
  const auto z = fromFlag("--latents", [&] { return rkit::io::load_matrix(a.latents); });
  const auto result = rkit::reset_dead_codes(cb, z.data, a.threshold);
  fromFlag("--out", [&] { rkit::io::save_codebook(a.out, result.codebook); });
  maybeReport(a.report, "quantize reset", Json{{"reset_count", result.reset_count}, {"codes", cb.size()}});
  std::printf("reset %d of %lld codes\n", result.reset_count, static_cast<long long>(cb.size()));
}

struct FeatureArgs {
  std::string skeleton, motion, out, report;
  double contactThreshold = 1e-3;
  std::vector<std::string> contactMarkers;
  size_t sidecar = 0;
};

void runFeatures(const FeatureArgs& a) {
  const auto skel = fromFlag("--skel", [&] { return rkit::io::load_skeleton(a.skeleton); });
  const auto motion = fromFlag("--motion", [&] { return rkit::io::load_motion(a.motion); });
  rkit::FeatureOptions opts;
  opts.contact_threshold = a.contactThreshold;
  if (!a.contactMarkers.empty()) {
    opts.contact_markers = a.contactMarkers;
  }
  const auto poses = fromFlag("--motion", [&] { return posesFromMotion(skel, motion, true); });
  rkit::io::MatrixFile f{rkit::build_pose_features(skel, poses, motionFps(motion), opts), std::nullopt};
  fromFlag("--out", [&] { rkit::io::save_matrix(a.out, f, {a.sidecar}); });
  maybeReport(a.report, "features", Json{{"frames", f.data.rows()}, {"dim", f.data.cols()}});
}

void addSidecar(CLI::App* cmd, size_t& target) {
  cmd->add_option("--sidecar-min", target, "Store matrices with at least this many entries in a float64 sidecar (0: inline)")
      ->capture_default_str();
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Motion retargeting toolkit: kinematics, retargeting, quantization and metrics"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "retarget-kit 0.1.0");

  std::function<void()> action;

  FkArgs fk;
  auto* fkCmd = app.add_subcommand("fk", "Joint trajectory -> world keypoints");
  fkCmd->add_option("--skel", fk.skeleton, "Skeleton file")->required();
  fkCmd->add_option("--motion", fk.motion, "Joint trajectory")->required();
  fkCmd->add_option("--out", fk.out, "Keypoint motion to write")->required();
  fkCmd->add_option("--report", fk.report, "Report file");
  addSidecar(fkCmd, fk.sidecar);
  fkCmd->callback([&] { action = [&] { runFk(fk); }; });

  IkArgs ik;
  auto* ikCmd = app.add_subcommand("ik", "World keypoints -> joint trajectory");
  ikCmd->add_option("--skel", ik.skeleton, "Skeleton file")->required();
  ikCmd->add_option("--keypoints", ik.keypoints, "Keypoint motion")->required();
  ikCmd->add_option("--out", ik.out, "Joint trajectory to write")->required();
  ikCmd->add_option("--report", ik.report, "Report file");
  ikCmd->add_flag("--no-continuity", ik.noContinuity, "Keep every spherical angle in [0, pi]");
  addSidecar(ikCmd, ik.sidecar);
  ikCmd->callback([&] { action = [&] { runIk(ik); }; });

  RetargetArgs rt;
  auto* rtCmd = app.add_subcommand("retarget", "Human motion -> robot joint trajectory");
  rtCmd->add_option("--human", rt.human, "Human keypoint motion or joint trajectory")->required();
  rtCmd->add_option("--human-skel", rt.humanSkel, "Human skeleton")->required();
  rtCmd->add_option("--robot-skel", rt.robotSkel, "Robot skeleton")->required();
  rtCmd->add_option("--map", rt.map, "Correspondence map with solver options")->required();
  rtCmd->add_option("--out", rt.out, "Robot trajectory to write")->required();
  rtCmd->add_option("--report", rt.report, "Report file");
  addSidecar(rtCmd, rt.sidecar);
  rtCmd->callback([&] { action = [&] { runRetarget(rt); }; });

  auto* metricsCmd = app.add_subcommand("metrics", "Tracking and generation metrics");
  metricsCmd->require_subcommand(1);

  TrackArgs track;
  auto* trackCmd = metricsCmd->add_subcommand("track", "MPJPE, VEL and ACCEL errors (and success rate)");
  trackCmd->add_option("--ref", track.ref, "Reference trajectories")->required();
  trackCmd->add_option("--exec", track.exec, "Executed trajectories, paired with --ref")->required();
  trackCmd->add_option("--height-threshold", track.heightThreshold, "Fall height for the success rate, m");
  trackCmd->add_option("--report", track.report, "Report file");
  trackCmd->callback([&] { action = [&] { runTrack(track); }; });

  GenArgs gen;
  auto* genCmd = metricsCmd->add_subcommand("gen", "FID, DIV, MModality, MM-Dist and R-precision on features");
  genCmd->add_option("--real", gen.real, "Reference feature matrix")->required();
  genCmd->add_option("--gen", gen.generated, "Generated feature matrix (labels enable MModality)")->required();
  genCmd->add_option("--text", gen.text, "Text features row-matched to --gen");
  genCmd->add_option("--div-pairs", gen.divPairs, "Pairs for DIV")->capture_default_str();
  genCmd->add_option("--mm-pairs", gen.mmPairs, "Pairs per group for MModality")->capture_default_str();
  genCmd->add_option("--pool", gen.pool, "R-precision pool size")->capture_default_str();
  genCmd->add_option("--seed", gen.seed, "Sampling seed (default: RETARGET_KIT_SEED, then 20240501)");
  genCmd->add_option("--report", gen.report, "Report file");
  genCmd->callback([&] { action = [&] { runGen(gen); }; });

  auto* quantizeCmd = app.add_subcommand("quantize", "Codebook assignment and maintenance");
  quantizeCmd->require_subcommand(1);
  QuantizeArgs q;
  auto* assignCmd = quantizeCmd->add_subcommand("assign", "Nearest code per latent row");
  auto* updateCmd = quantizeCmd->add_subcommand("update", "One EMA codebook update");
  auto* resetCmd = quantizeCmd->add_subcommand("reset", "Re-seed codes used less than --threshold");
  for (auto* cmd : {assignCmd, updateCmd, resetCmd}) {
    cmd->add_option("--codebook", q.codebook, "Codebook or plain matrix file")->required();
    cmd->add_option("--latents", q.latents, "Latent matrix")->required();
    cmd->add_option("--out", q.out, "Output file")->required();
    cmd->add_option("--report", q.report, "Report file");
  }
  assignCmd->add_option("--downsample", q.downsample, "Temporal downsampling recorded in the token file")
      ->capture_default_str();
  updateCmd->add_option("--tokens", q.tokens, "Assignments (default: nearest code)");
  resetCmd->add_option("--threshold", q.threshold, "Usage below which a code is dead")->capture_default_str();
  assignCmd->callback([&] { action = [&] { runAssign(q); }; });
  updateCmd->callback([&] { action = [&] { runUpdate(q); }; });
  resetCmd->callback([&] { action = [&] { runReset(q); }; });

  FeatureArgs feat;
  auto* featCmd = app.add_subcommand("features", "Per-frame pose features");
  featCmd->add_option("--skel", feat.skeleton, "Skeleton file")->required();
  featCmd->add_option("--motion", feat.motion, "Keypoint motion or joint trajectory")->required();
  featCmd->add_option("--out", feat.out, "Feature matrix to write")->required();
  featCmd->add_option("--contact-threshold", feat.contactThreshold, "Squared-speed contact threshold, m^2/s^2")
      ->capture_default_str();
  featCmd->add_option("--contact-markers", feat.contactMarkers, "Heel and toe markers, left then right")
      ->expected(4)
      ->delimiter(',');
  featCmd->add_option("--report", feat.report, "Report file");
  addSidecar(featCmd, feat.sidecar);
  featCmd->callback([&] { action = [&] { runFeatures(feat); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    action();
  } catch (const rkit::NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const rkit::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
