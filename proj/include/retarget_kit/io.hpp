#pragma once

#include "retarget_kit/motion.hpp"
#include "retarget_kit/retarget.hpp"
#include "retarget_kit/skeleton.hpp"
#include "retarget_kit/vq.hpp"

#include <json.hpp>

#include <Eigen/Core>

#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace rkit::io {

using Json = nlohmann::json;

inline constexpr int kFormatVersion = 1;

// Format tags stored under "format".
inline constexpr const char* kSkeletonFormat = "retarget_kit.skeleton";
inline constexpr const char* kMotionFormat = "retarget_kit.motion";
inline constexpr const char* kMapFormat = "retarget_kit.map";
inline constexpr const char* kDofFormat = "retarget_kit.dofs";
inline constexpr const char* kMatrixFormat = "retarget_kit.matrix";
inline constexpr const char* kCodebookFormat = "retarget_kit.codebook";
inline constexpr const char* kTokensFormat = "retarget_kit.tokens";
inline constexpr const char* kReportFormat = "retarget_kit.report";

struct WriteOptions {
  /// Store matrices with at least this many entries in a little-endian
  /// float64 sidecar next to the file. 0 keeps everything inline.
  size_t sidecar_min_entries = 0;
};

/// Pretty-printed JSON with sorted keys and two-space indentation. Arrays of
/// scalars stay on one line, so a matrix prints one row per line. Numbers
/// use the shortest decimal that round-trips to the same double.
std::string canonical_dump(const Json& value);

/// Parses `path`. Syntax errors raise ParseError located at "line L, column C".
Json read_json_file(const std::filesystem::path& path);

/// Writes canonical_dump(value) through a temporary file and a rename.
void write_json_file(const std::filesystem::path& path, const Json& value);

/// Atomic raw write (temporary file in the same directory, then rename).
void write_file_atomic(const std::filesystem::path& path, const std::string& bytes);

/// Reads "format" and "version" and checks them. Throws ParseError when the
/// format tag differs and SchemaVersionError on an unsupported version.
void check_header(const Json& doc, const std::string& path, const std::string& format);

// --------------------------------------------------------------------------
// Skeleton

Skeleton skeleton_from_json(const Json& doc, const std::string& path = "<memory>");
Json skeleton_to_json(const Skeleton& skeleton);
Skeleton load_skeleton(const std::filesystem::path& path);
void save_skeleton(const std::filesystem::path& path, const Skeleton& skeleton);

// --------------------------------------------------------------------------
// Motion: keypoint frames or joint trajectories

using Motion = std::variant<KeypointMotion, JointTrajectory>;

Motion load_motion(const std::filesystem::path& path);
KeypointMotion load_keypoints(const std::filesystem::path& path);
JointTrajectory load_trajectory(const std::filesystem::path& path);
void save_motion(const std::filesystem::path& path, const Motion& motion, const WriteOptions& opts = {});

// --------------------------------------------------------------------------
// Correspondence map

struct MapFile {
  CorrespondenceSet correspondence;
  RetargetOptions options;
};

/// Pairs without "orientation_weight" get default_orientation_weight
/// against `robot`, or 0 when no robot skeleton is given.
MapFile load_map(const std::filesystem::path& path, const Skeleton* robot = nullptr);
void save_map(const std::filesystem::path& path, const MapFile& map);

// --------------------------------------------------------------------------
// DoF configuration

DofConfig load_dof_config(const std::filesystem::path& path);
void save_dof_config(const std::filesystem::path& path, const DofConfig& config);

// --------------------------------------------------------------------------
// Feature / latent matrices

struct MatrixFile {
  Eigen::MatrixXd data;
  std::optional<std::vector<int>> labels; // one per row
};

MatrixFile load_matrix(const std::filesystem::path& path);
void save_matrix(const std::filesystem::path& path, const MatrixFile& matrix, const WriteOptions& opts = {});

// --------------------------------------------------------------------------
// Codebook and tokens

/// Accepts a full codebook file or a plain matrix file (EMA state then
/// initialized by Codebook::from_entries).
Codebook load_codebook(const std::filesystem::path& path);
void save_codebook(const std::filesystem::path& path, const Codebook& codebook, const WriteOptions& opts = {});

TokenSequence load_tokens(const std::filesystem::path& path);
void save_tokens(const std::filesystem::path& path, const TokenSequence& tokens);

// --------------------------------------------------------------------------
// Reports

Json retarget_report_to_json(const RetargetReport& report);

/// Wraps `body` with the report header and writes it.
void save_report(const std::filesystem::path& path, const std::string& command, Json body);

} // namespace rkit::io
