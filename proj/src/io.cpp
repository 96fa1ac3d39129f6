#include "retarget_kit/io.hpp"

#include "retarget_kit/errors.hpp"

#include <unistd.h>

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

namespace rkit::io {

namespace fs = std::filesystem;

// --------------------------------------------------------------------------
// Canonical text

namespace {

bool isScalar(const Json& v) {
  return !v.is_object() && !v.is_array();
}

void dumpInto(const Json& v, int indent, std::string& out) {
  const std::string pad(static_cast<size_t>(indent) + 2, ' ');
  if (v.is_object()) {
    if (v.empty()) {
      out += "{}";
      return;
    }
    out += "{\n";
    bool first = true;
    for (const auto& [key, item] : v.items()) {
      if (!first) {
        out += ",\n";
      }
      first = false;
      out += pad;
      out += Json(key).dump();
      out += ": ";
      dumpInto(item, indent + 2, out);
    }
    out += "\n";
    out.append(static_cast<size_t>(indent), ' ');
    out += "}";
  } else if (v.is_array()) {
    if (v.empty()) {
      out += "[]";
      return;
    }
    const bool inlineArray = std::all_of(v.begin(), v.end(), isScalar);
    if (inlineArray) {
      out += "[";
      for (size_t i = 0; i < v.size(); ++i) {
        if (i > 0) {
          out += ", ";
        }
        out += v[i].dump();
      }
      out += "]";
      return;
    }
    out += "[\n";
    for (size_t i = 0; i < v.size(); ++i) {
      if (i > 0) {
        out += ",\n";
      }
      out += pad;
      dumpInto(v[i], indent + 2, out);
    }
    out += "\n";
    out.append(static_cast<size_t>(indent), ' ');
    out += "]";
  } else {
    out += v.dump();
  }
}

std::string readFile(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ValidationError(path.string() + ": cannot open file");
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string lineColumn(const std::string& text, size_t byte) {
  // nlohmann reports the 1-based offset of the last character read
  const size_t end = std::min(byte > 0 ? byte - 1 : 0, text.size());
  size_t line = 1;
  size_t column = 1;
  for (size_t i = 0; i < end; ++i) {
    if (text[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(column);
}

} // namespace

std::string canonical_dump(const Json& value) {
  std::string out;
  dumpInto(value, 0, out);
  out += "\n";
  return out;
}

Json read_json_file(const fs::path& path) {
  const std::string text = readFile(path);
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    std::string reason = e.what();
    const auto colon = reason.find(": ", reason.find("column"));
    if (colon != std::string::npos) {
      reason = reason.substr(colon + 2);
    }
    throw ParseError(path.string(), lineColumn(text, e.byte), reason);
  } catch (const Json::out_of_range& e) {
    // number overflow; the message quotes the offending literal
    const std::string what = e.what();
    const auto open = what.find("parsing '");
    const auto close = what.rfind('\'');
    size_t at = std::string::npos;
    if (open != std::string::npos && close > open + 9) {
      at = text.find(what.substr(open + 9, close - open - 9));
    }
    throw ParseError(path.string(), at == std::string::npos ? std::string("number") : lineColumn(text, at + 1),
                     "number out of double range");
  }
}

void write_file_atomic(const fs::path& path, const std::string& bytes) {
  const fs::path tmp = path.string() + ".tmp-" + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw ValidationError(path.string() + ": cannot open for writing");
    }
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw ValidationError(path.string() + ": write failed");
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw ValidationError(path.string() + ": rename failed");
  }
}

void write_json_file(const fs::path& path, const Json& value) {
  write_file_atomic(path, canonical_dump(value));
}

// --------------------------------------------------------------------------
// Schema reading with JSON-pointer error locations

namespace {

struct Context {
  std::string path;
  fs::path dir;
};

class Node {
 public:
  Node(const Json& j, std::string pointer, const Context& ctx) : j_(&j), ptr_(std::move(pointer)), ctx_(&ctx) {}

  [[noreturn]] void fail(const std::string& reason) const {
    throw ParseError(ctx_->path, ptr_.empty() ? "/" : ptr_, reason);
  }

  const Json& json() const {
    return *j_;
  }
  const std::string& pointer() const {
    return ptr_;
  }
  const Context& context() const {
    return *ctx_;
  }

  bool is_null() const {
    return j_->is_null();
  }

  Node at(const std::string& key) const {
    requireObject();
    const auto it = j_->find(key);
    if (it == j_->end()) {
      throw ParseError(ctx_->path, ptr_.empty() ? "/" : ptr_, "missing key \"" + key + "\"");
    }
    return {*it, ptr_ + "/" + key, *ctx_};
  }

  std::optional<Node> find(const std::string& key) const {
    requireObject();
    const auto it = j_->find(key);
    if (it == j_->end() || it->is_null()) {
      return std::nullopt;
    }
    return Node(*it, ptr_ + "/" + key, *ctx_);
  }

  size_t size() const {
    if (!j_->is_array()) {
      fail("expected an array");
    }
    return j_->size();
  }

  Node operator[](size_t i) const {
    return {(*j_)[i], ptr_ + "/" + std::to_string(i), *ctx_};
  }

  double number() const {
    if (!j_->is_number()) {
      fail("expected a number");
    }
    const double v = j_->get<double>();
    if (!std::isfinite(v)) {
      fail("non-finite number");
    }
    return v;
  }

  /// null stands for an unbounded side
  double bound(double ifNull) const {
    return j_->is_null() ? ifNull : number();
  }

  long long integer() const {
    if (j_->is_number_integer()) {
      return j_->get<long long>();
    }
    const double v = number();
    if (std::floor(v) != v || std::abs(v) > 9.0e15) {
      fail("expected an integer");
    }
    return static_cast<long long>(v);
  }

  bool boolean() const {
    if (!j_->is_boolean()) {
      fail("expected true or false");
    }
    return j_->get<bool>();
  }

  std::string string() const {
    if (!j_->is_string()) {
      fail("expected a string");
    }
    return j_->get<std::string>();
  }

  std::vector<std::string> strings() const {
    std::vector<std::string> out(size());
    for (size_t i = 0; i < out.size(); ++i) {
      out[i] = (*this)[i].string();
    }
    return out;
  }

  Vector3 vec3() const {
    if (size() != 3) {
      fail("expected 3 numbers");
    }
    return {(*this)[0].number(), (*this)[1].number(), (*this)[2].number()};
  }

  Eigen::VectorXd vector() const {
    Eigen::VectorXd out(static_cast<Eigen::Index>(size()));
    for (Eigen::Index i = 0; i < out.size(); ++i) {
      out[i] = (*this)[static_cast<size_t>(i)].number();
    }
    return out;
  }

  /// Inline rows or {"shape": [r, c], "sidecar": file}.
  Eigen::MatrixXd matrix(std::optional<Eigen::Index> cols = std::nullopt) const {
    if (j_->is_object()) {
      return sidecar(cols);
    }
    const size_t rows = size();
    if (rows == 0) {
      return Eigen::MatrixXd(0, cols.value_or(0));
    }
    const auto c = static_cast<Eigen::Index>((*this)[0].size());
    if (cols && *cols != c) {
      (*this)[0].fail("expected " + std::to_string(*cols) + " columns, found " + std::to_string(c));
    }
    Eigen::MatrixXd out(static_cast<Eigen::Index>(rows), c);
    for (size_t r = 0; r < rows; ++r) {
      const Node row = (*this)[r];
      if (static_cast<Eigen::Index>(row.size()) != c) {
        row.fail("ragged matrix row");
      }
      for (Eigen::Index k = 0; k < c; ++k) {
        out(static_cast<Eigen::Index>(r), k) = row[static_cast<size_t>(k)].number();
      }
    }
    return out;
  }

 private:
  void requireObject() const {
    if (!j_->is_object()) {
      fail("expected an object");
    }
  }

  Eigen::MatrixXd sidecar(std::optional<Eigen::Index> cols) const {
    const Node shape = at("shape");
    if (shape.size() != 2) {
      shape.fail("expected [rows, cols]");
    }
    const long long r = shape[0].integer();
    const long long c = shape[1].integer();
    if (r < 0 || c < 0) {
      shape.fail("negative dimension");
    }
    if (cols && *cols != c) {
      shape.fail("expected " + std::to_string(*cols) + " columns, found " + std::to_string(c));
    }
    const Node file = at("sidecar");
    const fs::path full = ctx_->dir / file.string();
    std::string bytes;
    try {
      bytes = readFile(full);
    } catch (const ValidationError&) {
      file.fail("cannot open sidecar " + full.string());
    }
    const auto count = static_cast<size_t>(r) * static_cast<size_t>(c);
    if (bytes.size() != count * sizeof(double)) {
      file.fail("sidecar holds " + std::to_string(bytes.size()) + " bytes, expected " +
                std::to_string(count * sizeof(double)));
    }
    Eigen::MatrixXd out(r, c);
    for (size_t i = 0; i < count; ++i) {
      std::uint64_t u = 0;
      std::memcpy(&u, bytes.data() + i * sizeof(double), sizeof(u));
      if constexpr (std::endian::native == std::endian::big) {
        u = __builtin_bswap64(u);
      }
      const double v = std::bit_cast<double>(u);
      if (!std::isfinite(v)) {
        file.fail("non-finite value at flat index " + std::to_string(i));
      }
      out(static_cast<Eigen::Index>(i / c), static_cast<Eigen::Index>(i % c)) = v;
    }
    return out;
  }

  const Json* j_;
  std::string ptr_;
  const Context* ctx_;
};

struct Document {
  Json json;
  Context ctx;

  Node root() const {
    return {json, "", ctx};
  }
};

Document readDocument(const fs::path& path) {
  Document d{read_json_file(path), {path.string(), path.parent_path()}};
  return d;
}

// --------------------------------------------------------------------------
// Writing helpers

class Writer {
 public:
  Writer(const fs::path& path, const WriteOptions& opts) : path_(path), opts_(opts) {}

  Json matrix(const Eigen::MatrixXd& m, const std::string& field) {
    if (opts_.sidecar_min_entries > 0 && static_cast<size_t>(m.size()) >= opts_.sidecar_min_entries) {
      const std::string name = path_.filename().string() + "." + field + ".f64";
      std::string bytes(static_cast<size_t>(m.size()) * sizeof(double), '\0');
      size_t i = 0;
      for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c, ++i) {
          auto u = std::bit_cast<std::uint64_t>(m(r, c));
          if constexpr (std::endian::native == std::endian::big) {
            u = __builtin_bswap64(u);
          }
          std::memcpy(bytes.data() + i * sizeof(double), &u, sizeof(u));
        }
      }
      write_file_atomic(path_.parent_path() / name, bytes);
      return Json{{"shape", {m.rows(), m.cols()}}, {"sidecar", name}};
    }
    return rows(m);
  }

  static Json rows(const Eigen::MatrixXd& m) {
    Json out = Json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      Json row = Json::array();
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        row.push_back(m(r, c));
      }
      out.push_back(std::move(row));
    }
    return out;
  }

 private:
  fs::path path_;
  WriteOptions opts_;
};

Json vectorJson(const Eigen::VectorXd& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    out.push_back(v[i]);
  }
  return out;
}

Json vec3Json(const Vector3& v) {
  return Json::array({v.x(), v.y(), v.z()});
}

Json header(const char* format) {
  return Json{{"format", format}, {"version", kFormatVersion}};
}

Json boundJson(double v) {
  return std::isfinite(v) ? Json(v) : Json(nullptr);
}

} // namespace

void check_header(const Json& doc, const std::string& path, const std::string& format) {
  Context ctx{path, {}};
  const Node root(doc, "", ctx);
  const std::string found = root.at("format").string();
  if (found != format) {
    root.at("format").fail("expected format \"" + format + "\", found \"" + found + "\"");
  }
  if (!doc.contains("version")) {
    throw SchemaVersionError(path + ": missing \"version\"");
  }
  const long long version = root.at("version").integer();
  if (version != kFormatVersion) {
    throw SchemaVersionError(
        path + ": unsupported " + format + " version " + std::to_string(version) + " (supported: " +
        std::to_string(kFormatVersion) + ")");
  }
}

// --------------------------------------------------------------------------
// Skeleton

namespace {

DofType parseDof(const Node& n) {
  const std::string s = n.string();
  if (s == "fixed") {
    return DofType::Fixed;
  }
  if (s == "revolute") {
    return DofType::Revolute;
  }
  if (s == "spherical") {
    return DofType::Spherical;
  }
  n.fail("unknown dof type \"" + s + "\"");
}

const char* dofName(DofType t) {
  switch (t) {
    case DofType::Revolute:
      return "revolute";
    case DofType::Spherical:
      return "spherical";
    case DofType::Fixed:
      break;
  }
  return "fixed";
}

Skeleton skeletonFromNode(const Node& root) {
  const std::string name = root.at("name").string();
  const Node jointsNode = root.at("joints");
  std::vector<Joint> joints;
  joints.reserve(jointsNode.size());
  for (size_t i = 0; i < jointsNode.size(); ++i) {
    const Node jn = jointsNode[i];
    Joint j;
    j.name = jn.at("name").string();
    if (auto p = jn.find("parent")) {
      j.parent = p->string();
    }
    j.rest_offset = jn.at("offset").vec3();
    j.dof = parseDof(jn.at("dof"));
    if (auto a = jn.find("axis")) {
      j.axis = a->vec3();
    }
    if (auto lim = jn.find("limits")) {
      for (size_t k = 0; k < lim->size(); ++k) {
        const Node pair = (*lim)[k];
        if (pair.size() != 2) {
          pair.fail("expected [min, max]");
        }
        j.limits.push_back(
            {pair[0].bound(-std::numeric_limits<double>::infinity()),
             pair[1].bound(std::numeric_limits<double>::infinity())});
      }
    }
    joints.push_back(std::move(j));
  }
  std::vector<Marker> markers;
  if (auto mn = root.find("markers")) {
    for (size_t i = 0; i < mn->size(); ++i) {
      const Node m = (*mn)[i];
      markers.push_back({m.at("name").string(), m.at("joint").string(), m.at("offset").vec3()});
    }
  }
  try {
    return Skeleton(name, std::move(joints), std::move(markers));
  } catch (const InvalidSkeleton& e) {
    jointsNode.fail(e.what());
  }
}

} // namespace

Skeleton skeleton_from_json(const Json& doc, const std::string& path) {
  check_header(doc, path, kSkeletonFormat);
  const Context ctx{path, {}};
  return skeletonFromNode(Node(doc, "", ctx));
}

Json skeleton_to_json(const Skeleton& skeleton) {
  Json doc = header(kSkeletonFormat);
  doc["name"] = skeleton.name();
  Json joints = Json::array();
  for (const Joint& j : skeleton.joints()) {
    Json jj{{"name", j.name}, {"offset", vec3Json(j.rest_offset)}, {"dof", dofName(j.dof)}};
    if (j.parent) {
      jj["parent"] = *j.parent;
    }
    if (j.dof == DofType::Revolute) {
      jj["axis"] = vec3Json(j.axis);
    }
    if (!j.limits.empty()) {
      Json lim = Json::array();
      for (const JointLimit& l : j.limits) {
        lim.push_back(Json::array({boundJson(l.min), boundJson(l.max)}));
      }
      jj["limits"] = std::move(lim);
    }
    joints.push_back(std::move(jj));
  }
  doc["joints"] = std::move(joints);
  if (!skeleton.markers().empty()) {
    Json markers = Json::array();
    for (const Marker& m : skeleton.markers()) {
      markers.push_back(Json{{"name", m.name}, {"joint", m.joint}, {"offset", vec3Json(m.offset)}});
    }
    doc["markers"] = std::move(markers);
  }
  return doc;
}

Skeleton load_skeleton(const fs::path& path) {
  const Document d = readDocument(path);
  check_header(d.json, d.ctx.path, kSkeletonFormat);
  return skeletonFromNode(d.root());
}

void save_skeleton(const fs::path& path, const Skeleton& skeleton) {
  write_json_file(path, skeleton_to_json(skeleton));
}

// --------------------------------------------------------------------------
// Motion

namespace {

double readFps(const Node& root) {
  const Node n = root.at("fps");
  const double fps = n.number();
  if (!(fps > 0.0)) {
    n.fail("fps must be > 0");
  }
  return fps;
}

void checkUnits(const Node& root) {
  if (auto u = root.find("units")) {
    if (u->string() != "m") {
      u->fail("only meters (\"m\") are supported");
    }
  }
}

KeypointMotion keypointsFromNode(const Node& root) {
  KeypointMotion m;
  m.fps = readFps(root);
  checkUnits(root);
  m.skeleton = root.at("skeleton").string();
  m.labels = root.at("labels").strings();
  const auto n = static_cast<Eigen::Index>(m.labels.size());
  const Node pn = root.at("positions");
  const Eigen::MatrixXd flat = pn.matrix(3 * n);
  if (auto t = root.find("frames"); t && t->integer() != flat.rows()) {
    t->fail("header frame count does not match positions");
  }
  m.frames.reserve(static_cast<size_t>(flat.rows()));
  for (Eigen::Index t = 0; t < flat.rows(); ++t) {
    KeypointMatrix k(n, 3);
    for (Eigen::Index i = 0; i < n; ++i) {
      k.row(i) = flat.block(t, 3 * i, 1, 3);
    }
    m.frames.push_back(std::move(k));
  }
  return m;
}

JointTrajectory trajectoryFromNode(const Node& root) {
  JointTrajectory tr;
  tr.fps = readFps(root);
  checkUnits(root);
  tr.skeleton = root.at("skeleton").string();
  tr.dof_names = root.at("dof_names").strings();
  const Node rpNode = root.at("root_positions");
  const Node roNode = root.at("root_orientations");
  const Node jvNode = root.at("joint_values");
  const Eigen::MatrixXd rp = rpNode.matrix(3);
  const Eigen::MatrixXd ro = roNode.matrix(9);
  tr.joint_values = jvNode.matrix(static_cast<Eigen::Index>(tr.dof_names.size()));
  const Eigen::Index frames = rp.rows();
  if (ro.rows() != frames) {
    roNode.fail("expected " + std::to_string(frames) + " rows");
  }
  if (tr.joint_values.rows() != frames) {
    jvNode.fail("expected " + std::to_string(frames) + " rows");
  }
  if (auto t = root.find("frames"); t && t->integer() != frames) {
    t->fail("header frame count does not match payload");
  }
  for (Eigen::Index t = 0; t < frames; ++t) {
    tr.root_positions.emplace_back(rp.row(t).transpose());
    Matrix3 m;
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) {
        m(r, c) = ro(t, 3 * r + c);
      }
    }
    try {
      tr.root_orientations.push_back(Rotation::from_matrix(m));
    } catch (const InvalidRotation& e) {
      roNode.fail("row " + std::to_string(t) + ": " + e.what());
    }
  }
  if (auto h = root.find("heights")) {
    Eigen::VectorXd heights = h->vector();
    if (heights.size() != frames) {
      h->fail("expected " + std::to_string(frames) + " heights");
    }
    tr.heights = std::move(heights);
  }
  return tr;
}

Motion motionFromDocument(const Document& d) {
  check_header(d.json, d.ctx.path, kMotionFormat);
  const Node root = d.root();
  const Node kind = root.at("kind");
  const std::string k = kind.string();
  if (k == "keypoints") {
    return keypointsFromNode(root);
  }
  if (k == "trajectory") {
    return trajectoryFromNode(root);
  }
  kind.fail("unknown motion kind \"" + k + "\"");
}

} // namespace

Motion load_motion(const fs::path& path) {
  return motionFromDocument(readDocument(path));
}

KeypointMotion load_keypoints(const fs::path& path) {
  Motion m = load_motion(path);
  if (auto* k = std::get_if<KeypointMotion>(&m)) {
    return std::move(*k);
  }
  throw ParseError(path.string(), "/kind", "expected a keypoint motion");
}

JointTrajectory load_trajectory(const fs::path& path) {
  Motion m = load_motion(path);
  if (auto* t = std::get_if<JointTrajectory>(&m)) {
    return std::move(*t);
  }
  throw ParseError(path.string(), "/kind", "expected a joint trajectory");
}

void save_motion(const fs::path& path, const Motion& motion, const WriteOptions& opts) {
  Writer w(path, opts);
  Json doc = header(kMotionFormat);
  doc["units"] = "m";
  if (const auto* k = std::get_if<KeypointMotion>(&motion)) {
    const auto n = static_cast<Eigen::Index>(k->labels.size());
    Eigen::MatrixXd flat(static_cast<Eigen::Index>(k->frames.size()), 3 * n);
    for (size_t t = 0; t < k->frames.size(); ++t) {
      if (k->frames[t].rows() != n) {
        throw DimensionMismatch("keypoint frame " + std::to_string(t) + " does not match the label count");
      }
      for (Eigen::Index i = 0; i < n; ++i) {
        flat.block(static_cast<Eigen::Index>(t), 3 * i, 1, 3) = k->frames[t].row(i);
      }
    }
    doc["kind"] = "keypoints";
    doc["fps"] = k->fps;
    doc["skeleton"] = k->skeleton;
    doc["labels"] = k->labels;
    doc["frames"] = k->frames.size();
    doc["positions"] = w.matrix(flat, "positions");
  } else {
    const auto& tr = std::get<JointTrajectory>(motion);
    tr.validate();
    const auto frames = static_cast<Eigen::Index>(tr.size());
    Eigen::MatrixXd rp(frames, 3);
    Eigen::MatrixXd ro(frames, 9);
    for (Eigen::Index t = 0; t < frames; ++t) {
      rp.row(t) = tr.root_positions[static_cast<size_t>(t)].transpose();
      const Matrix3& m = tr.root_orientations[static_cast<size_t>(t)].matrix();
      for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) {
          ro(t, 3 * r + c) = m(r, c);
        }
      }
    }
    doc["kind"] = "trajectory";
    doc["fps"] = tr.fps;
    doc["skeleton"] = tr.skeleton;
    doc["dof_names"] = tr.dof_names;
    doc["frames"] = tr.size();
    doc["root_positions"] = w.matrix(rp, "root_positions");
    doc["root_orientations"] = w.matrix(ro, "root_orientations");
    doc["joint_values"] = w.matrix(tr.joint_values, "joint_values");
    if (tr.heights) {
      doc["heights"] = vectorJson(*tr.heights);
    }
  }
  write_json_file(path, doc);
}

// --------------------------------------------------------------------------
// Correspondence map

namespace {

SolverSettings solverFromNode(const Node& n) {
  SolverSettings s;
  if (auto v = n.find("max_iterations")) {
    s.max_iterations = static_cast<int>(v->integer());
  }
  if (auto v = n.find("gradient_tolerance")) {
    s.gradient_tolerance = v->number();
  }
  if (auto v = n.find("fd_step")) {
    s.fd_step = v->number();
  }
  if (auto v = n.find("initial_damping")) {
    s.initial_damping = v->number();
  }
  if (auto v = n.find("damping_increase")) {
    s.damping_increase = v->number();
  }
  if (auto v = n.find("damping_decrease")) {
    s.damping_decrease = v->number();
  }
  if (auto v = n.find("max_damping")) {
    s.max_damping = v->number();
  }
  if (auto v = n.find("backtracking_steps")) {
    s.backtracking_steps = static_cast<int>(v->integer());
  }
  return s;
}

RetargetOptions optionsFromNode(const Node& n) {
  RetargetOptions o;
  if (auto v = n.find("joint_limit_weight")) {
    o.joint_limit_weight = v->number();
  }
  if (auto v = n.find("limit_margin")) {
    o.limit_margin = v->number();
  }
  if (auto v = n.find("smoothness_weight")) {
    o.smoothness_weight = v->number();
  }
  if (auto v = n.find("reference_weight")) {
    o.reference_weight = v->number();
  }
  if (auto v = n.find("reference")) {
    o.reference = v->vector();
  }
  if (auto v = n.find("warm_start")) {
    o.warm_start = v->boolean();
  }
  if (auto v = n.find("solver")) {
    o.solver = solverFromNode(*v);
  }
  try {
    o.validate();
  } catch (const ValidationError& e) {
    n.fail(e.what());
  }
  return o;
}

Json optionsToJson(const RetargetOptions& o) {
  const SolverSettings& s = o.solver;
  Json out{
      {"joint_limit_weight", o.joint_limit_weight},
      {"limit_margin", o.limit_margin},
      {"smoothness_weight", o.smoothness_weight},
      {"reference_weight", o.reference_weight},
      {"warm_start", o.warm_start},
      {"solver",
       {{"max_iterations", s.max_iterations},
        {"gradient_tolerance", s.gradient_tolerance},
        {"fd_step", s.fd_step},
        {"initial_damping", s.initial_damping},
        {"damping_increase", s.damping_increase},
        {"damping_decrease", s.damping_decrease},
        {"max_damping", s.max_damping},
        {"backtracking_steps", s.backtracking_steps}}}};
  if (o.reference) {
    out["reference"] = vectorJson(*o.reference);
  }
  return out;
}

} // namespace

MapFile load_map(const fs::path& path, const Skeleton* robot) {
  const Document d = readDocument(path);
  check_header(d.json, d.ctx.path, kMapFormat);
  const Node root = d.root();
  MapFile out;
  CorrespondenceSet& c = out.correspondence;
  const Node pairs = root.at("pairs");
  for (size_t i = 0; i < pairs.size(); ++i) {
    const Node p = pairs[i];
    CorrespondencePair cp;
    cp.human = p.at("human").string();
    cp.robot = p.at("robot").string();
    if (auto w = p.find("position_weight")) {
      cp.position_weight = w->number();
    }
    if (auto w = p.find("orientation_weight")) {
      cp.orientation_weight = w->number();
    } else {
      cp.orientation_weight = robot ? default_orientation_weight(*robot, cp.robot) : 0.0;
    }
    c.pairs.push_back(std::move(cp));
  }
  if (auto f = root.find("fingertips")) {
    for (size_t i = 0; i < f->size(); ++i) {
      const Node p = (*f)[i];
      FingertipPair fp{p.at("human").string(), p.at("robot").string(), 1.0};
      if (auto w = p.find("weight")) {
        fp.weight = w->number();
      }
      c.fingertips.push_back(std::move(fp));
    }
  }
  if (auto s = root.find("scale")) {
    const double scale = s->number();
    if (!(scale > 0.0)) {
      s->fail("scale must be > 0");
    }
    c.scale = scale;
  }
  if (auto l = root.find("leg_chain")) {
    c.leg_chain = LegChain{
        l->at("human_hip").string(),
        l->at("human_ankle").string(),
        l->at("robot_hip").string(),
        l->at("robot_ankle").string()};
  }
  try {
    c.validate();
  } catch (const ValidationError& e) {
    pairs.fail(e.what());
  }
  if (auto o = root.find("options")) {
    out.options = optionsFromNode(*o);
  }
  return out;
}

void save_map(const fs::path& path, const MapFile& map) {
  const CorrespondenceSet& c = map.correspondence;
  Json doc = header(kMapFormat);
  Json pairs = Json::array();
  for (const auto& p : c.pairs) {
    pairs.push_back(
        Json{{"human", p.human},
             {"robot", p.robot},
             {"position_weight", p.position_weight},
             {"orientation_weight", p.orientation_weight}});
  }
  doc["pairs"] = std::move(pairs);
  if (!c.fingertips.empty()) {
    Json tips = Json::array();
    for (const auto& f : c.fingertips) {
      tips.push_back(Json{{"human", f.human}, {"robot", f.robot}, {"weight", f.weight}});
    }
    doc["fingertips"] = std::move(tips);
  }
  if (c.scale) {
    doc["scale"] = *c.scale;
  }
  if (c.leg_chain) {
    doc["leg_chain"] = Json{
        {"human_hip", c.leg_chain->human_hip},
        {"human_ankle", c.leg_chain->human_ankle},
        {"robot_hip", c.leg_chain->robot_hip},
        {"robot_ankle", c.leg_chain->robot_ankle}};
  }
  doc["options"] = optionsToJson(map.options);
  write_json_file(path, doc);
}

// --------------------------------------------------------------------------
// DoF configuration

DofConfig load_dof_config(const fs::path& path) {
  const Document d = readDocument(path);
  check_header(d.json, d.ctx.path, kDofFormat);
  const Node joints = d.root().at("joints");
  DofConfig cfg;
  for (size_t i = 0; i < joints.size(); ++i) {
    const Node j = joints[i];
    DofConfig::Entry e;
    e.name = j.at("name").string();
    if (auto v = j.find("scale")) {
      e.scale = v->number();
    }
    if (auto v = j.find("offset")) {
      e.offset = v->number();
    }
    if (auto v = j.find("default")) {
      e.default_value = v->number();
    }
    if (auto v = j.find("kp")) {
      e.kp = v->number();
    }
    if (auto v = j.find("kd")) {
      e.kd = v->number();
    }
    cfg.joints.push_back(std::move(e));
  }
  try {
    cfg.validate();
  } catch (const ValidationError& e) {
    joints.fail(e.what());
  }
  return cfg;
}

void save_dof_config(const fs::path& path, const DofConfig& config) {
  Json doc = header(kDofFormat);
  Json joints = Json::array();
  for (const auto& e : config.joints) {
    Json j{{"name", e.name}, {"scale", e.scale}, {"offset", e.offset}};
    if (e.default_value) {
      j["default"] = *e.default_value;
    }
    if (e.kp) {
      j["kp"] = *e.kp;
    }
    if (e.kd) {
      j["kd"] = *e.kd;
    }
    joints.push_back(std::move(j));
  }
  doc["joints"] = std::move(joints);
  write_json_file(path, doc);
}

// --------------------------------------------------------------------------
// Matrices

namespace {

MatrixFile matrixFromNode(const Node& root) {
  const Node shape = root.at("shape");
  if (shape.size() != 2) {
    shape.fail("expected [rows, cols]");
  }
  const long long rows = shape[0].integer();
  const long long cols = shape[1].integer();
  MatrixFile out;
  const Node data = root.at("data");
  out.data = data.matrix(cols);
  if (out.data.rows() != rows) {
    data.fail("expected " + std::to_string(rows) + " rows, found " + std::to_string(out.data.rows()));
  }
  if (auto l = root.find("labels")) {
    std::vector<int> labels(l->size());
    for (size_t i = 0; i < labels.size(); ++i) {
      labels[i] = static_cast<int>((*l)[i].integer());
    }
    if (static_cast<long long>(labels.size()) != rows) {
      l->fail("expected one label per row");
    }
    out.labels = std::move(labels);
  }
  return out;
}

} // namespace

MatrixFile load_matrix(const fs::path& path) {
  const Document d = readDocument(path);
  check_header(d.json, d.ctx.path, kMatrixFormat);
  return matrixFromNode(d.root());
}

void save_matrix(const fs::path& path, const MatrixFile& matrix, const WriteOptions& opts) {
  Writer w(path, opts);
  Json doc = header(kMatrixFormat);
  doc["shape"] = Json::array({matrix.data.rows(), matrix.data.cols()});
  doc["data"] = w.matrix(matrix.data, "data");
  if (matrix.labels) {
    if (static_cast<Eigen::Index>(matrix.labels->size()) != matrix.data.rows()) {
      throw DimensionMismatch("one label per matrix row expected");
    }
    doc["labels"] = *matrix.labels;
  }
  write_json_file(path, doc);
}

// --------------------------------------------------------------------------
// Codebook and tokens

Codebook load_codebook(const fs::path& path) {
  const Document d = readDocument(path);
  const Node root = d.root();
  if (root.at("format").string() == kMatrixFormat) {
    check_header(d.json, d.ctx.path, kMatrixFormat);
    try {
      return Codebook::from_entries(matrixFromNode(root).data);
    } catch (const ValidationError& e) {
      root.at("data").fail(e.what());
    }
  }
  check_header(d.json, d.ctx.path, kCodebookFormat);
  Codebook cb;
  const Node entries = root.at("entries");
  cb.entries = entries.matrix();
  cb.ema_counts = root.at("ema_counts").vector();
  cb.ema_sums = root.at("ema_sums").matrix(cb.entries.cols());
  cb.usage = root.at("usage").vector();
  cb.decay = root.at("decay").number();
  cb.epsilon = root.at("epsilon").number();
  try {
    cb.validate();
  } catch (const ValidationError& e) {
    root.fail(e.what());
  }
  return cb;
}

void save_codebook(const fs::path& path, const Codebook& codebook, const WriteOptions& opts) {
  codebook.validate();
  Writer w(path, opts);
  Json doc = header(kCodebookFormat);
  doc["entries"] = w.matrix(codebook.entries, "entries");
  doc["ema_counts"] = vectorJson(codebook.ema_counts);
  doc["ema_sums"] = w.matrix(codebook.ema_sums, "ema_sums");
  doc["usage"] = vectorJson(codebook.usage);
  doc["decay"] = codebook.decay;
  doc["epsilon"] = codebook.epsilon;
  write_json_file(path, doc);
}

TokenSequence load_tokens(const fs::path& path) {
  const Document d = readDocument(path);
  check_header(d.json, d.ctx.path, kTokensFormat);
  const Node root = d.root();
  TokenSequence out;
  const Node ds = root.at("downsample");
  out.downsample = static_cast<int>(ds.integer());
  if (out.downsample < 1) {
    ds.fail("downsample must be >= 1");
  }
  const Node idx = root.at("indices");
  out.indices.resize(idx.size());
  for (size_t i = 0; i < out.indices.size(); ++i) {
    const long long v = idx[i].integer();
    if (v < 0 || v > std::numeric_limits<int>::max()) {
      idx[i].fail("token index out of range");
    }
    out.indices[i] = static_cast<int>(v);
  }
  return out;
}

void save_tokens(const fs::path& path, const TokenSequence& tokens) {
  Json doc = header(kTokensFormat);
  doc["downsample"] = tokens.downsample;
  doc["indices"] = tokens.indices;
  write_json_file(path, doc);
}

// --------------------------------------------------------------------------
// Reports

Json retarget_report_to_json(const RetargetReport& r) {
  Json residuals = Json::array();
  for (const auto& p : r.residuals) {
    residuals.push_back(
        Json{{"human", p.human}, {"robot", p.robot}, {"position", p.position}, {"orientation", p.orientation}});
  }
  Json out{
      {"initial_objective", r.initial_objective},
      {"objective", r.objective},
      {"iterations", r.iterations},
      {"converged", r.converged},
      {"failed", r.failed},
      {"residuals", std::move(residuals)},
      {"limit_violations", r.limit_violations},
      {"objective_history", r.objective_history},
      {"max_position_residual", r.max_position_residual()}};
  if (r.failed) {
    out["failure"] = r.failure;
  }
  return out;
}

void save_report(const fs::path& path, const std::string& command, Json body) {
  Json doc = header(kReportFormat);
  doc["command"] = command;
  for (auto& [key, value] : body.items()) {
    doc[key] = std::move(value);
  }
  write_json_file(path, doc);
}

} // namespace rkit::io
