#include "retarget_kit/metrics.hpp"

#include "retarget_kit/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>

namespace rkit {

namespace {

void checkPair(const TrajectoryPair& p, Eigen::Index minFrames) {
  const auto& ref = p.reference.joint_values;
  const auto& exe = p.executed.joint_values;
  if (ref.rows() != exe.rows()) {
    throw LengthMismatch(
        "reference has " + std::to_string(ref.rows()) + " frames, executed has " + std::to_string(exe.rows()));
  }
  if (ref.cols() != exe.cols()) {
    throw DimensionMismatch("reference and executed trajectories have different joint counts");
  }
  if (!(p.reference.fps > 0.0) || p.reference.fps != p.executed.fps) {
    throw ValidationError("trajectory pair needs a shared positive fps");
  }
  if (ref.rows() < minFrames) {
    throw LengthMismatch("metric needs at least " + std::to_string(minFrames) + " frames");
  }
  if (ref.cols() == 0) {
    throw DimensionMismatch("trajectories have no joint values");
  }
}

double meanAbs(const Eigen::MatrixXd& m) {
  return m.cwiseAbs().sum() / static_cast<double>(m.size());
}

// Uniform integer in [0, bound) without modulo bias.
std::uint64_t boundedUniform(std::mt19937_64& gen, std::uint64_t bound) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() / bound * bound;
  std::uint64_t r = gen();
  while (r >= limit) {
    r = gen();
  }
  return r % bound;
}

} // namespace

Eigen::MatrixXd differentiate(const Eigen::MatrixXd& q, double fps) {
  const Eigen::Index t = q.rows();
  if (t < 2) {
    throw LengthMismatch("velocity needs at least 2 frames");
  }
  Eigen::MatrixXd v(t, q.cols());
  v.row(0) = (q.row(1) - q.row(0)) * fps;
  v.row(t - 1) = (q.row(t - 1) - q.row(t - 2)) * fps;
  for (Eigen::Index i = 1; i + 1 < t; ++i) {
    v.row(i) = (q.row(i + 1) - q.row(i - 1)) * (0.5 * fps);
  }
  return v;
}

Eigen::MatrixXd second_difference(const Eigen::MatrixXd& q, double fps) {
  const Eigen::Index t = q.rows();
  if (t < 3) {
    throw LengthMismatch("acceleration needs at least 3 frames");
  }
  const double f2 = fps * fps;
  Eigen::MatrixXd a(t, q.cols());
  for (Eigen::Index i = 1; i + 1 < t; ++i) {
    a.row(i) = (q.row(i + 1) - 2.0 * q.row(i) + q.row(i - 1)) * f2;
  }
  a.row(0) = a.row(1);
  a.row(t - 1) = a.row(t - 2);
  return a;
}

double mpjpe(const TrajectoryPair& p) {
  checkPair(p, 1);
  return meanAbs(p.executed.joint_values - p.reference.joint_values);
}

double vel_err(const TrajectoryPair& p) {
  checkPair(p, 2);
  const double fps = p.reference.fps;
  return meanAbs(differentiate(p.executed.joint_values, fps) - differentiate(p.reference.joint_values, fps));
}

double accel_err(const TrajectoryPair& p) {
  checkPair(p, 3);
  const double fps = p.reference.fps;
  return meanAbs(
      second_difference(p.executed.joint_values, fps) - second_difference(p.reference.joint_values, fps));
}

double success_rate(const std::vector<TrajectoryPair>& pairs, double threshold) {
  if (pairs.empty()) {
    throw ValidationError("success_rate needs at least one motion");
  }
  int ok = 0;
  for (size_t i = 0; i < pairs.size(); ++i) {
    const auto& h = pairs[i].executed.heights;
    if (!h || h->size() == 0) {
      throw MissingHeights("motion " + std::to_string(i) + " has no executed heights");
    }
    if (!((h->array() < threshold).any())) {
      ++ok;
    }
  }
  return static_cast<double>(ok) / static_cast<double>(pairs.size());
}

std::pair<Eigen::VectorXd, Eigen::MatrixXd> feature_moments(const Eigen::MatrixXd& x) {
  if (x.rows() < 2) {
    throw DegenerateSample("feature moments need at least 2 samples");
  }
  if (!x.allFinite()) {
    throw ValidationError("feature matrix has non-finite entries");
  }
  const Eigen::VectorXd mean = x.colwise().mean().transpose();
  const Eigen::MatrixXd centered = x.rowwise() - mean.transpose();
  Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(x.rows() - 1);
  return {mean, cov};
}

double fid_from_moments(
    const Eigen::VectorXd& meanA,
    const Eigen::MatrixXd& covA,
    const Eigen::VectorXd& meanB,
    const Eigen::MatrixXd& covB) {
  const Eigen::Index d = meanA.size();
  if (meanB.size() != d || covA.rows() != d || covA.cols() != d || covB.rows() != d || covB.cols() != d) {
    throw DimensionMismatch("fid: feature dimensions differ");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eigA(0.5 * (covA + covA.transpose()));
  const Eigen::VectorXd rootA = eigA.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  const Eigen::MatrixXd sqrtA = eigA.eigenvectors() * rootA.asDiagonal() * eigA.eigenvectors().transpose();
  const Eigen::MatrixXd inner = sqrtA * covB * sqrtA;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eigM(0.5 * (inner + inner.transpose()), Eigen::EigenvaluesOnly);
  const double traceSqrt = eigM.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  const double value = (meanA - meanB).squaredNorm() + covA.trace() + covB.trace() - 2.0 * traceSqrt;
  return std::max(0.0, value);
}

double fid(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.cols() != b.cols()) {
    throw DimensionMismatch("fid: feature dimensions differ");
  }
  const auto [ma, ca] = feature_moments(a);
  const auto [mb, cb] = feature_moments(b);
  return fid_from_moments(ma, ca, mb, cb);
}

std::vector<int> seeded_permutation(int n, std::uint64_t seed) {
  std::vector<int> perm(static_cast<size_t>(std::max(n, 0)));
  for (int i = 0; i < n; ++i) {
    perm[i] = i;
  }
  std::mt19937_64 gen(seed);
  for (int i = n - 1; i > 0; --i) {
    const auto j = static_cast<int>(boundedUniform(gen, static_cast<std::uint64_t>(i) + 1));
    std::swap(perm[i], perm[j]);
  }
  return perm;
}

double mean_pair_distance(const Eigen::MatrixXd& x, const std::vector<std::pair<int, int>>& pairs) {
  if (pairs.empty()) {
    throw TooFewSamples("no pairs to average");
  }
  double sum = 0.0;
  for (const auto& [i, j] : pairs) {
    if (i < 0 || j < 0 || i >= x.rows() || j >= x.rows()) {
      throw ValidationError("pair index out of range");
    }
    sum += (x.row(i) - x.row(j)).norm();
  }
  return sum / static_cast<double>(pairs.size());
}

namespace {

double seededDiversity(const Eigen::MatrixXd& x, const std::vector<int>& rows, int pairCount, std::uint64_t seed) {
  const std::vector<int> perm = seeded_permutation(static_cast<int>(rows.size()), seed);
  std::vector<std::pair<int, int>> pairs;
  pairs.reserve(static_cast<size_t>(pairCount));
  for (int i = 0; i < pairCount; ++i) {
    pairs.emplace_back(rows[perm[2 * i]], rows[perm[2 * i + 1]]);
  }
  return mean_pair_distance(x, pairs);
}

} // namespace

double diversity(const Eigen::MatrixXd& x, int pairCount, std::uint64_t seed) {
  if (pairCount < 1 || x.rows() < 2 * static_cast<Eigen::Index>(pairCount)) {
    throw TooFewSamples(
        "diversity needs n >= 2 * pair_count (n = " + std::to_string(x.rows()) +
        ", pair_count = " + std::to_string(pairCount) + ")");
  }
  std::vector<int> rows(static_cast<size_t>(x.rows()));
  for (size_t i = 0; i < rows.size(); ++i) {
    rows[i] = static_cast<int>(i);
  }
  return seededDiversity(x, rows, pairCount, seed);
}

double multimodality(const Eigen::MatrixXd& x, const std::vector<int>& labels, int pairCount, std::uint64_t seed) {
  if (static_cast<Eigen::Index>(labels.size()) != x.rows()) {
    throw DimensionMismatch("multimodality: one label per row expected");
  }
  if (pairCount < 1) {
    throw GroupTooSmall("multimodality needs pair_count >= 1");
  }
  std::map<int, std::vector<int>> groups;
  for (size_t i = 0; i < labels.size(); ++i) {
    groups[labels[i]].push_back(static_cast<int>(i));
  }
  if (groups.empty()) {
    throw GroupTooSmall("multimodality: no groups");
  }
  double sum = 0.0;
  std::uint64_t ordinal = 0;
  for (const auto& [label, rows] : groups) {
    if (rows.size() < 2 * static_cast<size_t>(pairCount)) {
      throw GroupTooSmall(
          "group " + std::to_string(label) + " has " + std::to_string(rows.size()) + " rows, needs " +
          std::to_string(2 * pairCount));
    }
    sum += seededDiversity(x, rows, pairCount, seed + ordinal);
    ++ordinal;
  }
  return sum / static_cast<double>(groups.size());
}

double mm_dist(const Eigen::MatrixXd& text, const Eigen::MatrixXd& motion) {
  if (text.rows() != motion.rows() || text.cols() != motion.cols()) {
    throw DimensionMismatch("mm_dist: text and motion feature shapes differ");
  }
  if (text.rows() == 0) {
    throw TooFewSamples("mm_dist: empty feature matrices");
  }
  return (text - motion).rowwise().norm().mean();
}

int retrieval_rank(const Eigen::MatrixXd& text, const Eigen::MatrixXd& motion, int anchor, const std::vector<int>& pool) {
  const double trueDist = (text.row(anchor) - motion.row(anchor)).norm();
  int rank = 1;
  for (int j : pool) {
    if (j != anchor && (text.row(anchor) - motion.row(j)).norm() < trueDist) {
      ++rank;
    }
  }
  return rank;
}

double r_precision(const Eigen::MatrixXd& text, const Eigen::MatrixXd& motion, int poolSize, int k, std::uint64_t seed) {
  if (text.rows() != motion.rows() || text.cols() != motion.cols()) {
    throw DimensionMismatch("r_precision: text and motion feature shapes differ");
  }
  const auto n = static_cast<int>(text.rows());
  if (poolSize < 1 || poolSize > n) {
    throw PoolTooLarge("r_precision: pool size " + std::to_string(poolSize) + " exceeds n = " + std::to_string(n));
  }
  if (k < 1 || k >= poolSize) {
    throw ValidationError("r_precision needs 1 <= k < pool size");
  }
  std::mt19937_64 gen(seed);
  std::vector<int> others(static_cast<size_t>(n - 1));
  std::vector<int> pool(static_cast<size_t>(poolSize));
  int hits = 0;
  for (int a = 0; a < n; ++a) {
    for (int i = 0, o = 0; i < n; ++i) {
      if (i != a) {
        others[o++] = i;
      }
    }
    // partial Fisher-Yates for poolSize - 1 distractors
    pool[0] = a;
    for (int i = 0; i < poolSize - 1; ++i) {
      const auto j = i + static_cast<int>(boundedUniform(gen, static_cast<std::uint64_t>(n - 1 - i)));
      std::swap(others[i], others[j]);
      pool[i + 1] = others[i];
    }
    if (retrieval_rank(text, motion, a, pool) <= k) {
      ++hits;
    }
  }
  return static_cast<double>(hits) / static_cast<double>(n);
}

} // namespace rkit
