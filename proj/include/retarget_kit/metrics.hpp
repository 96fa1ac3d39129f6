#pragma once

#include "retarget_kit/motion.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace rkit {

inline constexpr std::uint64_t kDefaultMetricSeed = 20240501;

// ---------------------------------------------------------------------------
// Tracking metrics

/// Reference and executed trajectories on the same skeleton.
struct TrajectoryPair {
  JointTrajectory reference;
  JointTrajectory executed;
};

/// Mean |q_exec - q_ref| over frames and joint values, radians.
double mpjpe(const TrajectoryPair& pair);

/// Mean absolute joint-velocity difference, rad/s. Needs T >= 2.
double vel_err(const TrajectoryPair& pair);

/// Mean absolute joint-acceleration difference, rad/s^2. Needs T >= 3.
double accel_err(const TrajectoryPair& pair);

/// Finite-difference velocities at `fps`: central in the interior, one-sided
/// at both ends. Rows are frames.
Eigen::MatrixXd differentiate(const Eigen::MatrixXd& values, double fps);

/// Second differences at `fps`: (q[t+1] - 2 q[t] + q[t-1]) fps^2 in the
/// interior, the neighbouring stencil copied at both ends.
Eigen::MatrixXd second_difference(const Eigen::MatrixXd& values, double fps);

/// Fraction of motions whose executed height never drops strictly below
/// `threshold`. Throws MissingHeights when a pair has no heights.
double success_rate(const std::vector<TrajectoryPair>& pairs, double threshold);

// ---------------------------------------------------------------------------
// Generation metrics over precomputed features (one sample per row)

/// Frechet distance between Gaussian fits of the two feature sets,
/// ||mu_a - mu_b||^2 + Tr(S_a + S_b - 2 (S_a S_b)^(1/2)), covariances with
/// 1 / (n - 1). The trace of the square root is taken from the eigenvalues
/// of S_a^(1/2) S_b S_a^(1/2), clamped at zero.
double fid(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

double fid_from_moments(
    const Eigen::VectorXd& mean_a,
    const Eigen::MatrixXd& cov_a,
    const Eigen::VectorXd& mean_b,
    const Eigen::MatrixXd& cov_b);

/// Sample mean and 1 / (n - 1) covariance. Throws DegenerateSample for n < 2.
std::pair<Eigen::VectorXd, Eigen::MatrixXd> feature_moments(const Eigen::MatrixXd& x);

/// Deterministic Fisher-Yates permutation of 0..n-1 driven by a 64-bit
/// Mersenne Twister, identical on every platform.
std::vector<int> seeded_permutation(int n, std::uint64_t seed);

/// Mean Euclidean distance over explicit row pairs.
double mean_pair_distance(const Eigen::MatrixXd& x, const std::vector<std::pair<int, int>>& pairs);

/// Mean distance over `pair_count` disjoint pairs taken from a seeded
/// shuffle. Throws TooFewSamples when n < 2 * pair_count.
double diversity(const Eigen::MatrixXd& x, int pair_count, std::uint64_t seed = kDefaultMetricSeed);

/// Mean over groups (sorted by label) of the within-group diversity.
/// Throws GroupTooSmall when a group has fewer than 2 * pair_count rows.
double multimodality(
    const Eigen::MatrixXd& x,
    const std::vector<int>& labels,
    int pair_count,
    std::uint64_t seed = kDefaultMetricSeed);

/// Mean distance between matched rows.
double mm_dist(const Eigen::MatrixXd& text, const Eigen::MatrixXd& motion);

/// Retrieval top-k accuracy. For each text row i the pool is motion row i
/// plus pool_size - 1 seeded distractors; success when fewer than k pool
/// members are strictly closer than the true motion.
double r_precision(
    const Eigen::MatrixXd& text,
    const Eigen::MatrixXd& motion,
    int pool_size,
    int k,
    std::uint64_t seed = kDefaultMetricSeed);

/// Rank (1-based) of the true motion inside a given pool.
int retrieval_rank(const Eigen::MatrixXd& text, const Eigen::MatrixXd& motion, int anchor, const std::vector<int>& pool);

} // namespace rkit
