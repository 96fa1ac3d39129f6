#include "retarget_kit/errors.hpp"
#include "retarget_kit/metrics.hpp"

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <random>

namespace rkit {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using Rng = std::mt19937_64;

MatrixXd gaussian(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  std::normal_distribution<double> n;
  return MatrixXd::NullaryExpr(rows, cols, [&] { return n(rng); });
}

JointTrajectory traj(const MatrixXd& q, double fps = 30.0) {
  JointTrajectory t;
  t.fps = fps;
  t.joint_values = q;
  t.root_positions.assign(static_cast<size_t>(q.rows()), Vector3::Zero());
  t.root_orientations.assign(static_cast<size_t>(q.rows()), Rotation());
  return t;
}

// ---------------------------------------------------------------------------
// extended-precision recomputations

using LMatrix = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;

LMatrix velocityL(const LMatrix& q, long double fps) {
  const Eigen::Index t = q.rows();
  LMatrix v(t, q.cols());
  for (Eigen::Index i = 0; i < t; ++i) {
    for (Eigen::Index c = 0; c < q.cols(); ++c) {
      if (i == 0) {
        v(i, c) = (q(1, c) - q(0, c)) * fps;
      } else if (i == t - 1) {
        v(i, c) = (q(t - 1, c) - q(t - 2, c)) * fps;
      } else {
        v(i, c) = (q(i + 1, c) - q(i - 1, c)) * fps / 2;
      }
    }
  }
  return v;
}

LMatrix accelerationL(const LMatrix& q, long double fps) {
  const Eigen::Index t = q.rows();
  LMatrix a(t, q.cols());
  for (Eigen::Index i = 0; i < t; ++i) {
    const Eigen::Index m = std::clamp<Eigen::Index>(i, 1, t - 2);
    for (Eigen::Index c = 0; c < q.cols(); ++c) {
      a(i, c) = (q(m + 1, c) - 2 * q(m, c) + q(m - 1, c)) * fps * fps;
    }
  }
  return a;
}

long double meanAbsDiffL(const LMatrix& a, const LMatrix& b) {
  long double s = 0;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index c = 0; c < a.cols(); ++c) {
      s += std::fabs(a(i, c) - b(i, c));
    }
  }
  return s / static_cast<long double>(a.size());
}

long double distL(const MatrixXd& a, Eigen::Index i, const MatrixXd& b, Eigen::Index j) {
  long double s = 0;
  for (Eigen::Index c = 0; c < a.cols(); ++c) {
    const long double d = static_cast<long double>(a(i, c)) - b(j, c);
    s += d * d;
  }
  return std::sqrt(s);
}

long double pairedDiversityL(const MatrixXd& x, const std::vector<int>& rows, int s, std::uint64_t seed) {
  const auto perm = seeded_permutation(static_cast<int>(rows.size()), seed);
  long double sum = 0;
  for (int i = 0; i < s; ++i) {
    sum += distL(x, rows[perm[2 * i]], x, rows[perm[2 * i + 1]]);
  }
  return sum / s;
}

TEST(Tracking, IdenticalIsZero) {
  Rng rng(61);
  const MatrixXd q = gaussian(rng, 20, 7);
  const TrajectoryPair p{traj(q), traj(q)};
  EXPECT_EQ(mpjpe(p), 0.0);
  EXPECT_EQ(vel_err(p), 0.0);
  EXPECT_EQ(accel_err(p), 0.0);
}

TEST(Tracking, ConstantOffset) {
  Rng rng(62);
  const MatrixXd q = gaussian(rng, 30, 19);
  const TrajectoryPair p{traj(q), traj(q.array() + 0.01)};
  EXPECT_NEAR(mpjpe(p), 0.01, 1e-15);
  EXPECT_NEAR(vel_err(p), 0.0, 1e-12);
  EXPECT_NEAR(accel_err(p), 0.0, 1e-9);
}

TEST(Tracking, ExtendedPrecisionRecomputation) {
  Rng rng(63);
  for (int trial = 0; trial < 20; ++trial) {
    const double fps = trial % 2 == 0 ? 30.0 : 50.0;
    const MatrixXd a = gaussian(rng, 40 + trial, 21);
    const MatrixXd b = a + 0.05 * gaussian(rng, a.rows(), a.cols());
    const TrajectoryPair p{traj(a, fps), traj(b, fps)};
    const LMatrix la = a.cast<long double>();
    const LMatrix lb = b.cast<long double>();
    const long double f = fps;
    EXPECT_NEAR(mpjpe(p), static_cast<double>(meanAbsDiffL(lb, la)), 1e-9);
    EXPECT_NEAR(vel_err(p), static_cast<double>(meanAbsDiffL(velocityL(lb, f), velocityL(la, f))), 1e-9);
    EXPECT_NEAR(accel_err(p), static_cast<double>(meanAbsDiffL(accelerationL(lb, f), accelerationL(la, f))),
                1e-9);
  }
}

TEST(Tracking, DifferencingOnPolynomials) {
  // central differences are exact on quadratics in the interior
  MatrixXd q(6, 1);
  for (int t = 0; t < 6; ++t) {
    q(t, 0) = 0.5 * t * t;
  }
  const MatrixXd v = differentiate(q, 1.0);
  const MatrixXd a = second_difference(q, 1.0);
  EXPECT_DOUBLE_EQ(v(0, 0), 0.5);
  EXPECT_DOUBLE_EQ(v(3, 0), 3.0);
  EXPECT_DOUBLE_EQ(v(5, 0), 4.5);
  for (int t = 0; t < 6; ++t) {
    EXPECT_DOUBLE_EQ(a(t, 0), 1.0);
  }
}

TEST(Tracking, TriangleBound) {
  Rng rng(64);
  for (int trial = 0; trial < 50; ++trial) {
    const MatrixXd a = gaussian(rng, 10, 5), b = gaussian(rng, 10, 5), c = gaussian(rng, 10, 5);
    EXPECT_LE(mpjpe({traj(a), traj(c)}), mpjpe({traj(a), traj(b)}) + mpjpe({traj(b), traj(c)}) + 1e-12);
  }
}

TEST(Tracking, Errors) {
  EXPECT_THROW(mpjpe({traj(MatrixXd::Zero(5, 3)), traj(MatrixXd::Zero(4, 3))}), LengthMismatch);
  EXPECT_THROW(mpjpe({traj(MatrixXd::Zero(5, 3)), traj(MatrixXd::Zero(5, 2))}), DimensionMismatch);
  EXPECT_THROW(vel_err({traj(MatrixXd::Zero(1, 3)), traj(MatrixXd::Zero(1, 3))}), LengthMismatch);
  EXPECT_THROW(accel_err({traj(MatrixXd::Zero(2, 3)), traj(MatrixXd::Zero(2, 3))}), LengthMismatch);
  EXPECT_THROW(mpjpe({traj(MatrixXd::Zero(5, 3), 30), traj(MatrixXd::Zero(5, 3), 60)}), ValidationError);
}

TEST(SuccessRate, Cases) {
  auto motion = [](std::vector<double> h) {
    TrajectoryPair p{traj(MatrixXd::Zero(static_cast<Eigen::Index>(h.size()), 1)),
                     traj(MatrixXd::Zero(static_cast<Eigen::Index>(h.size()), 1))};
    p.executed.heights = Eigen::Map<VectorXd>(h.data(), static_cast<Eigen::Index>(h.size()));
    return p;
  };
  EXPECT_EQ(success_rate({motion({0.9, 0.8}), motion({0.7, 0.75})}, 0.5), 1.0);
  EXPECT_EQ(success_rate({motion({0.9, 0.3}), motion({0.7, 0.75}), motion({0.2}), motion({0.6})}, 0.5), 0.5);
  EXPECT_EQ(success_rate({motion({0.9, 0.5, 0.9})}, 0.5), 1.0);
  EXPECT_EQ(success_rate({motion({0.9, std::nextafter(0.5, 0.0), 0.9})}, 0.5), 0.0);
  TrajectoryPair bare{traj(MatrixXd::Zero(2, 1)), traj(MatrixXd::Zero(2, 1))};
  EXPECT_THROW(success_rate({bare}, 0.5), MissingHeights);
}

// ---------------------------------------------------------------------------
// FID

// Tr((Sa Sb)^(1/2)) from the eigenvalues of the non-symmetric product.
double traceSqrtProduct(const MatrixXd& a, const MatrixXd& b) {
  Eigen::EigenSolver<MatrixXd> es(a * b, false);
  double s = 0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    s += std::sqrt(std::max(0.0, es.eigenvalues()[i].real()));
  }
  return s;
}

MatrixXd randomSpd(Rng& rng, int d) {
  const MatrixXd g = gaussian(rng, d, d);
  return g * g.transpose() + 0.1 * MatrixXd::Identity(d, d);
}

TEST(Fid, OneDimensionalExactMoments) {
  const double v = fid_from_moments(VectorXd::Constant(1, 0.0), MatrixXd::Constant(1, 1, 1.0),
                                    VectorXd::Constant(1, 3.0), MatrixXd::Constant(1, 1, 4.0));
  EXPECT_NEAR(v, 10.0, 1e-9);
}

TEST(Fid, GaussianSamplingFixture) {
  Rng rng(65);
  const int d = 8, n = 10000;
  VectorXd gap = VectorXd::Zero(d);
  gap.head(4).setConstant(1.0); // norm 2
  const MatrixXd a = gaussian(rng, n, d);
  const MatrixXd b = gaussian(rng, n, d).rowwise() + gap.transpose();
  EXPECT_NEAR(fid(a, b), 4.0, 0.2);
}

TEST(Fid, SelfDistanceAndSymmetry) {
  Rng rng(66);
  for (int trial = 0; trial < 20; ++trial) {
    const MatrixXd x = gaussian(rng, 200, 6);
    EXPECT_LE(fid(x, x), 1e-8);
    const MatrixXd y = 1.5 * gaussian(rng, 150, 6).array() + 0.3;
    const double ab = fid(x, y), ba = fid(y, x);
    EXPECT_LE(std::abs(ab - ba), 1e-8 * (1.0 + ab));
    EXPECT_GE(ab, 0.0);
  }
}

TEST(Fid, MatchesNonSymmetricRoute) {
  Rng rng(67);
  for (int trial = 0; trial < 50; ++trial) {
    const int d = 1 + trial % 7;
    const MatrixXd sa = randomSpd(rng, d), sb = randomSpd(rng, d);
    const VectorXd ma = gaussian(rng, d, 1), mb = gaussian(rng, d, 1);
    const double expected = (ma - mb).squaredNorm() + sa.trace() + sb.trace() - 2.0 * traceSqrtProduct(sa, sb);
    EXPECT_NEAR(fid_from_moments(ma, sa, mb, sb), expected, 1e-8 * (1.0 + expected));
  }
}

TEST(Fid, DiagonalClosedForm) {
  Rng rng(68);
  std::uniform_real_distribution<double> u(0.1, 3.0);
  const VectorXd a = VectorXd::NullaryExpr(5, [&] { return u(rng); });
  const VectorXd b = VectorXd::NullaryExpr(5, [&] { return u(rng); });
  const double expected = (a.cwiseSqrt() - b.cwiseSqrt()).squaredNorm();
  EXPECT_NEAR(fid_from_moments(VectorXd::Zero(5), a.asDiagonal().toDenseMatrix(), VectorXd::Zero(5),
                               b.asDiagonal().toDenseMatrix()),
              expected, 1e-12);
}

TEST(Fid, TranslationCovariance) {
  Rng rng(69);
  for (int trial = 0; trial < 20; ++trial) {
    const MatrixXd s = randomSpd(rng, 4);
    const VectorXd m = gaussian(rng, 4, 1), c = gaussian(rng, 4, 1);
    const double base = fid_from_moments(m, s, m, s);
    EXPECT_NEAR(fid_from_moments(m + c, s, m, s) - base, c.squaredNorm(), 1e-9 * (1 + c.squaredNorm()));
  }
}

TEST(Fid, MomentsAndErrors) {
  const MatrixXd x = (MatrixXd(3, 2) << 1, 2, 3, 4, 5, 9).finished();
  const auto [m, s] = feature_moments(x);
  EXPECT_NEAR(m[0], 3.0, 1e-15);
  EXPECT_NEAR(m[1], 5.0, 1e-15);
  EXPECT_NEAR(s(0, 0), 4.0, 1e-14);
  EXPECT_NEAR(s(0, 1), 7.0, 1e-14);
  EXPECT_NEAR(s(1, 1), 13.0, 1e-14);
  EXPECT_THROW(feature_moments(MatrixXd::Zero(1, 2)), DegenerateSample);
  EXPECT_THROW(fid(MatrixXd::Zero(3, 2), MatrixXd::Zero(3, 3)), DimensionMismatch);
}

// ---------------------------------------------------------------------------
// seeded sampling metrics

TEST(Permutation, ValidDeterministicAndUniform) {
  for (int n : {0, 1, 2, 17}) {
    auto p = seeded_permutation(n, 5);
    EXPECT_EQ(p, seeded_permutation(n, 5));
    std::sort(p.begin(), p.end());
    for (int i = 0; i < n; ++i) {
      EXPECT_EQ(p[i], i);
    }
  }
  EXPECT_NE(seeded_permutation(50, 1), seeded_permutation(50, 2));
  // each of the 6 orderings of 3 elements appears ~1/6 of the time
  std::map<std::vector<int>, int> counts;
  const int trials = 60000;
  for (int s = 0; s < trials; ++s) {
    ++counts[seeded_permutation(3, static_cast<std::uint64_t>(s))];
  }
  ASSERT_EQ(counts.size(), 6u);
  const double p = 1.0 / 6.0, sigma = std::sqrt(trials * p * (1 - p));
  for (const auto& [perm, c] : counts) {
    EXPECT_NEAR(c, trials * p, 4 * sigma);
  }
}

TEST(Diversity, Cases) {
  EXPECT_EQ(diversity(MatrixXd::Ones(20, 4), 10), 0.0);
  MatrixXd alt(8, 2);
  for (int i = 0; i < 8; ++i) {
    alt.row(i) = i % 2 == 0 ? Eigen::RowVector2d(0, 0) : Eigen::RowVector2d(2, 0);
  }
  EXPECT_EQ(mean_pair_distance(alt, {{0, 1}, {2, 3}, {4, 5}, {6, 7}}), 2.0);
  EXPECT_THROW(diversity(alt, 5), TooFewSamples);
}

TEST(Diversity, Recomputation) {
  Rng rng(70);
  for (std::uint64_t seed : {1ull, 20240501ull, 99ull}) {
    const MatrixXd x = gaussian(rng, 700, 16);
    std::vector<int> rows(700);
    std::iota(rows.begin(), rows.end(), 0);
    const double got = diversity(x, 300, seed);
    EXPECT_NEAR(got, static_cast<double>(pairedDiversityL(x, rows, 300, seed)), 1e-9);
    EXPECT_EQ(got, diversity(x, 300, seed));
  }
}

TEST(Multimodality, Cases) {
  const MatrixXd same = MatrixXd::Ones(12, 3);
  const std::vector<int> labels{0, 0, 0, 0, 1, 1, 1, 1, 2, 2, 2, 2};
  EXPECT_EQ(multimodality(same, labels, 2), 0.0);

  // each group holds two points repeated; pairs can land on either
  MatrixXd two(8, 1);
  two << 0, 0, 3, 3, 0, 0, 0, 0;
  const std::vector<int> g{5, 5, 5, 5, 9, 9, 9, 9};
  const double v = multimodality(two, g, 1, 7);
  EXPECT_TRUE(v == 0.0 || v == 1.5 || v == 3.0) << v;
  MatrixXd pair(4, 1);
  pair << 0, 4, 1, 2;
  EXPECT_EQ(multimodality(pair, {0, 0, 1, 1}, 1), 2.5);

  EXPECT_THROW(multimodality(same, labels, 3), GroupTooSmall);
  EXPECT_THROW(multimodality(same, {0, 1}, 1), DimensionMismatch);
}

TEST(Multimodality, Recomputation) {
  Rng rng(71);
  const MatrixXd x = gaussian(rng, 300, 12);
  std::vector<int> labels(300);
  for (int i = 0; i < 300; ++i) {
    labels[i] = (i * 7) % 10 * 3; // unsorted labels 0, 3, ..., 27
  }
  std::map<int, std::vector<int>> groups;
  for (int i = 0; i < 300; ++i) {
    groups[labels[i]].push_back(i);
  }
  long double sum = 0;
  std::uint64_t ordinal = 0;
  for (const auto& [label, rows] : groups) {
    sum += pairedDiversityL(x, rows, 10, 123 + ordinal++);
  }
  EXPECT_NEAR(multimodality(x, labels, 10, 123), static_cast<double>(sum / groups.size()), 1e-9);
}

TEST(MmDist, Cases) {
  Rng rng(72);
  const MatrixXd t = gaussian(rng, 50, 6);
  EXPECT_EQ(mm_dist(t, t), 0.0);
  MatrixXd shifted = t;
  shifted.col(2).array() += 1.0;
  EXPECT_NEAR(mm_dist(t, shifted), 1.0, 1e-12);
  const MatrixXd m = gaussian(rng, 50, 6);
  long double s = 0;
  for (int i = 0; i < 50; ++i) {
    s += distL(t, i, m, i);
  }
  EXPECT_NEAR(mm_dist(t, m), static_cast<double>(s / 50), 1e-9);
  EXPECT_THROW(mm_dist(t, gaussian(rng, 49, 6)), DimensionMismatch);
}

TEST(RPrecision, PerfectEmbedding) {
  Rng rng(73);
  const MatrixXd t = gaussian(rng, 100, 8);
  for (int k = 1; k <= 3; ++k) {
    EXPECT_EQ(r_precision(t, t, 32, k), 1.0);
  }
}

TEST(RPrecision, ChanceLevel) {
  Rng rng(74);
  const int n = 2048, b = 32;
  const MatrixXd text = gaussian(rng, n, 16);
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  MatrixXd motion(n, 16);
  for (int i = 0; i < n; ++i) {
    motion.row(i) = text.row(perm[i]);
  }
  for (int k = 1; k <= 3; ++k) {
    const double p = static_cast<double>(k) / b;
    const double sigma = std::sqrt(p * (1 - p) / n);
    EXPECT_NEAR(r_precision(text, motion, b, k), p, 3 * sigma) << "k = " << k;
  }
}

TEST(RPrecision, HandComputedRanks) {
  // n = B: every pool is the whole set
  const MatrixXd text = (MatrixXd(4, 1) << 0, 10, 20, 30).finished();
  const MatrixXd motion = (MatrixXd(4, 1) << 2.5, 1, -2, 5).finished();
  const std::vector<int> all{0, 1, 2, 3};
  EXPECT_EQ(retrieval_rank(text, motion, 0, all), 3);
  EXPECT_EQ(retrieval_rank(text, motion, 1, all), 3);
  EXPECT_EQ(retrieval_rank(text, motion, 2, all), 4);
  EXPECT_EQ(retrieval_rank(text, motion, 3, all), 1);
  EXPECT_EQ(r_precision(text, motion, 4, 1), 0.25);
  EXPECT_EQ(r_precision(text, motion, 4, 2), 0.25);
  EXPECT_EQ(r_precision(text, motion, 4, 3), 0.75);
  EXPECT_THROW(r_precision(text, motion, 5, 1), PoolTooLarge);
  EXPECT_THROW(r_precision(text, motion, 4, 4), ValidationError);
}

TEST(RPrecision, Reproducible) {
  Rng rng(75);
  const MatrixXd t = gaussian(rng, 300, 8);
  const MatrixXd m = t + 1.5 * gaussian(rng, 300, 8);
  EXPECT_EQ(r_precision(t, m, 32, 2, 9), r_precision(t, m, 32, 2, 9));
}

} // namespace
} // namespace rkit
