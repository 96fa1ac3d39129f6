#include "retarget_kit/errors.hpp"
#include "retarget_kit/vq.hpp"

#include <gtest/gtest.h>

#include <random>
#include <set>

namespace rkit {
namespace {

using Eigen::MatrixXd;
using Rng = std::mt19937_64;

MatrixXd gaussian(Rng& rng, int rows, int cols, double sigma = 1.0) {
  std::normal_distribution<double> n(0.0, sigma);
  return MatrixXd::NullaryExpr(rows, cols, [&] { return n(rng); });
}

// Exhaustive scan in long double, lowest index wins ties.
std::vector<int> linearScan(const MatrixXd& codes, const MatrixXd& z) {
  std::vector<int> out;
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    int best = -1;
    long double bestD = 0;
    for (Eigen::Index k = 0; k < codes.rows(); ++k) {
      long double d = 0;
      for (Eigen::Index c = 0; c < z.cols(); ++c) {
        const long double e = static_cast<long double>(z(i, c)) - codes(k, c);
        d += e * e;
      }
      if (best < 0 || d < bestD) {
        best = static_cast<int>(k);
        bestD = d;
      }
    }
    out.push_back(best);
  }
  return out;
}

// Well-separated clusters around `centers`, `per` latents each.
MatrixXd clustered(Rng& rng, const MatrixXd& centers, int per, double sigma) {
  MatrixXd z(centers.rows() * per, centers.cols());
  std::normal_distribution<double> n(0.0, sigma);
  for (Eigen::Index k = 0; k < centers.rows(); ++k) {
    for (int i = 0; i < per; ++i) {
      for (Eigen::Index c = 0; c < centers.cols(); ++c) {
        z(k * per + i, c) = centers(k, c) + n(rng);
      }
    }
  }
  return z;
}

TEST(Vq, AssignExamples) {
  const Codebook cb = Codebook::from_entries((MatrixXd(2, 2) << 0, 0, 1, 1).finished());
  EXPECT_EQ(assign(cb, (MatrixXd(1, 2) << 0.1, 0.1).finished()).indices, std::vector<int>{0});
  EXPECT_EQ(assign(cb, (MatrixXd(1, 2) << 0.5, 0.5).finished()).indices, std::vector<int>{0});
  EXPECT_EQ(assign(cb, (MatrixXd(1, 2) << 0.9, 0.7).finished()).indices, std::vector<int>{1});
  EXPECT_THROW(assign(cb, MatrixXd::Zero(1, 3)), DimensionMismatch);
}

TEST(Vq, AssignMatchesLinearScan) {
  Rng rng(51);
  for (int trial = 0; trial < 20; ++trial) {
    const Codebook cb = Codebook::from_entries(gaussian(rng, 64, 8));
    const MatrixXd z = gaussian(rng, 200, 8);
    EXPECT_EQ(assign(cb, z).indices, linearScan(cb.entries, z));
  }
}

TEST(Vq, AssignEntriesIsIdentity) {
  Rng rng(52);
  const Codebook cb = Codebook::from_entries(gaussian(rng, 32, 5));
  const auto idx = assign(cb, cb.entries).indices;
  for (int k = 0; k < 32; ++k) {
    EXPECT_EQ(idx[k], k);
  }
}

TEST(Vq, DecayOneLeavesEntries) {
  Rng rng(53);
  const Codebook cb = Codebook::from_entries(gaussian(rng, 6, 3), 1.0);
  const MatrixXd z = gaussian(rng, 40, 3);
  const Codebook out = ema_update(cb, z, linearScan(cb.entries, z));
  EXPECT_EQ(out.entries, cb.entries);
  EXPECT_EQ(out.ema_counts, cb.ema_counts);
  EXPECT_DOUBLE_EQ(out.usage.sum(), 40.0);
}

TEST(Vq, DecayZeroGivesBatchMeans) {
  Rng rng(54);
  const Codebook cb = Codebook::from_entries(gaussian(rng, 6, 3), 0.0, 0.0);
  const MatrixXd z = gaussian(rng, 50, 3);
  const auto a = linearScan(cb.entries, z);
  const Codebook out = ema_update(cb, z, a);
  for (int k = 0; k < 6; ++k) {
    Eigen::RowVector3d sum = Eigen::RowVector3d::Zero();
    int n = 0;
    for (size_t i = 0; i < a.size(); ++i) {
      if (a[i] == k) {
        sum += z.row(static_cast<Eigen::Index>(i));
        ++n;
      }
    }
    if (n > 0) {
      EXPECT_LE((out.entries.row(k) - sum / n).norm(), 1e-12) << "code " << k;
    }
  }
}

TEST(Vq, RecurrenceOracle) {
  Rng rng(55);
  const int K = 16, d = 6;
  Codebook cb = Codebook::from_entries(gaussian(rng, K, d), 0.99, 1e-5);

  std::vector<long double> counts(K, 1.0L);
  std::vector<std::vector<long double>> sums(K, std::vector<long double>(d));
  for (int k = 0; k < K; ++k) {
    for (int c = 0; c < d; ++c) {
      sums[k][c] = cb.entries(k, c);
    }
  }
  const long double g = 0.99L, eps = 1e-5L;

  for (int step = 0; step < 25; ++step) {
    const MatrixXd z = gaussian(rng, 80, d);
    const auto a = linearScan(cb.entries, z);
    std::vector<long double> n(K, 0.0L);
    std::vector<std::vector<long double>> batch(K, std::vector<long double>(d, 0.0L));
    for (size_t i = 0; i < a.size(); ++i) {
      n[a[i]] += 1.0L;
      for (int c = 0; c < d; ++c) {
        batch[a[i]][c] += z(static_cast<Eigen::Index>(i), c);
      }
    }
    long double total = 0;
    for (int k = 0; k < K; ++k) {
      counts[k] = g * counts[k] + (1 - g) * n[k];
      for (int c = 0; c < d; ++c) {
        sums[k][c] = g * sums[k][c] + (1 - g) * batch[k][c];
      }
      total += counts[k];
    }
    cb = ema_update(cb, z, a);
    for (int k = 0; k < K; ++k) {
      const long double smoothed = (counts[k] + eps) / (total + K * eps) * total;
      for (int c = 0; c < d; ++c) {
        EXPECT_NEAR(cb.entries(k, c), static_cast<double>(sums[k][c] / smoothed), 1e-9);
      }
    }
  }
}

TEST(Vq, RepeatedBatchConverges) {
  Rng rng(56);
  const MatrixXd centers = 10.0 * gaussian(rng, 5, 4);
  const MatrixXd z = clustered(rng, centers, 30, 0.3);
  // start each code near its cluster so assignments never change
  Codebook cb = Codebook::from_entries(centers + 0.5 * gaussian(rng, 5, 4), 0.9, 1e-5);
  const auto a = linearScan(cb.entries, z);
  Codebook prev = cb;
  for (int it = 0; it < 200; ++it) {
    prev = cb;
    cb = ema_update(cb, z, assign(cb, z).indices);
  }
  EXPECT_EQ(assign(cb, z).indices, a);
  EXPECT_LT((cb.entries - prev.entries).cwiseAbs().maxCoeff(), 1e-6);
  for (int k = 0; k < 5; ++k) {
    Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(4);
    int n = 0;
    for (size_t i = 0; i < a.size(); ++i) {
      if (a[i] == k) {
        mean += z.row(static_cast<Eigen::Index>(i));
        ++n;
      }
    }
    mean /= n;
    // the Laplace-smoothed fixed point sits within eps-relative of the mean
    EXPECT_LT((cb.entries.row(k) - mean).norm(), 1e-4 * (1.0 + mean.norm()));
  }
}

TEST(Vq, QuantizationErrorNonIncreasing) {
  Rng rng(57);
  for (int trial = 0; trial < 10; ++trial) {
    const MatrixXd centers = 5.0 * gaussian(rng, 8, 6);
    const MatrixXd z = clustered(rng, centers, 20, 1.0);
    Codebook cb = Codebook::from_entries(gaussian(rng, 8, 6, 3.0), 0.9, 1e-5);
    auto a = assign(cb, z).indices;
    double err = quantization_error(cb, z, a);
    for (int it = 0; it < 30; ++it) {
      cb = ema_update(cb, z, a);
      a = assign(cb, z).indices;
      const double next = quantization_error(cb, z, a);
      EXPECT_LE(next, err) << "trial " << trial << " iteration " << it;
      err = next;
    }
  }
}

TEST(Vq, ResetNoDeadCodes) {
  Rng rng(58);
  Codebook cb = Codebook::from_entries(gaussian(rng, 4, 3));
  cb.usage.setConstant(3.0);
  const ResetResult r = reset_dead_codes(cb, gaussian(rng, 10, 3));
  EXPECT_EQ(r.reset_count, 0);
  EXPECT_EQ(r.codebook.entries, cb.entries);
  EXPECT_EQ(r.codebook.usage.sum(), 0.0);
}

TEST(Vq, ResetTwoNeverUsedCodes) {
  Rng rng(59);
  const Codebook cb0 = Codebook::from_entries((MatrixXd(4, 2) << 0, 0, 10, 10, 100, 100, -100, 100).finished());
  MatrixXd z(12, 2);
  for (int i = 0; i < 12; ++i) {
    z.row(i) = (i % 2 == 0 ? Eigen::RowVector2d(0, 0) : Eigen::RowVector2d(10, 10)) + 0.5 * gaussian(rng, 1, 2);
  }
  const Codebook used = ema_update(cb0, z, assign(cb0, z).indices);
  const ResetResult r = reset_dead_codes(used, z, 1.0);
  EXPECT_EQ(r.reset_count, 2);
  for (int k : {2, 3}) {
    bool found = false;
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
      found |= r.codebook.entries.row(k) == z.row(i);
    }
    EXPECT_TRUE(found) << "code " << k;
    EXPECT_EQ(r.codebook.ema_counts[k], 1.0);
    EXPECT_EQ(r.codebook.ema_sums.row(k), r.codebook.entries.row(k));
  }
  EXPECT_EQ(r.codebook.entries.row(0), used.entries.row(0));
  EXPECT_EQ(r.codebook.entries.row(1), used.entries.row(1));
  // replacements are the two worst-quantized latents, worst first
  std::vector<std::pair<double, Eigen::Index>> err;
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    err.push_back({-(z.row(i) - used.entries.row(linearScan(used.entries, z.row(i))[0])).squaredNorm(), i});
  }
  std::sort(err.begin(), err.end());
  EXPECT_EQ(r.codebook.entries.row(2), z.row(err[0].second));
  EXPECT_EQ(r.codebook.entries.row(3), z.row(err[1].second));
}

TEST(Vq, ResetRevivesCollapsedCodebook) {
  Rng rng(60);
  const int K = 8;
  // one code sits in the middle of the data, the rest far away
  MatrixXd entries = MatrixXd::Constant(K, 3, 1000.0);
  entries.row(0).setZero();
  for (int k = 1; k < K; ++k) {
    entries(k, 0) += 10.0 * k;
  }
  const Codebook cb0 = Codebook::from_entries(entries);
  const MatrixXd z = clustered(rng, 4.0 * gaussian(rng, 6, 3), 15, 0.5);

  const auto before = assign(cb0, z).indices;
  EXPECT_EQ(std::set<int>(before.begin(), before.end()).size(), 1u);
  const Codebook used = ema_update(cb0, z, before);
  const ResetResult r = reset_dead_codes(used, z, 1.0);
  EXPECT_EQ(r.reset_count, K - 1);
  const auto after = assign(r.codebook, z).indices;
  EXPECT_GT(std::set<int>(after.begin(), after.end()).size(), 1u);
}

TEST(Vq, Validation) {
  EXPECT_THROW(Codebook::from_entries(MatrixXd(0, 2)), ValidationError);
  EXPECT_THROW(Codebook::from_entries(MatrixXd::Zero(2, 2), 1.5), ValidationError);
  Codebook cb = Codebook::from_entries(MatrixXd::Zero(2, 2));
  EXPECT_THROW(ema_update(cb, MatrixXd::Zero(1, 2), {2}), ValidationError);
  EXPECT_THROW(ema_update(cb, MatrixXd::Zero(2, 2), {0}), DimensionMismatch);
  EXPECT_THROW(reset_dead_codes(cb, MatrixXd(0, 2)), TooFewSamples);
  EXPECT_EQ(token_count(100, 4), 25u);
  EXPECT_EQ(token_count(103, 4), 25u);
}

} // namespace
} // namespace rkit
