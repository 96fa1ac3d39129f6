#include "retarget_kit/vq.hpp"

#include "retarget_kit/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace rkit {

Codebook Codebook::from_entries(const Eigen::MatrixXd& entries, double decay, double epsilon) {
  Codebook cb;
  cb.entries = entries;
  cb.ema_counts = Eigen::VectorXd::Ones(entries.rows());
  cb.ema_sums = entries;
  cb.usage = Eigen::VectorXd::Zero(entries.rows());
  cb.decay = decay;
  cb.epsilon = epsilon;
  cb.validate();
  return cb;
}

void Codebook::validate() const {
  if (entries.rows() < 1 || entries.cols() < 1) {
    throw ValidationError("codebook needs K >= 1 and d >= 1");
  }
  if (ema_counts.size() != entries.rows() || usage.size() != entries.rows() || ema_sums.rows() != entries.rows() ||
      ema_sums.cols() != entries.cols()) {
    throw ValidationError("codebook EMA state does not match the entry shape");
  }
  if (!entries.allFinite() || !ema_sums.allFinite() || !ema_counts.allFinite()) {
    throw ValidationError("codebook has non-finite values");
  }
  if ((ema_counts.array() < 0.0).any()) {
    throw ValidationError("codebook EMA counts must be >= 0");
  }
  if (!(decay >= 0.0 && decay <= 1.0) || !(epsilon >= 0.0)) {
    throw ValidationError("codebook decay must lie in [0, 1] and epsilon >= 0");
  }
}

namespace {

void checkLatents(const Codebook& cb, const Eigen::MatrixXd& latents) {
  if (latents.cols() != cb.dim()) {
    throw DimensionMismatch(
        "latent width " + std::to_string(latents.cols()) + " does not match codebook width " +
        std::to_string(cb.dim()));
  }
}

void checkAssignments(const Codebook& cb, const Eigen::MatrixXd& latents, const std::vector<int>& assignments) {
  checkLatents(cb, latents);
  if (static_cast<Eigen::Index>(assignments.size()) != latents.rows()) {
    throw DimensionMismatch("one assignment per latent row expected");
  }
  for (int a : assignments) {
    if (a < 0 || a >= cb.size()) {
      throw ValidationError("assignment index " + std::to_string(a) + " out of range");
    }
  }
}

} // namespace

TokenSequence assign(const Codebook& cb, const Eigen::MatrixXd& latents) {
  checkLatents(cb, latents);
  TokenSequence out;
  out.indices.resize(static_cast<size_t>(latents.rows()));
  for (Eigen::Index i = 0; i < latents.rows(); ++i) {
    int best = 0;
    double bestDist = (cb.entries.row(0) - latents.row(i)).squaredNorm();
    for (Eigen::Index k = 1; k < cb.size(); ++k) {
      const double d = (cb.entries.row(k) - latents.row(i)).squaredNorm();
      if (d < bestDist) {
        bestDist = d;
        best = static_cast<int>(k);
      }
    }
    out.indices[static_cast<size_t>(i)] = best;
  }
  return out;
}

Codebook ema_update(const Codebook& cb, const Eigen::MatrixXd& latents, const std::vector<int>& assignments) {
  cb.validate();
  checkAssignments(cb, latents, assignments);
  Codebook out = cb;

  Eigen::VectorXd n = Eigen::VectorXd::Zero(cb.size());
  Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(cb.size(), cb.dim());
  for (size_t i = 0; i < assignments.size(); ++i) {
    n[assignments[i]] += 1.0;
    sums.row(assignments[i]) += latents.row(static_cast<Eigen::Index>(i));
  }
  out.usage += n;
  if (cb.decay == 1.0) {
    return out;
  }

  const double g = cb.decay;
  out.ema_counts = g * cb.ema_counts + (1.0 - g) * n;
  out.ema_sums = g * cb.ema_sums + (1.0 - g) * sums;
  const double total = out.ema_counts.sum();
  const double k = static_cast<double>(cb.size());
  for (Eigen::Index c = 0; c < cb.size(); ++c) {
    const double smoothed = (out.ema_counts[c] + cb.epsilon) / (total + k * cb.epsilon) * total;
    if (smoothed > 0.0) {
      out.entries.row(c) = out.ema_sums.row(c) / smoothed;
    }
  }
  return out;
}

double quantization_error(const Codebook& cb, const Eigen::MatrixXd& latents, const std::vector<int>& assignments) {
  checkAssignments(cb, latents, assignments);
  double err = 0.0;
  for (size_t i = 0; i < assignments.size(); ++i) {
    err += (latents.row(static_cast<Eigen::Index>(i)) - cb.entries.row(assignments[i])).squaredNorm();
  }
  return err;
}

ResetResult reset_dead_codes(const Codebook& cb, const Eigen::MatrixXd& latents, double threshold) {
  cb.validate();
  checkLatents(cb, latents);
  if (latents.rows() == 0) {
    throw TooFewSamples("reset_dead_codes needs a nonempty latent batch");
  }
  ResetResult out{cb, 0};

  std::vector<Eigen::Index> dead;
  for (Eigen::Index k = 0; k < cb.size(); ++k) {
    if (cb.usage[k] < threshold) {
      dead.push_back(k);
    }
  }
  if (!dead.empty()) {
    const TokenSequence tokens = assign(cb, latents);
    std::vector<double> err(static_cast<size_t>(latents.rows()));
    for (Eigen::Index i = 0; i < latents.rows(); ++i) {
      err[i] = (latents.row(i) - cb.entries.row(tokens.indices[i])).squaredNorm();
    }
    std::vector<Eigen::Index> order(err.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return err[a] > err[b]; });
    for (size_t i = 0; i < dead.size(); ++i) {
      const Eigen::Index src = order[i % order.size()];
      out.codebook.entries.row(dead[i]) = latents.row(src);
      out.codebook.ema_sums.row(dead[i]) = latents.row(src);
      out.codebook.ema_counts[dead[i]] = 1.0;
    }
    out.reset_count = static_cast<int>(dead.size());
  }
  out.codebook.usage.setZero();
  return out;
}

} // namespace rkit
