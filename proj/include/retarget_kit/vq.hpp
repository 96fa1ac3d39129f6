#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <vector>

namespace rkit {

/// Quantization codebook with exponential-moving-average state.
///
/// `entries` holds one code per row (K x d). `ema_counts` and `ema_sums`
/// are the running cluster sizes and sums; `usage` counts assignments since
/// the last dead-code reset.
struct Codebook {
  Eigen::MatrixXd entries;
  Eigen::VectorXd ema_counts;
  Eigen::MatrixXd ema_sums;
  Eigen::VectorXd usage;
  double decay = 0.99;
  double epsilon = 1e-5;

  /// EMA state initialized consistently with `entries` (count 1, sum = entry).
  static Codebook from_entries(const Eigen::MatrixXd& entries, double decay = 0.99, double epsilon = 1e-5);

  Eigen::Index size() const {
    return entries.rows();
  }
  Eigen::Index dim() const {
    return entries.cols();
  }

  /// Throws ValidationError on inconsistent shapes, non-finite entries,
  /// negative counts or decay outside [0, 1].
  void validate() const;
};

/// Code indices plus the temporal downsampling that produced them.
struct TokenSequence {
  std::vector<int> indices;
  int downsample = 1; // l; L = floor(T / l)
};

inline std::size_t token_count(std::size_t frames, std::size_t downsample) {
  return downsample == 0 ? 0 : frames / downsample;
}

/// Nearest code per latent row by Euclidean distance; ties go to the lowest
/// index. Throws DimensionMismatch when widths differ.
TokenSequence assign(const Codebook& codebook, const Eigen::MatrixXd& latents);

/// One EMA step:
///   counts <- g counts + (1 - g) n,  sums <- g sums + (1 - g) batch_sums,
///   entries_k <- sums_k / ((counts_k + eps) / (sum(counts) + K eps) sum(counts)).
/// With g = 1 the codebook is returned unchanged apart from usage counters.
Codebook ema_update(const Codebook& codebook, const Eigen::MatrixXd& latents, const std::vector<int>& assignments);

struct ResetResult {
  Codebook codebook;
  int reset_count = 0;
};

/// Replaces every code whose usage is below `threshold` with a batch latent.
/// Replacement latents are taken in descending order of their quantization
/// error against the current codebook (ties by row index), cycling if there
/// are more dead codes than latents. Replaced codes restart their EMA state
/// at count 1, sum = latent. All usage counters are zeroed.
ResetResult reset_dead_codes(const Codebook& codebook, const Eigen::MatrixXd& latents, double threshold = 1.0);

/// Sum of squared distances between latents and their assigned codes.
double quantization_error(const Codebook& codebook, const Eigen::MatrixXd& latents, const std::vector<int>& assignments);

} // namespace rkit
