#pragma once

// Dataset containers and deterministic data plumbing: train/test splits,
// column standardization, and CSV serialization.
//
// Conventions used across the library:
//   * rows are samples, columns are variables;
//   * standardization divides by the population standard deviation
//     (divisor n, not n-1);
//   * splits shuffle with the repo RNG (Fisher-Yates) and round the train
//     size half away from zero, so the same SplitSpec always produces the
//     same partition.

#include "diet/rng.hpp"

#include <string>
#include <vector>

namespace diet {

/// One labeled sample set for a conditional independence problem:
/// scalar x (tested variable), scalar y (response), vector z (conditioning).
struct LabeledDataset {
  Vector x;
  Vector y;
  Matrix z;

  Index n_rows() const { return x.size(); }
  Index z_dim() const { return z.cols(); }

  /// Throws std::invalid_argument when shapes disagree or entries are not
  /// finite.
  void validate() const;
};

/// Deterministic train/test partition request.
struct SplitSpec {
  double train_fraction = 0.5;
  RngStream shuffle_stream;
};

struct TrainTestSplit {
  LabeledDataset train;
  LabeledDataset test;
  std::vector<Index> train_rows;
  std::vector<Index> test_rows;
};

/// Round half away from zero (0.5 -> 1, 2.5 -> 3, -0.5 -> -1).
double round_half_away(double v);

/// Shuffle rows with spec.shuffle_stream and place the first
/// round(train_fraction * n) shuffled rows in the train set.  Every row
/// lands in exactly one side.  train_fraction must lie in [0, 1].
TrainTestSplit split_train_test(const LabeledDataset& d, const SplitSpec& spec);

/// Select the given rows of a dataset, in order.
LabeledDataset take_rows(const LabeledDataset& d, const std::vector<Index>& rows);

/// Result of column standardization.  Constant columns (population stdev
/// below 1e-12) are mapped to all zeros and flagged rather than divided by
/// ~0.
struct Standardization {
  Matrix values;
  Vector means;
  Vector stdevs;               // population convention (divisor n)
  std::vector<bool> constant;  // per column

  /// Apply the stored affine map to new rows (same column count).
  Matrix apply(const Matrix& raw) const;
  Vector apply_column(const Vector& raw, Index column) const;
};

/// Standardize each column to mean 0 and population stdev 1.
Standardization standardize_columns(const Matrix& m);

/// Load a dataset from CSV.  The header must contain columns named
/// x, y, z_1, ..., z_p (any order, p >= 1 contiguous indices from 1).
/// Parse failures throw std::runtime_error naming the row and column.
LabeledDataset load_csv(const std::string& path);

/// Write a dataset as CSV with enough digits (max_digits10) that
/// load_csv(write_csv(d)) round-trips within 1e-12.
void write_csv(const LabeledDataset& d, const std::string& path);

/// Format a double with max_digits10 precision (shared by all writers so
/// emitted files are reproducible byte-for-byte).
std::string format_double(double v);

}  // namespace diet
