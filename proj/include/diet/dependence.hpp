#pragma once

// Marginal dependence measures between paired samples on [0, 1]^2 —
// the statistics applied to information residuals.
//
// All information-theoretic quantities are in nats.

#include "diet/math.hpp"

#include <memory>
#include <string>
#include <vector>

namespace diet {

/// Paired residual samples, each entry in [0, 1].
struct ResidualPairs {
  Vector eps;    // residuals of x given z
  Vector delta;  // residuals of y given z

  Index size() const { return eps.size(); }
  void validate() const;
};

/// Equal-width binning of values in [0, 1] into `bins` buckets; the right
/// edge value 1.0 lands in the last bucket.  Values outside [0, 1] throw.
std::vector<int> discretize_unit(const Eigen::Ref<const Vector>& values, int bins);

/// Dense contingency table of two label vectors (labels in 0..rows-1 /
/// 0..cols-1).
struct ContingencyTable {
  Eigen::MatrixXi counts;

  Index n_total() const { return counts.sum(); }
  Eigen::VectorXi row_sums() const { return counts.rowwise().sum(); }
  Eigen::VectorXi col_sums() const { return counts.colwise().sum(); }
};

ContingencyTable make_table(const std::vector<int>& a, const std::vector<int>& b,
                            int a_levels, int b_levels);

/// Plug-in mutual information of a contingency table, in nats.  Empty cells
/// contribute zero.  Always >= 0 up to rounding.
double mutual_information(const ContingencyTable& table);

/// Shannon entropy (nats) of a marginal count vector.
double entropy_of_counts(const Eigen::Ref<const Eigen::VectorXi>& counts);

/// Exact expected mutual information under the fixed-marginals permutation
/// (hypergeometric) model, evaluated cell by cell in log space.
double expected_mutual_information(const Eigen::Ref<const Eigen::VectorXi>& row_sums,
                                   const Eigen::Ref<const Eigen::VectorXi>& col_sums);

/// Adjusted mutual information:
///   (MI - E[MI]) / (max(H_row, H_col) - E[MI]),
/// returning 0 when the denominator is degenerate (<= 1e-12).
double adjusted_mutual_information(const ContingencyTable& table);

/// AMI of residual pairs after equal-width discretization into `bins` bins.
double ami_statistic(const ResidualPairs& pairs, int bins);

/// Histogram likelihood-ratio statistic: discretize both coordinates on a
/// grid_bins x grid_bins lattice, smooth the joint cell probabilities with
/// add-one smoothing, take marginals from the smoothed joint, and return the
/// sample mean of log( p_joint(cell) / (p_row(cell) * p_col(cell)) ).
double lr_mi_statistic(const ResidualPairs& pairs, int grid_bins);

/// Squared Pearson correlation of the pairs; 0 when either side is constant.
double pearson_sq_statistic(const ResidualPairs& pairs);

/// Polymorphic handle for the measure applied to residual pairs.
class DependenceStatistic {
 public:
  virtual ~DependenceStatistic() = default;
  virtual double evaluate(const ResidualPairs& pairs) const = 0;
  virtual std::string name() const = 0;
};

class AmiStatistic final : public DependenceStatistic {
 public:
  explicit AmiStatistic(int bins = 10);
  double evaluate(const ResidualPairs& pairs) const override;
  std::string name() const override { return "ami"; }

 private:
  int bins_;
};

class LrMiStatistic final : public DependenceStatistic {
 public:
  explicit LrMiStatistic(int grid_bins = 8);
  double evaluate(const ResidualPairs& pairs) const override;
  std::string name() const override { return "lr_mi"; }

 private:
  int grid_bins_;
};

class PearsonSqStatistic final : public DependenceStatistic {
 public:
  double evaluate(const ResidualPairs& pairs) const override;
  std::string name() const override { return "pearson_sq"; }
};

/// Factory over the statistic names above ("ami", "lr_mi", "pearson_sq").
std::unique_ptr<DependenceStatistic> make_dependence_statistic(const std::string& name,
                                                               int bins = 10);

}  // namespace diet
