#include "diet/dependence.hpp"

#include <cmath>
#include <stdexcept>

namespace diet {

void ResidualPairs::validate() const {
  if (eps.size() != delta.size()) {
    throw std::invalid_argument("ResidualPairs: eps and delta lengths differ");
  }
  if (eps.size() == 0) throw std::invalid_argument("ResidualPairs: empty");
  for (Index i = 0; i < eps.size(); ++i) {
    if (!(eps[i] >= 0.0 && eps[i] <= 1.0) || !(delta[i] >= 0.0 && delta[i] <= 1.0)) {
      throw std::invalid_argument("ResidualPairs: entries must lie in [0, 1]");
    }
  }
}

std::vector<int> discretize_unit(const Eigen::Ref<const Vector>& values, int bins) {
  if (bins < 1) throw std::invalid_argument("discretize_unit: bins must be positive");
  std::vector<int> labels(static_cast<std::size_t>(values.size()));
  for (Index i = 0; i < values.size(); ++i) {
    const double v = values[i];
    if (!(v >= 0.0 && v <= 1.0)) {
      throw std::invalid_argument("discretize_unit: value outside [0, 1] at index " +
                                  std::to_string(i));
    }
    int b = static_cast<int>(v * bins);
    if (b >= bins) b = bins - 1;  // v == 1.0 belongs to the last bin
    labels[static_cast<std::size_t>(i)] = b;
  }
  return labels;
}

ContingencyTable make_table(const std::vector<int>& a, const std::vector<int>& b,
                            int a_levels, int b_levels) {
  if (a.size() != b.size()) throw std::invalid_argument("make_table: label lengths differ");
  if (a_levels < 1 || b_levels < 1) throw std::invalid_argument("make_table: levels must be positive");
  ContingencyTable t;
  t.counts = Eigen::MatrixXi::Zero(a_levels, b_levels);
  for (std::size_t i = 0; i < a.size(); ++i) {
    const int r = a[i];
    const int c = b[i];
    if (r < 0 || r >= a_levels || c < 0 || c >= b_levels) {
      throw std::invalid_argument("make_table: label out of range at index " + std::to_string(i));
    }
    t.counts(r, c) += 1;
  }
  return t;
}

double mutual_information(const ContingencyTable& table) {
  const double n = static_cast<double>(table.n_total());
  if (!(n > 0.0)) throw std::invalid_argument("mutual_information: empty table");
  const Eigen::VectorXi rows = table.row_sums();
  const Eigen::VectorXi cols = table.col_sums();
  double mi = 0.0;
  for (Index i = 0; i < table.counts.rows(); ++i) {
    if (rows[i] == 0) continue;
    for (Index j = 0; j < table.counts.cols(); ++j) {
      const int nij = table.counts(i, j);
      if (nij == 0) continue;
      mi += (nij / n) * std::log(n * nij / (static_cast<double>(rows[i]) * cols[j]));
    }
  }
  return mi;
}

double entropy_of_counts(const Eigen::Ref<const Eigen::VectorXi>& counts) {
  const double n = static_cast<double>(counts.sum());
  if (!(n > 0.0)) throw std::invalid_argument("entropy_of_counts: empty counts");
  double h = 0.0;
  for (Index i = 0; i < counts.size(); ++i) {
    if (counts[i] == 0) continue;
    const double p = counts[i] / n;
    h -= p * std::log(p);
  }
  return h;
}

// Expected plug-in MI when one labeling is permuted uniformly at random
// against the other: each cell count follows a hypergeometric law with the
// fixed margins, and the expectation sums (nij/n) log(n nij / (ai bj)) times
// the hypergeometric pmf, evaluated in log space for stability.  Cells with
// nij = 0 contribute nothing, so the inner sum starts at max(1, ai+bj-n).
double expected_mutual_information(const Eigen::Ref<const Eigen::VectorXi>& row_sums,
                                   const Eigen::Ref<const Eigen::VectorXi>& col_sums) {
  const std::int64_t n = row_sums.sum();
  if (n <= 0) throw std::invalid_argument("expected_mutual_information: empty marginals");
  if (col_sums.sum() != n) {
    throw std::invalid_argument("expected_mutual_information: marginal totals differ");
  }
  double emi = 0.0;
  for (Index i = 0; i < row_sums.size(); ++i) {
    const std::int64_t ai = row_sums[i];
    if (ai == 0) continue;
    for (Index j = 0; j < col_sums.size(); ++j) {
      const std::int64_t bj = col_sums[j];
      if (bj == 0) continue;
      const std::int64_t lo = std::max<std::int64_t>(1, ai + bj - n);
      const std::int64_t hi = std::min(ai, bj);
      // Constant part of log pmf for this cell.
      const double log_const = log_factorial(ai) + log_factorial(bj) +
                               log_factorial(n - ai) + log_factorial(n - bj) -
                               log_factorial(n);
      for (std::int64_t nij = lo; nij <= hi; ++nij) {
        const double log_pmf = log_const - log_factorial(nij) - log_factorial(ai - nij) -
                               log_factorial(bj - nij) - log_factorial(n - ai - bj + nij);
        // n*nij and ai*bj stay exact in double for any realistic table, and
        // a single log keeps the term exactly zero when n*nij == ai*bj.
        const double ratio = static_cast<double>(n * nij) / static_cast<double>(ai * bj);
        const double term =
            (static_cast<double>(nij) / static_cast<double>(n)) * std::log(ratio);
        emi += term * std::exp(log_pmf);
      }
    }
  }
  return emi;
}

double adjusted_mutual_information(const ContingencyTable& table) {
  const Eigen::VectorXi rows = table.row_sums();
  const Eigen::VectorXi cols = table.col_sums();
  // A single occupied level on either side carries no information and the
  // permutation distribution is degenerate: define the score as exactly 0.
  if ((rows.array() > 0).count() <= 1 || (cols.array() > 0).count() <= 1) return 0.0;
  const double mi = mutual_information(table);
  const double emi = expected_mutual_information(rows, cols);
  const double h_max = std::max(entropy_of_counts(rows), entropy_of_counts(cols));
  const double denom = h_max - emi;
  if (denom <= 1e-12) return 0.0;
  return (mi - emi) / denom;
}

double ami_statistic(const ResidualPairs& pairs, int bins) {
  pairs.validate();
  const std::vector<int> a = discretize_unit(pairs.eps, bins);
  const std::vector<int> b = discretize_unit(pairs.delta, bins);
  return adjusted_mutual_information(make_table(a, b, bins, bins));
}

double lr_mi_statistic(const ResidualPairs& pairs, int grid_bins) {
  pairs.validate();
  if (grid_bins < 1) throw std::invalid_argument("lr_mi_statistic: grid_bins must be positive");
  const Index n = pairs.size();
  const std::vector<int> a = discretize_unit(pairs.eps, grid_bins);
  const std::vector<int> b = discretize_unit(pairs.delta, grid_bins);
  const int g = grid_bins;
  Matrix joint = Matrix::Constant(g, g, 1.0);  // add-one smoothing
  for (Index i = 0; i < n; ++i) {
    joint(a[static_cast<std::size_t>(i)], b[static_cast<std::size_t>(i)]) += 1.0;
  }
  joint /= static_cast<double>(n) + static_cast<double>(g) * g;
  const Vector row_p = joint.rowwise().sum();
  const Vector col_p = joint.colwise().sum();
  double acc = 0.0;
  for (Index i = 0; i < n; ++i) {
    const int r = a[static_cast<std::size_t>(i)];
    const int c = b[static_cast<std::size_t>(i)];
    acc += std::log(joint(r, c) / (row_p[r] * col_p[c]));
  }
  return acc / static_cast<double>(n);
}

double pearson_sq_statistic(const ResidualPairs& pairs) {
  pairs.validate();
  const Index n = pairs.size();
  const double mean_e = pairs.eps.mean();
  const double mean_d = pairs.delta.mean();
  const Eigen::ArrayXd ce = pairs.eps.array() - mean_e;
  const Eigen::ArrayXd cd = pairs.delta.array() - mean_d;
  const double var_e = ce.square().sum() / static_cast<double>(n);
  const double var_d = cd.square().sum() / static_cast<double>(n);
  if (var_e <= 1e-24 || var_d <= 1e-24) return 0.0;
  const double cov = (ce * cd).sum() / static_cast<double>(n);
  const double r = cov / std::sqrt(var_e * var_d);
  return r * r;
}

AmiStatistic::AmiStatistic(int bins) : bins_(bins) {
  if (bins < 2) throw std::invalid_argument("AmiStatistic: need at least 2 bins");
}

double AmiStatistic::evaluate(const ResidualPairs& pairs) const {
  return ami_statistic(pairs, bins_);
}

LrMiStatistic::LrMiStatistic(int grid_bins) : grid_bins_(grid_bins) {
  if (grid_bins < 2) throw std::invalid_argument("LrMiStatistic: need at least 2 bins");
}

double LrMiStatistic::evaluate(const ResidualPairs& pairs) const {
  return lr_mi_statistic(pairs, grid_bins_);
}

double PearsonSqStatistic::evaluate(const ResidualPairs& pairs) const {
  return pearson_sq_statistic(pairs);
}

std::unique_ptr<DependenceStatistic> make_dependence_statistic(const std::string& name,
                                                               int bins) {
  if (name == "ami") return std::make_unique<AmiStatistic>(bins);
  if (name == "lr_mi") return std::make_unique<LrMiStatistic>(bins);
  if (name == "pearson_sq") return std::make_unique<PearsonSqStatistic>();
  throw std::invalid_argument("make_dependence_statistic: unknown statistic '" + name + "'");
}

}  // namespace diet
