#include "diet/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace diet {

void LabeledDataset::validate() const {
  const Index n = x.size();
  if (y.size() != n) {
    throw std::invalid_argument("LabeledDataset: x has " + std::to_string(n) +
                                " rows but y has " + std::to_string(y.size()));
  }
  if (z.rows() != n) {
    throw std::invalid_argument("LabeledDataset: x has " + std::to_string(n) +
                                " rows but z has " + std::to_string(z.rows()));
  }
  if (z.cols() < 1) throw std::invalid_argument("LabeledDataset: z must have at least one column");
  if (!x.allFinite()) throw std::invalid_argument("LabeledDataset: x contains non-finite values");
  if (!y.allFinite()) throw std::invalid_argument("LabeledDataset: y contains non-finite values");
  if (!z.allFinite()) throw std::invalid_argument("LabeledDataset: z contains non-finite values");
}

double round_half_away(double v) {
  return v >= 0.0 ? std::floor(v + 0.5) : std::ceil(v - 0.5);
}

LabeledDataset take_rows(const LabeledDataset& d, const std::vector<Index>& rows) {
  LabeledDataset out;
  const Index m = static_cast<Index>(rows.size());
  out.x.resize(m);
  out.y.resize(m);
  out.z.resize(m, d.z.cols());
  for (Index i = 0; i < m; ++i) {
    const Index r = rows[static_cast<std::size_t>(i)];
    out.x[i] = d.x[r];
    out.y[i] = d.y[r];
    out.z.row(i) = d.z.row(r);
  }
  return out;
}

TrainTestSplit split_train_test(const LabeledDataset& d, const SplitSpec& spec) {
  if (!(spec.train_fraction >= 0.0 && spec.train_fraction <= 1.0)) {
    throw std::invalid_argument("split_train_test: train_fraction must lie in [0, 1]");
  }
  const Index n = d.n_rows();
  Rng rng(spec.shuffle_stream);
  std::vector<Index> order = rng.permutation(n);
  const Index n_train =
      static_cast<Index>(round_half_away(spec.train_fraction * static_cast<double>(n)));
  TrainTestSplit out;
  out.train_rows.assign(order.begin(), order.begin() + n_train);
  out.test_rows.assign(order.begin() + n_train, order.end());
  out.train = take_rows(d, out.train_rows);
  out.test = take_rows(d, out.test_rows);
  return out;
}

namespace {
constexpr double kConstantStdevFloor = 1e-12;
}

Standardization standardize_columns(const Matrix& m) {
  if (m.rows() < 1) throw std::invalid_argument("standardize_columns: need at least one row");
  const Index n = m.rows();
  const Index p = m.cols();
  Standardization out;
  out.values.resize(n, p);
  out.means.resize(p);
  out.stdevs.resize(p);
  out.constant.assign(static_cast<std::size_t>(p), false);
  for (Index j = 0; j < p; ++j) {
    const double mean = m.col(j).mean();
    const double var = (m.col(j).array() - mean).square().sum() / static_cast<double>(n);
    const double stdev = std::sqrt(var);
    out.means[j] = mean;
    out.stdevs[j] = stdev;
    if (stdev < kConstantStdevFloor) {
      out.constant[static_cast<std::size_t>(j)] = true;
      out.values.col(j).setZero();
    } else {
      out.values.col(j) = (m.col(j).array() - mean) / stdev;
    }
  }
  return out;
}

Matrix Standardization::apply(const Matrix& raw) const {
  if (raw.cols() != means.size()) {
    throw std::invalid_argument("Standardization::apply: column count mismatch");
  }
  Matrix out(raw.rows(), raw.cols());
  for (Index j = 0; j < raw.cols(); ++j) {
    if (constant[static_cast<std::size_t>(j)]) {
      out.col(j).setZero();
    } else {
      out.col(j) = (raw.col(j).array() - means[j]) / stdevs[j];
    }
  }
  return out;
}

Vector Standardization::apply_column(const Vector& raw, Index column) const {
  if (column < 0 || column >= means.size()) {
    throw std::invalid_argument("Standardization::apply_column: column out of range");
  }
  if (constant[static_cast<std::size_t>(column)]) return Vector::Zero(raw.size());
  return (raw.array() - means[column]) / stdevs[column];
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

double parse_field(const std::string& raw, std::size_t row, const std::string& column) {
  const std::string text = trim(raw);
  try {
    std::size_t consumed = 0;
    const double v = std::stod(text, &consumed);
    if (consumed != text.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error("CSV parse error at data row " + std::to_string(row) +
                             ", column '" + column + "': cannot parse '" + text + "'");
  }
}

}  // namespace

LabeledDataset load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_csv: cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("load_csv: '" + path + "' is empty");
  const std::vector<std::string> header = split_line(line);

  Index x_col = -1;
  Index y_col = -1;
  std::vector<Index> z_cols;  // z_cols[k] = file column of z_{k+1}
  for (std::size_t c = 0; c < header.size(); ++c) {
    const std::string name = trim(header[c]);
    if (name == "x") {
      x_col = static_cast<Index>(c);
    } else if (name == "y") {
      y_col = static_cast<Index>(c);
    } else if (name.rfind("z_", 0) == 0) {
      const std::string idx_text = name.substr(2);
      std::size_t consumed = 0;
      long k = 0;
      try {
        k = std::stol(idx_text, &consumed);
      } catch (const std::exception&) {
        throw std::runtime_error("load_csv: malformed z column name '" + name + "'");
      }
      if (consumed != idx_text.size() || k < 1) {
        throw std::runtime_error("load_csv: malformed z column name '" + name + "'");
      }
      if (static_cast<std::size_t>(k) > z_cols.size()) z_cols.resize(static_cast<std::size_t>(k), -1);
      z_cols[static_cast<std::size_t>(k - 1)] = static_cast<Index>(c);
    } else {
      throw std::runtime_error("load_csv: unexpected column '" + name + "'");
    }
  }
  if (x_col < 0) throw std::runtime_error("load_csv: missing column 'x'");
  if (y_col < 0) throw std::runtime_error("load_csv: missing column 'y'");
  if (z_cols.empty()) throw std::runtime_error("load_csv: missing columns z_1..z_p");
  for (std::size_t k = 0; k < z_cols.size(); ++k) {
    if (z_cols[k] < 0) {
      throw std::runtime_error("load_csv: z columns must be contiguous; missing 'z_" +
                               std::to_string(k + 1) + "'");
    }
  }

  std::vector<double> xs;
  std::vector<double> ys;
  std::vector<std::vector<double>> zs;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const std::vector<std::string> fields = split_line(line);
    if (fields.size() != header.size()) {
      throw std::runtime_error("CSV parse error at data row " + std::to_string(row) +
                               ": expected " + std::to_string(header.size()) + " fields, got " +
                               std::to_string(fields.size()));
    }
    xs.push_back(parse_field(fields[static_cast<std::size_t>(x_col)], row, "x"));
    ys.push_back(parse_field(fields[static_cast<std::size_t>(y_col)], row, "y"));
    std::vector<double> zrow(z_cols.size());
    for (std::size_t k = 0; k < z_cols.size(); ++k) {
      zrow[k] = parse_field(fields[static_cast<std::size_t>(z_cols[k])], row,
                            "z_" + std::to_string(k + 1));
    }
    zs.push_back(std::move(zrow));
  }
  if (xs.empty()) throw std::runtime_error("load_csv: '" + path + "' has no data rows");

  LabeledDataset d;
  const Index n = static_cast<Index>(xs.size());
  const Index p = static_cast<Index>(z_cols.size());
  d.x.resize(n);
  d.y.resize(n);
  d.z.resize(n, p);
  for (Index i = 0; i < n; ++i) {
    d.x[i] = xs[static_cast<std::size_t>(i)];
    d.y[i] = ys[static_cast<std::size_t>(i)];
    for (Index j = 0; j < p; ++j) d.z(i, j) = zs[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  }
  d.validate();
  return d;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return std::string(buf);
}

void write_csv(const LabeledDataset& d, const std::string& path) {
  d.validate();
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_csv: cannot open '" + path + "' for writing");
  out << "x,y";
  for (Index j = 0; j < d.z_dim(); ++j) out << ",z_" << (j + 1);
  out << "\n";
  for (Index i = 0; i < d.n_rows(); ++i) {
    out << format_double(d.x[i]) << ',' << format_double(d.y[i]);
    for (Index j = 0; j < d.z_dim(); ++j) out << ',' << format_double(d.z(i, j));
    out << "\n";
  }
  if (!out) throw std::runtime_error("write_csv: write to '" + path + "' failed");
}

}  // namespace diet
