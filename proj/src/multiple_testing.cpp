#include "diet/multiple_testing.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <unordered_set>
#include <utility>

namespace diet {
namespace {

constexpr std::uint64_t kTestsRoot = 1;
constexpr std::uint64_t kSamplersRoot = 2;
constexpr std::uint64_t kSplitStream = 3;

void check_pvalues(const Vector& p_values) {
  if (p_values.size() < 1) throw std::invalid_argument("selection: empty p-value vector");
  if (!p_values.allFinite() || (p_values.array() < 0.0).any() ||
      (p_values.array() > 1.0).any()) {
    throw std::invalid_argument("selection: p-values must lie in [0, 1]");
  }
}

SelectionResult step_up(const Vector& p_values, double alpha, double nominal) {
  const Index d = p_values.size();
  Vector sorted = p_values;
  std::sort(sorted.data(), sorted.data() + d);

  double threshold = -1.0;
  for (Index i = d; i >= 1; --i) {
    if (sorted[i - 1] <= static_cast<double>(i) * alpha / static_cast<double>(d)) {
      threshold = sorted[i - 1];
      break;
    }
  }

  SelectionResult result;
  result.nominal_fdr = nominal;
  if (threshold < 0.0) {
    result.threshold = 0.0;
    return result;
  }
  result.threshold = threshold;
  for (Index j = 0; j < d; ++j) {
    if (p_values[j] <= threshold) result.selected.push_back(j);
  }
  return result;
}

double run_single(const LabeledDataset& d, const ConditionalSampler& sampler,
                  const CvsConfig& config, Index coordinate) {
  const RngStream coord_stream =
      substream(substream(config.crt.stream, kTestsRoot), static_cast<std::uint64_t>(coordinate));
  const CrtConfig crt{config.crt.num_nulls, coord_stream};

  switch (config.method) {
    case TestMethod::kDiet: {
      DietConfig diet_config = config.diet;
      diet_config.crt = crt;
      return diet_test(d, sampler, diet_config).p_value;
    }
    case TestMethod::kD0: {
      CvSpec cv = config.cv;
      cv.rng = substream(config.cv.rng, static_cast<std::uint64_t>(coordinate));
      return d0_crt_test(d, sampler, crt, cv).p_value;
    }
    case TestMethod::kDi: {
      CvSpec cv = config.cv;
      cv.rng = substream(config.cv.rng, static_cast<std::uint64_t>(coordinate));
      return di_crt_test(d, sampler, crt, cv, config.di).p_value;
    }
    case TestMethod::kHrt: {
      HrtConfig hrt = config.hrt;
      hrt.split.shuffle_stream =
          substream(config.hrt.split.shuffle_stream, static_cast<std::uint64_t>(coordinate));
      return hrt_test(d, sampler, crt, hrt).p_value;
    }
  }
  throw std::logic_error("cvs_run: unknown method");
}

LabeledDataset coordinate_dataset(const Matrix& covariates, const Vector& y, Index j) {
  LabeledDataset d;
  d.x = covariates.col(j);
  d.y = y;
  d.z = drop_column(covariates, j);
  return d;
}

void check_cvs_inputs(const Matrix& covariates, const Vector& y) {
  if (covariates.rows() != y.size()) {
    throw std::invalid_argument("cvs_run: covariate rows and response length differ");
  }
  if (covariates.cols() < 2) {
    throw std::invalid_argument("cvs_run: need at least two covariates");
  }
}

}  // namespace

SelectionResult bh_select(const Vector& p_values, double alpha) {
  check_pvalues(p_values);
  if (!(alpha > 0.0) || !(alpha < 1.0)) {
    throw std::invalid_argument("bh_select: alpha must lie in (0, 1)");
  }
  return step_up(p_values, alpha, alpha);
}

SelectionResult by_select(const Vector& p_values, double alpha) {
  check_pvalues(p_values);
  if (!(alpha > 0.0) || !(alpha < 1.0)) {
    throw std::invalid_argument("by_select: alpha must lie in (0, 1)");
  }
  double harmonic = 0.0;
  for (Index i = 1; i <= p_values.size(); ++i) harmonic += 1.0 / static_cast<double>(i);
  return step_up(p_values, alpha / harmonic, alpha);
}

double fdp(const std::vector<Index>& selected, const std::vector<Index>& non_null) {
  const std::unordered_set<Index> truth(non_null.begin(), non_null.end());
  Index false_hits = 0;
  for (const Index j : selected) {
    if (truth.find(j) == truth.end()) ++false_hits;
  }
  return static_cast<double>(false_hits) /
         static_cast<double>(std::max<std::size_t>(1, selected.size()));
}

double power_metric(const std::vector<Index>& selected, const std::vector<Index>& non_null) {
  const std::unordered_set<Index> truth(non_null.begin(), non_null.end());
  Index hits = 0;
  for (const Index j : selected) {
    if (truth.find(j) != truth.end()) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(std::max<std::size_t>(1, non_null.size()));
}

TestMethod parse_test_method(const std::string& name) {
  if (name == "diet") return TestMethod::kDiet;
  if (name == "d0") return TestMethod::kD0;
  if (name == "dI") return TestMethod::kDi;
  if (name == "hrt") return TestMethod::kHrt;
  throw std::invalid_argument("unknown test method '" + name + "' (expected diet, d0, dI, hrt)");
}

std::string to_string(TestMethod method) {
  switch (method) {
    case TestMethod::kDiet: return "diet";
    case TestMethod::kD0: return "d0";
    case TestMethod::kDi: return "dI";
    case TestMethod::kHrt: return "hrt";
  }
  throw std::logic_error("to_string: unknown test method");
}

Matrix drop_column(const Matrix& m, Index column) {
  if (column < 0 || column >= m.cols()) {
    throw std::invalid_argument("drop_column: column out of range");
  }
  Matrix out(m.rows(), m.cols() - 1);
  out.leftCols(column) = m.leftCols(column);
  out.rightCols(m.cols() - 1 - column) = m.rightCols(m.cols() - 1 - column);
  return out;
}

PValueVector cvs_run(const Matrix& covariates, const Vector& y,
                     const std::vector<std::shared_ptr<const ConditionalSampler>>& samplers,
                     const CvsConfig& config) {
  check_cvs_inputs(covariates, y);
  if (static_cast<Index>(samplers.size()) != covariates.cols()) {
    throw std::invalid_argument("cvs_run: one sampler per covariate required");
  }

  PValueVector out;
  out.values.resize(covariates.cols());
  for (Index j = 0; j < covariates.cols(); ++j) {
    if (samplers[static_cast<std::size_t>(j)] == nullptr) {
      throw std::invalid_argument("cvs_run: null sampler at coordinate " + std::to_string(j));
    }
    try {
      out.values[j] = run_single(coordinate_dataset(covariates, y, j),
                                 *samplers[static_cast<std::size_t>(j)], config, j);
    } catch (const std::exception& e) {
      throw std::runtime_error("cvs_run: coordinate " + std::to_string(j) + ": " + e.what());
    }
  }
  return out;
}

PValueVector cvs_run_estimated(const Matrix& covariates, const Vector& y,
                               const SamplerFactory& factory, const CvsConfig& config) {
  check_cvs_inputs(covariates, y);
  if (!factory) throw std::invalid_argument("cvs_run_estimated: empty factory");

  // Split once; estimators may only see the train half.
  LabeledDataset full;
  full.x = covariates.col(0);
  full.y = y;
  full.z = covariates;
  SplitSpec split_spec;
  split_spec.train_fraction = 0.5;
  split_spec.shuffle_stream = substream(config.crt.stream, kSplitStream);
  const TrainTestSplit split = split_train_test(full, split_spec);
  const Matrix& train_covariates = split.train.z;
  const Matrix& test_covariates = split.test.z;

  const RngStream samplers_root = substream(config.crt.stream, kSamplersRoot);
  PValueVector out;
  out.values.resize(covariates.cols());
  for (Index j = 0; j < covariates.cols(); ++j) {
    try {
      const std::shared_ptr<const ConditionalSampler> sampler =
          factory(train_covariates, j, substream(samplers_root, static_cast<std::uint64_t>(j)));
      if (sampler == nullptr) {
        throw std::invalid_argument("factory returned a null sampler");
      }
      out.values[j] =
          run_single(coordinate_dataset(test_covariates, split.test.y, j), *sampler, config, j);
    } catch (const std::exception& e) {
      throw std::runtime_error("cvs_run: coordinate " + std::to_string(j) + ": " + e.what());
    }
  }
  return out;
}

SamplerFactory mdn_sampler_factory(const MdnOptions& options) {
  return [options](const Matrix& train_covariates, Index j,
                   RngStream stream) -> std::shared_ptr<const ConditionalSampler> {
    const Matrix conditioning = drop_column(train_covariates, j);
    auto model =
        std::make_shared<MdnModel>(fit_mdn(conditioning, train_covariates.col(j), options, stream));
    return std::make_shared<CdfConditionalSampler>(std::move(model));
  };
}

}  // namespace diet
