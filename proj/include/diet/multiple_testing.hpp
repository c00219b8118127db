#pragma once

// FDR-controlled selection over per-coordinate conditional independence
// tests.  bh_select / by_select implement the step-up procedures; cvs_run
// produces the p-value vector they consume by testing x_j independent-of y
// given x_{-j} for every coordinate j.
//
// Stream discipline: from the master stream s = config.crt.stream the
// driver derives tests_root = substream(s, 1), samplers_root =
// substream(s, 2) and split_stream = substream(s, 3); coordinate j then
// runs its test from substream(tests_root, j) (and, on the estimated path,
// fits its sampler from substream(samplers_root, j)).  Results are
// independent of evaluation order.
//
// Data hygiene: with oracle samplers all rows are used.  When samplers are
// estimated from the same data (cvs_run_estimated), rows are split 50/50;
// estimators see only the train half and p-values come from the test half.

#include "diet/baselines.hpp"
#include "diet/crt.hpp"

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace diet {

struct PValueVector {
  Vector values;            // one per coordinate, in [0, 1]
  std::vector<bool> labels;  // optional ground truth (true = non-null); empty if unknown
};

struct SelectionResult {
  std::vector<Index> selected;  // ascending coordinate indices
  double threshold = 0.0;       // largest selected p-value (0 when empty)
  double nominal_fdr = 0.0;     // the alpha the procedure was run at
};

/// Benjamini-Hochberg step-up: largest i with p_(i) <= i*alpha/d; selects
/// every coordinate with p <= p_(i).
SelectionResult bh_select(const Vector& p_values, double alpha);

/// Benjamini-Yekutieli: BH run at alpha / H_d, H_d = sum_{i<=d} 1/i.
SelectionResult by_select(const Vector& p_values, double alpha);

/// |selected ∩ nulls| / max(1, |selected|).
double fdp(const std::vector<Index>& selected, const std::vector<Index>& non_null);

/// |selected ∩ non-nulls| / max(1, |non-nulls|).
double power_metric(const std::vector<Index>& selected, const std::vector<Index>& non_null);

enum class TestMethod { kDiet, kD0, kDi, kHrt };

/// Parses "diet", "d0", "dI", "hrt" (exact spellings).
TestMethod parse_test_method(const std::string& name);
std::string to_string(TestMethod method);

struct CvsConfig {
  TestMethod method = TestMethod::kDiet;
  CrtConfig crt;    // null count and the master stream
  DietConfig diet;  // its crt field is ignored (the driver supplies it)
  CvSpec cv;        // d0/dI distillation folds; rng re-derived per coordinate
  DiConfig di;
  HrtConfig hrt;    // split stream re-derived per coordinate
};

/// One p-value per column of `covariates`, testing that column against the
/// response given all other columns.  samplers[j] must model
/// p(x_j | x_{-j}) exactly (oracle path: no data splitting).
PValueVector cvs_run(const Matrix& covariates, const Vector& y,
                     const std::vector<std::shared_ptr<const ConditionalSampler>>& samplers,
                     const CvsConfig& config);

/// Builds the sampler for coordinate j from training rows (full covariate
/// matrix of the train half; the factory drops column j itself).
using SamplerFactory = std::function<std::shared_ptr<const ConditionalSampler>(
    const Matrix& train_covariates, Index j, RngStream stream)>;

/// Estimated-sampler path: rows are split 50/50, factories fit on the train
/// half, and every p-value is computed on the held-out half.
PValueVector cvs_run_estimated(const Matrix& covariates, const Vector& y,
                               const SamplerFactory& factory, const CvsConfig& config);

/// Factory fitting a mixture density network for x_j | x_{-j}.
SamplerFactory mdn_sampler_factory(const MdnOptions& options);

/// Covariate matrix with column j removed (helper shared with tests).
Matrix drop_column(const Matrix& m, Index column);

}  // namespace diet
