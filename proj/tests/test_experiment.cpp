#include "doctest.h"

#include "diet/experiment.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

using diet::Clock;
using diet::ExperimentConfig;
using diet::Index;
using diet::ResultRow;

namespace {

ExperimentConfig make_config(const char* text) {
  return diet::config_from_json(nlohmann::json::parse(text));
}

// Returns the ConfigError message, or an empty string if parsing succeeded.
std::string config_error(const char* text) {
  try {
    make_config(text);
  } catch (const diet::ConfigError& e) {
    return e.what();
  }
  return {};
}

bool mentions(const std::string& message, const std::string& fragment) {
  return message.find(fragment) != std::string::npos;
}

// Deterministic stand-in for the wall clock: advances one second per call.
Clock ticking_clock() {
  auto ticks = std::make_shared<double>(0.0);
  return [ticks]() { return (*ticks)++; };
}

Clock zero_clock() {
  return []() { return 0.0; };
}

std::string csv_of(const std::vector<ResultRow>& rows) {
  std::ostringstream out;
  diet::write_csv(rows, out);
  return out.str();
}

std::map<std::pair<std::string, double>, double> power_by_cell(
    const std::vector<ResultRow>& rows) {
  std::map<std::pair<std::string, double>, double> cells;
  for (const ResultRow& row : rows) cells[{row.method, row.alpha}] = row.power;
  return cells;
}

constexpr const char* kNullSingleConfig = R"({
  "dgp": {"variant": "univariate_gaussian", "n": 120, "x_weight": 0.0},
  "methods": ["d0"],
  "replicates": 4,
  "num_nulls": 19,
  "alphas": [0.1, 0.5],
  "seed": 7
})";

}  // namespace

TEST_SUITE("experiment") {
  TEST_CASE("config parsing applies defaults and reads every block") {
    const ExperimentConfig minimal = make_config(R"({
      "dgp": {"variant": "univariate_gaussian"},
      "methods": ["diet"],
      "alphas": [0.1]
    })");
    CHECK(minimal.dgp.variant == "univariate_gaussian");
    CHECK(minimal.dgp.n == 500);
    CHECK(minimal.replicates == 100);
    CHECK(minimal.num_nulls == 100);
    CHECK(minimal.seed == 0);
    CHECK(minimal.output.empty());
    CHECK(minimal.format == "csv");
    CHECK(minimal.dependence_bins == 10);
    CHECK_FALSE(minimal.cvs.has_value());

    const ExperimentConfig full = make_config(R"({
      "dgp": {"variant": "mixture_ar_cvs", "n": 200, "coefficient_seed": 5},
      "methods": ["diet", "d0"],
      "replicates": 3,
      "num_nulls": 25,
      "seed": 42,
      "output": "rows.csv",
      "format": "json",
      "bins": 8,
      "mdn": {"components": 4, "hidden_width": 16, "hidden_layers": 2,
              "epochs": 12, "batch_size": 25, "patience": 3,
              "learning_rate": 0.002, "validation_fraction": 0.2},
      "hrt": {"hidden_width": 24, "hidden_layers": 3, "epochs": 9},
      "cvs": {"fdr_alphas": [0.1, 0.2], "sampler": "mdn",
              "d": 12, "non_null_count": 4}
    })");
    CHECK(full.dgp.d == 12);
    CHECK(full.dgp.non_null_count == 4);
    CHECK(full.dgp.coefficient_seed == 5);
    CHECK(full.replicates == 3);
    CHECK(full.num_nulls == 25);
    CHECK(full.seed == 42);
    CHECK(full.output == "rows.csv");
    CHECK(full.format == "json");
    CHECK(full.dependence_bins == 8);
    CHECK(full.mdn.components == 4);
    CHECK(full.mdn.hidden_width == 16);
    CHECK(full.mdn.hidden_layers == 2);
    CHECK(full.mdn.train.epochs == 12);
    CHECK(full.mdn.train.batch_size == 25);
    CHECK(full.mdn.train.patience == 3);
    CHECK(full.mdn.train.adam.learning_rate == doctest::Approx(0.002));
    CHECK(full.mdn.train.validation_fraction == doctest::Approx(0.2));
    CHECK(full.hrt_regressor.hidden_width == 24);
    CHECK(full.hrt_regressor.hidden_layers == 3);
    CHECK(full.hrt_regressor.train.epochs == 9);
    REQUIRE(full.cvs.has_value());
    CHECK(full.cvs->sampler == "mdn");
    CHECK(full.cvs->fdr_alphas == std::vector<double>{0.1, 0.2});
  }

  TEST_CASE("config errors name the offending json path") {
    CHECK(mentions(config_error(R"({"methods": ["d0"], "alphas": [0.1]})"), "/dgp"));
    CHECK(mentions(config_error(R"({
      "dgp": {"variant": "univariate_gaussian"}, "alphas": [0.1]
    })"),
                   "/methods"));
    CHECK(mentions(config_error(R"({
      "dgp": {"variant": "univariate_gaussian", "shape": 2},
      "methods": ["d0"], "alphas": [0.1]
    })"),
                   "/dgp/shape"));
    CHECK(mentions(config_error(R"({
      "dgp": {"variant": "univariate_gaussian"},
      "methods": ["d0"], "alphas": [0.1], "extra": true
    })"),
                   "/extra"));
    CHECK(mentions(config_error(R"({
      "dgp": {"variant": "univariate_gaussian", "n": "many"},
      "methods": ["d0"], "alphas": [0.1]
    })"),
                   "/dgp/n"));
    CHECK(mentions(config_error(R"({
      "dgp": {"variant": "univariate_gaussian"},
      "methods": ["d0"], "alphas": [0.1], "seed": -3
    })"),
                   "/seed"));
    CHECK(mentions(config_error(R"({
      "dgp": {"variant": "univariate_gaussian"},
      "methods": ["d0", "ridge"], "alphas": [0.1]
    })"),
                   "unknown method 'ridge'"));
    CHECK(mentions(config_error(R"({
      "dgp": {"variant": "univariate_gaussian"},
      "methods": ["d0", "d0"], "alphas": [0.1]
    })"),
                   "duplicate method"));
    CHECK(mentions(config_error(R"({
      "dgp": {"variant": "univariate_gaussian"},
      "methods": ["d0"], "alphas": [0.1, 1.5]
    })"),
                   "/alphas/1"));
    CHECK(mentions(config_error(R"({
      "dgp": {"variant": "univariate_gaussian"},
      "methods": ["d0"], "alphas": []
    })"),
                   "/alphas"));
    CHECK(mentions(config_error(R"({
      "dgp": {"variant": "univariate_gaussian"},
      "methods": ["d0"], "alphas": [0.1], "replicates": 0
    })"),
                   "/replicates"));
    CHECK(mentions(config_error(R"({
      "dgp": {"variant": "univariate_gaussian"},
      "methods": ["d0"], "alphas": [0.1], "bins": 1
    })"),
                   "/bins"));
    CHECK(mentions(config_error(R"({
      "dgp": {"variant": "univariate_gaussian"},
      "methods": ["d0"], "alphas": [0.1], "format": "xml"
    })"),
                   "/format"));
    CHECK(mentions(config_error(R"({
      "dgp": {"variant": "univariate_gaussian"},
      "methods": ["d0"], "alphas": [0.1],
      "mdn": {"epochs": 10, "momentum": 0.9}
    })"),
                   "/mdn/momentum"));

    // Method/variant compatibility.
    CHECK(mentions(config_error(R"({
      "dgp": {"variant": "modular_p1"},
      "methods": ["diet_oracle"], "alphas": [0.1]
    })"),
                   "closed-form"));
    CHECK(mentions(config_error(R"({
      "dgp": {"variant": "univariate_gaussian"},
      "methods": ["d0"], "alphas": [0.1],
      "cvs": {"fdr_alphas": [0.2]}
    })"),
                   "/cvs"));
    CHECK(mentions(config_error(R"({
      "dgp": {"variant": "mixture_ar_cvs"},
      "methods": ["d0"], "alphas": [0.1]
    })"),
                   "/dgp/variant"));
    CHECK(mentions(config_error(R"({
      "dgp": {"variant": "mixture_ar_cvs"},
      "methods": ["d0"],
      "cvs": {"fdr_alphas": [0.2], "sampler": "bootstrap"}
    })"),
                   "/cvs/sampler"));
    CHECK(mentions(config_error(R"({
      "dgp": {"variant": "mixture_ar_cvs"},
      "methods": ["diet_oracle"],
      "cvs": {"fdr_alphas": [0.2]}
    })"),
                   "diet_oracle"));

    const std::string message = config_error(R"({"dgp": {"variant": "nope"},
      "methods": ["d0"], "alphas": [0.1]})");
    CHECK(mentions(message, "config error at /dgp"));
    CHECK(mentions(message, "nope"));
  }

  TEST_CASE("configs load from files and missing files are reported") {
    const std::string path = "test_experiment_config.tmp.json";
    {
      std::ofstream out(path);
      out << kNullSingleConfig;
    }
    const ExperimentConfig config = diet::config_from_file(path);
    CHECK(config.dgp.n == 120);
    CHECK(config.methods == std::vector<std::string>{"d0"});
    std::remove(path.c_str());

    CHECK_THROWS_AS(diet::config_from_file("no_such_config.json"), diet::ConfigError);
    {
      std::ofstream out(path);
      out << "{not json";
    }
    CHECK_THROWS_AS(diet::config_from_file(path), diet::ConfigError);
    std::remove(path.c_str());
  }

  TEST_CASE("single mode aggregates rejection fractions per level") {
    const ExperimentConfig config = make_config(kNullSingleConfig);
    const std::vector<ResultRow> rows = diet::run_experiment(config, 1, ticking_clock());
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].method == "d0");
    CHECK(rows[0].alpha == 0.1);
    CHECK(rows[1].alpha == 0.5);
    for (const ResultRow& row : rows) {
      CHECK(row.replicates == 4);
      CHECK_FALSE(row.fdp_mean.has_value());
      CHECK(row.power >= 0.0);
      CHECK(row.power <= 1.0);
      // Rejection counts are integers out of four replicates.
      CHECK(row.power * 4.0 == doctest::Approx(std::round(row.power * 4.0)));
      // One fake-clock second per replicate, summed across the four.
      CHECK(row.wall_time_s == 4.0);
    }
    // Power is monotone in the level.
    CHECK(rows[0].power <= rows[1].power);
  }

  TEST_CASE("reruns reproduce the output byte for byte") {
    const char* text = R"({
      "dgp": {"variant": "univariate_gaussian", "n": 80, "x_weight": 1.0},
      "methods": ["d0", "dI"],
      "replicates": 2,
      "num_nulls": 9,
      "alphas": [0.5, 0.1],
      "seed": 3
    })";
    const std::string first = csv_of(diet::run_experiment(make_config(text), 1, ticking_clock()));
    const std::string second = csv_of(diet::run_experiment(make_config(text), 1, ticking_clock()));
    CHECK(first == second);
    CHECK(mentions(first, "method,alpha,power,fdp_mean,replicates,wall_time_s\n"));
    // Rows follow the config's method and level order.
    CHECK(mentions(first, "\nd0,0.5,"));
    const std::vector<ResultRow> rows = diet::run_experiment(make_config(text), 1, zero_clock());
    REQUIRE(rows.size() == 4);
    CHECK(rows[0].alpha == 0.5);
    CHECK(rows[2].method == "dI");
  }

  TEST_CASE("results are invariant to worker count and method order") {
    const char* forward = R"({
      "dgp": {"variant": "univariate_gaussian", "n": 80, "x_weight": 1.0},
      "methods": ["d0", "dI"],
      "replicates": 3,
      "num_nulls": 9,
      "alphas": [0.2],
      "seed": 21
    })";
    const char* reversed = R"({
      "dgp": {"variant": "univariate_gaussian", "n": 80, "x_weight": 1.0},
      "methods": ["dI", "d0"],
      "replicates": 3,
      "num_nulls": 9,
      "alphas": [0.2],
      "seed": 21
    })";
    const auto serial = power_by_cell(diet::run_experiment(make_config(forward), 1, zero_clock()));
    const auto pooled =
        power_by_cell(diet::run_experiment(make_config(forward), 2, zero_clock()));
    const auto reordered =
        power_by_cell(diet::run_experiment(make_config(reversed), 2, zero_clock()));
    CHECK(serial == pooled);
    CHECK(serial == reordered);
  }

  TEST_CASE("selection mode reports fdp and power against the ground truth") {
    const char* text = R"({
      "dgp": {"variant": "mixture_ar_cvs", "n": 150},
      "methods": ["d0"],
      "replicates": 2,
      "num_nulls": 19,
      "seed": 11,
      "cvs": {"fdr_alphas": [0.2, 0.5], "sampler": "oracle",
              "d": 6, "non_null_count": 2}
    })";
    const std::vector<ResultRow> rows = diet::run_experiment(make_config(text), 1, zero_clock());
    REQUIRE(rows.size() == 2);
    for (const ResultRow& row : rows) {
      REQUIRE(row.fdp_mean.has_value());
      CHECK(*row.fdp_mean <= 0.5);
      CHECK(row.power >= 0.5);  // two strong signals out of six coordinates
      CHECK(row.replicates == 2);
    }
    const std::string csv = csv_of(rows);
    CHECK(mentions(csv, "\nd0,0.2,"));
    // The fdp column is populated in selection mode.
    CHECK_FALSE(mentions(csv, ",,2,"));
    CHECK(csv == csv_of(diet::run_experiment(make_config(text), 1, zero_clock())));
  }

  TEST_CASE("replicate failures carry the replicate index") {
    const ExperimentConfig config = make_config(R"({
      "dgp": {"variant": "univariate_gaussian", "n": 3},
      "methods": ["d0"],
      "replicates": 1,
      "num_nulls": 5,
      "alphas": [0.1]
    })");
    try {
      diet::run_experiment(config);
      FAIL("expected the lasso fold check to fail");
    } catch (const std::runtime_error& e) {
      CHECK(mentions(e.what(), "replicate 0:"));
      CHECK(mentions(e.what(), "lasso_cv"));
    }
    CHECK_THROWS_AS(diet::run_experiment(config, 0), std::invalid_argument);
  }

  TEST_CASE("result rows round trip through json and csv stays stable") {
    std::vector<ResultRow> rows(2);
    rows[0].method = "diet";
    rows[0].alpha = 0.1;
    rows[0].power = 0.625;
    rows[0].replicates = 16;
    rows[0].wall_time_s = 1.25;
    rows[1].method = "hrt";
    rows[1].alpha = 0.2;
    rows[1].power = 0.5;
    rows[1].fdp_mean = 0.125;
    rows[1].replicates = 16;
    rows[1].wall_time_s = 2.5;

    std::ostringstream json_out;
    diet::write_json(rows, json_out);
    const std::vector<ResultRow> parsed =
        diet::rows_from_json(nlohmann::json::parse(json_out.str()));
    REQUIRE(parsed.size() == rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      CHECK(parsed[i].method == rows[i].method);
      CHECK(parsed[i].alpha == rows[i].alpha);
      CHECK(parsed[i].power == rows[i].power);
      CHECK(parsed[i].fdp_mean == rows[i].fdp_mean);
      CHECK(parsed[i].replicates == rows[i].replicates);
      CHECK(parsed[i].wall_time_s == rows[i].wall_time_s);
    }

    CHECK(csv_of({}) == "method,alpha,power,fdp_mean,replicates,wall_time_s\n");
    CHECK(csv_of(rows) ==
          "method,alpha,power,fdp_mean,replicates,wall_time_s\n"
          "diet,0.1,0.625,,16,1.25\n"
          "hrt,0.2,0.5,0.125,16,2.5\n");
    CHECK_THROWS_AS(diet::rows_from_json(nlohmann::json::object()), std::invalid_argument);
  }

  TEST_CASE("network fits stay within the per-method budget") {
    const char* text = R"({
      "dgp": {"variant": "univariate_gaussian", "n": 120, "x_weight": 1.0},
      "methods": ["diet", "diet_oracle", "hrt"],
      "replicates": 1,
      "num_nulls": 9,
      "alphas": [0.5],
      "seed": 2,
      "mdn": {"components": 3, "hidden_width": 12, "hidden_layers": 2,
              "epochs": 15, "batch_size": 40, "patience": 5},
      "hrt": {"hidden_width": 12, "hidden_layers": 2, "epochs": 15, "batch_size": 40}
    })";
    diet::nn::reset_fit_count();
    const std::vector<ResultRow> rows = diet::run_experiment(make_config(text), 1, zero_clock());
    // Two residual models for diet plus one regressor per hrt half; the
    // oracle run and all null evaluations reuse frozen fits.
    CHECK(diet::nn::fit_count() == 4);
    REQUIRE(rows.size() == 3);
    CHECK(rows[1].method == "diet_oracle");
    // A unit covariate weight is an easy catch for the oracle residual test.
    CHECK(rows[1].power == 1.0);
  }
}
