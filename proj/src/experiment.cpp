#include "diet/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <fstream>
#include <ostream>
#include <thread>
#include <unordered_set>

namespace diet {

namespace {

// Stream words under the run root {seed, 0}.
constexpr std::uint64_t kDataRoot = 1;
constexpr std::uint64_t kMethodRootBase = 2;
// Words derived from a per-method replicate stream.  They sit far above the
// kFirstNull + m null-draw ids, so no practical M collides with them.
constexpr std::uint64_t kCvWord = std::uint64_t{1} << 40;
constexpr std::uint64_t kSplitWord = (std::uint64_t{1} << 40) + 1;

[[noreturn]] void config_fail(const std::string& path, const std::string& message) {
  throw ConfigError("config error at " + path + ": " + message);
}

void check_keys(const nlohmann::json& obj, const std::string& path,
                std::initializer_list<const char*> allowed) {
  for (const auto& item : obj.items()) {
    if (std::find_if(allowed.begin(), allowed.end(),
                     [&](const char* key) { return item.key() == key; }) == allowed.end()) {
      config_fail(path + "/" + item.key(), "unknown field");
    }
  }
}

const nlohmann::json* find(const nlohmann::json& obj, const char* key) {
  const auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

double read_double(const nlohmann::json& v, const std::string& path) {
  if (!v.is_number()) config_fail(path, "expected a number");
  return v.get<double>();
}

Index read_index(const nlohmann::json& v, const std::string& path) {
  if (!v.is_number_integer() && !v.is_number_unsigned()) config_fail(path, "expected an integer");
  return v.get<Index>();
}

std::uint64_t read_u64(const nlohmann::json& v, const std::string& path) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return v.get<std::uint64_t>();
  config_fail(path, "expected a non-negative integer");
}

std::string read_string(const nlohmann::json& v, const std::string& path) {
  if (!v.is_string()) config_fail(path, "expected a string");
  return v.get<std::string>();
}

std::vector<double> read_double_array(const nlohmann::json& v, const std::string& path) {
  if (!v.is_array()) config_fail(path, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out.push_back(read_double(v[i], path + "/" + std::to_string(i)));
  }
  return out;
}

void parse_train_config(const nlohmann::json& obj, const std::string& path,
                        nn::TrainConfig* train) {
  if (const auto* v = find(obj, "epochs")) train->epochs = read_index(*v, path + "/epochs");
  if (const auto* v = find(obj, "batch_size")) {
    train->batch_size = read_index(*v, path + "/batch_size");
  }
  if (const auto* v = find(obj, "patience")) train->patience = read_index(*v, path + "/patience");
  if (const auto* v = find(obj, "learning_rate")) {
    train->adam.learning_rate = read_double(*v, path + "/learning_rate");
  }
  if (const auto* v = find(obj, "validation_fraction")) {
    train->validation_fraction = read_double(*v, path + "/validation_fraction");
  }
}

MdnOptions parse_mdn(const nlohmann::json& obj, const std::string& path) {
  if (!obj.is_object()) config_fail(path, "expected an object");
  check_keys(obj, path,
             {"components", "hidden_width", "hidden_layers", "epochs", "batch_size", "patience",
              "learning_rate", "validation_fraction"});
  MdnOptions options;
  if (const auto* v = find(obj, "components")) {
    options.components = read_index(*v, path + "/components");
  }
  if (const auto* v = find(obj, "hidden_width")) {
    options.hidden_width = read_index(*v, path + "/hidden_width");
  }
  if (const auto* v = find(obj, "hidden_layers")) {
    options.hidden_layers = read_index(*v, path + "/hidden_layers");
  }
  parse_train_config(obj, path, &options.train);
  return options;
}

NetRegressorOptions parse_regressor(const nlohmann::json& obj, const std::string& path) {
  if (!obj.is_object()) config_fail(path, "expected an object");
  check_keys(obj, path,
             {"hidden_width", "hidden_layers", "epochs", "batch_size", "patience",
              "learning_rate", "validation_fraction"});
  NetRegressorOptions options;
  if (const auto* v = find(obj, "hidden_width")) {
    options.hidden_width = read_index(*v, path + "/hidden_width");
  }
  if (const auto* v = find(obj, "hidden_layers")) {
    options.hidden_layers = read_index(*v, path + "/hidden_layers");
  }
  parse_train_config(obj, path, &options.train);
  return options;
}

DgpSpec parse_dgp(const nlohmann::json& obj, const std::string& path) {
  if (!obj.is_object()) config_fail(path, "expected an object");
  check_keys(obj, path,
             {"variant", "n", "d", "x_weight", "sigma_x", "beta1", "noise_correlation",
              "non_null_count", "coefficient_seed"});
  DgpSpec spec;
  const auto* variant = find(obj, "variant");
  if (variant == nullptr) config_fail(path + "/variant", "required field is missing");
  spec.variant = read_string(*variant, path + "/variant");
  if (const auto* v = find(obj, "n")) spec.n = read_index(*v, path + "/n");
  if (const auto* v = find(obj, "d")) spec.d = read_index(*v, path + "/d");
  if (const auto* v = find(obj, "x_weight")) spec.x_weight = read_double(*v, path + "/x_weight");
  if (const auto* v = find(obj, "sigma_x")) spec.sigma_x = read_double(*v, path + "/sigma_x");
  if (const auto* v = find(obj, "beta1")) spec.beta1 = read_double(*v, path + "/beta1");
  if (const auto* v = find(obj, "noise_correlation")) {
    spec.noise_correlation = read_double(*v, path + "/noise_correlation");
  }
  if (const auto* v = find(obj, "non_null_count")) {
    spec.non_null_count = read_index(*v, path + "/non_null_count");
  }
  if (const auto* v = find(obj, "coefficient_seed")) {
    spec.coefficient_seed = read_u64(*v, path + "/coefficient_seed");
  }
  return spec;
}

void check_positive(Index value, const std::string& path) {
  if (value < 1) config_fail(path, "must be at least 1");
}

void check_alpha_grid(const std::vector<double>& alphas, const std::string& path) {
  if (alphas.empty()) config_fail(path, "at least one level required");
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    if (!(alphas[i] > 0.0) || !(alphas[i] < 1.0)) {
      config_fail(path + "/" + std::to_string(i), "levels must lie in (0, 1)");
    }
  }
}

void check_net_options(Index width, Index layers, const nn::TrainConfig& train,
                       const std::string& path) {
  check_positive(width, path + "/hidden_width");
  check_positive(layers, path + "/hidden_layers");
  check_positive(train.epochs, path + "/epochs");
  check_positive(train.batch_size, path + "/batch_size");
  if (!(train.adam.learning_rate > 0.0)) config_fail(path + "/learning_rate", "must be positive");
  if (train.validation_fraction < 0.0 || train.validation_fraction > 0.9) {
    config_fail(path + "/validation_fraction", "must lie in [0, 0.9]");
  }
}

Index canonical_method_index(const std::string& name) {
  const auto& names = experiment_methods();
  const auto it = std::find(names.begin(), names.end(), name);
  return static_cast<Index>(it - names.begin());
}

RngStream method_stream(const ExperimentConfig& config, const std::string& method, Index r) {
  const RngStream root{config.seed, 0};
  const std::uint64_t word =
      kMethodRootBase + static_cast<std::uint64_t>(canonical_method_index(method));
  return substream(substream(root, word), static_cast<std::uint64_t>(r));
}

RngStream data_stream(const ExperimentConfig& config, Index r) {
  return substream(substream(RngStream{config.seed, 0}, kDataRoot),
                   static_cast<std::uint64_t>(r));
}

// Per-replicate, per-method measurements, aggregated after the pool joins.
struct MethodOutcome {
  double p_value = 1.0;            // single-hypothesis mode
  std::vector<double> fdp;         // selection mode, per fdr alpha
  std::vector<double> power;       // selection mode, per fdr alpha
  double seconds = 0.0;
};

struct ReplicateOutcome {
  std::vector<MethodOutcome> per_method;  // config order
  std::string error;
};

double run_single_method(const std::string& name, const DgpSample& sample,
                         const ExperimentConfig& config, RngStream stream) {
  const CrtConfig crt{config.num_nulls, stream};
  if (name == "diet") {
    DietConfig diet_config;
    diet_config.mdn = config.mdn;
    diet_config.bins = static_cast<int>(config.dependence_bins);
    diet_config.crt = crt;
    return diet_test(sample.data, *sample.x_sampler, diet_config).p_value;
  }
  if (name == "diet_oracle") {
    if (!sample.x_cdf || !sample.y_cdf) {
      throw std::runtime_error(
          "diet_oracle requires closed-form conditional laws, which this variant lacks");
    }
    const auto statistic =
        make_dependence_statistic("ami", static_cast<int>(config.dependence_bins));
    return diet_test_with_models(sample.data, *sample.x_sampler, *sample.x_cdf, *sample.y_cdf,
                                 *statistic, crt)
        .p_value;
  }
  if (name == "d0" || name == "dI") {
    CvSpec cv;
    cv.rng = substream(stream, kCvWord);
    if (name == "d0") return d0_crt_test(sample.data, *sample.x_sampler, crt, cv).p_value;
    return di_crt_test(sample.data, *sample.x_sampler, crt, cv, DiConfig{}).p_value;
  }
  HrtConfig hrt;
  hrt.split.shuffle_stream = substream(stream, kSplitWord);
  hrt.regressor = config.hrt_regressor;
  hrt.density = config.mdn;
  return hrt_test(sample.data, *sample.x_sampler, crt, hrt).p_value;
}

ReplicateOutcome run_replicate(const ExperimentConfig& config, Index r, const Clock& clock) {
  ReplicateOutcome outcome;
  outcome.per_method.resize(config.methods.size());

  if (config.cvs.has_value()) {
    const CvsSample sample = sample_dgp_cvs(config.dgp, data_stream(config, r));
    for (std::size_t m = 0; m < config.methods.size(); ++m) {
      const std::string& name = config.methods[m];
      MethodOutcome& method_outcome = outcome.per_method[m];
      const double start = clock();

      CvsConfig cvs_config;
      cvs_config.method = parse_test_method(name);
      cvs_config.crt = CrtConfig{config.num_nulls, method_stream(config, name, r)};
      cvs_config.diet.mdn = config.mdn;
      cvs_config.diet.bins = static_cast<int>(config.dependence_bins);
      cvs_config.cv.rng = substream(cvs_config.crt.stream, kCvWord);
      cvs_config.hrt.split.shuffle_stream = substream(cvs_config.crt.stream, kSplitWord);
      cvs_config.hrt.regressor = config.hrt_regressor;
      cvs_config.hrt.density = config.mdn;

      const PValueVector p_values =
          config.cvs->sampler == "oracle"
              ? cvs_run(sample.covariates, sample.y, sample.truth.samplers, cvs_config)
              : cvs_run_estimated(sample.covariates, sample.y, mdn_sampler_factory(config.mdn),
                                  cvs_config);

      for (const double alpha : config.cvs->fdr_alphas) {
        const SelectionResult selection = bh_select(p_values.values, alpha);
        method_outcome.fdp.push_back(fdp(selection.selected, sample.truth.non_null));
        method_outcome.power.push_back(power_metric(selection.selected, sample.truth.non_null));
      }
      method_outcome.seconds = clock() - start;
    }
    return outcome;
  }

  const DgpSample sample = sample_dgp(config.dgp, data_stream(config, r));
  for (std::size_t m = 0; m < config.methods.size(); ++m) {
    const std::string& name = config.methods[m];
    const double start = clock();
    outcome.per_method[m].p_value =
        run_single_method(name, sample, config, method_stream(config, name, r));
    outcome.per_method[m].seconds = clock() - start;
  }
  return outcome;
}

std::string format_number(double v) { return nlohmann::json(v).dump(); }

}  // namespace

const std::vector<std::string>& experiment_methods() {
  static const std::vector<std::string> names = {"diet", "diet_oracle", "d0", "dI", "hrt"};
  return names;
}

bool variant_has_oracle_cdfs(const std::string& variant) {
  return variant == "univariate_gaussian" || variant == "multiplicative" ||
         variant == "di_counterexample" || variant == "additive_generic";
}

void ExperimentConfig::validate() const {
  try {
    dgp.validate();
  } catch (const std::invalid_argument& e) {
    config_fail("/dgp", e.what());
  }

  if (methods.empty()) config_fail("/methods", "at least one method required");
  std::unordered_set<std::string> seen;
  for (const std::string& name : methods) {
    const auto& names = experiment_methods();
    if (std::find(names.begin(), names.end(), name) == names.end()) {
      config_fail("/methods", "unknown method '" + name + "'");
    }
    if (!seen.insert(name).second) config_fail("/methods", "duplicate method '" + name + "'");
  }

  check_positive(replicates, "/replicates");
  check_positive(num_nulls, "/num_nulls");
  if (dependence_bins < 2) config_fail("/bins", "must be at least 2");
  if (format != "csv" && format != "json") config_fail("/format", "expected \"csv\" or \"json\"");

  check_net_options(mdn.hidden_width, mdn.hidden_layers, mdn.train, "/mdn");
  check_positive(mdn.components, "/mdn/components");
  check_net_options(hrt_regressor.hidden_width, hrt_regressor.hidden_layers,
                    hrt_regressor.train, "/hrt");

  if (cvs.has_value()) {
    if (!dgp_is_cvs(dgp.variant)) {
      config_fail("/cvs", "variant '" + dgp.variant + "' is not a variable-selection process");
    }
    check_alpha_grid(cvs->fdr_alphas, "/cvs/fdr_alphas");
    if (cvs->sampler != "oracle" && cvs->sampler != "mdn") {
      config_fail("/cvs/sampler", "expected \"oracle\" or \"mdn\"");
    }
    for (const std::string& name : methods) {
      if (name == "diet_oracle") {
        config_fail("/methods", "diet_oracle is not available in variable-selection mode");
      }
    }
  } else {
    if (dgp_is_cvs(dgp.variant)) {
      config_fail("/dgp/variant",
                  "variant '" + dgp.variant + "' needs a cvs block to define the selection run");
    }
    check_alpha_grid(alphas, "/alphas");
    for (const std::string& name : methods) {
      if (name == "diet_oracle" && !variant_has_oracle_cdfs(dgp.variant)) {
        config_fail("/methods", "diet_oracle needs a variant with closed-form conditional laws");
      }
    }
  }
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) config_fail("/", "expected a JSON object");
  check_keys(j, "",
             {"dgp", "methods", "replicates", "num_nulls", "alphas", "seed", "output", "format",
              "bins", "mdn", "hrt", "cvs"});

  ExperimentConfig config;
  const auto* dgp = find(j, "dgp");
  if (dgp == nullptr) config_fail("/dgp", "required field is missing");
  config.dgp = parse_dgp(*dgp, "/dgp");

  const auto* methods = find(j, "methods");
  if (methods == nullptr) config_fail("/methods", "required field is missing");
  if (!methods->is_array()) config_fail("/methods", "expected an array of method names");
  for (std::size_t i = 0; i < methods->size(); ++i) {
    config.methods.push_back(read_string((*methods)[i], "/methods/" + std::to_string(i)));
  }

  if (const auto* v = find(j, "replicates")) config.replicates = read_index(*v, "/replicates");
  if (const auto* v = find(j, "num_nulls")) config.num_nulls = read_index(*v, "/num_nulls");
  if (const auto* v = find(j, "alphas")) config.alphas = read_double_array(*v, "/alphas");
  if (const auto* v = find(j, "seed")) config.seed = read_u64(*v, "/seed");
  if (const auto* v = find(j, "output")) config.output = read_string(*v, "/output");
  if (const auto* v = find(j, "format")) config.format = read_string(*v, "/format");
  if (const auto* v = find(j, "bins")) config.dependence_bins = read_index(*v, "/bins");
  if (const auto* v = find(j, "mdn")) config.mdn = parse_mdn(*v, "/mdn");
  if (const auto* v = find(j, "hrt")) config.hrt_regressor = parse_regressor(*v, "/hrt");

  if (const auto* v = find(j, "cvs")) {
    if (!v->is_object()) config_fail("/cvs", "expected an object");
    check_keys(*v, "/cvs", {"fdr_alphas", "sampler", "d", "non_null_count"});
    CvsSettings settings;
    const auto* fdr_alphas = find(*v, "fdr_alphas");
    if (fdr_alphas == nullptr) config_fail("/cvs/fdr_alphas", "required field is missing");
    settings.fdr_alphas = read_double_array(*fdr_alphas, "/cvs/fdr_alphas");
    if (const auto* s = find(*v, "sampler")) settings.sampler = read_string(*s, "/cvs/sampler");
    if (const auto* d = find(*v, "d")) config.dgp.d = read_index(*d, "/cvs/d");
    if (const auto* c = find(*v, "non_null_count")) {
      config.dgp.non_null_count = read_index(*c, "/cvs/non_null_count");
    }
    config.cvs = std::move(settings);
  }

  config.validate();
  return config;
}

ExperimentConfig config_from_file(const std::string& path) {
  std::ifstream file(path);
  if (!file) throw ConfigError("config error: cannot open '" + path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(file);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config error: ") + e.what());
  }
  return config_from_json(j);
}

std::vector<ResultRow> run_experiment(const ExperimentConfig& config, Index threads,
                                      Clock clock) {
  config.validate();
  if (threads < 1) throw std::invalid_argument("run_experiment: threads must be at least 1");
  if (!clock) {
    clock = []() {
      return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
          .count();
    };
  }

  const Index R = config.replicates;
  std::vector<ReplicateOutcome> outcomes(static_cast<std::size_t>(R));
  std::atomic<Index> next{0};
  std::atomic<bool> failed{false};

  const auto worker = [&]() {
    while (!failed.load(std::memory_order_relaxed)) {
      const Index r = next.fetch_add(1, std::memory_order_relaxed);
      if (r >= R) break;
      auto& slot = outcomes[static_cast<std::size_t>(r)];
      try {
        slot = run_replicate(config, r, clock);
      } catch (const std::exception& e) {
        slot.error = e.what();
        failed.store(true, std::memory_order_relaxed);
      }
    }
  };

  if (threads == 1 || R == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    const Index workers = std::min<Index>(threads, R);
    pool.reserve(static_cast<std::size_t>(workers));
    for (Index t = 0; t < workers; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }

  for (Index r = 0; r < R; ++r) {
    const std::string& error = outcomes[static_cast<std::size_t>(r)].error;
    if (!error.empty()) {
      throw std::runtime_error("replicate " + std::to_string(r) + ": " + error);
    }
  }

  std::vector<ResultRow> rows;
  const std::vector<double>& levels =
      config.cvs.has_value() ? config.cvs->fdr_alphas : config.alphas;
  for (std::size_t m = 0; m < config.methods.size(); ++m) {
    double seconds = 0.0;
    for (Index r = 0; r < R; ++r) {
      seconds += outcomes[static_cast<std::size_t>(r)].per_method[m].seconds;
    }
    for (std::size_t a = 0; a < levels.size(); ++a) {
      ResultRow row;
      row.method = config.methods[m];
      row.alpha = levels[a];
      row.replicates = R;
      row.wall_time_s = seconds;
      if (config.cvs.has_value()) {
        double power_sum = 0.0, fdp_sum = 0.0;
        for (Index r = 0; r < R; ++r) {
          const MethodOutcome& outcome = outcomes[static_cast<std::size_t>(r)].per_method[m];
          power_sum += outcome.power[a];
          fdp_sum += outcome.fdp[a];
        }
        row.power = power_sum / static_cast<double>(R);
        row.fdp_mean = fdp_sum / static_cast<double>(R);
      } else {
        Index rejections = 0;
        for (Index r = 0; r < R; ++r) {
          if (outcomes[static_cast<std::size_t>(r)].per_method[m].p_value <= levels[a]) {
            ++rejections;
          }
        }
        row.power = static_cast<double>(rejections) / static_cast<double>(R);
      }
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

void write_csv(const std::vector<ResultRow>& rows, std::ostream& out) {
  out << "method,alpha,power,fdp_mean,replicates,wall_time_s\n";
  for (const ResultRow& row : rows) {
    out << row.method << ',' << format_number(row.alpha) << ',' << format_number(row.power)
        << ',' << (row.fdp_mean.has_value() ? format_number(*row.fdp_mean) : std::string())
        << ',' << row.replicates << ',' << format_number(row.wall_time_s) << '\n';
  }
}

void write_json(const std::vector<ResultRow>& rows, std::ostream& out) {
  nlohmann::json array = nlohmann::json::array();
  for (const ResultRow& row : rows) {
    nlohmann::json object;
    object["method"] = row.method;
    object["alpha"] = row.alpha;
    object["power"] = row.power;
    object["fdp_mean"] = row.fdp_mean.has_value() ? nlohmann::json(*row.fdp_mean)
                                                  : nlohmann::json(nullptr);
    object["replicates"] = row.replicates;
    object["wall_time_s"] = row.wall_time_s;
    array.push_back(std::move(object));
  }
  out << array.dump(2) << '\n';
}

std::vector<ResultRow> rows_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw std::invalid_argument("rows_from_json: expected an array");
  std::vector<ResultRow> rows;
  for (const nlohmann::json& object : j) {
    ResultRow row;
    row.method = object.at("method").get<std::string>();
    row.alpha = object.at("alpha").get<double>();
    row.power = object.at("power").get<double>();
    if (!object.at("fdp_mean").is_null()) row.fdp_mean = object.at("fdp_mean").get<double>();
    row.replicates = object.at("replicates").get<Index>();
    row.wall_time_s = object.at("wall_time_s").get<double>();
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace diet
