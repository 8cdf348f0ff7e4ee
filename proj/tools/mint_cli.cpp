#include "mint/error.hpp"
#include "mint/harness.hpp"
#include "mint/parallel.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace {

using nlohmann::json;

struct GlobalFlags {
  std::uint64_t seed = 0;
  double alpha = 0.05;
  int resamples = 1000;
  std::string method = "mint";
  bool no_bootstrap = false;
  std::string output;
  int threads = 1;

  CLI::Option* seed_opt = nullptr;
  CLI::Option* alpha_opt = nullptr;
  CLI::Option* resamples_opt = nullptr;
  CLI::Option* method_opt = nullptr;

  int worker_count() const { return threads <= 0 ? mint::hardware_threads() : threads; }

  mint::TestMethod test_method() const {
    auto m = mint::parse_test_method(method);
    if (no_bootstrap && m == mint::TestMethod::mint) m = mint::TestMethod::mint_no_bootstrap;
    return m;
  }
};

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw mint::ValidationError("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw mint::ValidationError("'" + path + "' is not valid JSON: " + e.what());
  }
}

// Writes to --output when given, stdout otherwise.
template <class Writer>
void emit(const std::string& output, Writer&& write) {
  if (output.empty() || output == "-") {
    write(std::cout);
    std::cout.flush();
    return;
  }
  std::ofstream out(output, std::ios::binary);
  if (!out) throw mint::ValidationError("cannot write '" + output + "'");
  write(out);
}

json truth_json(const mint::GroundTruth& truth) {
  json j{{"confounded", truth.confounded},
         {"varied", truth.varied},
         {"unmeasured_confounders", truth.unmeasured_confounders}};
  if (!truth.confounder_columns.empty()) {
    j["confounder_columns"] = truth.confounder_columns;
    j["observed_columns"] = truth.observed_columns;
  }
  return j;
}

void write_truth(const std::string& path, const mint::GroundTruth& truth) {
  if (path.empty()) return;
  std::ofstream out(path);
  if (!out) throw mint::ValidationError("cannot write '" + path + "'");
  out << truth_json(truth).dump(2) << '\n';
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');)
    if (!item.empty()) out.push_back(item);
  return out;
}

struct WorkingModelFlags {
  int degree = 1;
  int psi_degree = 0;
  int phi_degree = 0;
  bool interactions = false;
  bool square = false;
  std::string variant = "full_interaction";
  std::string kernel = "linear";
  std::string bandwidth = "median";
  double lambda = 1e-3;

  void add_to(CLI::App* app) {
    app->add_option("--degree", degree, "Polynomial degree of both working models")->check(CLI::PositiveNumber);
    app->add_option("--psi-degree", psi_degree, "Treatment-model degree (overrides --degree)");
    app->add_option("--phi-degree", phi_degree, "Outcome-model degree (overrides --degree)");
    app->add_flag("--interactions", interactions, "Add A*X terms to the outcome model");
    app->add_flag("--square", square, "Add A^2 to the outcome model");
    app->add_option("--variant", variant, "Transportability variant")
        ->check(CLI::IsMember({"full_interaction", "intercept_shift"}));
    app->add_option("--kernel", kernel, "Kernel for kernel_mint")->check(CLI::IsMember({"linear", "rbf"}));
    app->add_option("--bandwidth", bandwidth, "RBF bandwidth or 'median'");
    app->add_option("--lambda", lambda, "Kernel ridge penalty")->check(CLI::PositiveNumber);
  }

  mint::MethodConfig method_config(const GlobalFlags& g) const {
    mint::MethodConfig m;
    m.method = g.test_method();
    m.alpha = g.alpha;
    m.resamples = g.resamples;
    m.psi = mint::FeatureSpec::treatment(psi_degree > 0 ? psi_degree : degree);
    m.phi = mint::FeatureSpec::outcome(phi_degree > 0 ? phi_degree : degree, interactions, square);
    m.variant = variant == "intercept_shift" ? mint::TransportabilityVariant::intercept_shift
                                             : mint::TransportabilityVariant::full_interaction;
    mint::KernelSpec k;
    k.kind = kernel == "rbf" ? mint::KernelKind::rbf : mint::KernelKind::linear;
    if (bandwidth != "median") {
      try {
        k.bandwidth = std::stod(bandwidth);
      } catch (const std::exception&) {
        throw mint::ValidationError("--bandwidth must be a number or 'median'");
      }
    }
    k.ridge_lambda = lambda;
    k.subsample_seed = g.seed;
    m.k_kernel = k;
    m.h_kernel = k;
    return m;
  }
};

int run(int argc, char** argv) {
  CLI::App app{"Falsification of unmeasured confounding from multi-environment data"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalFlags g;
  g.seed_opt = app.add_option("--seed", g.seed, "Master seed");
  g.alpha_opt = app.add_option("--alpha", g.alpha, "Significance level")->check(CLI::Range(0.0, 1.0));
  g.resamples_opt = app.add_option("--resamples", g.resamples, "Resampling iterations M")->check(CLI::PositiveNumber);
  g.method_opt = app.add_option("--method", g.method, "mint | mint_no_bootstrap | transportability | kernel_mint")
                     ->check(CLI::IsMember({"mint", "mint_no_bootstrap", "transportability", "kernel_mint"}));
  app.add_flag("--no-bootstrap", g.no_bootstrap, "Permutation-only calibration for mint");
  app.add_option("--output,-o", g.output, "Output file (stdout when omitted)");
  app.add_option("--threads", g.threads, "Worker threads; 0 uses every core");

  // simulate
  auto* simulate = app.add_subcommand("simulate", "Draw a dataset CSV from a generator");
  std::string sim_config, sim_generator = "polynomial", sim_truth;
  auto* sim_config_opt = simulate->add_option("--config", sim_config, "{\"schema_version\":1,\"generator\":{...}}");
  simulate->add_option("--generator", sim_generator, "Generator type with default parameters")
      ->check(CLI::IsMember({"linear_example", "polynomial"}))
      ->excludes(sim_config_opt);
  simulate->add_option("--truth", sim_truth, "Write the ground truth as JSON");

  // test
  auto* test = app.add_subcommand("test", "Run one falsification test on a dataset CSV");
  std::string data_path;
  mint::CsvSchema schema;
  std::string covariate_list;
  bool standardize = false;
  WorkingModelFlags test_model;
  test->add_option("--data", data_path, "Dataset CSV")->required()->check(CLI::ExistingFile);
  test->add_option("--env-column", schema.env_column, "Environment column");
  test->add_option("--treatment-column", schema.treatment_column, "Treatment column");
  test->add_option("--outcome-column", schema.outcome_column, "Outcome column");
  test->add_option("--covariates", covariate_list, "Comma-separated covariate columns (default: all others)");
  test->add_flag("--standardize", standardize, "Z-score covariates before testing");
  test_model.add_to(test);

  // benchmark
  auto* bench = app.add_subcommand("benchmark", "Run a falsification-rate sweep");
  std::string bench_config;
  int bench_reps = 0;
  bool timing = false;
  bench->add_option("--config", bench_config, "Experiment config JSON")->required()->check(CLI::ExistingFile);
  bench->add_option("--repetitions", bench_reps, "Override repetitions")->check(CLI::PositiveNumber);
  bench->add_flag("--timing", timing, "Fill the seconds column with wall time");
  std::string dump_config;
  bench->add_option("--dump-config", dump_config, "Write the resolved config as JSON");

  // semisynth
  auto* semi = app.add_subcommand("semisynth", "Semi-synthetic dataset from a covariate CSV");
  std::string cov_path, cov_env = "env", cov_columns, semi_truth;
  mint::SemiSyntheticConfig semi_cfg;
  bool unconfounded = false, semi_run_test = false;
  WorkingModelFlags semi_model;
  semi_model.degree = 2;
  semi->add_option("--covariates", cov_path, "Covariate CSV")->required()->check(CLI::ExistingFile);
  semi->add_option("--env-column", cov_env, "Environment column");
  semi->add_option("--columns", cov_columns, "Comma-separated covariate columns (default: all others)");
  semi->add_option("--n-confounders", semi_cfg.n_confounders, "Columns drawn as true confounders")
      ->check(CLI::PositiveNumber);
  semi->add_option("--observed", semi_cfg.observed_subset_size, "How many of them are exposed")
      ->check(CLI::PositiveNumber);
  semi->add_option("--dgp-degree", semi_cfg.degree, "Degree of the generating polynomials")->check(CLI::PositiveNumber);
  semi->add_flag("--unconfounded", unconfounded, "Drop hidden columns from the generating equations");
  semi->add_option("--truth", semi_truth, "Write the ground truth as JSON");
  semi->add_flag("--test", semi_run_test, "Also run --method on the result and print its JSON to stderr");
  semi_model.add_to(semi);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  if (*simulate) {
    mint::GeneratorConfig gen;
    if (!sim_config.empty()) {
      gen = mint::parse_generator_document(read_json_file(sim_config));
    } else {
      gen.kind = sim_generator == "linear_example" ? mint::GeneratorKind::linear_example
                                                   : mint::GeneratorKind::polynomial;
    }
    if (gen.kind == mint::GeneratorKind::semi_synthetic)
      throw mint::ValidationError("use the semisynth subcommand for semi-synthetic data");
    mint::Rng rng = mint::make_stream(g.seed, {0});
    const auto data = mint::generate(gen, rng);
    emit(g.output, [&](std::ostream& out) { mint::write_csv_dataset(out, data.dataset); });
    write_truth(sim_truth, data.truth);
  } else if (*test) {
    schema.covariate_columns = split_list(covariate_list);
    auto dataset = mint::load_csv_dataset(data_path, schema);
    if (standardize) dataset = mint::standardize_covariates(dataset);
    const auto result = mint::run_method(dataset, test_model.method_config(g), g.seed, g.worker_count());
    emit(g.output, [&](std::ostream& out) { out << mint::test_result_json(result) << '\n'; });
  } else if (*bench) {
    auto config = mint::load_experiment_config(bench_config);
    if (g.seed_opt->count()) config.seed = g.seed;
    if (g.alpha_opt->count()) config.method.alpha = g.alpha;
    if (g.resamples_opt->count()) config.method.resamples = g.resamples;
    if (g.method_opt->count() || g.no_bootstrap) config.method.method = g.method_opt->count() ? g.test_method()
                                                                        : mint::TestMethod::mint_no_bootstrap;
    if (bench_reps > 0) config.repetitions = bench_reps;
    if (!dump_config.empty()) {
      std::ofstream out(dump_config);
      out << mint::to_json(config).dump(2) << '\n';
    }
    const auto rows = mint::run_benchmark(config, g.worker_count());
    emit(g.output, [&](std::ostream& out) { mint::write_benchmark_csv(out, rows, timing); });
  } else if (*semi) {
    semi_cfg.confounded = !unconfounded;
    if (semi_cfg.observed_subset_size > semi_cfg.n_confounders)
      throw mint::ValidationError("--observed cannot exceed --n-confounders");
    const auto covariates = mint::load_covariate_csv(cov_path, cov_env, split_list(cov_columns));
    mint::Rng rng = mint::make_stream(g.seed, {0});
    const auto data = mint::semi_synthetic_generate(covariates, semi_cfg, rng);
    emit(g.output, [&](std::ostream& out) { mint::write_csv_dataset(out, data.dataset); });
    write_truth(semi_truth, data.truth);
    if (semi_run_test) {
      const auto result = mint::run_method(data.dataset, semi_model.method_config(g),
                                           mint::derive_seed(g.seed, {1}), g.worker_count());
      std::cerr << mint::test_result_json(result) << '\n';
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const mint::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const mint::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
