#include "mint/error.hpp"
#include "mint/harness.hpp"
#include "mint/parallel.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ostream>

namespace mint {

GeneratedData generate(const GeneratorConfig& config, Rng& rng, const CovariateDataset* covariates) {
  switch (config.kind) {
    case GeneratorKind::linear_example: return generate_linear_example(config.linear, rng);
    case GeneratorKind::polynomial: return generate_polynomial(config.polynomial, rng);
    case GeneratorKind::semi_synthetic:
      if (covariates == nullptr) throw ValidationError("semi-synthetic generation needs loaded covariates");
      return semi_synthetic_generate(*covariates, config.semi_synthetic.config, rng);
  }
  throw ValidationError("unknown generator kind");
}

TestResult run_method(const MultiEnvDataset& dataset, const MethodConfig& config, std::uint64_t seed, int threads) {
  switch (config.method) {
    case TestMethod::mint:
    case TestMethod::mint_no_bootstrap: {
      MintOptions options;
      options.alpha = config.alpha;
      options.resamples = config.resamples;
      options.seed = seed;
      options.use_bootstrap = config.method == TestMethod::mint;
      options.ridge_jitter = config.ridge_jitter;
      options.threads = threads;
      return mint_test(dataset, config.psi, config.phi, options);
    }
    case TestMethod::transportability: {
      auto result = transportability_test(dataset, config.phi, config.variant, config.alpha);
      result.seed = seed;
      return result;
    }
    case TestMethod::kernel_mint:
      return kernel_mint_test(dataset, config.k_kernel, config.h_kernel, config.alpha, config.resamples, seed,
                              threads);
  }
  throw ValidationError("unknown test method");
}

std::uint64_t repetition_seed(std::uint64_t seed, std::size_t axis_index, std::size_t repetition) {
  return derive_seed(seed, {static_cast<std::uint64_t>(axis_index), static_cast<std::uint64_t>(repetition)});
}

std::vector<BenchmarkRow> run_benchmark(const ExperimentConfig& config, int threads) {
  std::optional<CovariateDataset> covariates;
  if (config.generator.kind == GeneratorKind::semi_synthetic) {
    const auto& src = config.generator.semi_synthetic;
    covariates = load_covariate_csv(src.covariate_csv, src.env_column, src.covariate_columns);
  }
  const CovariateDataset* cov = covariates ? &*covariates : nullptr;

  std::vector<BenchmarkRow> rows;
  for (std::size_t v = 0; v < config.sweep.values.size(); ++v) {
    const std::string& value = config.sweep.values[v];
    const ExperimentConfig run = apply_axis_value(config, value);
    const auto reps = static_cast<std::size_t>(run.repetitions);
    std::vector<char> rejected(reps, 0);

    const auto start = std::chrono::steady_clock::now();
    parallel_for(reps, threads, [&](std::size_t r) {
      const std::uint64_t seed = repetition_seed(config.seed, v, r);
      auto context = [&] {
        return config.sweep.axis + "=" + value + ", repetition " + std::to_string(r) + ", seed " +
               std::to_string(seed) + ": ";
      };
      try {
        Rng rng = make_stream(seed, {0});
        const auto data = generate(run.generator, rng, cov);
        rejected[r] = run_method(data.dataset, run.method, derive_seed(seed, {1}), 1).reject ? 1 : 0;
      } catch (const ValidationError& e) {
        throw ValidationError(context() + e.what());
      } catch (const NumericalError& e) {
        throw NumericalError(context() + e.what());
      }
    });
    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;

    BenchmarkRow row;
    row.axis = config.sweep.axis;
    row.value = value;
    row.repetitions = run.repetitions;
    int count = 0;
    for (char c : rejected) count += c;
    row.falsification_rate = static_cast<double>(count) / static_cast<double>(reps);
    row.standard_error =
        std::sqrt(row.falsification_rate * (1.0 - row.falsification_rate) / static_cast<double>(reps));
    row.wall_time_seconds = elapsed.count();
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_benchmark_csv(std::ostream& out, const std::vector<BenchmarkRow>& rows, bool include_timing) {
  out << "axis,value,rate,se,reps,seconds\n";
  char buf[64];
  for (const auto& row : rows) {
    out << row.axis << ',' << row.value << ',';
    std::snprintf(buf, sizeof buf, "%.17g", row.falsification_rate);
    out << buf << ',';
    std::snprintf(buf, sizeof buf, "%.17g", row.standard_error);
    out << buf << ',' << row.repetitions << ',';
    if (include_timing) {
      std::snprintf(buf, sizeof buf, "%.3f", row.wall_time_seconds);
      out << buf;
    } else {
      out << "NA";
    }
    out << '\n';
  }
}

}  // namespace mint
