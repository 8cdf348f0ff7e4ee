#include "mint/error.hpp"
#include "mint/harness.hpp"

#include <charconv>
#include <fstream>
#include <set>

namespace mint {

using nlohmann::json;

namespace {

// Reads an object key by key and rejects any key that was never asked for.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string context) : j_(j), context_(std::move(context)) {
    if (!j_.is_object()) throw ValidationError(context_ + ": expected a JSON object");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key);
  }

  const json& at(const std::string& key) {
    if (!has(key)) throw ValidationError(context_ + ": missing required key '" + key + "'");
    return j_.at(key);
  }

  int integer(const std::string& key, int fallback) { return has(key) ? as_int(key, j_.at(key)) : fallback; }
  int integer(const std::string& key) { return as_int(key, at(key)); }

  double number(const std::string& key, double fallback) {
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_number()) throw type_error(key, "a number");
    return v.get<double>();
  }

  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_boolean()) throw type_error(key, "true or false");
    return v.get<bool>();
  }

  std::string string(const std::string& key, const std::string& fallback) { return has(key) ? as_string(key, j_.at(key)) : fallback; }
  std::string string(const std::string& key) { return as_string(key, at(key)); }

  std::vector<std::string> strings(const std::string& key) {
    std::vector<std::string> out;
    if (!has(key)) return out;
    const json& v = j_.at(key);
    if (!v.is_array()) throw type_error(key, "an array of strings");
    for (const auto& e : v) {
      if (!e.is_string()) throw type_error(key, "an array of strings");
      out.push_back(e.get<std::string>());
    }
    return out;
  }

  std::uint64_t unsigned64(const std::string& key, std::uint64_t fallback) {
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_number_unsigned()) throw type_error(key, "a non-negative integer");
    return v.get<std::uint64_t>();
  }

  void finish() const {
    for (const auto& item : j_.items())
      if (!seen_.contains(item.key())) throw ValidationError(context_ + ": unknown key '" + item.key() + "'");
  }

  const std::string& context() const { return context_; }

 private:
  ValidationError type_error(const std::string& key, const std::string& expected) const {
    return ValidationError(context_ + ": '" + key + "' must be " + expected);
  }

  int as_int(const std::string& key, const json& v) const {
    if (!v.is_number_integer()) throw type_error(key, "an integer");
    const auto x = v.get<std::int64_t>();
    if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max()) throw type_error(key, "a 32-bit integer");
    return static_cast<int>(x);
  }

  std::string as_string(const std::string& key, const json& v) const {
    if (!v.is_string()) throw type_error(key, "a string");
    return v.get<std::string>();
  }

  const json& j_;
  std::string context_;
  std::set<std::string> seen_;
};

std::string_view to_string(GeneratorKind k) {
  switch (k) {
    case GeneratorKind::linear_example: return "linear_example";
    case GeneratorKind::polynomial: return "polynomial";
    case GeneratorKind::semi_synthetic: return "semi_synthetic";
  }
  return "unknown";
}

GeneratorKind parse_generator_kind(const std::string& s) {
  for (auto k : {GeneratorKind::linear_example, GeneratorKind::polynomial, GeneratorKind::semi_synthetic})
    if (to_string(k) == s) return k;
  throw ValidationError("generator: unknown type '" + s + "'");
}

std::string_view to_string(TransportabilityVariant v) {
  return v == TransportabilityVariant::full_interaction ? "full_interaction" : "intercept_shift";
}

TransportabilityVariant parse_variant(const std::string& s) {
  if (s == "full_interaction") return TransportabilityVariant::full_interaction;
  if (s == "intercept_shift") return TransportabilityVariant::intercept_shift;
  throw ValidationError("method: unknown transportability variant '" + s + "'");
}

FeatureSpec parse_feature_spec(const json& j, FeatureKind kind, const FeatureSpec& fallback, const std::string& ctx) {
  ObjectReader r(j, ctx);
  FeatureSpec spec = fallback;
  spec.kind = kind;
  spec.degree = r.integer("degree", fallback.degree);
  spec.include_intercept = r.boolean("intercept", fallback.include_intercept);
  if (kind == FeatureKind::outcome) {
    spec.include_treatment_interactions = r.boolean("interactions", fallback.include_treatment_interactions);
    spec.include_treatment_square = r.boolean("square", fallback.include_treatment_square);
  }
  r.finish();
  validate(spec);
  return spec;
}

json feature_spec_json(const FeatureSpec& spec) {
  json j{{"degree", spec.degree}, {"intercept", spec.include_intercept}};
  if (spec.kind == FeatureKind::outcome) {
    j["interactions"] = spec.include_treatment_interactions;
    j["square"] = spec.include_treatment_square;
  }
  return j;
}

KernelSpec parse_kernel_spec(const json& j, const std::string& ctx) {
  ObjectReader r(j, ctx);
  KernelSpec spec;
  const std::string kind = r.string("kind", "linear");
  if (kind == "linear") spec.kind = KernelKind::linear;
  else if (kind == "rbf") spec.kind = KernelKind::rbf;
  else throw ValidationError(ctx + ": unknown kernel kind '" + kind + "'");
  if (r.has("bandwidth")) {
    const json& b = j.at("bandwidth");
    if (b.is_string() && b.get<std::string>() == "median") spec.bandwidth.reset();
    else if (b.is_number() && b.get<double>() > 0.0) spec.bandwidth = b.get<double>();
    else throw ValidationError(ctx + ": 'bandwidth' must be a positive number or \"median\"");
  }
  spec.ridge_lambda = r.number("lambda", spec.ridge_lambda);
  spec.subsample_seed = r.unsigned64("subsample_seed", spec.subsample_seed);
  r.finish();
  if (!(spec.ridge_lambda > 0.0)) throw ValidationError(ctx + ": 'lambda' must be positive");
  return spec;
}

json kernel_spec_json(const KernelSpec& spec) {
  json j{{"kind", spec.kind == KernelKind::linear ? "linear" : "rbf"},
         {"lambda", spec.ridge_lambda},
         {"subsample_seed", spec.subsample_seed}};
  if (spec.bandwidth) j["bandwidth"] = *spec.bandwidth;
  else j["bandwidth"] = "median";
  return j;
}

int parse_int_text(const std::string& text, const std::string& axis) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw ValidationError("sweep axis '" + axis + "': '" + text + "' is not an integer");
  return v;
}

void check_schema_version(ObjectReader& r) {
  const int version = r.integer("schema_version");
  if (version != kSchemaVersion)
    throw ValidationError("unsupported schema_version " + std::to_string(version) + " (expected " +
                          std::to_string(kSchemaVersion) + ")");
}

}  // namespace

GeneratorConfig parse_generator_config(const json& j) {
  ObjectReader r(j, "generator");
  GeneratorConfig g;
  g.kind = parse_generator_kind(r.string("type"));
  switch (g.kind) {
    case GeneratorKind::linear_example: {
      auto& c = g.linear;
      if (r.boolean("confounded", false)) c = LinearExampleConfig::confounded();
      c.K = r.integer("K", c.K);
      c.N = r.integer("N", c.N);
      c.alpha0 = r.number("alpha0", c.alpha0);
      c.alphaX = r.number("alphaX", c.alphaX);
      c.alphaU = r.number("alphaU", c.alphaU);
      c.beta0 = r.number("beta0", c.beta0);
      c.betaX = r.number("betaX", c.betaX);
      c.betaA = r.number("betaA", c.betaA);
      c.betaAX = r.number("betaAX", c.betaAX);
      c.betaU = r.number("betaU", c.betaU);
      c.betaAU = r.number("betaAU", c.betaAU);
      c.muX = r.number("muX", c.muX);
      c.muU = r.number("muU", c.muU);
      c.sigmaX = r.number("sigmaX", c.sigmaX);
      c.sigmaU = r.number("sigmaU", c.sigmaU);
      c.noise_var_A = r.number("noise_var_A", c.noise_var_A);
      c.noise_var_Y = r.number("noise_var_Y", c.noise_var_Y);
      for (const auto& name : r.strings("varying")) c.varying.insert(parse_linear_param(name));
      if (r.has("varying_range")) {
        const json& range = j.at("varying_range");
        if (!range.is_array() || range.size() != 2 || !range[0].is_number() || !range[1].is_number())
          throw ValidationError("generator: 'varying_range' must be [low, high]");
        c.varying_low = range[0].get<double>();
        c.varying_high = range[1].get<double>();
      }
      validate(c);
      break;
    }
    case GeneratorKind::polynomial: {
      auto& c = g.polynomial;
      c.K = r.integer("K", c.K);
      c.N = r.integer("N", c.N);
      c.d = r.integer("d", c.d);
      c.degree = r.integer("degree", c.degree);
      c.confounded = r.boolean("confounded", c.confounded);
      c.resample_beta_intercept = r.boolean("resample_beta_intercept", c.resample_beta_intercept);
      c.covariate_diagonal = r.number("covariate_diagonal", c.covariate_diagonal);
      c.covariate_off_diagonal = r.number("covariate_off_diagonal", c.covariate_off_diagonal);
      c.env_mean_variance = r.number("env_mean_variance", c.env_mean_variance);
      c.noise_std = r.number("noise_std", c.noise_std);
      c.confounder_variance = r.number("confounder_variance", c.confounder_variance);
      validate(c);
      break;
    }
    case GeneratorKind::semi_synthetic: {
      auto& s = g.semi_synthetic;
      s.covariate_csv = r.string("covariate_csv");
      s.env_column = r.string("env_column", s.env_column);
      s.covariate_columns = r.strings("covariate_columns");
      s.config.n_confounders = r.integer("n_confounders", s.config.n_confounders);
      s.config.observed_subset_size = r.integer("observed", s.config.observed_subset_size);
      s.config.degree = r.integer("degree", s.config.degree);
      s.config.confounded = r.boolean("confounded", s.config.confounded);
      s.config.resample_beta_intercept = r.boolean("resample_beta_intercept", s.config.resample_beta_intercept);
      s.config.noise_std = r.number("noise_std", s.config.noise_std);
      if (s.config.n_confounders < 1 || s.config.observed_subset_size < 1 ||
          s.config.observed_subset_size > s.config.n_confounders || s.config.degree < 1)
        throw ValidationError("generator: invalid semi-synthetic sizes");
      break;
    }
  }
  r.finish();
  return g;
}

json to_json(const GeneratorConfig& g) {
  json j{{"type", to_string(g.kind)}};
  switch (g.kind) {
    case GeneratorKind::linear_example: {
      const auto& c = g.linear;
      json varying = json::array();
      for (auto p : c.varying) varying.push_back(to_string(p));
      j.update({{"K", c.K},           {"N", c.N},           {"alpha0", c.alpha0},
                {"alphaX", c.alphaX}, {"alphaU", c.alphaU}, {"beta0", c.beta0},
                {"betaX", c.betaX},   {"betaA", c.betaA},   {"betaAX", c.betaAX},
                {"betaU", c.betaU},   {"betaAU", c.betaAU}, {"muX", c.muX},
                {"muU", c.muU},       {"sigmaX", c.sigmaX}, {"sigmaU", c.sigmaU},
                {"noise_var_A", c.noise_var_A}, {"noise_var_Y", c.noise_var_Y},
                {"varying", varying}, {"varying_range", {c.varying_low, c.varying_high}}});
      break;
    }
    case GeneratorKind::polynomial: {
      const auto& c = g.polynomial;
      j.update({{"K", c.K},
                {"N", c.N},
                {"d", c.d},
                {"degree", c.degree},
                {"confounded", c.confounded},
                {"resample_beta_intercept", c.resample_beta_intercept},
                {"covariate_diagonal", c.covariate_diagonal},
                {"covariate_off_diagonal", c.covariate_off_diagonal},
                {"env_mean_variance", c.env_mean_variance},
                {"noise_std", c.noise_std},
                {"confounder_variance", c.confounder_variance}});
      break;
    }
    case GeneratorKind::semi_synthetic: {
      const auto& s = g.semi_synthetic;
      j.update({{"covariate_csv", s.covariate_csv},
                {"env_column", s.env_column},
                {"covariate_columns", s.covariate_columns},
                {"n_confounders", s.config.n_confounders},
                {"observed", s.config.observed_subset_size},
                {"degree", s.config.degree},
                {"confounded", s.config.confounded},
                {"resample_beta_intercept", s.config.resample_beta_intercept},
                {"noise_std", s.config.noise_std}});
      break;
    }
  }
  return j;
}

GeneratorConfig parse_generator_document(const json& j) {
  ObjectReader r(j, "config");
  check_schema_version(r);
  auto g = parse_generator_config(r.at("generator"));
  r.finish();
  return g;
}

std::pair<FeatureSpec, FeatureSpec> default_feature_specs(const GeneratorConfig& g) {
  switch (g.kind) {
    case GeneratorKind::linear_example: return {FeatureSpec::treatment(1), FeatureSpec::outcome(1, true, true)};
    case GeneratorKind::polynomial:
      return {FeatureSpec::treatment(g.polynomial.degree), FeatureSpec::outcome(g.polynomial.degree)};
    case GeneratorKind::semi_synthetic:
      return {FeatureSpec::treatment(g.semi_synthetic.config.degree),
              FeatureSpec::outcome(g.semi_synthetic.config.degree)};
  }
  return {FeatureSpec::treatment(1), FeatureSpec::outcome(1)};
}

MethodConfig parse_method_config(const json& j, const GeneratorConfig& generator) {
  ObjectReader r(j, "method");
  MethodConfig m;
  m.method = parse_test_method(r.string("type"));
  m.alpha = r.number("alpha", m.alpha);
  m.resamples = r.integer("resamples", m.resamples);
  const auto [psi, phi] = default_feature_specs(generator);
  m.psi = r.has("psi") ? parse_feature_spec(j.at("psi"), FeatureKind::treatment, psi, "method.psi") : psi;
  m.phi = r.has("phi") ? parse_feature_spec(j.at("phi"), FeatureKind::outcome, phi, "method.phi") : phi;
  m.ridge_jitter = r.number("ridge_jitter", m.ridge_jitter);
  m.variant = parse_variant(r.string("variant", "full_interaction"));
  if (r.has("k_kernel")) m.k_kernel = parse_kernel_spec(j.at("k_kernel"), "method.k_kernel");
  if (r.has("h_kernel")) m.h_kernel = parse_kernel_spec(j.at("h_kernel"), "method.h_kernel");
  r.finish();
  if (!(m.alpha > 0.0 && m.alpha < 1.0)) throw ValidationError("method: 'alpha' must lie in (0, 1)");
  if (m.resamples < 1) throw ValidationError("method: 'resamples' must be >= 1");
  if (!(m.ridge_jitter >= 0.0)) throw ValidationError("method: 'ridge_jitter' must be >= 0");
  return m;
}

json to_json(const MethodConfig& m) {
  return json{{"type", to_string(m.method)},
              {"alpha", m.alpha},
              {"resamples", m.resamples},
              {"psi", feature_spec_json(m.psi)},
              {"phi", feature_spec_json(m.phi)},
              {"ridge_jitter", m.ridge_jitter},
              {"variant", to_string(m.variant)},
              {"k_kernel", kernel_spec_json(m.k_kernel)},
              {"h_kernel", kernel_spec_json(m.h_kernel)}};
}

ExperimentConfig apply_axis_value(const ExperimentConfig& config, const std::string& value) {
  ExperimentConfig c = config;
  const std::string& axis = config.sweep.axis;
  auto& g = c.generator;
  auto unsupported = [&] {
    return ValidationError("sweep axis '" + axis + "' does not apply to the " + std::string(to_string(g.kind)) +
                           " generator");
  };
  if (axis == "K" || axis == "N") {
    const int v = parse_int_text(value, axis);
    if (g.kind == GeneratorKind::linear_example) (axis == "K" ? g.linear.K : g.linear.N) = v;
    else if (g.kind == GeneratorKind::polynomial) (axis == "K" ? g.polynomial.K : g.polynomial.N) = v;
    else throw unsupported();
  } else if (axis == "d") {
    const int v = parse_int_text(value, axis);
    if (g.kind == GeneratorKind::polynomial) g.polynomial.d = v;
    else if (g.kind == GeneratorKind::semi_synthetic) g.semi_synthetic.config.observed_subset_size = v;
    else throw unsupported();
  } else if (axis == "degree") {
    const int v = parse_int_text(value, axis);
    c.method.psi.degree = v;
    c.method.phi.degree = v;
    validate(c.method.psi);
  } else if (axis == "varied") {
    if (g.kind != GeneratorKind::linear_example) throw unsupported();
    g.linear.varying.clear();
    if (value != "none") g.linear.varying.insert(parse_linear_param(value));
  } else {
    throw ValidationError("unknown sweep axis '" + axis + "' (expected K, N, d, degree or varied)");
  }
  if (g.kind == GeneratorKind::linear_example) validate(g.linear);
  if (g.kind == GeneratorKind::polynomial) validate(g.polynomial);
  if (g.kind == GeneratorKind::semi_synthetic &&
      (g.semi_synthetic.config.observed_subset_size < 1 ||
       g.semi_synthetic.config.observed_subset_size > g.semi_synthetic.config.n_confounders))
    throw ValidationError("sweep value '" + value + "' gives an invalid observed subset size");
  return c;
}

ExperimentConfig parse_experiment_config(const json& j) {
  ObjectReader r(j, "config");
  check_schema_version(r);
  ExperimentConfig c;
  c.seed = r.unsigned64("seed", 0);
  c.repetitions = r.integer("repetitions", 1);
  if (c.repetitions < 1) throw ValidationError("config: 'repetitions' must be >= 1");
  c.generator = parse_generator_config(r.at("generator"));
  c.method = parse_method_config(r.at("method"), c.generator);

  ObjectReader s(r.at("sweep"), "sweep");
  c.sweep.axis = s.string("axis");
  const json& values = s.at("values");
  if (!values.is_array() || values.empty()) throw ValidationError("sweep: 'values' must be a non-empty array");
  for (const auto& v : values) {
    if (v.is_number_integer()) c.sweep.values.push_back(std::to_string(v.get<std::int64_t>()));
    else if (v.is_string()) c.sweep.values.push_back(v.get<std::string>());
    else throw ValidationError("sweep: values must be integers or strings");
  }
  s.finish();
  r.finish();
  for (const auto& v : c.sweep.values) apply_axis_value(c, v);
  return c;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config '" + path.string() + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError("config '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return parse_experiment_config(j);
}

json to_json(const ExperimentConfig& c) {
  json values = json::array();
  for (const auto& v : c.sweep.values) {
    const bool numeric = !v.empty() && v.find_first_not_of("-0123456789") == std::string::npos;
    if (numeric) values.push_back(std::stoll(v));
    else values.push_back(v);
  }
  return json{{"schema_version", kSchemaVersion},
              {"seed", c.seed},
              {"repetitions", c.repetitions},
              {"generator", to_json(c.generator)},
              {"method", to_json(c.method)},
              {"sweep", {{"axis", c.sweep.axis}, {"values", values}}}};
}

}  // namespace mint
