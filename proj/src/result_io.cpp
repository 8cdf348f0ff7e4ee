#include "mint/harness.hpp"

#include <cmath>
#include <cstdio>

namespace mint {

namespace {

std::string number(double x) {
  if (!std::isfinite(x)) return "null";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

std::string test_result_json(const TestResult& result) {
  using nlohmann::json;
  std::string out = "{";
  auto field = [&](const char* key, const std::string& value) {
    if (out.size() > 1) out += ", ";
    out += json(key).dump() + ": " + value;
  };
  field("method", json(std::string(to_string(result.method))).dump());
  field("statistic", number(result.statistic));
  field("threshold", number(result.threshold));
  field("p_value", number(result.p_value));
  field("reject", result.reject ? "true" : "false");
  field("alpha", number(result.alpha));
  field("resamples", std::to_string(result.resamples));
  field("seed", std::to_string(result.seed));
  field("experimental", result.experimental ? "true" : "false");
  field("warnings", json(result.warnings).dump());
  if (result.null_samples) {
    std::string samples = "[";
    for (std::size_t i = 0; i < result.null_samples->size(); ++i) {
      if (i) samples += ", ";
      samples += number((*result.null_samples)[i]);
    }
    field("null_samples", samples + "]");
  } else {
    field("null_samples", "null");
  }
  return out + "}";
}

}  // namespace mint
