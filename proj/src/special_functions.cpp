#include "mint/special_functions.hpp"

#include "mint/error.hpp"

#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <cmath>
#include <stdexcept>

namespace mint {

namespace {

template <typename F>
double guarded(const char* what, F&& f) {
  try {
    return f();
  } catch (const std::exception& e) {
    throw NumericalError(std::string(what) + ": " + e.what());
  }
}

}  // namespace

double regularized_beta(double a, double b, double x) {
  if (!(a > 0.0 && b > 0.0)) throw ValidationError("incomplete beta needs positive shape parameters");
  if (!(x >= 0.0 && x <= 1.0)) throw ValidationError("incomplete beta argument must lie in [0, 1]");
  return guarded("incomplete beta", [&] { return boost::math::ibeta(a, b, x); });
}

double regularized_gamma_q(double a, double x) {
  if (!(a > 0.0)) throw ValidationError("incomplete gamma needs a positive shape parameter");
  if (!(x >= 0.0)) throw ValidationError("incomplete gamma argument must be >= 0");
  if (std::isinf(x)) return 0.0;
  return guarded("incomplete gamma", [&] { return boost::math::gamma_q(a, x); });
}

double f_survival(double f, double d1, double d2) {
  if (!(d1 > 0.0 && d2 > 0.0)) throw ValidationError("F degrees of freedom must be positive");
  if (std::isnan(f) || f < 0.0) throw ValidationError("F statistic must be >= 0");
  if (f == 0.0) return 1.0;
  if (std::isinf(f)) return 0.0;
  // I_{d2/(d2+d1 f)}(d2/2, d1/2), which keeps precision deep in the tail.
  return regularized_beta(0.5 * d2, 0.5 * d1, d2 / (d2 + d1 * f));
}

double chi2_survival(double x, double k) {
  if (!(k > 0.0)) throw ValidationError("chi-square degrees of freedom must be positive");
  if (std::isnan(x) || x < 0.0) throw ValidationError("chi-square argument must be >= 0");
  return regularized_gamma_q(0.5 * k, 0.5 * x);
}

double student_t_two_sided(double t, double nu) {
  if (!(nu > 0.0)) throw ValidationError("t degrees of freedom must be positive");
  if (std::isnan(t)) throw ValidationError("t statistic is NaN");
  if (std::isinf(t)) return 0.0;
  return regularized_beta(0.5 * nu, 0.5, nu / (nu + t * t));
}

double f_upper_quantile(double p, double d1, double d2) {
  if (!(p > 0.0 && p < 1.0)) throw ValidationError("quantile level must lie in (0, 1)");
  if (!(d1 > 0.0 && d2 > 0.0)) throw ValidationError("F degrees of freedom must be positive");
  return guarded("F quantile", [&] {
    return boost::math::quantile(boost::math::complement(boost::math::fisher_f_distribution<double>(d1, d2), p));
  });
}

}  // namespace mint
