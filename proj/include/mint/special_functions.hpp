#pragma once

namespace mint {

/// Regularized incomplete beta I_x(a, b).
double regularized_beta(double a, double b, double x);

/// Regularized upper incomplete gamma Q(a, x).
double regularized_gamma_q(double a, double x);

/// P(F > f) for F ~ F(d1, d2).
double f_survival(double f, double d1, double d2);

/// P(X > x) for X ~ chi-square with k degrees of freedom.
double chi2_survival(double x, double k);

/// Two-sided P(|T| > |t|) for T ~ Student t with nu degrees of freedom.
double student_t_two_sided(double t, double nu);

/// f with f_survival(f, d1, d2) = p.
double f_upper_quantile(double p, double d1, double d2);

}  // namespace mint
