#pragma once

namespace gumbelmark {

// Natural log of the regularized upper incomplete gamma Q(a, x) = Γ(a, x)/Γ(a).
// Stays finite far below the double range (p < 1e-300).
double log_gamma_q(double a, double x);
double gamma_q(double a, double x);

// p = P(Gamma(T, 1) ≥ s), the sum-of-exponentials tail.
double gamma_pvalue(double s, double T);
double log10_gamma_pvalue(double s, double T);

// log10 of the standard normal survival function 1 − Φ(z).
double log10_normal_sf(double z);

// log10 of the binomial coefficient C(n, k).
double log10_choose(double n, double k);

}  // namespace gumbelmark
