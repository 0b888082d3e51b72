#pragma once

namespace setinf {

/// Principal branch of Lambert's product logarithm on z >= 0: the w >= 0
/// with w·exp(w) = z.
/// Throws ModelDomainError for z < 0.
double lambert_w(double z);

/// Regularized lower incomplete gamma P(a, x).
double regularized_gamma_p(double a, double x);

/// Upper quantile x with P(χ²_dof <= x) = p, 0 < p < 1.
double chi_square_quantile(double dof, double p);
double chi_square_cdf(double dof, double x);

double normal_cdf(double x);

}  // namespace setinf
