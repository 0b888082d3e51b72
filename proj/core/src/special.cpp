#include "setinf/special.hpp"

#include <cmath>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/special_functions/lambert_w.hpp>

#include "setinf/errors.hpp"

namespace setinf {

double lambert_w(double z) {
    if (!(z >= 0.0)) throw ModelDomainError("lambert_w: argument must be >= 0");
    if (std::isinf(z)) return z;
    return boost::math::lambert_w0(z);
}

double regularized_gamma_p(double a, double x) {
    if (!(a > 0.0) || !(x >= 0.0)) throw InputError("regularized_gamma_p: need a > 0, x >= 0");
    return boost::math::gamma_p(a, x);
}

double chi_square_cdf(double dof, double x) {
    if (!(dof > 0.0)) throw InputError("chi_square_cdf: dof must be > 0");
    if (x <= 0.0) return 0.0;
    if (std::isinf(x)) return 1.0;
    return boost::math::cdf(boost::math::chi_squared(dof), x);
}

double chi_square_quantile(double dof, double p) {
    if (!(dof > 0.0)) throw InputError("chi_square_quantile: dof must be > 0");
    if (!(p > 0.0 && p < 1.0)) throw InputError("chi_square_quantile: p must be in (0, 1)");
    return boost::math::quantile(boost::math::chi_squared(dof), p);
}

double normal_cdf(double x) { return boost::math::cdf(boost::math::normal(), x); }

}  // namespace setinf
