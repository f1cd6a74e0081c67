#ifndef CFSURV_NORMAL_HPP
#define CFSURV_NORMAL_HPP

namespace cfsurv {

/// Standard normal density.
double normal_pdf(double x);

/// Standard normal CDF.
double normal_cdf(double x);

/// Standard normal quantile for a in (0, 1). Rational initial guess
/// refined by one Newton step; absolute error below 1e-9 (tested).
double normal_quantile(double a);

} // namespace cfsurv

#endif
