#pragma once

namespace lrw {

double normal_pdf(double x);
double normal_cdf(double x);
/// Upper tail 1 - Phi(x), accurate for large x.
double normal_sf(double x);

/// Inverse of the standard normal distribution function, Wichura's AS 241
/// (PPND16) rational approximation; relative error about 1e-16 on (0, 1).
/// Returns -inf / +inf at 0 / 1.
double normal_quantile(double p);

}  // namespace lrw
