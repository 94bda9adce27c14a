#pragma once

namespace mda {

double normal_pdf(double x);
double normal_cdf(double x);
// Inverse of normal_cdf on (0,1); +-inf at the endpoints. Absolute error
// below 1e-9 over the whole range.
double normal_quantile(double p);

}  // namespace mda
