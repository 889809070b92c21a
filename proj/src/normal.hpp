#pragma once

namespace storarb {

// Inverse CDF of the standard normal (Wichura's AS 241, double precision).
// Requires p in (0, 1); accurate to ~1e-15 over the full range.
double normal_quantile(double p);

// Standard normal CDF via erfc; used for cross-checks and the chance
// constraint's quantile reformulation tests.
double normal_cdf(double x);

}  // namespace storarb
