#ifndef PFSGLD_ESTIMATE_HPP_
#define PFSGLD_ESTIMATE_HPP_

#include <limits>
#include <string>
#include <vector>

namespace pfsgld {

// A score estimate in gradient coordinates plus where it came from.
struct GradientEstimate {
  std::vector<double> grad;
  // Provenance: subsequence start/length, buffer, particle count (0 when
  // analytic), estimator label, and the filter's log-marginal estimate
  // (NaN when not produced).
  int s_start = 1;
  int s_len = 0;
  int buffer = 0;
  long particles = 0;
  std::string estimator;
  double loglik_estimate = std::numeric_limits<double>::quiet_NaN();
};

}  // namespace pfsgld

#endif  // PFSGLD_ESTIMATE_HPP_
