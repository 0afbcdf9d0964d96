#ifndef PFSGLD_DATA_HPP_
#define PFSGLD_DATA_HPP_

#include <span>
#include <string>
#include <vector>

namespace pfsgld {

struct SegmentedSeries {
  std::vector<std::vector<double>> segments;
  std::string source;
  double demean_mean = 0.0;  // mean removed by demean_log_returns

  long total_length() const {
    long n = 0;
    for (const auto& s : segments) n += static_cast<long>(s.size());
    return n;
  }
};

// y~_t = log(p_t / p_{t-1}) - mean; output length is prices.size() - 1 and
// has empirical mean zero to machine precision.
std::vector<double> demean_log_returns(std::span<const double> prices);

// Splits a series at changes of the key; keys must form contiguous runs.
SegmentedSeries segment_by_key(std::span<const double> series,
                               std::span<const std::string> keys);

// "2017-W45"-style key from a YYYY-MM-DD[...] timestamp (ISO week date).
std::string iso_week_key(const std::string& timestamp);

}  // namespace pfsgld

#endif  // PFSGLD_DATA_HPP_
