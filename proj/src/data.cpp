#include "pfsgld/data.hpp"

#include <cmath>
#include <cstdio>
#include <unordered_set>

#include "pfsgld/errors.hpp"

namespace pfsgld {

std::vector<double> demean_log_returns(std::span<const double> prices) {
  if (prices.size() < 2)
    throw DataError("demean_log_returns: need at least 2 prices");
  std::vector<double> out(prices.size() - 1);
  for (size_t t = 0; t < prices.size(); ++t)
    if (!(prices[t] > 0.0))
      throw DataError("nonpositive price at index " + std::to_string(t));
  for (size_t t = 1; t < prices.size(); ++t)
    out[t - 1] = std::log(prices[t] / prices[t - 1]);
  double mean = 0.0;
  for (double r : out) mean += r;
  mean /= static_cast<double>(out.size());
  for (double& r : out) r -= mean;
  // Second pass knocks the residual mean down to ~machine epsilon.
  double resid = 0.0;
  for (double r : out) resid += r;
  resid /= static_cast<double>(out.size());
  for (double& r : out) r -= resid;
  return out;
}

SegmentedSeries segment_by_key(std::span<const double> series,
                               std::span<const std::string> keys) {
  if (series.size() != keys.size())
    throw DataError("segment_by_key: keys length must match series");
  if (series.empty()) throw DataError("segment_by_key: empty series");
  SegmentedSeries out;
  std::unordered_set<std::string> seen;
  size_t start = 0;
  for (size_t i = 1; i <= series.size(); ++i) {
    if (i == series.size() || keys[i] != keys[start]) {
      if (!seen.insert(keys[start]).second)
        throw DataError("segment key '" + keys[start] +
                        "' appears in non-contiguous runs");
      out.segments.emplace_back(series.begin() + start, series.begin() + i);
      start = i;
    }
  }
  return out;
}

namespace {

// Days since 1970-01-01 (Howard Hinnant's days_from_civil).
long days_from_civil(int y, int m, int d) {
  y -= m <= 2;
  const long era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<long>(doe) - 719468;
}

bool is_leap(int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

int day_of_year(int y, int m, int d) {
  static const int cum[12] = {0,   31,  59,  90,  120, 151,
                              181, 212, 243, 273, 304, 334};
  return cum[m - 1] + d + (m > 2 && is_leap(y) ? 1 : 0);
}

int iso_weeks_in_year(int y) {
  auto p = [](int year) {
    return (year + year / 4 - year / 100 + year / 400) % 7;
  };
  return 52 + (p(y) == 4 || p(y - 1) == 3 ? 1 : 0);
}

}  // namespace

std::string iso_week_key(const std::string& timestamp) {
  int y = 0, m = 0, d = 0;
  if (std::sscanf(timestamp.c_str(), "%d-%d-%d", &y, &m, &d) != 3 || m < 1 ||
      m > 12 || d < 1 || d > 31)
    throw DataError("cannot parse timestamp '" + timestamp + "'");
  const long z = days_from_civil(y, m, d);
  const int iso_wd = static_cast<int>(((z % 7) + 10) % 7) + 1;  // Mon=1
  int week = (day_of_year(y, m, d) - iso_wd + 10) / 7;
  int wyear = y;
  if (week < 1) {
    wyear = y - 1;
    week = iso_weeks_in_year(wyear);
  } else if (week > iso_weeks_in_year(y)) {
    wyear = y + 1;
    week = 1;
  }
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-W%02d", wyear, week);
  return buf;
}

}  // namespace pfsgld
