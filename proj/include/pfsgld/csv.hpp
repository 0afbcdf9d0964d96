#ifndef PFSGLD_CSV_HPP_
#define PFSGLD_CSV_HPP_

#include <fstream>
#include <string>
#include <vector>

namespace pfsgld {

// Shortest decimal form that round-trips to the same double; all numeric
// file output goes through this so re-runs are byte-identical.
std::string format_double(double v);
double parse_double(const std::string& s);

class CsvWriter {
 public:
  explicit CsvWriter(const std::string& path);
  void header(const std::vector<std::string>& columns);
  void row(const std::vector<std::string>& fields);
  void close();

 private:
  std::ofstream out_;
  std::string path_;
  size_t columns_ = 0;
};

struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const;        // -1 when absent
  int require_column(const std::string& name) const;  // DataError when absent
};

CsvTable read_csv(const std::string& path);

}  // namespace pfsgld

#endif  // PFSGLD_CSV_HPP_
