#pragma once

#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

namespace secest {

using CsvCell = std::variant<double, long long, std::string>;

/// Formats doubles with %.17g so output is round-trippable and identical
/// across runs.
std::string format_cell(const CsvCell& cell);

/// Writes "# secest <version> <provenance>" followed by a header row.
class CsvWriter {
 public:
  CsvWriter(std::ostream& out, const std::string& provenance, std::vector<std::string> columns);

  void row(const std::vector<CsvCell>& cells);

 private:
  std::ostream& out_;
  std::size_t width_;
};

struct ChartSeries {
  std::string label;
  std::vector<double> y;
};

/// Minimal standalone SVG line chart; non-finite points are skipped.
std::string render_line_chart(const std::string& title, const std::string& x_label,
                              const std::vector<double>& x, const std::vector<ChartSeries>& series);

}  // namespace secest
