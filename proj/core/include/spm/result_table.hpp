#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace spm {

/// Parameters identifying one grid cell of an experiment.
struct CellParams {
  int d = 0;
  int k = 0;
  int m = 0;
  int n = 0;
  double sigma = 0.0;
};

/// One long-format measurement.
struct RawRow {
  int cell = 0;
  CellParams params;
  int trial = 0;
  std::string metric;
  int index = -1;  ///< recovery index or init index; -1 when not applicable
  double value = 0.0;
};

struct SummaryRow {
  int cell = 0;
  CellParams params;
  std::string metric;
  int index = -1;
  long long count = 0;
  double mean = 0.0;
  double std = 0.0;  ///< sample standard deviation; 0 for a single value
};

/// Whole-table derived quantity such as a fitted slope.
struct FitRow {
  std::string name;
  CellParams params;
  double value = 0.0;
};

struct ResultTable {
  std::string experiment;
  std::vector<RawRow> raw;
  std::vector<FitRow> fits;

  void add(int cell, const CellParams& p, int trial, std::string metric, int index, double value);

  /// Groups by (cell, metric, index) in order of first appearance.
  std::vector<SummaryRow> summarize() const;

  /// Values of one metric in one cell, in row order.
  std::vector<double> values(int cell, const std::string& metric) const;

  void write_raw_csv(const std::filesystem::path& path) const;
  void write_summary_csv(const std::filesystem::path& path) const;
  void write_fits_csv(const std::filesystem::path& path) const;
};

double mean_of(const std::vector<double>& v);
double sample_std(const std::vector<double>& v);

}  // namespace spm
