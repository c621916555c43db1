#include "spm/result_table.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <tuple>

#include "spm/io.hpp"
#include "spm/types.hpp"

namespace spm {

namespace {

std::ofstream open_csv(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.close();
  if (!out) throw IoError("write failed for " + path.string());
}

void write_params(std::ostream& out, const CellParams& p) {
  out << p.d << ',' << p.k << ',' << p.m << ',' << p.n << ',' << format_double(p.sigma);
}

}  // namespace

void ResultTable::add(int cell, const CellParams& p, int trial, std::string metric, int index,
                      double value) {
  raw.push_back(RawRow{cell, p, trial, std::move(metric), index, value});
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return std::nan("");
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sample_std(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double mu = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - mu) * (x - mu);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

std::vector<SummaryRow> ResultTable::summarize() const {
  std::map<std::tuple<int, std::string, int>, std::size_t> slot;
  std::vector<SummaryRow> rows;
  std::vector<std::vector<double>> groups;
  for (const RawRow& r : raw) {
    const auto key = std::make_tuple(r.cell, r.metric, r.index);
    auto it = slot.find(key);
    if (it == slot.end()) {
      it = slot.emplace(key, rows.size()).first;
      rows.push_back(SummaryRow{r.cell, r.params, r.metric, r.index, 0, 0.0, 0.0});
      groups.emplace_back();
    }
    groups[it->second].push_back(r.value);
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    rows[i].count = static_cast<long long>(groups[i].size());
    rows[i].mean = mean_of(groups[i]);
    rows[i].std = sample_std(groups[i]);
  }
  return rows;
}

std::vector<double> ResultTable::values(int cell, const std::string& metric) const {
  std::vector<double> out;
  for (const RawRow& r : raw)
    if (r.cell == cell && r.metric == metric) out.push_back(r.value);
  return out;
}

void ResultTable::write_raw_csv(const std::filesystem::path& path) const {
  auto out = open_csv(path);
  out << "experiment,cell,d,k,m,n,sigma,trial,metric,index,value\n";
  for (const RawRow& r : raw) {
    out << experiment << ',' << r.cell << ',';
    write_params(out, r.params);
    out << ',' << r.trial << ',' << r.metric << ',' << r.index << ',' << format_double(r.value) << '\n';
  }
  finish(out, path);
}

void ResultTable::write_summary_csv(const std::filesystem::path& path) const {
  auto out = open_csv(path);
  out << "experiment,cell,d,k,m,n,sigma,metric,index,count,mean,std\n";
  for (const SummaryRow& r : summarize()) {
    out << experiment << ',' << r.cell << ',';
    write_params(out, r.params);
    out << ',' << r.metric << ',' << r.index << ',' << r.count << ',' << format_double(r.mean) << ','
        << format_double(r.std) << '\n';
  }
  finish(out, path);
}

void ResultTable::write_fits_csv(const std::filesystem::path& path) const {
  auto out = open_csv(path);
  out << "experiment,name,d,k,m,n,value\n";
  for (const FitRow& f : fits)
    out << experiment << ',' << f.name << ',' << f.params.d << ',' << f.params.k << ',' << f.params.m
        << ',' << f.params.n << ',' << format_double(f.value) << '\n';
  finish(out, path);
}

}  // namespace spm
