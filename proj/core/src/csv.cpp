// SPDX-License-Identifier: Apache-2.0

#include "dualrot/csv.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace dualrot {

namespace {

std::string format_double(double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

std::string join_doubles(const std::vector<double>& values) {
  std::string joined;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i > 0) joined += ';';
    joined += format_double(values[i]);
  }
  return joined;
}

} // namespace

std::string trace_path(const std::string& results_path) {
  const auto dot = results_path.rfind('.');
  if (dot == std::string::npos || results_path.find('/', dot) != std::string::npos)
    return results_path + "_trace.csv";
  return results_path.substr(0, dot) + "_trace" + results_path.substr(dot);
}

void emit_csv(const std::vector<ExperimentResult>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("emit_csv: cannot write '" + path + "'");

  out << "experiment,scheme,axis,value,seed,sum_rate,iterations,converged,sinrs,"
         "xi,rho_bar,delta,gain_variance,beta,"
         "power_gain,efficiency_gain,dual_gain,beta_fixed,beta_dual,decompose_valid\n";
  for (const ExperimentResult& row : rows) {
    out << row.experiment << ',' << row.scheme << ',' << row.axis << ','
        << format_double(row.value) << ',' << row.seed << ',' << format_double(row.sum_rate)
        << ',' << row.iterations << ',' << (row.converged ? 1 : 0) << ','
        << join_doubles(row.sinrs) << ',' << format_double(row.xi) << ','
        << format_double(row.rho_bar) << ',' << format_double(row.delta) << ','
        << format_double(row.gain_variance) << ',' << format_double(row.beta) << ','
        << format_double(row.power_gain) << ',' << format_double(row.efficiency_gain) << ','
        << format_double(row.dual_gain) << ',' << format_double(row.beta_fixed) << ','
        << format_double(row.beta_dual) << ',' << (row.decompose_valid ? 1 : 0) << '\n';
  }
  if (!out) throw std::runtime_error("emit_csv: write failed for '" + path + "'");

  const std::string traces = trace_path(path);
  std::ofstream trace_out(traces);
  if (!trace_out) throw std::runtime_error("emit_csv: cannot write '" + traces + "'");
  trace_out << "experiment,scheme,axis,value,seed,iteration,sum_rate\n";
  for (const ExperimentResult& row : rows)
    for (std::size_t i = 0; i < row.trace.size(); ++i)
      trace_out << row.experiment << ',' << row.scheme << ',' << row.axis << ','
                << format_double(row.value) << ',' << row.seed << ',' << i << ','
                << format_double(row.trace[i]) << '\n';
  if (!trace_out) throw std::runtime_error("emit_csv: write failed for '" + traces + "'");
}

std::vector<std::vector<std::string>> read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_csv: cannot open '" + path + "'");
  std::vector<std::vector<std::string>> records;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> fields;
    std::stringstream stream(line);
    std::string field;
    while (std::getline(stream, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    records.push_back(std::move(fields));
  }
  return records;
}

} // namespace dualrot
