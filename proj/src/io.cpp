#include <algorithm>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <vector>

#include "pairrank/common.hpp"

namespace pairrank {

void write_dataset_csv(const Dataset& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path);
  out << std::setprecision(17);
  for (int k = 0; k < data.dim(); ++k) out << "x" << k << ",";
  out << "y\n";
  for (int i = 0; i < data.n(); ++i) {
    for (int k = 0; k < data.dim(); ++k) out << data.x(i, k) << ",";
    out << data.y[i] << "\n";
  }
}

Dataset read_dataset_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read " + path);
  std::string line;
  if (!std::getline(in, line)) throw ValidationError(path + ": empty file");
  const long cols = std::count(line.begin(), line.end(), ',') + 1;
  if (cols < 2) throw ValidationError(path + ": need at least one input column and y");
  std::vector<double> values;
  long rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    long c = 0;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        values.push_back(std::stod(cell, &used));
      } catch (const std::exception&) {
        throw ValidationError(path + ": bad number '" + cell + "' on row " + std::to_string(rows + 1));
      }
      ++c;
    }
    if (c != cols) throw ValidationError(path + ": row " + std::to_string(rows + 1) + " has wrong width");
    ++rows;
  }
  Dataset d;
  d.x.resize(rows, cols - 1);
  d.y.resize(rows);
  for (long i = 0; i < rows; ++i) {
    for (long k = 0; k + 1 < cols; ++k) d.x(i, k) = values[i * cols + k];
    d.y[i] = values[i * cols + cols - 1];
  }
  return d;
}

}  // namespace pairrank
