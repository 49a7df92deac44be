#include "fepysr/dataset.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace fepysr {

namespace {
std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}
}  // namespace

void save_dataset(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "# fepysr-dataset v1\n";
  out << "# benchmark: " << ds.benchmark << "\n";
  out << "# seed: " << ds.seed << "\n";
  out << "# noise_alpha: " << fmt(ds.noise_alpha) << "\n";
  out << "# vars:";
  for (const auto& v : ds.var_names) out << ' ' << v;
  out << "\n";
  out << "# rows: " << ds.X.rows << " cols: " << ds.X.cols << "\n";
  for (int i = 0; i < ds.X.rows; ++i) {
    for (int j = 0; j < ds.X.cols; ++j) out << fmt(ds.X(i, j)) << ' ';
    out << fmt(ds.y[static_cast<std::size_t>(i)]) << "\n";
  }
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  Dataset ds;
  int rows = -1, cols = -1;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream ss(line.substr(1));
      std::string key;
      ss >> key;
      if (key == "benchmark:") {
        std::string rest;
        std::getline(ss, rest);
        auto b = rest.find_first_not_of(' ');
        ds.benchmark = b == std::string::npos ? "" : rest.substr(b);
      } else if (key == "seed:") {
        ss >> ds.seed;
      } else if (key == "noise_alpha:") {
        ss >> ds.noise_alpha;
      } else if (key == "vars:") {
        std::string v;
        while (ss >> v) ds.var_names.push_back(v);
      } else if (key == "rows:") {
        std::string c;
        ss >> rows >> c >> cols;
      }
      continue;
    }
    break;
  }
  if (rows < 0 || cols < 0) throw std::runtime_error("missing rows/cols header in " + path.string());
  ds.X = Matrix(rows, cols);
  ds.y.resize(static_cast<std::size_t>(rows));
  int r = 0;
  // `line` already holds the first data row.
  do {
    if (line.empty() || line[0] == '#') continue;
    if (r >= rows) throw std::runtime_error("extra data rows in " + path.string());
    std::istringstream ss(line);
    for (int j = 0; j < cols; ++j) {
      if (!(ss >> ds.X(r, j))) throw std::runtime_error("short data row in " + path.string());
    }
    if (!(ss >> ds.y[static_cast<std::size_t>(r)]))
      throw std::runtime_error("missing target in " + path.string());
    ++r;
  } while (std::getline(in, line));
  if (r != rows) throw std::runtime_error("expected " + std::to_string(rows) + " rows, got " +
                                          std::to_string(r));
  return ds;
}

}  // namespace fepysr
