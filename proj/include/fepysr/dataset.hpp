#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fepysr/matrix.hpp"

namespace fepysr {

struct Dataset {
  Matrix X;
  std::vector<double> y;
  std::vector<std::string> var_names;
  // Provenance
  std::string benchmark;
  std::uint64_t seed = 0;
  double noise_alpha = 0.0;

  int rows() const { return X.rows; }
  int dims() const { return X.cols; }
};

// Text format: '#'-prefixed header (vars, provenance), then whitespace
// separated rows with the target in the last column. Values are written with
// enough digits to round-trip exactly.
void save_dataset(const Dataset& ds, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);

}  // namespace fepysr
