#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "nch/geometry.hpp"

namespace nch {

/// Flat binary array with a self-describing text header:
///
///   nch-snapshot 1
///   dtype f64
///   endian little
///   order row-major
///   dims <d0> <d1> ...
///   end
///
/// followed by prod(dims) little-endian IEEE-754 doubles, last index fastest.
struct Snapshot {
  std::vector<std::size_t> dims;
  std::vector<double> data;
};

void write_snapshot(const std::filesystem::path& path, const Snapshot& snap);
Snapshot read_snapshot(const std::filesystem::path& path);

/// Spatial field: dims {nx} in 1D, {ny, nx} in 2D.
Snapshot field_snapshot(const Field& f, const Grid& grid);
/// Space-time field: dims {nt + 1, nx} or {nt + 1, ny, nx}.
Snapshot space_time_snapshot(const SpaceTimeField& f, const Grid& grid);

/// Inverse of field_snapshot / space_time_snapshot; throws ConformanceError
/// when the dims do not match the grids.
Field field_from_snapshot(const Snapshot& s, const Grid& grid);
SpaceTimeField space_time_from_snapshot(const Snapshot& s, const Grid& grid, const TimeGrid& time);

/// Minimal CSV writer with full double precision.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);
  void row(const std::vector<double>& values);

 private:
  std::ofstream out_;
  std::size_t columns_;
};

/// Reads a numeric CSV with one header line.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
  std::size_t column(const std::string& name) const;
};
CsvTable read_csv(const std::filesystem::path& path);

}  // namespace nch
