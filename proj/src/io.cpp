#include "nch/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>

#include "nch/errors.hpp"

namespace nch {

static_assert(std::endian::native == std::endian::little,
              "snapshot I/O assumes a little-endian host");

namespace {

constexpr const char* kMagic = "nch-snapshot 1";

std::size_t product(const std::vector<std::size_t>& dims) {
  return std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>());
}

std::vector<std::size_t> spatial_dims(const Grid& grid) {
  if (grid.dim() == 1) return {static_cast<std::size_t>(grid.nx())};
  return {static_cast<std::size_t>(grid.ny()), static_cast<std::size_t>(grid.nx())};
}

std::string dims_string(const std::vector<std::size_t>& dims) {
  std::string s;
  for (std::size_t d : dims) s += (s.empty() ? "" : " ") + std::to_string(d);
  return s;
}

}  // namespace

void write_snapshot(const std::filesystem::path& path, const Snapshot& snap) {
  if (product(snap.dims) != snap.data.size()) {
    throw ConformanceError("snapshot dims do not match data length");
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out << kMagic << "\n"
      << "dtype f64\n"
      << "endian little\n"
      << "order row-major\n"
      << "dims " << dims_string(snap.dims) << "\n"
      << "end\n";
  out.write(reinterpret_cast<const char*>(snap.data.data()),
            static_cast<std::streamsize>(snap.data.size() * sizeof(double)));
  if (!out) throw Error("write to '" + path.string() + "' failed");
}

Snapshot read_snapshot(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open snapshot '" + path.string() + "'");
  auto bad = [&](const std::string& why) {
    return Error("malformed snapshot '" + path.string() + "': " + why);
  };
  std::string line;
  if (!std::getline(in, line) || line != kMagic) throw bad("missing header");
  Snapshot snap;
  bool have_dims = false;
  while (std::getline(in, line) && line != "end") {
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "dtype") {
      std::string v;
      ls >> v;
      if (v != "f64") throw bad("unsupported dtype '" + v + "'");
    } else if (key == "endian") {
      std::string v;
      ls >> v;
      if (v != "little") throw bad("unsupported byte order '" + v + "'");
    } else if (key == "order") {
      std::string v;
      ls >> v;
      if (v != "row-major") throw bad("unsupported layout '" + v + "'");
    } else if (key == "dims") {
      std::size_t d;
      while (ls >> d) snap.dims.push_back(d);
      have_dims = !snap.dims.empty();
    } else {
      throw bad("unknown header key '" + key + "'");
    }
  }
  if (line != "end") throw bad("unterminated header");
  if (!have_dims) throw bad("no dims");
  snap.data.resize(product(snap.dims));
  in.read(reinterpret_cast<char*>(snap.data.data()),
          static_cast<std::streamsize>(snap.data.size() * sizeof(double)));
  if (in.gcount() != static_cast<std::streamsize>(snap.data.size() * sizeof(double))) {
    throw bad("truncated data");
  }
  if (in.peek() != std::ifstream::traits_type::eof()) throw bad("trailing bytes");
  return snap;
}

Snapshot field_snapshot(const Field& f, const Grid& grid) {
  require_conforming(f, grid);
  return {spatial_dims(grid), std::vector<double>(f.data(), f.data() + f.size())};
}

Snapshot space_time_snapshot(const SpaceTimeField& f, const Grid& grid) {
  Snapshot s;
  s.dims = spatial_dims(grid);
  s.dims.insert(s.dims.begin(), f.size());
  s.data.reserve(product(s.dims));
  for (std::size_t n = 0; n < f.size(); ++n) {
    require_conforming(f[n], grid);
    s.data.insert(s.data.end(), f[n].data(), f[n].data() + f[n].size());
  }
  return s;
}

Field field_from_snapshot(const Snapshot& s, const Grid& grid) {
  if (s.dims != spatial_dims(grid)) {
    throw ConformanceError("snapshot dims [" + dims_string(s.dims) + "] do not match grid [" +
                           dims_string(spatial_dims(grid)) + "]");
  }
  return Eigen::Map<const Field>(s.data.data(), static_cast<Eigen::Index>(s.data.size()));
}

SpaceTimeField space_time_from_snapshot(const Snapshot& s, const Grid& grid,
                                        const TimeGrid& time) {
  std::vector<std::size_t> expected = spatial_dims(grid);
  expected.insert(expected.begin(), static_cast<std::size_t>(time.steps() + 1));
  if (s.dims != expected) {
    throw ConformanceError("snapshot dims [" + dims_string(s.dims) + "] do not match [" +
                           dims_string(expected) + "]");
  }
  const auto per = static_cast<Eigen::Index>(grid.size());
  std::vector<Field> slices;
  for (std::size_t n = 0; n < expected[0]; ++n) {
    slices.emplace_back(Eigen::Map<const Field>(s.data.data() + n * grid.size(), per));
  }
  return SpaceTimeField(std::move(slices));
}

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
    : columns_(header.size()) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  out_.open(path);
  if (!out_) throw Error("cannot open '" + path.string() + "' for writing");
  out_ << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (std::size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
  out_ << "\n";
}

void CsvWriter::row(const std::vector<double>& values) {
  if (values.size() != columns_) throw ConformanceError("CSV row has wrong number of columns");
  for (std::size_t i = 0; i < values.size(); ++i) out_ << (i ? "," : "") << values[i];
  out_ << "\n";
}

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw Error("CSV has no column '" + name + "'");
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw Error("empty CSV '" + path.string() + "'");
  {
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) t.header.push_back(cell);
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string cell;
    std::vector<double> row;
    while (std::getline(ls, cell, ',')) {
      row.push_back(cell.empty() ? std::numeric_limits<double>::quiet_NaN() : std::stod(cell));
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

}  // namespace nch
