#pragma once

// PGF1 binary fields, CSV export and PGM previews.
//
// PGF1 layout (little-endian):
//   "PGF1" | u32 version = 1 | u32 kind (0 image, 1 data, 2 pyramid) | u32 reserved
//   u32 nx | u32 ny | u32 nt | f64 dx | f64 dt | row-major f64 values

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "pat/dwt.hpp"
#include "pat/errors.hpp"
#include "pat/grid.hpp"

namespace pat {

enum class PgfKind : std::uint32_t { Image = 0, Data = 1, Pyramid = 2 };

struct PgfHeader {
  PgfKind kind = PgfKind::Image;
  std::uint32_t nx = 0, ny = 0, nt = 0;
  double dx = 0.0, dt = 0.0;

  Grid2D grid() const { return make_grid(nx, ny, nt, dx, dt); }
};

struct PgfFile {
  PgfHeader header;
  std::vector<double> values;
};

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xffu));
}

inline void put_u64(std::string& out, std::uint64_t v) {
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xffu));
}

inline void put_f64(std::string& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

class ByteReader {
 public:
  explicit ByteReader(const std::string& bytes) : bytes_(bytes) {}

  std::uint64_t get(int width) {
    if (pos_ + static_cast<std::size_t>(width) > bytes_.size()) throw FormatError("PGF1 file is truncated");
    std::uint64_t v = 0;
    for (int b = 0; b < width; ++b)
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + b])) << (8 * b);
    pos_ += static_cast<std::size_t>(width);
    return v;
  }
  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  double f64() { return std::bit_cast<double>(get(8)); }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

inline std::string read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_all(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("write failed for " + path.string());
}

}  // namespace detail

inline std::string encode_pgf(const PgfHeader& h, std::span<const double> values) {
  std::string out = "PGF1";
  detail::put_u32(out, 1);
  detail::put_u32(out, static_cast<std::uint32_t>(h.kind));
  detail::put_u32(out, 0);
  detail::put_u32(out, h.nx);
  detail::put_u32(out, h.ny);
  detail::put_u32(out, h.nt);
  detail::put_f64(out, h.dx);
  detail::put_f64(out, h.dt);
  out.reserve(out.size() + 8 * values.size());
  for (double v : values) detail::put_f64(out, v);
  return out;
}

inline PgfFile decode_pgf(const std::string& bytes) {
  if (bytes.size() < 4 || bytes.compare(0, 4, "PGF1") != 0) throw FormatError("missing PGF1 magic");
  detail::ByteReader r(bytes);
  r.get(4);
  if (const auto version = r.u32(); version != 1) throw FormatError("unsupported PGF1 version " + std::to_string(version));
  const std::uint32_t kind = r.u32();
  if (kind > 2) throw FormatError("unknown PGF1 kind " + std::to_string(kind));
  r.u32();
  PgfFile f;
  f.header.kind = static_cast<PgfKind>(kind);
  f.header.nx = r.u32();
  f.header.ny = r.u32();
  f.header.nt = r.u32();
  f.header.dx = r.f64();
  f.header.dt = r.f64();
  try {
    (void)f.header.grid();
  } catch (const InvalidGrid& e) {
    throw FormatError(std::string("PGF1 header describes an invalid grid: ") + e.what());
  }
  const std::size_t rows = f.header.kind == PgfKind::Data ? f.header.nt : f.header.ny;
  const std::size_t count = static_cast<std::size_t>(f.header.nx) * rows;
  if (r.remaining() != 8 * count)
    throw FormatError("PGF1 payload has " + std::to_string(r.remaining()) + " bytes, expected " +
                      std::to_string(8 * count));
  f.values.resize(count);
  for (double& v : f.values) v = r.f64();
  return f;
}

inline PgfHeader header_for(const Grid2D& g, PgfKind kind) {
  return {kind, static_cast<std::uint32_t>(g.nx()), static_cast<std::uint32_t>(g.ny()),
          static_cast<std::uint32_t>(g.nt()), g.dx(), g.dt()};
}

inline PgfHeader read_pgf_header(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::string head(44, '\0');
  in.read(head.data(), 44);
  if (in.gcount() != 44) throw FormatError("PGF1 header is truncated");
  detail::ByteReader r(head);
  if (head.compare(0, 4, "PGF1") != 0) throw FormatError("missing PGF1 magic");
  r.get(4);
  if (r.u32() != 1) throw FormatError("unsupported PGF1 version");
  const std::uint32_t kind = r.u32();
  if (kind > 2) throw FormatError("unknown PGF1 kind");
  r.u32();
  return {static_cast<PgfKind>(kind), r.u32(), r.u32(), r.u32(), r.f64(), r.f64()};
}

template <FieldKind K>
inline void write_field(const std::filesystem::path& path, const Field<K>& f) {
  detail::write_all(path, encode_pgf(header_for(f.grid(), K == FieldKind::Image ? PgfKind::Image : PgfKind::Data),
                                     f.values()));
}

template <FieldKind K>
inline Field<K> read_field(const std::filesystem::path& path) {
  PgfFile f = decode_pgf(detail::read_all(path));
  const PgfKind want = K == FieldKind::Image ? PgfKind::Image : PgfKind::Data;
  if (f.header.kind != want)
    throw FormatError(path.string() + " holds kind " + std::to_string(static_cast<int>(f.header.kind)) +
                      ", expected " + std::to_string(static_cast<int>(want)));
  return Field<K>(f.header.grid(), std::move(f.values));
}

inline ImageField read_image(const std::filesystem::path& p) { return read_field<FieldKind::Image>(p); }
inline DataField read_data(const std::filesystem::path& p) { return read_field<FieldKind::Data>(p); }

inline std::filesystem::path pyramid_sidecar(const std::filesystem::path& path) {
  return std::filesystem::path(path.string() + ".index.csv");
}

/// Writes the flat coefficient vector plus the CSV sidecar `level,orientation,offset,length`.
inline void write_pyramid(const std::filesystem::path& path, const WaveletPyramid& p) {
  detail::write_all(path, encode_pgf(header_for(p.grid(), PgfKind::Pyramid), p.data()));
  std::ostringstream csv;
  csv << "level,orientation,offset,length\n";
  csv << 0 << ',' << 0 << ',' << 0 << ',' << p.coarse().size() << '\n';
  for (int level = 1; level <= p.levels(); ++level)
    for (int o = 1; o <= 3; ++o)
      csv << level << ',' << o << ',' << p.offset(level, o) << ',' << p.detail(level, o).size() << '\n';
  detail::write_all(pyramid_sidecar(path), csv.str());
}

/// Reads a pyramid written with the same wavelet; the sidecar must match its layout.
inline WaveletPyramid read_pyramid(const std::filesystem::path& path, const WaveletSpec& spec) {
  PgfFile f = decode_pgf(detail::read_all(path));
  if (f.header.kind != PgfKind::Pyramid) throw FormatError(path.string() + " is not a pyramid");
  WaveletPyramid p(f.header.grid(), spec);
  if (p.size() != f.values.size()) throw FormatError("pyramid payload does not match the grid");
  std::istringstream csv(detail::read_all(pyramid_sidecar(path)));
  std::string line;
  std::getline(csv, line);
  if (line != "level,orientation,offset,length") throw FormatError("bad pyramid sidecar header");
  int rows = 0;
  while (std::getline(csv, line)) {
    if (line.empty()) continue;
    int level = 0, o = 0;
    std::size_t off = 0, len = 0;
    char c1 = 0, c2 = 0, c3 = 0;
    std::istringstream row(line);
    if (!(row >> level >> c1 >> o >> c2 >> off >> c3 >> len) || c1 != ',' || c2 != ',' || c3 != ',')
      throw FormatError("bad pyramid sidecar row: " + line);
    if (level < 0 || level > spec.levels()) throw FormatError("sidecar level out of range: " + line);
    const std::size_t want_off = level == 0 ? 0 : p.offset(level, o);
    const std::size_t want_len = level == 0 ? p.coarse().size() : p.detail(level, o).size();
    if (off != want_off || len != want_len) throw FormatError("sidecar disagrees with wavelet layout: " + line);
    ++rows;
  }
  if (rows != 1 + 3 * spec.levels()) throw FormatError("sidecar has " + std::to_string(rows) + " rows");
  std::copy(f.values.begin(), f.values.end(), p.data().begin());
  return p;
}

/// One row per y (or t) index, comma separated.
template <FieldKind K>
inline void write_csv(const std::filesystem::path& path, const Field<K>& f) {
  std::ostringstream out;
  out << std::setprecision(17);
  for (std::size_t r = 0; r < f.rows(); ++r) {
    for (std::size_t c = 0; c < f.cols(); ++c) out << (c ? "," : "") << f(r, c);
    out << '\n';
  }
  detail::write_all(path, out.str());
}

/// 8-bit binary PGM, linear window over [min, max]; a constant field maps to 0.
template <FieldKind K>
inline std::string encode_pgm(const Field<K>& f) {
  const auto v = f.values();
  const auto [lo_it, hi_it] = std::minmax_element(v.begin(), v.end());
  const double lo = *lo_it, span = *hi_it - *lo_it;
  std::string out = "P5\n" + std::to_string(f.cols()) + " " + std::to_string(f.rows()) + "\n255\n";
  for (double x : v) {
    const double s = span > 0.0 ? (x - lo) / span : 0.0;
    out.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(std::clamp(s, 0.0, 1.0) * 255.0))));
  }
  return out;
}

template <FieldKind K>
inline void write_pgm(const std::filesystem::path& path, const Field<K>& f) {
  detail::write_all(path, encode_pgm(f));
}

}  // namespace pat
