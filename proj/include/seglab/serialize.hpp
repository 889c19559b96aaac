#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "seglab/error.hpp"
#include "seglab/tensor.hpp"

namespace seglab {

// Binary tensor container: magic "NNT1", u32 rank, rank x u64 extents,
// then numel f64 values row-major. All integers and doubles little-endian.

namespace detail {

inline void put_bytes(std::ostream& os, const unsigned char* b, std::size_t n) {
  os.write(reinterpret_cast<const char*>(b), std::streamsize(n));
}

inline void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = (unsigned char)((v >> (8 * i)) & 0xFF);
  put_bytes(os, b, 4);
}

inline void put_u64(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = (unsigned char)((v >> (8 * i)) & 0xFF);
  put_bytes(os, b, 8);
}

inline void put_f64(std::ostream& os, double d) {
  std::uint64_t v;
  std::memcpy(&v, &d, 8);
  put_u64(os, v);
}

inline bool get_bytes(std::istream& is, unsigned char* b, std::size_t n) {
  is.read(reinterpret_cast<char*>(b), std::streamsize(n));
  return std::size_t(is.gcount()) == n;
}

inline std::uint32_t get_u32(std::istream& is, const char* what) {
  unsigned char b[4];
  require(get_bytes(is, b, 4), ErrorKind::Format,
          std::string("truncated while reading ") + what);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= std::uint32_t(b[i]) << (8 * i);
  return v;
}

inline std::uint64_t get_u64(std::istream& is, const char* what) {
  unsigned char b[8];
  require(get_bytes(is, b, 8), ErrorKind::Format,
          std::string("truncated while reading ") + what);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t(b[i]) << (8 * i);
  return v;
}

inline double get_f64(std::istream& is, const char* what) {
  std::uint64_t v = get_u64(is, what);
  double d;
  std::memcpy(&d, &v, 8);
  return d;
}

}  // namespace detail

inline void write_tensor(std::ostream& os, const Tensor& t) {
  os.write("NNT1", 4);
  detail::put_u32(os, std::uint32_t(t.rank()));
  for (std::size_t e : t.shape()) detail::put_u64(os, e);
  for (std::size_t i = 0; i < t.numel(); ++i) detail::put_f64(os, t[i]);
}

inline Tensor read_tensor(std::istream& is) {
  char magic[4];
  is.read(magic, 4);
  require(is.gcount() == 4 && std::memcmp(magic, "NNT1", 4) == 0,
          ErrorKind::Format, "tensor stream lacks NNT1 magic");
  std::uint32_t rank = detail::get_u32(is, "tensor rank");
  require(rank >= 1 && rank <= 8, ErrorKind::Format,
          "tensor rank " + std::to_string(rank) + " outside 1..8");
  Shape shape(rank);
  for (std::uint32_t i = 0; i < rank; ++i) {
    std::uint64_t e = detail::get_u64(is, "tensor extent");
    require(e >= 1 && e <= (1ull << 32), ErrorKind::Format,
            "tensor extent " + std::to_string(e) + " implausible");
    shape[i] = std::size_t(e);
  }
  std::size_t n = shape_numel(shape);
  require(n <= (1ull << 31), ErrorKind::Format, "tensor payload implausibly large");
  std::vector<double> values(n);
  for (std::size_t i = 0; i < n; ++i)
    values[i] = detail::get_f64(is, "tensor payload");
  return Tensor(std::move(shape), std::move(values));
}

// Atomic file replace: write to a sibling temp file, then rename over the
// target, so readers never observe a half-written file.
template <class WriteFn>
void atomic_write(const std::filesystem::path& path, WriteFn&& fn) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    require(os.good(), ErrorKind::Io, "cannot open " + tmp.string() + " for writing");
    fn(os);
    os.flush();
    require(os.good(), ErrorKind::Io, "write to " + tmp.string() + " failed");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  require(!ec, ErrorKind::Io, "rename to " + path.string() + " failed: " + ec.message());
}

inline void save_tensor(const std::filesystem::path& path, const Tensor& t) {
  atomic_write(path, [&](std::ostream& os) { write_tensor(os, t); });
}

inline Tensor load_tensor(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  require(is.good(), ErrorKind::Io, "cannot open " + path.string());
  return read_tensor(is);
}

inline void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
  atomic_write(path, [&](std::ostream& os) { os << text; });
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  require(is.good(), ErrorKind::Io, "cannot open " + path.string());
  std::string s((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return s;
}

}  // namespace seglab
