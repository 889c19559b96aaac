#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "seglab/error.hpp"
#include "seglab/serialize.hpp"

namespace seglab {

struct PgmImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint16_t> samples;  // row-major
};

// Binary PGM (P5) with maxval 65535: two bytes per sample, high byte first.
inline void write_pgm(const std::filesystem::path& path, const PgmImage& img) {
  require(img.samples.size() == img.width * img.height, ErrorKind::Shape,
          "pgm sample count does not match dimensions");
  atomic_write(path, [&](std::ostream& os) {
    os << "P5\n" << img.width << " " << img.height << "\n65535\n";
    for (std::uint16_t s : img.samples) {
      const unsigned char b[2] = {(unsigned char)(s >> 8), (unsigned char)(s & 0xFF)};
      os.write(reinterpret_cast<const char*>(b), 2);
    }
  });
}

namespace detail {

struct PgmParser {
  const std::string& bytes;
  std::size_t pos = 0;
  const std::string& name;

  [[noreturn]] void die(const std::string& msg) const {
    fail(ErrorKind::Format,
         name + ": " + msg + " at byte " + std::to_string(pos));
  }

  int peek() const { return pos < bytes.size() ? (unsigned char)bytes[pos] : -1; }

  // Whitespace and '#' comment lines may separate header tokens.
  void skip_space_and_comments() {
    while (pos < bytes.size()) {
      const char c = bytes[pos];
      if (c == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        ++pos;
      } else {
        return;
      }
    }
  }

  std::uint64_t read_number(const char* what) {
    skip_space_and_comments();
    if (peek() < '0' || peek() > '9') die(std::string("expected ") + what);
    std::uint64_t v = 0;
    while (peek() >= '0' && peek() <= '9') {
      v = v * 10 + std::uint64_t(peek() - '0');
      if (v > 1000000000ull) die(std::string(what) + " out of range");
      ++pos;
    }
    return v;
  }
};

}  // namespace detail

inline PgmImage parse_pgm(const std::string& bytes, const std::string& name) {
  detail::PgmParser p{bytes, 0, name};
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5')
    p.die("not a binary PGM (missing P5)");
  p.pos = 2;
  PgmImage img;
  img.width = std::size_t(p.read_number("width"));
  img.height = std::size_t(p.read_number("height"));
  const std::uint64_t maxval = p.read_number("maxval");
  if (img.width == 0 || img.height == 0) p.die("zero image dimension");
  if (maxval != 65535) p.die("maxval must be 65535, got " + std::to_string(maxval));
  // Exactly one whitespace byte separates the header from the payload.
  if (p.peek() != ' ' && p.peek() != '\n' && p.peek() != '\t' && p.peek() != '\r')
    p.die("expected whitespace before payload");
  ++p.pos;
  const std::size_t need = img.width * img.height * 2;
  if (bytes.size() - p.pos < need) {
    p.pos = bytes.size();
    p.die("payload truncated, need " + std::to_string(need) + " bytes");
  }
  if (bytes.size() - p.pos > need) {
    p.pos += need;
    p.die("trailing bytes after payload");
  }
  img.samples.resize(img.width * img.height);
  for (std::size_t i = 0; i < img.samples.size(); ++i) {
    const unsigned char hi = (unsigned char)bytes[p.pos + 2 * i];
    const unsigned char lo = (unsigned char)bytes[p.pos + 2 * i + 1];
    img.samples[i] = std::uint16_t((hi << 8) | lo);
  }
  return img;
}

inline PgmImage read_pgm(const std::filesystem::path& path) {
  return parse_pgm(read_text(path), path.string());
}

}  // namespace seglab
