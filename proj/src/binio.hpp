#pragma once

// Little-endian binary encoding helpers shared by the image and checkpoint formats.

#include <bit>
#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>

#include "antipure/io_errors.hpp"

namespace antipure::binio {

inline void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_f64(std::string& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

class Reader {
 public:
  Reader(std::string_view bytes, std::string source) : bytes_(bytes), source_(std::move(source)) {}

  std::size_t offset() const { return pos_; }
  bool at_end() const { return pos_ == bytes_.size(); }

  void expect_magic(std::string_view magic) {
    const std::size_t at = pos_;
    if (take(magic.size()) != magic) throw ParseError(source_, at, "bad magic, expected '" + std::string(magic) + "'");
  }

  std::uint64_t u64() {
    const std::string_view b = take(8);
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(b[static_cast<std::size_t>(i)]);
    return v;
  }

  double f64() { return std::bit_cast<double>(u64()); }

  std::string_view take(std::size_t n) {
    if (bytes_.size() - pos_ < n) {
      throw ParseError(source_, pos_, "unexpected end of data, wanted " + std::to_string(n) + " bytes");
    }
    const std::string_view v = bytes_.substr(pos_, n);
    pos_ += n;
    return v;
  }

  [[noreturn]] void fail(std::size_t at, const std::string& what) const { throw ParseError(source_, at, what); }

 private:
  std::string_view bytes_;
  std::string source_;
  std::size_t pos_ = 0;
};

}  // namespace antipure::binio
