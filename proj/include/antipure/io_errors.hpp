#pragma once

#include <cstddef>
#include <filesystem>
#include <stdexcept>
#include <string>

namespace antipure {

// File could not be opened, read or written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed file contents; `offset` is the byte where decoding failed.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& source, std::size_t offset, const std::string& what)
      : std::runtime_error(source + ": byte " + std::to_string(offset) + ": " + what), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& bytes);

}  // namespace antipure
