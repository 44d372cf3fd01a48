#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "antipure/denoiser.hpp"
#include "antipure/io_errors.hpp"

// Image files.
//
// Lossless raw form (.apf), little-endian:
//   8 bytes  magic "APIMGF64"
//   u64      rank
//   u64[rank] dims
//   f64[prod(dims)] values, row-major
//
// Viewing form: binary PGM (P5, maxval 255), value v in [-1, 1] stored as
// round((v + 1) / 2 * 255). Multi-channel images are stacked vertically.
// Pipelines always read the raw form; PGM is written for inspection only.
namespace antipure {

std::string encode_raw(const Image& img);
Image decode_raw(std::string_view bytes, const std::string& source = "<memory>");
void write_raw(const std::filesystem::path& path, const Image& img);
Image read_raw(const std::filesystem::path& path);

std::string encode_pgm(const Image& img);
// Returns a (1, H, W) image.
Image decode_pgm(std::string_view bytes, const std::string& source = "<memory>");
void write_pgm(const std::filesystem::path& path, const Image& img);
Image read_pgm(const std::filesystem::path& path);

// Writes img_0000.apf / img_0000.pgm ... into `dir` (created if missing).
void write_image_set(const std::filesystem::path& dir, const ImageSet& set);
// Reads every *.apf in `dir`, sorted by file name.
ImageSet read_image_set(const std::filesystem::path& dir);

}  // namespace antipure
