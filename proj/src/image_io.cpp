#include "antipure/image_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>

#include "binio.hpp"

namespace antipure {

namespace {

constexpr std::string_view kRawMagic = "APIMGF64";
constexpr std::uint64_t kMaxRank = 8;

}  // namespace

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed on " + path.string());
  return bytes;
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed on " + path.string());
}

std::string encode_raw(const Image& img) {
  std::string out(kRawMagic);
  binio::put_u64(out, img.rank());
  for (std::size_t d : img.shape()) binio::put_u64(out, d);
  for (double v : img.data()) binio::put_f64(out, v);
  return out;
}

Image decode_raw(std::string_view bytes, const std::string& source) {
  binio::Reader r(bytes, source);
  r.expect_magic(kRawMagic);
  const std::size_t rank_at = r.offset();
  const std::uint64_t rank = r.u64();
  if (rank > kMaxRank) r.fail(rank_at, "rank " + std::to_string(rank) + " exceeds " + std::to_string(kMaxRank));
  Shape shape;
  std::uint64_t count = 1;
  for (std::uint64_t i = 0; i < rank; ++i) {
    const std::size_t at = r.offset();
    const std::uint64_t d = r.u64();
    if (d == 0 || d > (std::uint64_t{1} << 32) || count > (std::uint64_t{1} << 40) / d) r.fail(at, "implausible dimension");
    shape.push_back(d);
    count *= d;
  }
  std::vector<double> data(count);
  for (double& v : data) v = r.f64();
  if (!r.at_end()) r.fail(r.offset(), "trailing bytes after image data");
  return Image(std::move(shape), std::move(data));
}

void write_raw(const std::filesystem::path& path, const Image& img) { write_file(path, encode_raw(img)); }
Image read_raw(const std::filesystem::path& path) { return decode_raw(read_file(path), path.string()); }

std::string encode_pgm(const Image& img) {
  if (img.rank() != 3) throw std::invalid_argument("PGM export expects a (C,H,W) image, got " + shape_str(img.shape()));
  const std::size_t C = img.dim(0), H = img.dim(1), W = img.dim(2);
  std::ostringstream header;
  header << "P5\n" << W << ' ' << C * H << "\n255\n";
  std::string out = header.str();
  out.reserve(out.size() + img.size());
  for (double v : img.data()) {
    const double q = std::round((std::clamp(v, -1.0, 1.0) + 1.0) * 0.5 * 255.0);
    out.push_back(static_cast<char>(static_cast<unsigned char>(q)));
  }
  return out;
}

Image decode_pgm(std::string_view bytes, const std::string& source) {
  std::size_t pos = 0;
  auto fail = [&](std::size_t at, const std::string& what) -> void { throw ParseError(source, at, what); };
  auto skip_space = [&] {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto number = [&]() -> std::size_t {
    skip_space();
    const std::size_t start = pos;
    std::size_t v = 0;
    while (pos < bytes.size() && std::isdigit(static_cast<unsigned char>(bytes[pos]))) {
      v = v * 10 + static_cast<std::size_t>(bytes[pos] - '0');
      if (v > 1'000'000) fail(start, "header value too large");
      ++pos;
    }
    if (pos == start) fail(start, "expected a decimal header value");
    return v;
  };
  if (bytes.substr(0, 2) != "P5") fail(0, "bad magic, expected 'P5'");
  pos = 2;
  const std::size_t w = number();
  const std::size_t h = number();
  const std::size_t maxval_at = pos;
  const std::size_t maxval = number();
  if (w == 0 || h == 0) fail(maxval_at, "zero image dimension");
  if (maxval != 255) fail(maxval_at, "only maxval 255 is supported");
  if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos]))) fail(pos, "missing separator before pixel data");
  ++pos;
  if (bytes.size() - pos < w * h) fail(bytes.size(), "pixel data truncated, expected " + std::to_string(w * h) + " bytes");
  if (bytes.size() - pos > w * h) fail(pos + w * h, "trailing bytes after pixel data");
  Image img(Shape{1, h, w});
  for (std::size_t i = 0; i < w * h; ++i) {
    img[i] = static_cast<double>(static_cast<unsigned char>(bytes[pos + i])) / 255.0 * 2.0 - 1.0;
  }
  return img;
}

void write_pgm(const std::filesystem::path& path, const Image& img) { write_file(path, encode_pgm(img)); }
Image read_pgm(const std::filesystem::path& path) { return decode_pgm(read_file(path), path.string()); }

void write_image_set(const std::filesystem::path& dir, const ImageSet& set) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
  for (std::size_t i = 0; i < set.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "img_%04zu", i);
    write_raw(dir / (std::string(name) + ".apf"), set[i]);
    write_pgm(dir / (std::string(name) + ".pgm"), set[i]);
  }
}

ImageSet read_image_set(const std::filesystem::path& dir) {
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) throw IoError("not a directory: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".apf") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  ImageSet set;
  for (const auto& f : files) set.push_back(read_raw(f));
  return set;
}

}  // namespace antipure
