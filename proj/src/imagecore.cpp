#include "cbir/imagecore.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <fstream>
#include <memory>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "cbir/errors.hpp"

namespace cbir::imagecore {

namespace fs = std::filesystem;

GrayImage::GrayImage(std::size_t width, std::size_t height, double fill)
    : GrayImage(width, height, std::vector<double>(width * height, fill)) {}

GrayImage::GrayImage(std::size_t width, std::size_t height, std::vector<double> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
  if (width == 0 || height == 0) throw ParameterError("image sides must be at least 1");
  if (pixels_.size() != width * height) {
    throw ParameterError("pixel buffer has " + std::to_string(pixels_.size()) +
                         " values, expected " + std::to_string(width * height));
  }
}

double GrayImage::sum() const { return std::accumulate(pixels_.begin(), pixels_.end(), 0.0); }

namespace {

// Silent handlers; failures surface as exceptions after the longjmp.
void png_fail(png_structp png, png_const_charp) { png_longjmp(png, 1); }
void png_warn(png_structp, png_const_charp) {}

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const fs::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw IoError("cannot open " + path.string());
  return f;
}

GrayImage decode_png(const fs::path& path) {
  FilePtr file = open_file(path, "rb");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_fail, png_warn);
  if (png == nullptr) throw IoError("libpng initialisation failed");
  png_infop info = png_create_info_struct(png);
  std::vector<unsigned char> buffer;
  std::vector<png_bytep> rows;
  png_uint_32 width = 0;
  png_uint_32 height = 0;
  int depth = 0;
  int color = 0;
  bool unsupported = false;

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("corrupt or truncated PNG " + path.string());
  }
  png_init_io(png, file.get());
  png_read_info(png, info);
  png_get_IHDR(png, info, &width, &height, &depth, &color, nullptr, nullptr, nullptr);
  if ((color & PNG_COLOR_MASK_COLOR) != 0) {
    unsupported = true;
  } else {
    if (depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if ((color & PNG_COLOR_MASK_ALPHA) != 0) png_set_strip_alpha(png);
    png_read_update_info(png, info);
    const std::size_t row_bytes = png_get_rowbytes(png, info);
    buffer.resize(row_bytes * height);
    rows.resize(height);
    for (png_uint_32 r = 0; r < height; ++r) rows[r] = buffer.data() + r * row_bytes;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
  }
  png_destroy_read_struct(&png, &info, nullptr);
  if (unsupported) throw FormatError("colour PNG not supported: " + path.string());
  if (width == 0 || height == 0) throw FormatError("empty PNG " + path.string());

  std::vector<double> pixels(static_cast<std::size_t>(width) * height);
  if (depth == 16) {
    for (std::size_t i = 0; i < pixels.size(); ++i) {
      const unsigned v = (unsigned{buffer[2 * i]} << 8) | buffer[2 * i + 1];
      pixels[i] = v / 65535.0;
    }
  } else {
    for (std::size_t i = 0; i < pixels.size(); ++i) pixels[i] = buffer[i] / 255.0;
  }
  return GrayImage(width, height, std::move(pixels));
}

// Reads the next whitespace-delimited header token, skipping '#' comments.
std::string pgm_token(std::istream& in, const fs::path& path) {
  std::string token;
  int c = 0;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c) != 0) {
      if (!token.empty()) return token;
      continue;
    }
    token += static_cast<char>(c);
  }
  if (token.empty()) throw IoError("truncated PGM header in " + path.string());
  return token;
}

std::size_t pgm_number(std::istream& in, const fs::path& path) {
  const std::string tok = pgm_token(in, path);
  std::size_t pos = 0;
  unsigned long value = 0;
  try {
    value = std::stoul(tok, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != tok.size()) throw FormatError("bad PGM header field '" + tok + "' in " + path.string());
  return value;
}

GrayImage decode_pgm(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::array<char, 2> magic{};
  in.read(magic.data(), 2);
  const std::size_t width = pgm_number(in, path);
  const std::size_t height = pgm_number(in, path);
  const std::size_t maxval = pgm_number(in, path);
  if (width == 0 || height == 0) throw FormatError("PGM with zero side: " + path.string());
  if (maxval == 0 || maxval > 65535) throw FormatError("PGM maxval out of range: " + path.string());
  const std::size_t bytes_per = maxval > 255 ? 2 : 1;
  std::vector<unsigned char> data(width * height * bytes_per);
  in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(data.size()));
  if (static_cast<std::size_t>(in.gcount()) != data.size()) {
    throw IoError("truncated PGM pixel data in " + path.string());
  }
  std::vector<double> pixels(width * height);
  const auto scale = static_cast<double>(maxval);
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    const unsigned v = bytes_per == 2 ? (unsigned{data[2 * i]} << 8) | data[2 * i + 1] : data[i];
    pixels[i] = std::min(static_cast<double>(v) / scale, 1.0);
  }
  return GrayImage(width, height, std::move(pixels));
}

unsigned quantize(double v, unsigned maxval) {
  const double c = std::clamp(v, 0.0, 1.0);
  return static_cast<unsigned>(std::lround(c * maxval));
}

void check_depth(int bit_depth) {
  if (bit_depth != 8 && bit_depth != 16) throw ParameterError("bit depth must be 8 or 16");
}

}  // namespace

GrayImage load_gray(const fs::path& path) {
  std::ifstream probe(path, std::ios::binary);
  if (!probe) throw IoError("cannot open " + path.string());
  std::array<unsigned char, 8> sig{};
  probe.read(reinterpret_cast<char*>(sig.data()), sig.size());
  const auto got = static_cast<std::size_t>(probe.gcount());
  probe.close();
  if (got >= 8 && png_sig_cmp(sig.data(), 0, 8) == 0) return decode_png(path);
  if (got >= 2 && sig[0] == 'P' && sig[1] == '5') return decode_pgm(path);
  if (got < 2) throw IoError("file too short to identify: " + path.string());
  throw FormatError("unsupported image format: " + path.string());
}

void save_pgm(const GrayImage& img, const fs::path& path, int bit_depth) {
  check_depth(bit_depth);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  const unsigned maxval = bit_depth == 16 ? 65535u : 255u;
  out << "P5\n" << img.width() << ' ' << img.height() << '\n' << maxval << '\n';
  std::vector<unsigned char> data;
  data.reserve(img.pixels().size() * (bit_depth / 8));
  for (double v : img.pixels()) {
    const unsigned q = quantize(v, maxval);
    if (bit_depth == 16) data.push_back(static_cast<unsigned char>(q >> 8));
    data.push_back(static_cast<unsigned char>(q & 0xFF));
  }
  out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

void save_png(const GrayImage& img, const fs::path& path, int bit_depth) {
  check_depth(bit_depth);
  FilePtr file = open_file(path, "wb");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_fail, png_warn);
  if (png == nullptr) throw IoError("libpng initialisation failed");
  png_infop info = png_create_info_struct(png);
  const std::size_t bytes_per = bit_depth / 8;
  const unsigned maxval = bit_depth == 16 ? 65535u : 255u;
  std::vector<unsigned char> buffer(img.width() * img.height() * bytes_per);
  for (std::size_t i = 0; i < img.pixels().size(); ++i) {
    const unsigned q = quantize(img.pixels()[i], maxval);
    if (bytes_per == 2) {
      buffer[2 * i] = static_cast<unsigned char>(q >> 8);
      buffer[2 * i + 1] = static_cast<unsigned char>(q & 0xFF);
    } else {
      buffer[i] = static_cast<unsigned char>(q);
    }
  }
  std::vector<png_bytep> rows(img.height());
  for (std::size_t r = 0; r < img.height(); ++r) rows[r] = buffer.data() + r * img.width() * bytes_per;

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("PNG encoding failed for " + path.string());
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width()), static_cast<png_uint_32>(img.height()),
               bit_depth, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

GrayImage pad_to_square(const GrayImage& img) {
  const std::size_t side = std::max(img.width(), img.height());
  if (img.square()) return img;
  const std::size_t top = (side - img.height()) / 2;
  const std::size_t left = (side - img.width()) / 2;
  GrayImage out(side, side, 0.0);
  for (std::size_t r = 0; r < img.height(); ++r) {
    for (std::size_t c = 0; c < img.width(); ++c) out(r + top, c + left) = img(r, c);
  }
  return out;
}

namespace {

struct Tap {
  std::size_t lo;
  std::size_t hi;
  double frac;
};

std::vector<Tap> bilinear_taps(std::size_t in, std::size_t out) {
  std::vector<Tap> taps(out);
  const double scale = static_cast<double>(in) / static_cast<double>(out);
  const double last = static_cast<double>(in - 1);
  for (std::size_t i = 0; i < out; ++i) {
    const double src = std::clamp((static_cast<double>(i) + 0.5) * scale - 0.5, 0.0, last);
    const auto lo = static_cast<std::size_t>(std::floor(src));
    taps[i] = {lo, std::min(lo + 1, in - 1), src - static_cast<double>(lo)};
  }
  return taps;
}

}  // namespace

GrayImage resize_bilinear(const GrayImage& img, std::size_t new_width, std::size_t new_height) {
  if (new_width == 0 || new_height == 0) throw ParameterError("resize target must be at least 1x1");
  const auto xs = bilinear_taps(img.width(), new_width);
  const auto ys = bilinear_taps(img.height(), new_height);
  GrayImage out(new_width, new_height);
  for (std::size_t r = 0; r < new_height; ++r) {
    const Tap& ty = ys[r];
    for (std::size_t c = 0; c < new_width; ++c) {
      const Tap& tx = xs[c];
      const double a = img(ty.lo, tx.lo);
      const double b = img(ty.lo, tx.hi);
      const double d = img(ty.hi, tx.lo);
      const double e = img(ty.hi, tx.hi);
      // a + f*(b-a) keeps constants exact.
      const double top = a + tx.frac * (b - a);
      const double bottom = d + tx.frac * (e - d);
      out(r, c) = top + ty.frac * (bottom - top);
    }
  }
  return out;
}

GrayImage preprocess(const GrayImage& img, std::size_t target_side) {
  if (target_side == 0) throw ParameterError("target_side must be at least 1");
  GrayImage square = pad_to_square(img);
  if (square.width() == target_side) return square;
  return resize_bilinear(square, target_side, target_side);
}

FeatureVector downsample_raw(const GrayImage& img, double factor) {
  if (factor != 0.25 && factor != 0.5 && factor != 1.0) {
    throw ParameterError("raw downsampling factor must be 0.25, 0.5 or 1.0");
  }
  if (!img.square()) throw ParameterError("raw features require a square image");
  const double scaled = factor * static_cast<double>(img.width());
  if (scaled != std::floor(scaled) || scaled < 1.0) {
    throw ParameterError("factor " + std::to_string(factor) + " x side " +
                         std::to_string(img.width()) + " is not an integer side");
  }
  FeatureVector fv;
  fv.kind = FeatureKind::raw;
  if (factor == 1.0) {
    fv.values = img.pixels();
  } else {
    const auto side = static_cast<std::size_t>(scaled);
    fv.values = resize_bilinear(img, side, side).pixels();
  }
  return fv;
}

std::vector<const ManifestEntry*> DatasetManifest::select(Split split) const {
  std::vector<const ManifestEntry*> out;
  for (const auto& e : entries) {
    if (e.split == split) out.push_back(&e);
  }
  return out;
}

const ManifestEntry* DatasetManifest::find(const std::string& image_id) const {
  for (const auto& e : entries) {
    if (e.image_id == image_id) return &e;
  }
  return nullptr;
}

namespace {

constexpr std::string_view kManifestHeader = "image_id,file_path,irma_code,split";

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

}  // namespace

DatasetManifest load_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path.string());
  const fs::path base = path.parent_path();
  DatasetManifest manifest;
  std::unordered_set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!header_seen) {
      if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
      if (line != kManifestHeader) {
        throw ValidationError("manifest " + path.string() + " must start with header '" +
                              std::string(kManifestHeader) + "'");
      }
      header_seen = true;
      continue;
    }
    if (line.empty()) continue;
    const std::string where = "manifest row " + std::to_string(line_no);
    auto fields = split_csv_line(line);
    if (fields.size() != 4) {
      throw ValidationError(where + ": expected 4 fields, got " + std::to_string(fields.size()));
    }
    ManifestEntry entry;
    entry.image_id = fields[0];
    if (entry.image_id.empty()) throw ValidationError(where + ": empty image_id");
    if (!ids.insert(entry.image_id).second) {
      throw ValidationError(where + ": duplicate image_id '" + entry.image_id + "'");
    }
    entry.file_path = fields[1];
    if (entry.file_path.is_relative()) entry.file_path = base / entry.file_path;
    try {
      entry.irma_code = irma::parse_code(fields[2]);
    } catch (const ParseError& e) {
      throw ValidationError(where + ": " + e.what());
    }
    if (fields[3] == "train") {
      entry.split = Split::train;
    } else if (fields[3] == "test") {
      entry.split = Split::test;
    } else {
      throw ValidationError(where + ": split must be 'train' or 'test', got '" + fields[3] + "'");
    }
    manifest.entries.push_back(std::move(entry));
  }
  if (!header_seen) throw ValidationError("manifest " + path.string() + " is empty");
  return manifest;
}

void save_manifest(const DatasetManifest& manifest, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write manifest " + path.string());
  const fs::path base = path.parent_path();
  out << kManifestHeader << '\n';
  for (const auto& e : manifest.entries) {
    fs::path rel = e.file_path;
    if (rel.is_absolute() && !base.empty()) rel = fs::relative(rel, base);
    out << e.image_id << ',' << rel.generic_string() << ',' << e.irma_code.raw() << ','
        << (e.split == Split::train ? "train" : "test") << '\n';
  }
}

}  // namespace cbir::imagecore
