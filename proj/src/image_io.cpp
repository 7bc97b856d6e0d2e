#include "identiface/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cstring>
#include <fstream>
#include <memory>
#include <string>

#include "identiface/error.hpp"

namespace identiface {

namespace {

constexpr std::uint8_t kPngSignature[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};

class NetpbmReader {
 public:
  explicit NetpbmReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::size_t next_int(const char* what) {
    skip_space_and_comments();
    if (pos_ >= bytes_.size() || !std::isdigit(bytes_[pos_])) {
      throw FormatError(std::string("netpbm header: expected ") + what);
    }
    std::size_t value = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      value = value * 10 + (bytes_[pos_++] - '0');
      if (value > (1u << 24)) throw FormatError(std::string("netpbm header: ") + what + " too large");
    }
    return value;
  }

  // Exactly one whitespace byte separates maxval from the raster.
  std::span<const std::uint8_t> raster() {
    if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) {
      throw FormatError("netpbm header: missing separator before raster");
    }
    return bytes_.subspan(pos_ + 1);
  }

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 2;
};

Image decode_netpbm(std::span<const std::uint8_t> bytes, std::size_t channels) {
  NetpbmReader reader(bytes);
  const std::size_t width = reader.next_int("width");
  const std::size_t height = reader.next_int("height");
  const std::size_t maxval = reader.next_int("maxval");
  if (width == 0 || height == 0) throw FormatError("netpbm image has zero dimension");
  if (maxval != 255) {
    throw FormatError("unsupported netpbm maxval " + std::to_string(maxval) +
                      " (only 8-bit, maxval 255)");
  }
  const auto raster = reader.raster();
  const std::size_t needed = width * height * channels;
  if (raster.size() < needed) throw FormatError("netpbm raster truncated");
  Image image(width, height, channels);
  std::transform(raster.begin(), raster.begin() + static_cast<std::ptrdiff_t>(needed),
                 image.pixels.begin(), [](std::uint8_t b) { return static_cast<double>(b); });
  return image;
}

std::uint32_t read_be32(const std::uint8_t* p) {
  return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) | (std::uint32_t{p[2]} << 8) |
         std::uint32_t{p[3]};
}

struct PngImageGuard {
  png_image* image;
  ~PngImageGuard() { png_image_free(image); }
};

Image decode_png(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 33 || std::memcmp(bytes.data() + 12, "IHDR", 4) != 0) {
    throw FormatError("PNG missing IHDR chunk");
  }
  const std::uint8_t* ihdr = bytes.data() + 16;
  const std::uint8_t bit_depth = ihdr[8];
  const std::uint8_t color_type = ihdr[9];
  const std::uint8_t interlace = ihdr[12];
  if (bit_depth != 8) {
    throw FormatError("unsupported PNG bit depth " + std::to_string(bit_depth));
  }
  if (interlace != 0) throw FormatError("interlaced PNG is not supported");
  if (color_type != 0 && color_type != 2 && color_type != 3 && color_type != 4 &&
      color_type != 6) {
    throw FormatError("unsupported PNG color type " + std::to_string(color_type));
  }
  if (read_be32(ihdr) == 0 || read_be32(ihdr + 4) == 0) {
    throw FormatError("PNG image has zero dimension");
  }

  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  PngImageGuard guard{&png};
  if (!png_image_begin_read_from_memory(&png, bytes.data(), bytes.size())) {
    throw FormatError(std::string("PNG decode failed: ") + png.message);
  }
  png.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, buffer.data(), 0, nullptr)) {
    throw FormatError(std::string("PNG decode failed: ") + png.message);
  }
  Image image(png.width, png.height, 3);
  std::transform(buffer.begin(), buffer.end(), image.pixels.begin(),
                 [](std::uint8_t b) { return static_cast<double>(b); });
  return image;
}

std::vector<std::uint8_t> to_bytes(const Image& image) {
  const Image q = quantize(image);
  std::vector<std::uint8_t> out(q.pixels.size());
  std::transform(q.pixels.begin(), q.pixels.end(), out.begin(),
                 [](double v) { return static_cast<std::uint8_t>(v); });
  return out;
}

std::vector<std::uint8_t> encode_netpbm(const Image& image, const char* magic) {
  const std::string header = std::string(magic) + "\n" + std::to_string(image.width) + " " +
                             std::to_string(image.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  const auto raster = to_bytes(image);
  out.insert(out.end(), raster.begin(), raster.end());
  return out;
}

}  // namespace

Image decode_image(std::span<const std::uint8_t> bytes) {
  if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '5') return decode_netpbm(bytes, 1);
  if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '6') return decode_netpbm(bytes, 3);
  if (bytes.size() >= 8 && std::memcmp(bytes.data(), kPngSignature, 8) == 0) {
    return decode_png(bytes);
  }
  throw FormatError("unrecognized image format (expected P5 PGM, P6 PPM or PNG)");
}

Image decode_image_file(const std::filesystem::path& path) {
  return decode_image(read_file_bytes(path));
}

std::vector<std::uint8_t> encode_pgm(const Image& image) {
  return encode_netpbm(to_grayscale(image), "P5");
}

std::vector<std::uint8_t> encode_ppm(const Image& image) {
  return encode_netpbm(to_rgb(image), "P6");
}

std::vector<std::uint8_t> encode_png(const Image& image) {
  if (image.channels != 1 && image.channels != 3) {
    throw FormatError("PNG encoder supports 1 or 3 channels");
  }
  const auto raster = to_bytes(image);
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(image.width);
  png.height = static_cast<png_uint_32>(image.height);
  png.format = image.channels == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  PngImageGuard guard{&png};
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&png, nullptr, &size, 0, raster.data(), 0, nullptr)) {
    throw FormatError(std::string("PNG encode failed: ") + png.message);
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&png, out.data(), &size, 0, raster.data(), 0, nullptr)) {
    throw FormatError(std::string("PNG encode failed: ") + png.message);
  }
  out.resize(size);
  return out;
}

void write_image_file(const Image& image, const std::filesystem::path& path) {
  const std::string ext = path.extension().string();
  if (ext == ".pgm") {
    write_file_bytes(path, encode_pgm(image));
  } else if (ext == ".ppm") {
    write_file_bytes(path, encode_ppm(image));
  } else if (ext == ".png") {
    write_file_bytes(path, encode_png(image));
  } else {
    throw FormatError("unsupported output image extension '" + ext + "'");
  }
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open file " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write file " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("short write to " + path.string());
}

}  // namespace identiface
