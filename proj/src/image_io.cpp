#include <png.h>

#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <memory>
#include <vector>

#include "mitoforge/error.hpp"
#include "mitoforge/imaging.hpp"

namespace mitoforge {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const noexcept { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

// RAII for the libpng read structs.
class PngReader {
 public:
  PngReader() {
    png_ = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr,
                                  nullptr);
    if (png_ != nullptr) info_ = png_create_info_struct(png_);
  }
  ~PngReader() { png_destroy_read_struct(&png_, &info_, nullptr); }
  PngReader(const PngReader&) = delete;
  PngReader& operator=(const PngReader&) = delete;

  png_structp png() const noexcept { return png_; }
  png_infop info() const noexcept { return info_; }

 private:
  png_structp png_ = nullptr;
  png_infop info_ = nullptr;
};

}  // namespace

ImageBuffer load_png(const std::filesystem::path& path) {
  FilePtr file(std::fopen(path.c_str(), "rb"));
  if (!file) fail(ErrorKind::Io, "cannot open " + path.string());

  png_byte sig[8];
  if (std::fread(sig, 1, 8, file.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    fail(ErrorKind::Io, path.string() + " is not a PNG file");
  }

  PngReader reader;
  if (reader.png() == nullptr || reader.info() == nullptr) {
    fail(ErrorKind::Io, "libpng initialisation failed");
  }
  png_structp png = reader.png();
  png_infop info = reader.info();

  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<png_byte> raw;
  std::vector<png_bytep> rows;

  // No C++ objects with non-trivial destructors are created between setjmp
  // and the last libpng call.
  if (setjmp(png_jmpbuf(png))) {
    fail(ErrorKind::Io, "corrupt PNG data in " + path.string());
  }
  png_init_io(png, file.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  const png_byte color = png_get_color_type(png, info);
  const png_byte depth = png_get_bit_depth(png, info);
  if (depth == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) {
    png_set_expand_gray_1_2_4_to_8(png);
  }
  if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) {
    png_set_gray_to_rgb(png);
  }
  // tRNS chunks are ignored: transparency is dropped, not composited.
  png_set_strip_alpha(png);
  png_read_update_info(png, info);

  height = png_get_image_height(png, info);
  width = png_get_image_width(png, info);
  const std::size_t rowbytes = png_get_rowbytes(png, info);
  if (rowbytes != width * 3) {
    fail(ErrorKind::Io, "unsupported PNG layout in " + path.string());
  }
  raw.resize(height * rowbytes);
  rows.resize(height);
  for (std::size_t y = 0; y < height; ++y) rows[y] = raw.data() + y * rowbytes;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);

  std::vector<double> data(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) data[i] = raw[i] / 255.0;
  return ImageBuffer(height, width, std::move(data));
}

void save_png(const ImageBuffer& img, const std::filesystem::path& path) {
  if (img.empty()) fail(ErrorKind::InvalidInput, "cannot save an empty image");
  std::vector<png_byte> bytes(img.size());
  const auto data = img.data();
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    bytes[i] = static_cast<png_byte>(std::lround(data[i] * 255.0));
  }

  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width());
  image.height = static_cast<png_uint_32>(img.height());
  image.format = PNG_FORMAT_RGB;
  if (png_image_write_to_file(&image, path.c_str(), 0, bytes.data(), 0,
                              nullptr) == 0) {
    const std::string msg = image.message;
    png_image_free(&image);
    fail(ErrorKind::Io, "cannot write " + path.string() + ": " + msg);
  }
}

}  // namespace mitoforge
