#include "sardet/png_io.hpp"

#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include <png.h>

#include "sardet/error.hpp"

namespace sardet {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) {
            std::fclose(f);
        }
    }
};
using FileHandle = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] void on_png_error(png_structp png, png_const_charp msg) {
    *static_cast<std::string*>(png_get_error_ptr(png)) = msg ? msg : "libpng error";
    png_longjmp(png, 1);
}

void on_png_warning(png_structp, png_const_charp) {}

} // namespace

void save_png(const RGBImage& img, const std::filesystem::path& path) {
    if (img.width <= 0 || img.height <= 0 ||
        img.samples.size() != static_cast<std::size_t>(img.width) * img.height * 3) {
        throw ValidationError("save_png: sample count does not match dimensions");
    }
    FileHandle file(std::fopen(path.string().c_str(), "wb"));
    if (!file) {
        throw IoError("cannot open " + path.string() + " for writing");
    }

    // every C++ object lives before setjmp so a longjmp cannot skip a destructor
    std::string error_msg;
    std::vector<png_bytep> rows(static_cast<std::size_t>(img.height));
    for (int y = 0; y < img.height; ++y) {
        rows[static_cast<std::size_t>(y)] =
            const_cast<png_bytep>(img.samples.data() + img.offset(0, y));
    }

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &error_msg,
                                              on_png_error, on_png_warning);
    if (!png) {
        throw IoError("libpng: cannot allocate write struct");
    }
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw IoError("libpng: cannot allocate info struct");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("libpng write failure on " + path.string() + ": " + error_msg);
    }

    png_init_io(png, file.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(img.width),
                 static_cast<png_uint_32>(img.height), 8, PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    png_write_rows(png, rows.data(), static_cast<png_uint_32>(rows.size()));
    png_write_end(png, info);
    png_destroy_write_struct(&png, &info);
}

RGBImage load_png(const std::filesystem::path& path) {
    FileHandle file(std::fopen(path.string().c_str(), "rb"));
    if (!file) {
        throw IoError("cannot open " + path.string());
    }

    std::string error_msg;
    RGBImage img;
    std::vector<png_bytep> rows;
    volatile bool header_ok = false; // written between setjmp and longjmp

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &error_msg,
                                             on_png_error, on_png_warning);
    if (!png) {
        throw IoError("libpng: cannot allocate read struct");
    }
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw IoError("libpng: cannot allocate info struct");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw ValidationError(path.string() + ": " +
                              (header_ok ? "truncated or malformed PNG data: "
                                         : "malformed PNG: ") +
                              error_msg);
    }

    png_init_io(png, file.get());
    png_read_info(png, info);
    const int bit_depth = png_get_bit_depth(png, info);
    const int color_type = png_get_color_type(png, info);
    if (bit_depth != 8 || color_type != PNG_COLOR_TYPE_RGB) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw ValidationError(path.string() + ": not an 8-bit RGB PNG (bit depth " +
                              std::to_string(bit_depth) + ", color type " +
                              std::to_string(color_type) + ")");
    }
    header_ok = true;

    img.width = static_cast<int>(png_get_image_width(png, info));
    img.height = static_cast<int>(png_get_image_height(png, info));
    img.samples.resize(static_cast<std::size_t>(img.width) * img.height * 3);
    rows.resize(static_cast<std::size_t>(img.height));
    for (int y = 0; y < img.height; ++y) {
        rows[static_cast<std::size_t>(y)] = img.samples.data() + img.offset(0, y);
    }
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

} // namespace sardet
