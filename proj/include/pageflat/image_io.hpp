#pragma once

// PNG/JPEG codecs for the CLI boundary. The core library never touches
// files; only the tool and the test suites include this header.

#include <cctype>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <jpeglib.h>
#include <png.h>

#include "pageflat/raster.hpp"

namespace pageflat {

namespace detail {

struct FileCloser {
    void operator()(std::FILE* f) const noexcept {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

struct JpegErr {
    jpeg_error_mgr mgr;
    std::jmp_buf jump;
    char message[JMSG_LENGTH_MAX] = {};
};

inline void jpeg_throw(j_common_ptr cinfo) {
    auto* err = reinterpret_cast<JpegErr*>(cinfo->err);
    (*cinfo->err->format_message)(cinfo, err->message);
    std::longjmp(err->jump, 1);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// PNG
// ---------------------------------------------------------------------------

[[nodiscard]] inline Raster read_png(const std::string& path) {
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&image, path.c_str()))
        throw std::runtime_error("cannot read PNG " + path + ": " + image.message);
    const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
    image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, buf.data(), 0, nullptr)) {
        png_image_free(&image);
        throw std::runtime_error("cannot decode PNG " + path + ": " + image.message);
    }
    return Raster(static_cast<int>(image.width), static_cast<int>(image.height), color ? 3 : 1,
                  std::move(buf));
}

inline void write_png(const Raster& img, const std::string& path) {
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(img.width());
    image.height = static_cast<png_uint_32>(img.height());
    image.format = img.channels() == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    if (!png_image_write_to_file(&image, path.c_str(), 0, img.data().data(), 0, nullptr))
        throw std::runtime_error("cannot write PNG " + path + ": " + image.message);
}

// ---------------------------------------------------------------------------
// JPEG
// ---------------------------------------------------------------------------

[[nodiscard]] inline Raster read_jpeg(const std::string& path) {
    detail::FilePtr f(std::fopen(path.c_str(), "rb"));
    if (!f) throw std::runtime_error("cannot open " + path);

    jpeg_decompress_struct cinfo{};
    detail::JpegErr err{};
    cinfo.err = jpeg_std_error(&err.mgr);
    err.mgr.error_exit = detail::jpeg_throw;
    if (setjmp(err.jump)) {
        jpeg_destroy_decompress(&cinfo);
        throw std::runtime_error("cannot decode JPEG " + path + ": " + err.message);
    }
    jpeg_create_decompress(&cinfo);
    jpeg_stdio_src(&cinfo, f.get());
    jpeg_read_header(&cinfo, TRUE);
    cinfo.out_color_space = cinfo.num_components == 1 ? JCS_GRAYSCALE : JCS_RGB;
    jpeg_start_decompress(&cinfo);

    const int w = static_cast<int>(cinfo.output_width);
    const int h = static_cast<int>(cinfo.output_height);
    const int ch = cinfo.output_components;
    std::vector<std::uint8_t> buf(static_cast<std::size_t>(w) * h * ch);
    while (cinfo.output_scanline < cinfo.output_height) {
        JSAMPROW row = buf.data() + static_cast<std::size_t>(cinfo.output_scanline) * w * ch;
        jpeg_read_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_decompress(&cinfo);
    jpeg_destroy_decompress(&cinfo);
    return Raster(w, h, ch, std::move(buf));
}

inline void write_jpeg(const Raster& img, const std::string& path, int quality = 92) {
    detail::FilePtr f(std::fopen(path.c_str(), "wb"));
    if (!f) throw std::runtime_error("cannot open " + path + " for writing");

    jpeg_compress_struct cinfo{};
    detail::JpegErr err{};
    cinfo.err = jpeg_std_error(&err.mgr);
    err.mgr.error_exit = detail::jpeg_throw;
    if (setjmp(err.jump)) {
        jpeg_destroy_compress(&cinfo);
        throw std::runtime_error("cannot encode JPEG " + path + ": " + err.message);
    }
    jpeg_create_compress(&cinfo);
    jpeg_stdio_dest(&cinfo, f.get());
    cinfo.image_width = static_cast<JDIMENSION>(img.width());
    cinfo.image_height = static_cast<JDIMENSION>(img.height());
    cinfo.input_components = img.channels();
    cinfo.in_color_space = img.channels() == 1 ? JCS_GRAYSCALE : JCS_RGB;
    jpeg_set_defaults(&cinfo);
    jpeg_set_quality(&cinfo, quality, TRUE);
    jpeg_start_compress(&cinfo, TRUE);
    const std::size_t stride = static_cast<std::size_t>(img.width()) * img.channels();
    while (cinfo.next_scanline < cinfo.image_height) {
        JSAMPROW row = const_cast<JSAMPROW>(img.data().data() + cinfo.next_scanline * stride);
        jpeg_write_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_compress(&cinfo);
    jpeg_destroy_compress(&cinfo);
}

// ---------------------------------------------------------------------------
// Format dispatch
// ---------------------------------------------------------------------------

[[nodiscard]] inline Raster read_image(const std::string& path) {
    detail::FilePtr f(std::fopen(path.c_str(), "rb"));
    if (!f) throw std::runtime_error("cannot open " + path);
    unsigned char magic[4] = {};
    const std::size_t got = std::fread(magic, 1, sizeof magic, f.get());
    f.reset();
    if (got >= 4 && magic[0] == 0x89 && magic[1] == 'P' && magic[2] == 'N' && magic[3] == 'G')
        return read_png(path);
    if (got >= 2 && magic[0] == 0xFF && magic[1] == 0xD8) return read_jpeg(path);
    throw std::runtime_error("unsupported image format: " + path);
}

inline bool has_suffix(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && std::equal(suffix.rbegin(), suffix.rend(), s.rbegin(),
                                                   [](char a, char b) { return std::tolower(b) == a; });
}

inline void write_image(const Raster& img, const std::string& path, int jpeg_quality = 92) {
    if (has_suffix(path, ".jpg") || has_suffix(path, ".jpeg"))
        write_jpeg(img, path, jpeg_quality);
    else
        write_png(img, path);
}

}  // namespace pageflat
