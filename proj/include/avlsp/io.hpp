#pragma once

#include <png.h>

#include <array>
#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "avlsp/error.hpp"
#include "avlsp/raster.hpp"

namespace avlsp {

// AVPM: "AVPM", u32 version, u32 width, u32 height, u32 channels, then
// width*height*channels float32 samples, planar, all little-endian.
inline constexpr std::array<char, 4> kAvpmMagic{'A', 'V', 'P', 'M'};
inline constexpr std::uint32_t kAvpmVersion = 1;

namespace detail {

inline void put_u32(std::vector<unsigned char>& buf, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xFFu));
}

inline std::uint32_t get_u32(const unsigned char* p) {
    return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) | (std::uint32_t(p[2]) << 16) | (std::uint32_t(p[3]) << 24);
}

inline std::vector<unsigned char> read_all(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

} // namespace detail

inline std::vector<unsigned char> encode_avpm(const Raster2D& r) {
    std::vector<unsigned char> buf;
    buf.reserve(20 + r.samples().size() * 4);
    buf.insert(buf.end(), kAvpmMagic.begin(), kAvpmMagic.end());
    detail::put_u32(buf, kAvpmVersion);
    detail::put_u32(buf, std::uint32_t(r.width()));
    detail::put_u32(buf, std::uint32_t(r.height()));
    detail::put_u32(buf, std::uint32_t(r.channels()));
    for (float v : r.samples()) detail::put_u32(buf, std::bit_cast<std::uint32_t>(v));
    return buf;
}

inline Raster2D decode_avpm(const std::vector<unsigned char>& buf) {
    if (buf.size() < 4) throw Error(ErrorCode::TruncatedFile, "AVPM header truncated");
    if (std::memcmp(buf.data(), kAvpmMagic.data(), 4) != 0) throw Error(ErrorCode::BadMagic, "not an AVPM file");
    if (buf.size() < 20) throw Error(ErrorCode::TruncatedFile, "AVPM header truncated");
    std::uint32_t version = detail::get_u32(buf.data() + 4);
    if (version != kAvpmVersion) {
        throw Error(ErrorCode::BadMagic, "unsupported AVPM version " + std::to_string(version));
    }
    std::uint32_t w = detail::get_u32(buf.data() + 8);
    std::uint32_t h = detail::get_u32(buf.data() + 12);
    std::uint32_t c = detail::get_u32(buf.data() + 16);
    if (w == 0 || h == 0 || c == 0 || w > (1u << 20) || h > (1u << 20) || c > 4096) {
        throw Error(ErrorCode::InvalidArgument, "implausible AVPM dimensions");
    }
    std::size_t n = std::size_t(w) * h * c;
    if (buf.size() < 20 + n * 4) throw Error(ErrorCode::TruncatedFile, "AVPM sample data truncated");
    std::vector<float> samples(n);
    for (std::size_t i = 0; i < n; ++i) {
        samples[i] = std::bit_cast<float>(detail::get_u32(buf.data() + 20 + 4 * i));
    }
    return Raster2D(int(w), int(h), int(c), std::move(samples));
}

inline Raster2D read_avpm(const std::filesystem::path& path) { return decode_avpm(detail::read_all(path)); }

inline void write_avpm(const Raster2D& r, const std::filesystem::path& path) {
    auto buf = encode_avpm(r);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoFailure, "cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(buf.data()), std::streamsize(buf.size()));
    if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
}

// ---------------------------------------------------------------- PNG -----

/// 8-bit image, interleaved channels (1 = gray, 3 = RGB).
struct Image8 {
    int width = 0;
    int height = 0;
    int channels = 0;
    std::vector<std::uint8_t> pixels;
};

namespace detail {

struct FileCloser {
    void operator()(std::FILE* f) const noexcept {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] inline void png_error_fn(png_structp png, png_const_charp msg) {
    auto* err = static_cast<std::string*>(png_get_error_ptr(png));
    if (err) *err = msg;
    png_longjmp(png, 1);
}

inline void png_warning_fn(png_structp, png_const_charp) {}

} // namespace detail

inline Image8 read_png(const std::filesystem::path& path) {
    detail::FilePtr fp(std::fopen(path.string().c_str(), "rb"));
    if (!fp) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());

    std::string err;
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &err, detail::png_error_fn, detail::png_warning_fn);
    if (!png) throw Error(ErrorCode::IoFailure, "png_create_read_struct failed");
    png_infop info = png_create_info_struct(png);
    Image8 img;
    std::vector<png_bytep> rows;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw Error(ErrorCode::IoFailure, "PNG decode failed for " + path.string() + ": " + err);
    }
    png_init_io(png, fp.get());
    png_read_info(png, info);

    png_byte color = png_get_color_type(png, info);
    png_byte depth = png_get_bit_depth(png, info);
    if (depth == 16) png_set_strip_16(png);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    png_read_update_info(png, info);

    img.width = int(png_get_image_width(png, info));
    img.height = int(png_get_image_height(png, info));
    img.channels = int(png_get_channels(png, info));
    img.pixels.resize(std::size_t(img.width) * img.height * img.channels);
    rows.resize(std::size_t(img.height));
    for (int y = 0; y < img.height; ++y) {
        rows[std::size_t(y)] = img.pixels.data() + std::size_t(y) * img.width * img.channels;
    }
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

inline void write_png(const Image8& img, const std::filesystem::path& path) {
    if (img.channels != 1 && img.channels != 3) {
        throw Error(ErrorCode::InvalidArgument, "PNG writer supports 1 or 3 channels");
    }
    detail::FilePtr fp(std::fopen(path.string().c_str(), "wb"));
    if (!fp) throw Error(ErrorCode::IoFailure, "cannot open " + path.string() + " for writing");

    std::string err;
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &err, detail::png_error_fn, detail::png_warning_fn);
    if (!png) throw Error(ErrorCode::IoFailure, "png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    std::vector<png_bytep> rows(std::size_t(img.height));
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw Error(ErrorCode::IoFailure, "PNG encode failed for " + path.string() + ": " + err);
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, png_uint_32(img.width), png_uint_32(img.height), 8,
                 img.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    // no timestamps or text chunks: output bytes depend only on pixels
    png_write_info(png, info);
    for (int y = 0; y < img.height; ++y) {
        rows[std::size_t(y)] = const_cast<png_bytep>(img.pixels.data() + std::size_t(y) * img.width * img.channels);
    }
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

inline LabelMap read_label_png(const std::filesystem::path& path) {
    Image8 img = read_png(path);
    if (img.channels != 1) throw Error(ErrorCode::InvalidArgument, path.string() + ": label PNG must be grayscale");
    return LabelMap(img.width, img.height, std::move(img.pixels));
}

inline void write_label_png(const LabelMap& labels, const std::filesystem::path& path) {
    write_png(Image8{labels.width(), labels.height(), 1, labels.data()}, path);
}

/// FOV masks are 8-bit grayscale (or RGB) PNGs; any nonzero sample is inside.
inline FovMask read_fov_png(const std::filesystem::path& path) {
    Image8 img = read_png(path);
    std::vector<std::uint8_t> inside(std::size_t(img.width) * img.height);
    for (std::size_t i = 0; i < inside.size(); ++i) {
        std::uint8_t any = 0;
        for (int c = 0; c < img.channels; ++c) any |= img.pixels[i * img.channels + c];
        inside[i] = any ? 1 : 0;
    }
    return FovMask(img.width, img.height, std::move(inside));
}

inline void write_fov_png(const FovMask& mask, const std::filesystem::path& path) {
    Image8 img{mask.width(), mask.height(), 1, mask.data()};
    for (auto& v : img.pixels) v = v ? 255 : 0;
    write_png(img, path);
}

/// RGB PNG to a planar 3-channel raster with samples in [0,255].
inline Raster2D read_rgb_png(const std::filesystem::path& path) {
    Image8 img = read_png(path);
    Raster2D out(img.width, img.height, 3);
    for (int c = 0; c < 3; ++c) {
        int src = img.channels == 1 ? 0 : c;
        auto ch = out.channel(c);
        for (std::size_t i = 0; i < ch.size(); ++i) ch[i] = img.pixels[i * img.channels + src];
    }
    return out;
}

inline void write_rgb_png(const Raster2D& rgb, const std::filesystem::path& path) {
    if (rgb.channels() != 3) throw Error(ErrorCode::InvalidArgument, "RGB writer needs a 3-channel raster");
    Image8 img{rgb.width(), rgb.height(), 3, std::vector<std::uint8_t>(rgb.plane_size() * 3)};
    for (int c = 0; c < 3; ++c) {
        auto ch = rgb.channel(c);
        for (std::size_t i = 0; i < ch.size(); ++i) {
            float v = ch[i] < 0.0f ? 0.0f : (ch[i] > 255.0f ? 255.0f : ch[i]);
            img.pixels[i * 3 + c] = std::uint8_t(v + 0.5f);
        }
    }
    write_png(img, path);
}

} // namespace avlsp
