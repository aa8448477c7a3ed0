#pragma once

#include <cstring>
#include <stdexcept>
#include <string>
#include <vector>

#include <png.h>

#include "pathonet/tensor.hpp"

namespace pathonet {

// 8-bit RGB image, interleaved row-major.
struct ImageU8 {
    int width = 0;
    int height = 0;
    std::vector<unsigned char> rgb;

    ImageU8() = default;
    ImageU8(int w, int h) : width(w), height(h), rgb(static_cast<std::size_t>(w) * h * 3, 0) {
        if (w <= 0 || h <= 0) throw std::invalid_argument("image: non-positive dimensions");
    }

    unsigned char& at(int x, int y, int c) {
        return rgb[(static_cast<std::size_t>(y) * width + x) * 3 + c];
    }
    unsigned char at(int x, int y, int c) const {
        return rgb[(static_cast<std::size_t>(y) * width + x) * 3 + c];
    }
};

inline ImageU8 read_png(const std::string& path) {
    png_image png;
    std::memset(&png, 0, sizeof(png));
    png.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&png, path.c_str()))
        throw std::runtime_error("png: cannot read " + path + ": " + png.message);
    png.format = PNG_FORMAT_RGB;
    ImageU8 img(static_cast<int>(png.width), static_cast<int>(png.height));
    if (!png_image_finish_read(&png, nullptr, img.rgb.data(), 0, nullptr)) {
        std::string msg = png.message;
        png_image_free(&png);
        throw std::runtime_error("png: decode failed for " + path + ": " + msg);
    }
    return img;
}

inline void write_png(const std::string& path, const ImageU8& img) {
    png_image png;
    std::memset(&png, 0, sizeof(png));
    png.version = PNG_IMAGE_VERSION;
    png.width = static_cast<png_uint_32>(img.width);
    png.height = static_cast<png_uint_32>(img.height);
    png.format = PNG_FORMAT_RGB;
    if (!png_image_write_to_file(&png, path.c_str(), 0, img.rgb.data(), 0, nullptr))
        throw std::runtime_error("png: cannot write " + path + ": " + png.message);
}

// [0,255] bytes to [0,1] float planes, channel-major.
inline Tensor image_to_tensor(const ImageU8& img) {
    Tensor t({3, img.height, img.width});
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < img.height; ++y)
            for (int x = 0; x < img.width; ++x)
                t.at3(c, y, x) = static_cast<float>(img.at(x, y, c)) / 255.0f;
    return t;
}

inline ImageU8 tensor_to_image(const Tensor& t) {
    if (t.rank() != 3 || t.dim(0) != 3) throw std::invalid_argument("image: tensor must be 3xHxW");
    ImageU8 img(t.dim(2), t.dim(1));
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < img.height; ++y)
            for (int x = 0; x < img.width; ++x) {
                const float v = t.at3(c, y, x) * 255.0f;
                img.at(x, y, c) = static_cast<unsigned char>(v < 0.0f ? 0.0f : (v > 255.0f ? 255.0f : v + 0.5f));
            }
    return img;
}

}  // namespace pathonet
