#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pathonet/annotations.hpp"
#include "pathonet/tensor.hpp"

namespace pathonet {

// Point annotations become per-class density maps: a Gaussian bump around each
// center plus a tall spike at the center pixel itself. The spike survives
// downstream blurring, which is what seeded peak extraction keys on.
struct LabelRenderConfig {
    float sigma2 = 9.0f;         // Gaussian variance in px^2
    float peak = 255.0f;         // bump amplitude at distance 0
    float center_value = 2250.0f;  // written over the exact center pixel

    void validate() const {
        if (!(sigma2 > 0.0f)) throw std::invalid_argument("render: sigma2 must be positive");
        if (!(peak > 0.0f)) throw std::invalid_argument("render: peak must be positive");
        if (center_value < peak)
            throw std::invalid_argument("render: center_value must be >= peak");
    }
};

// Renders a 3xHxW map, channel per class. Overlapping bumps combine by
// per-pixel max (not sum), values below 1 are dropped, the rest are rounded to
// whole numbers and capped at peak; center pixels are then overwritten with
// center_value regardless of what the bumps produced there.
inline Tensor render_density_map(const std::vector<CellAnnotation>& anns, int height, int width,
                                 const LabelRenderConfig& cfg = {}) {
    cfg.validate();
    if (height <= 0 || width <= 0) throw std::invalid_argument("render: non-positive map size");
    Tensor out = Tensor::zeros({3, height, width});
    for (const auto& a : anns) {
        if (a.x < 0 || a.x >= width || a.y < 0 || a.y >= height)
            throw std::runtime_error("render: annotation (" + std::to_string(a.x) + "," +
                                     std::to_string(a.y) + ") outside " + std::to_string(width) +
                                     "x" + std::to_string(height) + " map");
    }
    // amplitude(r^2) = peak * exp(-r^2 / (2 sigma2)); find the radius past
    // which it falls under 1 so each bump touches a bounded window.
    const double ln_peak = std::log(static_cast<double>(cfg.peak));
    const int radius = static_cast<int>(std::ceil(std::sqrt(2.0 * cfg.sigma2 * ln_peak)));
    for (const auto& a : anns) {
        const int ch = static_cast<int>(a.cls);
        const int y0 = std::max(0, a.y - radius), y1 = std::min(height - 1, a.y + radius);
        const int x0 = std::max(0, a.x - radius), x1 = std::min(width - 1, a.x + radius);
        for (int y = y0; y <= y1; ++y) {
            for (int x = x0; x <= x1; ++x) {
                const double r2 = static_cast<double>(x - a.x) * (x - a.x) +
                                  static_cast<double>(y - a.y) * (y - a.y);
                const double amp = cfg.peak * std::exp(-r2 / (2.0 * cfg.sigma2));
                if (amp < 1.0) continue;
                float& cell = out.at3(ch, y, x);
                if (static_cast<double>(cell) < amp) cell = static_cast<float>(amp);
            }
        }
    }
    for (float& v : out.data) {
        v = std::round(v);
        if (v > cfg.peak) v = cfg.peak;
    }
    for (const auto& a : anns) out.at3(static_cast<int>(a.cls), a.y, a.x) = cfg.center_value;
    return out;
}

namespace detail {

inline void put_u32(std::ostream& os, std::uint32_t v) {
    os.write(reinterpret_cast<const char*>(&v), 4);
}

inline std::uint32_t get_u32(std::istream& is, const std::string& what) {
    std::uint32_t v = 0;
    if (!is.read(reinterpret_cast<char*>(&v), 4))
        throw std::runtime_error("dmap: truncated " + what);
    return v;
}

}  // namespace detail

inline constexpr std::uint32_t kDmapVersion = 1;

// "DMAP" magic, u32 version, u32 channels, u32 height, u32 width, then
// channels*height*width float32 values, all little-endian, channel-major.
inline void save_dmap(const std::string& path, const Tensor& map) {
    static_assert(sizeof(float) == 4);
    if (map.shape.size() != 3)
        throw std::invalid_argument("dmap: expected a CxHxW tensor, got " + map.shape_str());
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("dmap: cannot write " + path);
    os.write("DMAP", 4);
    detail::put_u32(os, kDmapVersion);
    detail::put_u32(os, static_cast<std::uint32_t>(map.shape[0]));
    detail::put_u32(os, static_cast<std::uint32_t>(map.shape[1]));
    detail::put_u32(os, static_cast<std::uint32_t>(map.shape[2]));
    os.write(reinterpret_cast<const char*>(map.data.data()),
             static_cast<std::streamsize>(map.data.size() * sizeof(float)));
    os.flush();
    if (!os) throw std::runtime_error("dmap: write failed for " + path);
}

inline Tensor load_dmap(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("dmap: cannot open " + path);
    char magic[4] = {};
    if (!is.read(magic, 4) || std::memcmp(magic, "DMAP", 4) != 0)
        throw std::runtime_error("dmap: bad magic in " + path);
    const std::uint32_t version = detail::get_u32(is, "version");
    if (version != kDmapVersion)
        throw std::runtime_error("dmap: unsupported version " + std::to_string(version));
    const std::uint32_t c = detail::get_u32(is, "channel count");
    const std::uint32_t h = detail::get_u32(is, "height");
    const std::uint32_t w = detail::get_u32(is, "width");
    if (c == 0 || h == 0 || w == 0 || c > 16 || h > 1u << 20 || w > 1u << 20)
        throw std::runtime_error("dmap: implausible dimensions in " + path);
    Tensor map = Tensor::zeros({static_cast<int>(c), static_cast<int>(h), static_cast<int>(w)});
    if (!is.read(reinterpret_cast<char*>(map.data.data()),
                 static_cast<std::streamsize>(map.data.size() * sizeof(float))))
        throw std::runtime_error("dmap: truncated data in " + path);
    char probe;
    if (is.read(&probe, 1)) throw std::runtime_error("dmap: trailing data in " + path);
    return map;
}

}  // namespace pathonet
