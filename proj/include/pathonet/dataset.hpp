#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "pathonet/annotations.hpp"
#include "pathonet/image.hpp"
#include "pathonet/tensor.hpp"

namespace pathonet {

enum class Split { train, test };

// Deterministic image-level split: exactly llround(train_fraction*n) sources
// go to train, chosen by a seeded shuffle. Splitting whole source images (and
// not their tiles) keeps near-duplicate crops out of the held-out set.
inline std::vector<Split> assign_split(int n_images, double train_fraction, std::uint64_t seed) {
    if (n_images < 0) throw std::invalid_argument("split: negative image count");
    if (!(train_fraction >= 0.0 && train_fraction <= 1.0))
        throw std::invalid_argument("split: train fraction must lie in [0,1]");
    const auto n_train = static_cast<int>(std::llround(train_fraction * n_images));
    std::vector<int> order(static_cast<std::size_t>(n_images));
    std::iota(order.begin(), order.end(), 0);
    std::mt19937 rng(static_cast<std::uint32_t>(seed));
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<Split> out(static_cast<std::size_t>(n_images), Split::test);
    for (int i = 0; i < n_train; ++i) out[static_cast<std::size_t>(order[i])] = Split::train;
    return out;
}

struct Tile {
    int tx = 0;  // grid column
    int ty = 0;  // grid row
    ImageU8 image;
    std::vector<CellAnnotation> annotations;  // tile-local coordinates
};

// Non-overlapping tile-by-tile grid anchored at the top-left corner. Partial
// tiles on the right/bottom margins are dropped, along with any cells that
// fall on them.
inline std::vector<Tile> tile_image(const ImageU8& image, const std::vector<CellAnnotation>& anns,
                                    int tile = 256) {
    if (tile <= 0) throw std::invalid_argument("tile: non-positive tile size");
    if (image.width < tile || image.height < tile)
        throw std::runtime_error("tile: image " + std::to_string(image.width) + "x" +
                                 std::to_string(image.height) + " smaller than tile size " +
                                 std::to_string(tile));
    const int nx = image.width / tile;
    const int ny = image.height / tile;
    std::vector<Tile> out;
    out.reserve(static_cast<std::size_t>(nx) * ny);
    for (int ty = 0; ty < ny; ++ty) {
        for (int tx = 0; tx < nx; ++tx) {
            Tile t;
            t.tx = tx;
            t.ty = ty;
            t.image = ImageU8(tile, tile);
            const int ox = tx * tile, oy = ty * tile;
            for (int y = 0; y < tile; ++y)
                for (int x = 0; x < tile; ++x)
                    for (int c = 0; c < 3; ++c) t.image.at(x, y, c) = image.at(ox + x, oy + y, c);
            out.push_back(std::move(t));
        }
    }
    for (const auto& a : anns) {
        const int tx = a.x / tile, ty = a.y / tile;
        if (a.x < 0 || a.y < 0 || tx >= nx || ty >= ny) continue;
        CellAnnotation local = a;
        local.x = a.x - tx * tile;
        local.y = a.y - ty * tile;
        out[static_cast<std::size_t>(ty) * nx + tx].annotations.push_back(local);
    }
    return out;
}

// The eight symmetries of a square grid. Training augmentation uses the first
// six; the remaining two exist so compositions stay inside the set.
enum class Dihedral {
    identity,
    flip_x,
    flip_y,
    rot90,  // clockwise
    rot180,
    rot270,
    transpose,
    antitranspose,
};

inline constexpr std::array<Dihedral, 6> kAugmentVariants = {
    Dihedral::identity, Dihedral::flip_x, Dihedral::flip_y,
    Dihedral::rot90,    Dihedral::rot180, Dihedral::rot270,
};

inline constexpr std::array<Dihedral, 8> kAllDihedrals = {
    Dihedral::identity, Dihedral::flip_x, Dihedral::flip_y,    Dihedral::rot90,
    Dihedral::rot180,   Dihedral::rot270, Dihedral::transpose, Dihedral::antitranspose,
};

inline const char* to_string(Dihedral d) {
    switch (d) {
        case Dihedral::identity: return "identity";
        case Dihedral::flip_x: return "flip_x";
        case Dihedral::flip_y: return "flip_y";
        case Dihedral::rot90: return "rot90";
        case Dihedral::rot180: return "rot180";
        case Dihedral::rot270: return "rot270";
        case Dihedral::transpose: return "transpose";
        case Dihedral::antitranspose: return "antitranspose";
    }
    throw std::invalid_argument("dihedral: bad variant value");
}

namespace detail {

inline bool dihedral_swaps_axes(Dihedral d) {
    return d == Dihedral::rot90 || d == Dihedral::rot270 || d == Dihedral::transpose ||
           d == Dihedral::antitranspose;
}

// Source pixel sampled for destination (x, y); src is w*h.
inline std::pair<int, int> dihedral_source(Dihedral d, int x, int y, int w, int h) {
    switch (d) {
        case Dihedral::identity: return {x, y};
        case Dihedral::flip_x: return {w - 1 - x, y};
        case Dihedral::flip_y: return {x, h - 1 - y};
        case Dihedral::rot90: return {y, h - 1 - x};
        case Dihedral::rot180: return {w - 1 - x, h - 1 - y};
        case Dihedral::rot270: return {w - 1 - y, x};
        case Dihedral::transpose: return {y, x};
        case Dihedral::antitranspose: return {w - 1 - y, h - 1 - x};
    }
    throw std::invalid_argument("dihedral: bad variant value");
}

}  // namespace detail

// Destination of source point (px, py) under the same transform the pixel
// remap applies; src is w*h.
inline std::pair<int, int> dihedral_point(Dihedral d, int px, int py, int w, int h) {
    switch (d) {
        case Dihedral::identity: return {px, py};
        case Dihedral::flip_x: return {w - 1 - px, py};
        case Dihedral::flip_y: return {px, h - 1 - py};
        case Dihedral::rot90: return {h - 1 - py, px};
        case Dihedral::rot180: return {w - 1 - px, h - 1 - py};
        case Dihedral::rot270: return {py, w - 1 - px};
        case Dihedral::transpose: return {py, px};
        case Dihedral::antitranspose: return {h - 1 - py, w - 1 - px};
    }
    throw std::invalid_argument("dihedral: bad variant value");
}

inline ImageU8 apply_dihedral(const ImageU8& src, Dihedral d) {
    const bool swap = detail::dihedral_swaps_axes(d);
    ImageU8 dst(swap ? src.height : src.width, swap ? src.width : src.height);
    for (int y = 0; y < dst.height; ++y) {
        for (int x = 0; x < dst.width; ++x) {
            const auto [sx, sy] = detail::dihedral_source(d, x, y, src.width, src.height);
            for (int c = 0; c < 3; ++c) dst.at(x, y, c) = src.at(sx, sy, c);
        }
    }
    return dst;
}

inline Tensor apply_dihedral(const Tensor& src, Dihedral d) {
    if (src.shape.size() != 3)
        throw std::invalid_argument("dihedral: expected a CxHxW tensor, got " + src.shape_str());
    const int c = src.shape[0], h = src.shape[1], w = src.shape[2];
    const bool swap = detail::dihedral_swaps_axes(d);
    Tensor dst = Tensor::zeros({c, swap ? w : h, swap ? h : w});
    const int dh = dst.shape[1], dw = dst.shape[2];
    for (int ch = 0; ch < c; ++ch)
        for (int y = 0; y < dh; ++y)
            for (int x = 0; x < dw; ++x) {
                const auto [sx, sy] = detail::dihedral_source(d, x, y, w, h);
                dst.at3(ch, y, x) = src.at3(ch, sy, sx);
            }
    return dst;
}

inline std::vector<CellAnnotation> apply_dihedral(const std::vector<CellAnnotation>& anns,
                                                  Dihedral d, int w, int h) {
    std::vector<CellAnnotation> out;
    out.reserve(anns.size());
    for (const auto& a : anns) {
        CellAnnotation m = a;
        std::tie(m.x, m.y) = dihedral_point(d, a.x, a.y, w, h);
        out.push_back(m);
    }
    return out;
}

struct AugmentedPair {
    Dihedral variant = Dihedral::identity;
    Tensor image;
    Tensor label;
};

// Six symmetry variants of an image/label pair, transform applied to both.
inline std::vector<AugmentedPair> augment6(const Tensor& image, const Tensor& label) {
    if (image.shape.size() != 3 || label.shape.size() != 3)
        throw std::invalid_argument("augment: expected CxHxW tensors");
    if (image.shape[1] != image.shape[2])
        throw std::invalid_argument("augment: tile must be square, got " + image.shape_str());
    if (label.shape[1] != image.shape[1] || label.shape[2] != image.shape[2])
        throw std::invalid_argument("augment: image/label size mismatch");
    std::vector<AugmentedPair> out;
    out.reserve(kAugmentVariants.size());
    for (Dihedral d : kAugmentVariants) {
        AugmentedPair p;
        p.variant = d;
        p.image = apply_dihedral(image, d);
        p.label = apply_dihedral(label, d);
        out.push_back(std::move(p));
    }
    return out;
}

}  // namespace pathonet
