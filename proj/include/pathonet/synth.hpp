#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "pathonet/annotations.hpp"
#include "pathonet/image.hpp"

namespace pathonet {

// Procedural histology-like tiles with exact ground truth: stained (brown) and
// unstained (blue) tumor nuclei plus small dark lymphocytes on a noisy light
// background. Meant to exercise the pipeline end to end, not to look real.
struct SynthConfig {
    int tile = 256;
    std::array<std::pair<int, int>, 3> count_range = {{{3, 10}, {3, 10}, {0, 5}}};
    std::pair<int, int> radius_range = {4, 9};
    std::array<std::array<std::uint8_t, 3>, 3> colors = {{
        {158, 100, 48},  // immunopositive: brown
        {72, 84, 168},   // immunonegative: blue
        {38, 44, 112},   // lymphocyte: dark blue
    }};
    std::array<std::uint8_t, 3> background = {231, 215, 221};
    double overlap_probability = 0.0;
    float noise_amplitude = 8.0f;
    std::uint64_t seed = 0;

    void validate() const {
        if (tile < 32) throw std::invalid_argument("synth: tile size too small");
        for (const auto& [lo, hi] : count_range)
            if (lo < 0 || hi < lo) throw std::invalid_argument("synth: bad cell-count range");
        if (radius_range.first < 2 || radius_range.second < radius_range.first)
            throw std::invalid_argument("synth: radii must be at least 2 and ordered");
        if (!(overlap_probability >= 0.0 && overlap_probability <= 1.0))
            throw std::invalid_argument("synth: overlap probability outside [0,1]");
        if (noise_amplitude < 0.0f) throw std::invalid_argument("synth: negative noise amplitude");
    }
};

struct EllipseGeom {
    int cx = 0;
    int cy = 0;
    int radius = 0;      // nominal radius the axes were jittered from
    double axis_a = 0.0;
    double axis_b = 0.0;
    double theta = 0.0;
    CellClass cls = CellClass::immunopositive;

    bool contains(int x, int y) const {
        const double dx = x - cx, dy = y - cy;
        const double u = (dx * std::cos(theta) + dy * std::sin(theta)) / axis_a;
        const double v = (-dx * std::sin(theta) + dy * std::cos(theta)) / axis_b;
        return u * u + v * v <= 1.0;
    }
};

struct SynthTile {
    ImageU8 image;
    std::vector<CellAnnotation> annotations;
    std::vector<EllipseGeom> cells;
};

inline SynthTile generate_tile(const SynthConfig& cfg) {
    cfg.validate();
    std::mt19937 rng(static_cast<std::uint32_t>(cfg.seed));
    SynthTile out;
    out.image = ImageU8(cfg.tile, cfg.tile);

    std::uniform_real_distribution<float> noise(-cfg.noise_amplitude, cfg.noise_amplitude);
    for (int y = 0; y < cfg.tile; ++y)
        for (int x = 0; x < cfg.tile; ++x)
            for (int c = 0; c < 3; ++c) {
                const float v = static_cast<float>(cfg.background[static_cast<std::size_t>(c)]) +
                                (cfg.noise_amplitude > 0.0f ? noise(rng) : 0.0f);
                out.image.at(x, y, c) = static_cast<unsigned char>(
                    v < 0.0f ? 0.0f : (v > 255.0f ? 255.0f : v + 0.5f));
            }

    std::uniform_int_distribution<int> radius(cfg.radius_range.first, cfg.radius_range.second);
    std::uniform_real_distribution<double> ratio(0.7, 1.3);
    std::uniform_real_distribution<double> angle(0.0, 3.14159265358979323846);
    std::bernoulli_distribution overlap_coin(cfg.overlap_probability);
    std::uniform_int_distribution<int> jitter(-15, 15);

    // The whole jittered ellipse must stay inside the tile.
    const int margin =
        static_cast<int>(std::ceil(1.3 * cfg.radius_range.second)) + 1;
    if (2 * margin >= cfg.tile) throw std::invalid_argument("synth: radii too large for tile");
    std::uniform_int_distribution<int> pos(margin, cfg.tile - 1 - margin);

    for (int cls = 0; cls < 3; ++cls) {
        std::uniform_int_distribution<int> count(cfg.count_range[static_cast<std::size_t>(cls)].first,
                                                 cfg.count_range[static_cast<std::size_t>(cls)].second);
        const int n = count(rng);
        for (int i = 0; i < n; ++i) {
            EllipseGeom e;
            e.cls = static_cast<CellClass>(cls);
            e.radius = radius(rng);
            e.axis_a = e.radius;
            e.axis_b = e.radius * ratio(rng);
            e.theta = angle(rng);
            const bool may_overlap = cfg.overlap_probability > 0.0 && overlap_coin(rng);
            bool placed = false;
            for (int attempt = 0; attempt < 4000 && !placed; ++attempt) {
                e.cx = pos(rng);
                e.cy = pos(rng);
                bool ok = true;
                for (const auto& other : out.cells) {
                    const double dx = e.cx - other.cx, dy = e.cy - other.cy;
                    const double d = std::sqrt(dx * dx + dy * dy);
                    // Apart by the full jittered extents unless this cell was
                    // chosen to overlap, in which case only the centers must
                    // stay clearly distinct.
                    const double need = may_overlap
                                            ? 4.0
                                            : 1.3 * (e.radius + other.radius) + 2.0;
                    if (d < need) {
                        ok = false;
                        break;
                    }
                }
                placed = ok;
            }
            if (!placed)
                throw std::runtime_error("synth: cannot place cell " + std::to_string(i + 1) +
                                         " of class " + to_string(e.cls) +
                                         " (tile too crowded)");
            out.cells.push_back(e);
            out.annotations.push_back({e.cx, e.cy, e.cls, {}});
        }
    }

    for (const auto& e : out.cells) {
        std::array<int, 3> tint;
        for (auto& t : tint) t = jitter(rng);
        const auto& base = cfg.colors[static_cast<std::size_t>(static_cast<int>(e.cls))];
        const int reach = static_cast<int>(std::ceil(std::max(e.axis_a, e.axis_b)));
        for (int y = e.cy - reach; y <= e.cy + reach; ++y)
            for (int x = e.cx - reach; x <= e.cx + reach; ++x) {
                if (x < 0 || x >= cfg.tile || y < 0 || y >= cfg.tile) continue;
                if (!e.contains(x, y)) continue;
                for (int c = 0; c < 3; ++c) {
                    const int v = static_cast<int>(base[static_cast<std::size_t>(c)]) +
                                  tint[static_cast<std::size_t>(c)];
                    out.image.at(x, y, c) =
                        static_cast<unsigned char>(v < 0 ? 0 : (v > 255 ? 255 : v));
                }
            }
    }
    return out;
}

}  // namespace pathonet
