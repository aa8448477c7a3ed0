#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "pathonet/density.hpp"
#include "pathonet/postprocess.hpp"
#include "pathonet/synth.hpp"

using namespace pathonet;

TEST(Synth, ZeroCellsIsPureBackground) {
    SynthConfig cfg;
    cfg.count_range = {{{0, 0}, {0, 0}, {0, 0}}};
    cfg.noise_amplitude = 0.0f;
    cfg.seed = 4;
    const SynthTile t = generate_tile(cfg);
    EXPECT_TRUE(t.annotations.empty());
    EXPECT_TRUE(t.cells.empty());
    for (int y = 0; y < cfg.tile; ++y)
        for (int x = 0; x < cfg.tile; ++x)
            for (int c = 0; c < 3; ++c)
                ASSERT_EQ(t.image.at(x, y, c), cfg.background[static_cast<std::size_t>(c)]);
}

TEST(Synth, DeterministicPerSeed) {
    SynthConfig cfg;
    cfg.seed = 77;
    const SynthTile a = generate_tile(cfg);
    const SynthTile b = generate_tile(cfg);
    EXPECT_EQ(a.image.rgb, b.image.rgb);
    ASSERT_EQ(a.annotations.size(), b.annotations.size());
    for (std::size_t i = 0; i < a.annotations.size(); ++i) {
        EXPECT_EQ(a.annotations[i].x, b.annotations[i].x);
        EXPECT_EQ(a.annotations[i].y, b.annotations[i].y);
        EXPECT_EQ(a.annotations[i].cls, b.annotations[i].cls);
    }
    cfg.seed = 78;
    const SynthTile c = generate_tile(cfg);
    EXPECT_NE(a.image.rgb, c.image.rgb);
}

TEST(Synth, AnnotationCountMatchesDrawnCells) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        SynthConfig cfg;
        cfg.seed = seed;
        const SynthTile t = generate_tile(cfg);
        EXPECT_EQ(t.annotations.size(), t.cells.size());
        for (std::size_t i = 0; i < t.cells.size(); ++i) {
            EXPECT_EQ(t.annotations[i].x, t.cells[i].cx);
            EXPECT_EQ(t.annotations[i].y, t.cells[i].cy);
            EXPECT_EQ(t.annotations[i].cls, t.cells[i].cls);
        }
        const auto [lo0, hi0] = cfg.count_range[0];
        int n0 = 0;
        for (const auto& a : t.annotations)
            if (a.cls == CellClass::immunopositive) ++n0;
        EXPECT_GE(n0, lo0);
        EXPECT_LE(n0, hi0);
    }
}

TEST(Synth, TwentyCellsStayDisjoint) {
    SynthConfig cfg;
    cfg.count_range = {{{8, 8}, {7, 7}, {5, 5}}};
    cfg.overlap_probability = 0.0;
    cfg.seed = 11;
    const SynthTile t = generate_tile(cfg);
    ASSERT_EQ(t.annotations.size(), 20u);
    for (std::size_t i = 0; i < t.cells.size(); ++i)
        for (std::size_t j = i + 1; j < t.cells.size(); ++j) {
            const auto& a = t.cells[i];
            const auto& b = t.cells[j];
            const double dx = a.cx - b.cx, dy = a.cy - b.cy;
            const double d = std::sqrt(dx * dx + dy * dy);
            EXPECT_GE(d, static_cast<double>(a.radius + b.radius)) << i << "," << j;
        }
    // Raster-level check: no pixel belongs to two cell masks.
    for (int y = 0; y < cfg.tile; ++y)
        for (int x = 0; x < cfg.tile; ++x) {
            int owners = 0;
            for (const auto& e : t.cells)
                if (e.contains(x, y)) ++owners;
            ASSERT_LE(owners, 1) << "(" << x << "," << y << ")";
        }
}

TEST(Synth, CellsPaintTheirClassColors) {
    SynthConfig cfg;
    cfg.noise_amplitude = 0.0f;
    cfg.seed = 5;
    const SynthTile t = generate_tile(cfg);
    ASSERT_FALSE(t.cells.empty());
    for (const auto& e : t.cells) {
        const auto& base = cfg.colors[static_cast<std::size_t>(static_cast<int>(e.cls))];
        for (int c = 0; c < 3; ++c) {
            const int got = t.image.at(e.cx, e.cy, c);
            EXPECT_LE(std::abs(got - static_cast<int>(base[static_cast<std::size_t>(c)])), 15);
        }
    }
}

TEST(Synth, InfeasiblePackingIsAnError) {
    SynthConfig cfg;
    cfg.tile = 64;
    cfg.count_range = {{{40, 40}, {40, 40}, {0, 0}}};
    cfg.radius_range = {9, 9};
    EXPECT_THROW(generate_tile(cfg), std::runtime_error);
    SynthConfig bad;
    bad.radius_range = {1, 9};
    EXPECT_THROW(generate_tile(bad), std::invalid_argument);
}

TEST(Synth, RenderedLabelsCloseTheLoopThroughExtraction) {
    // No network involved: synth annotations -> rendered map -> extraction
    // must recover nearly every center to the pixel.
    int total = 0, recovered = 0;
    for (std::uint64_t seed = 100; seed < 110; ++seed) {
        SynthConfig cfg;
        cfg.count_range = {{{6, 12}, {6, 12}, {3, 8}}};
        cfg.seed = seed;
        const SynthTile t = generate_tile(cfg);
        const Tensor label = render_density_map(t.annotations, cfg.tile, cfg.tile);
        const auto cells = extract_cells(label);
        EXPECT_EQ(cells.size(), t.annotations.size()) << "seed " << seed;
        for (const auto& want : t.annotations) {
            ++total;
            for (const auto& got : cells) {
                if (got.cls != want.cls) continue;
                const double dx = got.x - want.x, dy = got.y - want.y;
                if (std::sqrt(dx * dx + dy * dy) <= 1.0) {
                    ++recovered;
                    break;
                }
            }
        }
    }
    ASSERT_GT(total, 100);
    EXPECT_GE(static_cast<double>(recovered) / total, 0.99);
}
