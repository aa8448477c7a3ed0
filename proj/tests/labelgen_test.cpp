#include <gtest/gtest.h>

#include <algorithm>
#include <cstdio>
#include <random>
#include <sstream>

#include "pathonet/annotations.hpp"
#include "pathonet/dataset.hpp"
#include "pathonet/density.hpp"
#include "pathonet/image.hpp"

using namespace pathonet;

namespace {

std::string temp_path(const std::string& stem) {
    return ::testing::TempDir() + stem;
}

std::vector<char> slurp(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

void dump(const std::string& path, const std::vector<char>& bytes) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

int count_at_least(const Tensor& map, int ch, float v) {
    int n = 0;
    for (int y = 0; y < map.dim(1); ++y)
        for (int x = 0; x < map.dim(2); ++x)
            if (map.at3(ch, y, x) >= v) ++n;
    return n;
}

ImageU8 random_image(int w, int h, unsigned seed) {
    ImageU8 img(w, h);
    std::mt19937 rng(seed);
    std::uniform_int_distribution<int> byte(0, 255);
    for (auto& b : img.rgb) b = static_cast<unsigned char>(byte(rng));
    return img;
}

}  // namespace

TEST(Annotations, RoundTripAndParsing) {
    std::vector<CellAnnotation> anns = {
        {12, 34, CellClass::immunopositive, {}},
        {0, 255, CellClass::lymphocyte, 187.5f},
        {7, 7, CellClass::immunonegative, {}},
    };
    std::ostringstream os;
    write_annotations(os, anns);
    std::istringstream is("# header comment\n\n" + os.str() + "   \n");
    const auto back = parse_annotations(is, "mem");
    ASSERT_EQ(back.size(), anns.size());
    for (std::size_t i = 0; i < anns.size(); ++i) {
        EXPECT_EQ(back[i].x, anns[i].x);
        EXPECT_EQ(back[i].y, anns[i].y);
        EXPECT_EQ(back[i].cls, anns[i].cls);
        EXPECT_EQ(back[i].score.has_value(), anns[i].score.has_value());
        if (anns[i].score) EXPECT_FLOAT_EQ(*back[i].score, *anns[i].score);
    }
}

TEST(Annotations, RejectsMalformedLines) {
    {
        std::istringstream is("3 4 tumor\n");
        EXPECT_THROW(parse_annotations(is, "mem"), std::runtime_error);
    }
    {
        std::istringstream is("3 4\n");
        EXPECT_THROW(parse_annotations(is, "mem"), std::runtime_error);
    }
    {
        std::istringstream is("3 4 lymphocyte 1.0 extra\n");
        EXPECT_THROW(parse_annotations(is, "mem"), std::runtime_error);
    }
    {
        // The error message carries the 1-based line number of the bad record.
        std::istringstream is("1 2 lymphocyte\nbad line\n");
        try {
            parse_annotations(is, "mem");
            FAIL() << "expected a parse error";
        } catch (const std::runtime_error& e) {
            EXPECT_NE(std::string(e.what()).find("mem:2"), std::string::npos) << e.what();
        }
    }
    EXPECT_THROW(read_annotations(temp_path("missing_annotations.txt")), std::runtime_error);
}

TEST(Annotations, ClassNamesAreExact) {
    EXPECT_EQ(parse_cell_class("immunopositive"), CellClass::immunopositive);
    EXPECT_EQ(parse_cell_class("immunonegative"), CellClass::immunonegative);
    EXPECT_EQ(parse_cell_class("lymphocyte"), CellClass::lymphocyte);
    EXPECT_THROW(parse_cell_class("Immunopositive"), std::runtime_error);
    EXPECT_THROW(parse_cell_class("lymph"), std::runtime_error);
    EXPECT_STREQ(to_string(CellClass::lymphocyte), "lymphocyte");
}

TEST(Render, SingleCellValues) {
    const Tensor map = render_density_map({{5, 5, CellClass::immunopositive, {}}}, 16, 16);
    EXPECT_FLOAT_EQ(map.at3(0, 5, 5), 2250.0f);
    // Three pixels out: 255 * exp(-9/18) rounds to 155.
    EXPECT_FLOAT_EQ(map.at3(0, 5, 8), 155.0f);
    EXPECT_FLOAT_EQ(map.at3(0, 8, 5), 155.0f);
    // Amplitude drops under 1 past ten pixels and is cut to zero there.
    EXPECT_FLOAT_EQ(map.at3(0, 5, 15), 0.0f);
    EXPECT_FLOAT_EQ(map.at3(0, 14, 5), 3.0f);  // distance 9: 255 * exp(-4.5) = 2.83
    // Other class channels stay empty.
    for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 16; ++x) {
            EXPECT_FLOAT_EQ(map.at3(1, y, x), 0.0f);
            EXPECT_FLOAT_EQ(map.at3(2, y, x), 0.0f);
        }
}

TEST(Render, EmptyAnnotationsGiveZeroMap) {
    const Tensor map = render_density_map({}, 32, 24);
    ASSERT_EQ(map.rank(), 3);
    EXPECT_EQ(map.dim(0), 3);
    EXPECT_EQ(map.dim(1), 32);
    EXPECT_EQ(map.dim(2), 24);
    for (float v : map.data) EXPECT_EQ(v, 0.0f);
}

TEST(Render, NonCenterValuesStayWithinPeak) {
    // Two close cells of one class: the max combine keeps every non-center
    // pixel at or below the peak.
    const Tensor map = render_density_map(
        {{10, 10, CellClass::lymphocyte, {}}, {12, 10, CellClass::lymphocyte, {}}}, 24, 24);
    int centers = 0;
    for (int y = 0; y < 24; ++y)
        for (int x = 0; x < 24; ++x) {
            const float v = map.at3(2, y, x);
            if (v > 255.0f) {
                EXPECT_FLOAT_EQ(v, 2250.0f);
                ++centers;
            }
        }
    EXPECT_EQ(centers, 2);
}

TEST(Render, ChannelSumIsPositionInvariantAwayFromBorders) {
    const auto sum_ch = [](const Tensor& m, int ch) {
        double s = 0.0;
        for (int y = 0; y < m.dim(1); ++y)
            for (int x = 0; x < m.dim(2); ++x) s += m.at3(ch, y, x);
        return s;
    };
    const Tensor a = render_density_map({{12, 13, CellClass::immunonegative, {}}}, 40, 40);
    const Tensor b = render_density_map({{25, 20, CellClass::immunonegative, {}}}, 40, 40);
    EXPECT_DOUBLE_EQ(sum_ch(a, 1), sum_ch(b, 1));
}

TEST(Render, CenterCountMatchesDistinctCenters) {
    const std::vector<CellAnnotation> anns = {
        {5, 5, CellClass::immunopositive, {}},
        {20, 8, CellClass::immunopositive, {}},
        {6, 21, CellClass::immunopositive, {}},
        {20, 8, CellClass::immunopositive, {}},  // coincides with the second
        {9, 9, CellClass::lymphocyte, {}},
    };
    const Tensor map = render_density_map(anns, 32, 32);
    EXPECT_EQ(count_at_least(map, 0, 2250.0f), 3);
    EXPECT_EQ(count_at_least(map, 2, 2250.0f), 1);
    EXPECT_EQ(count_at_least(map, 1, 2250.0f), 0);
}

TEST(Render, OrderIndependent) {
    std::vector<CellAnnotation> anns;
    std::mt19937 rng(99);
    std::uniform_int_distribution<int> pos(0, 47);
    std::uniform_int_distribution<int> cls(0, 2);
    for (int i = 0; i < 30; ++i)
        anns.push_back({pos(rng), pos(rng), static_cast<CellClass>(cls(rng)), {}});
    const Tensor forward_order = render_density_map(anns, 48, 48);
    std::shuffle(anns.begin(), anns.end(), rng);
    const Tensor shuffled_order = render_density_map(anns, 48, 48);
    EXPECT_EQ(forward_order.data, shuffled_order.data);
}

TEST(Render, RejectsOutOfBoundsAndBadConfig) {
    EXPECT_THROW(render_density_map({{16, 3, CellClass::lymphocyte, {}}}, 16, 16),
                 std::runtime_error);
    EXPECT_THROW(render_density_map({{-1, 3, CellClass::lymphocyte, {}}}, 16, 16),
                 std::runtime_error);
    LabelRenderConfig bad;
    bad.center_value = 100.0f;  // below peak
    EXPECT_THROW(render_density_map({}, 8, 8, bad), std::invalid_argument);
    LabelRenderConfig nonpos;
    nonpos.sigma2 = 0.0f;
    EXPECT_THROW(render_density_map({}, 8, 8, nonpos), std::invalid_argument);
}

TEST(Dmap, RoundTripIsBitwise) {
    const Tensor map = render_density_map({{9, 4, CellClass::immunopositive, {}},
                                           {3, 11, CellClass::lymphocyte, {}}},
                                          20, 16);
    const std::string path = temp_path("roundtrip.dmap");
    save_dmap(path, map);
    const Tensor back = load_dmap(path);
    EXPECT_EQ(back.shape, map.shape);
    EXPECT_EQ(back.data, map.data);
    std::remove(path.c_str());
}

TEST(Dmap, DetectsCorruption) {
    const Tensor map = render_density_map({{2, 2, CellClass::immunonegative, {}}}, 8, 8);
    const std::string path = temp_path("corrupt.dmap");
    save_dmap(path, map);
    auto bytes = slurp(path);

    auto mutated = bytes;
    mutated[0] = 'X';
    dump(path, mutated);
    EXPECT_THROW(load_dmap(path), std::runtime_error);

    mutated = bytes;
    mutated[4] = 9;  // version
    dump(path, mutated);
    EXPECT_THROW(load_dmap(path), std::runtime_error);

    mutated = bytes;
    mutated.resize(bytes.size() - 5);
    dump(path, mutated);
    EXPECT_THROW(load_dmap(path), std::runtime_error);

    mutated = bytes;
    mutated.push_back(0);
    dump(path, mutated);
    EXPECT_THROW(load_dmap(path), std::runtime_error);

    std::remove(path.c_str());
    EXPECT_THROW(load_dmap(path), std::runtime_error);
}

TEST(Tiling, GridCountAndContent) {
    const ImageU8 img = random_image(1228, 922, 7);
    const auto tiles = tile_image(img, {});
    ASSERT_EQ(tiles.size(), 12u);  // floor(1228/256) * floor(922/256) = 4 * 3
    for (const auto& t : tiles) {
        EXPECT_EQ(t.image.width, 256);
        EXPECT_EQ(t.image.height, 256);
    }
    // Tile pixels are verbatim copies from the source grid cell.
    const Tile& t = tiles[1 * 4 + 2];  // grid (2,1)
    EXPECT_EQ(t.tx, 2);
    EXPECT_EQ(t.ty, 1);
    std::mt19937 rng(11);
    std::uniform_int_distribution<int> px(0, 255);
    for (int i = 0; i < 200; ++i) {
        const int x = px(rng), y = px(rng), c = i % 3;
        EXPECT_EQ(t.image.at(x, y, c), img.at(2 * 256 + x, 1 * 256 + y, c));
    }
}

TEST(Tiling, RebasesAnnotationsAndDropsMargins) {
    const ImageU8 img = random_image(1228, 922, 8);
    const std::vector<CellAnnotation> anns = {
        {300, 10, CellClass::immunopositive, {}},   // tile (1,0) local (44,10)
        {0, 0, CellClass::lymphocyte, {}},          // tile (0,0) local (0,0)
        {1023, 767, CellClass::immunonegative, {}}, // tile (3,2) local (255,255)
        {1100, 100, CellClass::lymphocyte, {}},     // x past the 1024 boundary: dropped
        {100, 800, CellClass::lymphocyte, {}},      // y past the 768 boundary: dropped
    };
    const auto tiles = tile_image(img, anns);
    std::size_t kept = 0;
    for (const auto& t : tiles) kept += t.annotations.size();
    EXPECT_EQ(kept, 3u);

    const Tile& t10 = tiles[0 * 4 + 1];
    ASSERT_EQ(t10.annotations.size(), 1u);
    EXPECT_EQ(t10.annotations[0].x, 44);
    EXPECT_EQ(t10.annotations[0].y, 10);
    EXPECT_EQ(t10.annotations[0].cls, CellClass::immunopositive);

    ASSERT_EQ(tiles[0].annotations.size(), 1u);
    EXPECT_EQ(tiles[0].annotations[0].x, 0);
    EXPECT_EQ(tiles[0].annotations[0].y, 0);

    const Tile& t32 = tiles[2 * 4 + 3];
    ASSERT_EQ(t32.annotations.size(), 1u);
    EXPECT_EQ(t32.annotations[0].x, 255);
    EXPECT_EQ(t32.annotations[0].y, 255);
}

TEST(Tiling, RejectsUndersizedImage) {
    const ImageU8 img = random_image(255, 400, 3);
    EXPECT_THROW(tile_image(img, {}), std::runtime_error);
}

TEST(SplitAssign, FractionAndDeterminism) {
    const auto split = assign_split(10, 0.7, 1234);
    ASSERT_EQ(split.size(), 10u);
    const auto trains = std::count(split.begin(), split.end(), Split::train);
    EXPECT_EQ(trains, 7);
    EXPECT_EQ(assign_split(10, 0.7, 1234), split);

    bool any_diff = false;
    for (std::uint64_t s = 0; s < 8 && !any_diff; ++s)
        any_diff = assign_split(10, 0.7, s) != split;
    EXPECT_TRUE(any_diff);

    const auto all_train = assign_split(5, 1.0, 0);
    EXPECT_EQ(std::count(all_train.begin(), all_train.end(), Split::train), 5);
    const auto all_test = assign_split(5, 0.0, 0);
    EXPECT_EQ(std::count(all_test.begin(), all_test.end(), Split::train), 0);
    EXPECT_THROW(assign_split(5, 1.5, 0), std::invalid_argument);
}

TEST(Augment, SixVariantsWithExpectedGeometry) {
    Tensor image = Tensor::zeros({3, 8, 8});
    std::mt19937 rng(21);
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    for (auto& v : image.data) v = u(rng);
    const Tensor label = render_density_map({{2, 5, CellClass::lymphocyte, {}}}, 8, 8);

    const auto pairs = augment6(image, label);
    ASSERT_EQ(pairs.size(), 6u);
    EXPECT_EQ(pairs[0].variant, Dihedral::identity);
    EXPECT_EQ(pairs[0].image.data, image.data);
    EXPECT_EQ(pairs[0].label.data, label.data);

    // flip_x sends pixel (x, y) to (W-1-x, y).
    const Tensor& fx = pairs[1].image;
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < 8; ++y)
            for (int x = 0; x < 8; ++x) EXPECT_EQ(fx.at3(c, y, x), image.at3(c, y, 7 - x));

    EXPECT_THROW(augment6(Tensor::zeros({3, 8, 6}), Tensor::zeros({3, 8, 6})),
                 std::invalid_argument);
    EXPECT_THROW(augment6(image, Tensor::zeros({3, 8, 6})), std::invalid_argument);
}

TEST(Augment, Rot180IsAnInvolution) {
    Tensor image = Tensor::zeros({3, 12, 12});
    std::mt19937 rng(31);
    std::uniform_real_distribution<float> u(-2.0f, 2.0f);
    for (auto& v : image.data) v = u(rng);
    const Tensor once = apply_dihedral(image, Dihedral::rot180);
    const Tensor twice = apply_dihedral(once, Dihedral::rot180);
    EXPECT_EQ(twice.data, image.data);
}

TEST(Augment, PerClassCellCountPreserved) {
    const std::vector<CellAnnotation> anns = {
        {3, 4, CellClass::immunopositive, {}},  {11, 2, CellClass::immunopositive, {}},
        {7, 13, CellClass::immunonegative, {}}, {1, 1, CellClass::lymphocyte, {}},
        {14, 14, CellClass::lymphocyte, {}},    {8, 8, CellClass::lymphocyte, {}},
    };
    const Tensor label = render_density_map(anns, 16, 16);
    const Tensor image = Tensor::zeros({3, 16, 16});
    for (const auto& p : augment6(image, label)) {
        EXPECT_EQ(count_at_least(p.label, 0, 2250.0f), 2) << to_string(p.variant);
        EXPECT_EQ(count_at_least(p.label, 1, 2250.0f), 1) << to_string(p.variant);
        EXPECT_EQ(count_at_least(p.label, 2, 2250.0f), 3) << to_string(p.variant);
    }
}

TEST(Augment, PixelAndPointTransformsAgree) {
    // Transforming the annotations then rendering must equal rendering then
    // transforming the map; this ties dihedral_point to the pixel remap.
    const std::vector<CellAnnotation> anns = {
        {2, 9, CellClass::immunopositive, {}},
        {13, 5, CellClass::immunonegative, {}},
        {6, 6, CellClass::lymphocyte, {}},
    };
    const Tensor base = render_density_map(anns, 16, 16);
    for (Dihedral d : kAllDihedrals) {
        const Tensor mapped = apply_dihedral(base, d);
        const Tensor direct = render_density_map(apply_dihedral(anns, d, 16, 16), 16, 16);
        EXPECT_EQ(mapped.data, direct.data) << to_string(d);
    }
}

TEST(Augment, CompositionStaysInDihedralSet) {
    Tensor probe = Tensor::zeros({1, 6, 6});
    for (std::size_t i = 0; i < probe.data.size(); ++i) probe.data[i] = static_cast<float>(i);
    for (Dihedral a : kAugmentVariants) {
        for (Dihedral b : kAugmentVariants) {
            const Tensor composed = apply_dihedral(apply_dihedral(probe, a), b);
            bool found = false;
            for (Dihedral c : kAllDihedrals)
                if (apply_dihedral(probe, c).data == composed.data) {
                    found = true;
                    break;
                }
            EXPECT_TRUE(found) << to_string(a) << " then " << to_string(b);
        }
    }
}

TEST(Png, RoundTripPreservesBytes) {
    const ImageU8 img = random_image(37, 23, 42);
    const std::string path = temp_path("roundtrip.png");
    write_png(path, img);
    const ImageU8 back = read_png(path);
    ASSERT_EQ(back.width, img.width);
    ASSERT_EQ(back.height, img.height);
    EXPECT_EQ(back.rgb, img.rgb);
    std::remove(path.c_str());
    EXPECT_THROW(read_png(path), std::runtime_error);
}

TEST(Png, TensorConversionRoundTrip) {
    const ImageU8 img = random_image(19, 11, 5);
    const Tensor t = image_to_tensor(img);
    EXPECT_EQ(t.dim(0), 3);
    EXPECT_EQ(t.dim(1), 11);
    EXPECT_EQ(t.dim(2), 19);
    float lo = 1.0f, hi = 0.0f;
    for (float v : t.data) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    EXPECT_GE(lo, 0.0f);
    EXPECT_LE(hi, 1.0f);
    const ImageU8 back = tensor_to_image(t);
    EXPECT_EQ(back.rgb, img.rgb);
}
