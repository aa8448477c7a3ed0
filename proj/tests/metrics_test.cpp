#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <tuple>

#include "pathonet/density.hpp"
#include "pathonet/metrics.hpp"
#include "pathonet/tuning.hpp"

using namespace pathonet;

namespace {

// Second implementation of the matching rule for cross-checking: instead of
// sorting candidates once, repeatedly scan for the globally smallest
// (distance, gt, pred) key among unmatched pairs.
MatchReport rescan_match(const std::vector<CellAnnotation>& gt,
                         const std::vector<CellAnnotation>& pred, double radius) {
    MatchReport report;
    for (int cls = 0; cls < 3; ++cls) {
        auto& cm = report.per_class[static_cast<std::size_t>(cls)];
        std::vector<char> gt_used(gt.size(), 0), pred_used(pred.size(), 0);
        int n_gt = 0, n_pred = 0;
        for (const auto& a : gt)
            if (static_cast<int>(a.cls) == cls) ++n_gt;
        for (const auto& a : pred)
            if (static_cast<int>(a.cls) == cls) ++n_pred;
        for (;;) {
            double bd = 0.0;
            int bg = -1, bp = -1;
            for (std::size_t g = 0; g < gt.size(); ++g) {
                if (static_cast<int>(gt[g].cls) != cls || gt_used[g]) continue;
                for (std::size_t p = 0; p < pred.size(); ++p) {
                    if (static_cast<int>(pred[p].cls) != cls || pred_used[p]) continue;
                    const double dx = gt[g].x - pred[p].x, dy = gt[g].y - pred[p].y;
                    const double d = std::sqrt(dx * dx + dy * dy);
                    if (d >= radius) continue;
                    if (bg < 0 || std::make_tuple(d, static_cast<int>(g), static_cast<int>(p)) <
                                      std::make_tuple(bd, bg, bp)) {
                        bd = d;
                        bg = static_cast<int>(g);
                        bp = static_cast<int>(p);
                    }
                }
            }
            if (bg < 0) break;
            gt_used[static_cast<std::size_t>(bg)] = 1;
            pred_used[static_cast<std::size_t>(bp)] = 1;
            cm.pairs.push_back({bg, bp, bd});
        }
        cm.tp = static_cast<int>(cm.pairs.size());
        cm.fp = n_pred - cm.tp;
        cm.fn = n_gt - cm.tp;
    }
    return report;
}

std::vector<CellAnnotation> random_points(std::mt19937& rng, int max_per_class) {
    std::uniform_int_distribution<int> n(0, max_per_class);
    std::uniform_int_distribution<int> pos(0, 30);
    std::vector<CellAnnotation> out;
    for (int cls = 0; cls < 3; ++cls) {
        const int k = n(rng);
        for (int i = 0; i < k; ++i)
            out.push_back({pos(rng), pos(rng), static_cast<CellClass>(cls), {}});
    }
    return out;
}

}  // namespace

TEST(Match, NearestWithinRadiusWins) {
    const std::vector<CellAnnotation> gt = {{10, 10, CellClass::immunopositive, {}}};
    const std::vector<CellAnnotation> pred = {{12, 10, CellClass::immunopositive, {}},
                                              {14, 10, CellClass::immunopositive, {}}};
    const MatchReport m = match_detections(gt, pred);
    const auto& pos = m.per_class[0];
    EXPECT_EQ(pos.tp, 1);
    EXPECT_EQ(pos.fp, 1);
    EXPECT_EQ(pos.fn, 0);
    ASSERT_EQ(pos.pairs.size(), 1u);
    EXPECT_EQ(pos.pairs[0].pred_index, 0);  // the distance-2 prediction
    EXPECT_DOUBLE_EQ(pos.pairs[0].distance, 2.0);
}

TEST(Match, ClassesNeverCross) {
    const std::vector<CellAnnotation> gt = {{10, 10, CellClass::immunopositive, {}}};
    const std::vector<CellAnnotation> pred = {{10, 10, CellClass::immunonegative, {}}};
    const MatchReport m = match_detections(gt, pred);
    EXPECT_EQ(m.per_class[0].fn, 1);
    EXPECT_EQ(m.per_class[0].tp, 0);
    EXPECT_EQ(m.per_class[1].fp, 1);
    EXPECT_EQ(m.per_class[1].tp, 0);
}

TEST(Match, RadiusIsExclusive) {
    const std::vector<CellAnnotation> gt = {{0, 0, CellClass::lymphocyte, {}}};
    const std::vector<CellAnnotation> pred = {{6, 0, CellClass::lymphocyte, {}}};
    const MatchReport at6 = match_detections(gt, pred, {6.0});
    EXPECT_EQ(at6.per_class[2].tp, 0);
    EXPECT_EQ(at6.per_class[2].fp, 1);
    EXPECT_EQ(at6.per_class[2].fn, 1);
    const MatchReport at7 = match_detections(gt, pred, {6.5});
    EXPECT_EQ(at7.per_class[2].tp, 1);
    EXPECT_THROW(match_detections(gt, pred, {0.0}), std::invalid_argument);
}

TEST(Match, AgreesWithRescanOracleOnRandomInstances) {
    std::mt19937 rng(515151);
    for (int iter = 0; iter < 1000; ++iter) {
        const auto gt = random_points(rng, 10);
        const auto pred = random_points(rng, 10);
        const MatchReport fast = match_detections(gt, pred);
        const MatchReport slow = rescan_match(gt, pred, 6.0);
        for (int c = 0; c < 3; ++c) {
            const auto& f = fast.per_class[static_cast<std::size_t>(c)];
            const auto& s = slow.per_class[static_cast<std::size_t>(c)];
            ASSERT_EQ(f.tp, s.tp) << "iter " << iter;
            ASSERT_EQ(f.fp, s.fp) << "iter " << iter;
            ASSERT_EQ(f.fn, s.fn) << "iter " << iter;
            ASSERT_EQ(f.pairs.size(), s.pairs.size());
            for (std::size_t i = 0; i < f.pairs.size(); ++i) {
                ASSERT_EQ(f.pairs[i].gt_index, s.pairs[i].gt_index);
                ASSERT_EQ(f.pairs[i].pred_index, s.pairs[i].pred_index);
            }
            // Conservation: every point lands in exactly one bucket.
            int n_gt = 0, n_pred = 0;
            for (const auto& a : gt)
                if (static_cast<int>(a.cls) == c) ++n_gt;
            for (const auto& a : pred)
                if (static_cast<int>(a.cls) == c) ++n_pred;
            ASSERT_EQ(f.tp + f.fn, n_gt);
            ASSERT_EQ(f.tp + f.fp, n_pred);
        }
    }
}

TEST(Match, CountsInvariantUnderPredictionShuffle) {
    std::mt19937 rng(77);
    const auto gt = random_points(rng, 8);
    auto pred = random_points(rng, 8);
    const MatchReport before = match_detections(gt, pred);
    std::shuffle(pred.begin(), pred.end(), rng);
    const MatchReport after = match_detections(gt, pred);
    for (int c = 0; c < 3; ++c) {
        EXPECT_EQ(before.per_class[static_cast<std::size_t>(c)].tp,
                  after.per_class[static_cast<std::size_t>(c)].tp);
        EXPECT_EQ(before.per_class[static_cast<std::size_t>(c)].fp,
                  after.per_class[static_cast<std::size_t>(c)].fp);
        EXPECT_EQ(before.per_class[static_cast<std::size_t>(c)].fn,
                  after.per_class[static_cast<std::size_t>(c)].fn);
    }
}

TEST(Prf, FormulaExamples) {
    const Prf r = prf_from_counts(2, 1, 2);
    EXPECT_NEAR(r.precision, 0.667, 5e-4);
    EXPECT_NEAR(r.recall, 0.5, 1e-12);
    EXPECT_NEAR(r.f1, 0.571, 5e-4);
    EXPECT_FALSE(r.degenerate);

    // Counts chosen to land on P=0.772, R=0.799.
    const Prf avg = prf_from_counts(7720, 2280, 1942);
    EXPECT_NEAR(avg.precision, 0.772, 1e-4);
    EXPECT_NEAR(avg.recall, 0.799, 1e-4);
    EXPECT_NEAR(avg.f1, 0.785, 5e-4);
}

TEST(Prf, DegenerateAndScaleInvariance) {
    const Prf zero = prf_from_counts(0, 0, 0);
    EXPECT_EQ(zero.precision, 0.0);
    EXPECT_EQ(zero.recall, 0.0);
    EXPECT_EQ(zero.f1, 0.0);
    EXPECT_TRUE(zero.degenerate);

    const Prf no_pred = prf_from_counts(0, 0, 3);
    EXPECT_TRUE(no_pred.degenerate);

    for (long long k : {2, 5, 17}) {
        const Prf base = prf_from_counts(9, 4, 7);
        const Prf scaled = prf_from_counts(9 * k, 4 * k, 7 * k);
        EXPECT_DOUBLE_EQ(base.f1, scaled.f1);
    }
}

TEST(Prf, MicroAveragePoolsCounts) {
    MatchReport m;
    m.per_class[0] = {8, 2, 1, {}};
    m.per_class[1] = {5, 5, 5, {}};
    m.per_class[2] = {0, 3, 4, {}};
    const PrfReport r = compute_prf(m);
    EXPECT_DOUBLE_EQ(r.micro.precision, 13.0 / 23.0);
    EXPECT_DOUBLE_EQ(r.micro.recall, 13.0 / 23.0);
    EXPECT_DOUBLE_EQ(r.micro.f1, 13.0 / 23.0);
    EXPECT_NEAR(r.per_class[0].f1, 2.0 * (0.8 * 8.0 / 9.0) / (0.8 + 8.0 / 9.0), 1e-12);
}

TEST(Scores, ReferenceCounts) {
    // Held-out set: 15755 stained vs 32639 unstained tumor cells.
    CellCounts test_set;
    test_set.immunopositive = 15755;
    test_set.immunonegative = 32639;
    test_set.lymphocyte = 1378;
    EXPECT_NEAR(ki67_score(test_set).value, 0.3256, 1e-4);
    EXPECT_NEAR(til_score(test_set).value, 0.0277, 1e-4);

    CellCounts train_set;
    train_set.immunopositive = 35106;
    train_set.immunonegative = 75008;
    EXPECT_NEAR(ki67_score(train_set).value, 0.3188, 1e-4);
}

TEST(Scores, DegenerateRangeAndScale) {
    const CellCounts empty;
    EXPECT_EQ(ki67_score(empty).value, 0.0);
    EXPECT_TRUE(ki67_score(empty).degenerate);
    EXPECT_TRUE(til_score(empty).degenerate);

    CellCounts neg;
    neg.immunopositive = -1;
    EXPECT_THROW(ki67_score(neg), std::invalid_argument);

    std::mt19937 rng(5);
    std::uniform_int_distribution<long long> n(0, 5000);
    for (int i = 0; i < 200; ++i) {
        CellCounts c;
        c.immunopositive = n(rng);
        c.immunonegative = n(rng);
        c.lymphocyte = n(rng);
        const auto k = ki67_score(c), t = til_score(c);
        EXPECT_GE(k.value, 0.0);
        EXPECT_LE(k.value, 1.0);
        EXPECT_GE(t.value, 0.0);
        EXPECT_LE(t.value, 1.0);
        CellCounts scaled = c;
        scaled.immunopositive *= 3;
        scaled.immunonegative *= 3;
        scaled.lymphocyte *= 3;
        EXPECT_DOUBLE_EQ(ki67_score(scaled).value, k.value);
        EXPECT_DOUBLE_EQ(til_score(scaled).value, t.value);
    }
}

TEST(Bands, CutoffRules) {
    EXPECT_EQ(ki67_band(0.3256), Ki67Band::high);
    EXPECT_EQ(ki67_band(0.159), Ki67Band::low);
    EXPECT_EQ(ki67_band(0.16), Ki67Band::average);  // boundary is inclusive
    EXPECT_EQ(ki67_band(0.30), Ki67Band::average);
    EXPECT_EQ(ki67_band(0.31), Ki67Band::high);
    EXPECT_EQ(til_band(0.0277), TilBand::low);
    EXPECT_EQ(til_band(0.10), TilBand::low);
    EXPECT_EQ(til_band(0.11), TilBand::mid);
    EXPECT_EQ(til_band(0.39), TilBand::mid);
    EXPECT_EQ(til_band(0.40), TilBand::high);
    EXPECT_THROW(ki67_band(-0.1), std::invalid_argument);
    EXPECT_THROW(til_band(1.5), std::invalid_argument);
    EXPECT_STREQ(to_string(Ki67Band::average), "average");
    EXPECT_STREQ(to_string(TilBand::mid), "mid");
}

TEST(Rmse, ExamplesAndOracle) {
    EXPECT_DOUBLE_EQ(rmse_scores({0.3, 0.7}, {0.3, 0.7}), 0.0);
    EXPECT_NEAR(rmse_scores({0.2}, {0.4}), 0.2, 1e-12);
    EXPECT_THROW(rmse_scores({0.1}, {0.1, 0.2}), std::invalid_argument);
    EXPECT_THROW(rmse_scores({}, {}), std::invalid_argument);

    std::mt19937 rng(8);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> a(100), b(100);
    for (int i = 0; i < 100; ++i) {
        a[static_cast<std::size_t>(i)] = u(rng);
        b[static_cast<std::size_t>(i)] = u(rng);
    }
    long double acc = 0.0L;
    for (int i = 0; i < 100; ++i) {
        const long double d = static_cast<long double>(a[static_cast<std::size_t>(i)]) -
                              b[static_cast<std::size_t>(i)];
        acc += d * d;
    }
    const double want = static_cast<double>(std::sqrt(acc / 100.0L));
    EXPECT_NEAR(rmse_scores(a, b), want, 1e-9);
}

TEST(Patients, PoolingAndAccuracy) {
    CellCounts one_one;
    one_one.immunopositive = 1;
    one_one.immunonegative = 1;
    const PatientAggregate agg = aggregate_patient({"p1", "p1"}, {one_one, one_one},
                                                   {one_one, one_one});
    ASSERT_EQ(agg.patients.size(), 1u);
    EXPECT_DOUBLE_EQ(agg.patients[0].predicted.ki67.value, 0.5);
    EXPECT_DOUBLE_EQ(agg.ki67_band_accuracy, 1.0);
    EXPECT_DOUBLE_EQ(agg.til_band_accuracy, 1.0);
}

TEST(Patients, OneMismatchAmongTwentyThree) {
    std::vector<std::string> images;
    std::vector<CellCounts> pred, truth;
    for (int p = 0; p < 23; ++p) {
        images.push_back("patient" + std::to_string(p));
        CellCounts t;
        t.immunopositive = 40;  // ki67 0.4: high band
        t.immunonegative = 60;
        truth.push_back(t);
        CellCounts guess = t;
        if (p == 7) {
            guess.immunopositive = 20;  // ki67 0.25: average band
            guess.immunonegative = 60;
        }
        pred.push_back(guess);
    }
    const PatientAggregate agg = aggregate_patient(images, pred, truth);
    EXPECT_EQ(agg.patients.size(), 23u);
    EXPECT_NEAR(agg.ki67_band_accuracy, 22.0 / 23.0, 1e-12);
    // 22/23 = 0.9565..., reported at three digits as 0.956.
    EXPECT_NEAR(agg.ki67_band_accuracy, 0.956, 1e-3);
}

TEST(Patients, RejectsUnmappedImage) {
    EXPECT_THROW(aggregate_patient({""}, {CellCounts{}}, {CellCounts{}}), std::runtime_error);
    EXPECT_THROW(aggregate_patient({"a", "b"}, {CellCounts{}}, {CellCounts{}, CellCounts{}}),
                 std::invalid_argument);
}

TEST(Tune, IdealMapsPickLowestPerfectThreshold) {
    const std::vector<CellAnnotation> anns = {
        {20, 20, CellClass::immunopositive, {}},
        {44, 24, CellClass::immunonegative, {}},
        {24, 46, CellClass::lymphocyte, {}},
        {48, 48, CellClass::immunopositive, {}},
    };
    const Tensor map = render_density_map(anns, 64, 64);
    const TuneResult r = tune_thresholds({map}, {anns});
    for (int c = 0; c < 3; ++c) {
        EXPECT_FLOAT_EQ(r.thresholds[static_cast<std::size_t>(c)], 5.0f) << c;
        EXPECT_DOUBLE_EQ(r.f1[static_cast<std::size_t>(c)], 1.0) << c;
    }
}

TEST(Tune, ClearsSpuriousLowBlobAndBeatsEveryGridPoint) {
    const std::vector<CellAnnotation> anns = {
        {16, 16, CellClass::immunopositive, {}},
        {48, 44, CellClass::immunopositive, {}},
        {30, 52, CellClass::immunonegative, {}},
        {52, 18, CellClass::lymphocyte, {}},
    };
    Tensor map = render_density_map(anns, 64, 64);
    // A flat value-100 splat on channel 0 that corresponds to no real cell:
    // thresholds at or below 100 see it as a false detection.
    for (int dy = -3; dy <= 3; ++dy)
        for (int dx = -3; dx <= 3; ++dx)
            if (dy * dy + dx * dx <= 9) map.at3(0, 34 + dy, 8 + dx) = 100.0f;

    const TuneResult r = tune_thresholds({map}, {anns});
    EXPECT_FLOAT_EQ(r.thresholds[0], 105.0f);
    EXPECT_DOUBLE_EQ(r.f1[0], 1.0);
    EXPECT_FLOAT_EQ(r.thresholds[1], 5.0f);
    EXPECT_FLOAT_EQ(r.thresholds[2], 5.0f);

    // Exhaustive re-sweep through the public pipeline: nothing on the grid
    // beats the tuned threshold.
    for (int c = 0; c < 3; ++c) {
        const GridF g = channel_grid(map, c);
        for (int tau = 0; tau <= 255; tau += 5) {
            std::vector<CellAnnotation> pred;
            for (const auto& cc :
                 extract_channel_centers(g, static_cast<float>(tau), 5,
                                         SeedSource::distance_transform))
                pred.push_back({cc.point.x, cc.point.y, static_cast<CellClass>(c), {}});
            std::vector<CellAnnotation> gt;
            for (const auto& a : anns)
                if (static_cast<int>(a.cls) == c) gt.push_back(a);
            const auto m = match_detections(gt, pred);
            const auto& cm = m.per_class[static_cast<std::size_t>(c)];
            EXPECT_LE(prf_from_counts(cm.tp, cm.fp, cm.fn).f1,
                      r.f1[static_cast<std::size_t>(c)] + 1e-12)
                << "class " << c << " tau " << tau;
        }
    }
}

TEST(Tune, OutputAlwaysOnTheGrid) {
    std::mt19937 rng(33);
    std::uniform_real_distribution<float> u(0.0f, 255.0f);
    Tensor noise = Tensor::zeros({3, 40, 40});
    for (auto& v : noise.data) v = u(rng);
    const std::vector<CellAnnotation> gt = {{10, 10, CellClass::immunopositive, {}},
                                            {30, 30, CellClass::lymphocyte, {}}};
    const TuneResult r = tune_thresholds({noise}, {gt});
    for (int c = 0; c < 3; ++c) {
        const float t = r.thresholds[static_cast<std::size_t>(c)];
        EXPECT_GE(t, 0.0f);
        EXPECT_LE(t, 255.0f);
        EXPECT_EQ(static_cast<int>(t) % 5, 0);
    }
    EXPECT_THROW(tune_thresholds({}, {}), std::invalid_argument);
    EXPECT_THROW(tune_thresholds({noise}, {}), std::invalid_argument);
}
