#pragma once

#include <array>
#include <stdexcept>
#include <vector>

#include "pathonet/metrics.hpp"
#include "pathonet/postprocess.hpp"
#include "pathonet/tensor.hpp"

namespace pathonet {

struct TuneResult {
    std::array<float, 3> thresholds = {0.0f, 0.0f, 0.0f};
    std::array<double, 3> f1 = {0.0, 0.0, 0.0};
};

// Sweeps the binarization threshold over {0, 5, ..., 255} for each class
// independently and keeps the value with the best detection F1 against the
// reference annotations; ties go to the lowest threshold.
inline TuneResult tune_thresholds(const std::vector<Tensor>& predicted_maps,
                                  const std::vector<std::vector<CellAnnotation>>& truth,
                                  const MatchConfig& mcfg = {},
                                  const PostprocessConfig& base = {}) {
    if (predicted_maps.empty()) throw std::invalid_argument("tune: empty validation set");
    if (predicted_maps.size() != truth.size())
        throw std::invalid_argument("tune: map/annotation count mismatch");
    mcfg.validate();
    base.validate();

    std::vector<std::array<GridF, 3>> channels;
    channels.reserve(predicted_maps.size());
    for (const auto& m : predicted_maps) {
        if (m.rank() != 3 || m.dim(0) != 3)
            throw std::invalid_argument("tune: expected 3xHxW maps, got " + m.shape_str());
        channels.push_back({channel_grid(m, 0), channel_grid(m, 1), channel_grid(m, 2)});
    }

    TuneResult result;
    for (int cls = 0; cls < 3; ++cls) {
        double best_f1 = -1.0;
        float best_tau = 0.0f;
        for (int tau = 0; tau <= 255; tau += 5) {
            long long tp = 0, fp = 0, fn = 0;
            for (std::size_t i = 0; i < channels.size(); ++i) {
                std::vector<CellAnnotation> pred;
                for (const auto& c : extract_channel_centers(
                         channels[i][static_cast<std::size_t>(cls)], static_cast<float>(tau),
                         base.min_separation, base.seed_source))
                    pred.push_back({c.point.x, c.point.y, static_cast<CellClass>(cls), c.score});
                std::vector<CellAnnotation> gt;
                for (const auto& a : truth[i])
                    if (static_cast<int>(a.cls) == cls) gt.push_back(a);
                const MatchReport m = match_detections(gt, pred, mcfg);
                const auto& cm = m.per_class[static_cast<std::size_t>(cls)];
                tp += cm.tp;
                fp += cm.fp;
                fn += cm.fn;
            }
            const double f1 = prf_from_counts(tp, fp, fn).f1;
            if (f1 > best_f1) {
                best_f1 = f1;
                best_tau = static_cast<float>(tau);
            }
        }
        result.thresholds[static_cast<std::size_t>(cls)] = best_tau;
        result.f1[static_cast<std::size_t>(cls)] = best_f1;
    }
    return result;
}

}  // namespace pathonet
