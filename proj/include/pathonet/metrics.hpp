#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "pathonet/annotations.hpp"

namespace pathonet {

struct MatchConfig {
    double radius = 6.0;  // two sigmas of the label Gaussian

    void validate() const {
        if (!(radius > 0.0)) throw std::invalid_argument("match: radius must be positive");
    }
};

struct MatchedPair {
    int gt_index = 0;    // index into the ground-truth list
    int pred_index = 0;  // index into the prediction list
    double distance = 0.0;
};

struct ClassMatch {
    int tp = 0;
    int fp = 0;
    int fn = 0;
    std::vector<MatchedPair> pairs;
};

struct MatchReport {
    std::array<ClassMatch, 3> per_class;
};

// Greedy nearest-pair matching, each class independently: candidate pairs
// closer than the radius are taken in (distance, gt index, pred index) order,
// each side usable once. Matched predictions are true positives, the rest
// false positives, unmatched ground truth false negatives.
inline MatchReport match_detections(const std::vector<CellAnnotation>& gt,
                                    const std::vector<CellAnnotation>& pred,
                                    const MatchConfig& cfg = {}) {
    cfg.validate();
    MatchReport report;
    for (int cls = 0; cls < 3; ++cls) {
        ClassMatch& cm = report.per_class[static_cast<std::size_t>(cls)];
        std::vector<int> gt_idx, pred_idx;
        for (std::size_t i = 0; i < gt.size(); ++i)
            if (static_cast<int>(gt[i].cls) == cls) gt_idx.push_back(static_cast<int>(i));
        for (std::size_t i = 0; i < pred.size(); ++i)
            if (static_cast<int>(pred[i].cls) == cls) pred_idx.push_back(static_cast<int>(i));

        struct Cand {
            double dist;
            int g, p;
        };
        std::vector<Cand> cands;
        for (int g : gt_idx)
            for (int p : pred_idx) {
                const double dx = gt[static_cast<std::size_t>(g)].x - pred[static_cast<std::size_t>(p)].x;
                const double dy = gt[static_cast<std::size_t>(g)].y - pred[static_cast<std::size_t>(p)].y;
                const double d = std::sqrt(dx * dx + dy * dy);
                if (d < cfg.radius) cands.push_back({d, g, p});
            }
        std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
            return std::tie(a.dist, a.g, a.p) < std::tie(b.dist, b.g, b.p);
        });
        std::vector<char> gt_used(gt.size(), 0), pred_used(pred.size(), 0);
        for (const auto& c : cands) {
            if (gt_used[static_cast<std::size_t>(c.g)] || pred_used[static_cast<std::size_t>(c.p)])
                continue;
            gt_used[static_cast<std::size_t>(c.g)] = 1;
            pred_used[static_cast<std::size_t>(c.p)] = 1;
            cm.pairs.push_back({c.g, c.p, c.dist});
        }
        cm.tp = static_cast<int>(cm.pairs.size());
        cm.fp = static_cast<int>(pred_idx.size()) - cm.tp;
        cm.fn = static_cast<int>(gt_idx.size()) - cm.tp;
    }
    return report;
}

struct Prf {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    bool degenerate = false;  // some denominator was empty; zeros substituted
};

inline Prf prf_from_counts(long long tp, long long fp, long long fn) {
    Prf r;
    if (tp + fp > 0) {
        r.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    } else {
        r.degenerate = true;
    }
    if (tp + fn > 0) {
        r.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
    } else {
        r.degenerate = true;
    }
    if (r.precision + r.recall > 0.0) {
        r.f1 = 2.0 * r.precision * r.recall / (r.precision + r.recall);
    } else {
        r.degenerate = true;
    }
    return r;
}

struct PrfReport {
    std::array<Prf, 3> per_class;
    Prf micro;  // pooled TP/FP/FN across the three classes
};

inline PrfReport compute_prf(const MatchReport& m) {
    PrfReport out;
    long long tp = 0, fp = 0, fn = 0;
    for (int c = 0; c < 3; ++c) {
        const auto& cm = m.per_class[static_cast<std::size_t>(c)];
        out.per_class[static_cast<std::size_t>(c)] = prf_from_counts(cm.tp, cm.fp, cm.fn);
        tp += cm.tp;
        fp += cm.fp;
        fn += cm.fn;
    }
    out.micro = prf_from_counts(tp, fp, fn);
    return out;
}

struct CellCounts {
    long long immunopositive = 0;
    long long immunonegative = 0;
    long long lymphocyte = 0;

    CellCounts& operator+=(const CellCounts& o) {
        immunopositive += o.immunopositive;
        immunonegative += o.immunonegative;
        lymphocyte += o.lymphocyte;
        return *this;
    }
};

inline CellCounts count_cells(const std::vector<CellAnnotation>& anns) {
    CellCounts c;
    for (const auto& a : anns) {
        switch (a.cls) {
            case CellClass::immunopositive: ++c.immunopositive; break;
            case CellClass::immunonegative: ++c.immunonegative; break;
            case CellClass::lymphocyte: ++c.lymphocyte; break;
        }
    }
    return c;
}

struct ScoreValue {
    double value = 0.0;
    bool degenerate = false;  // zero denominator; zero substituted
};

inline void check_counts(const CellCounts& c) {
    if (c.immunopositive < 0 || c.immunonegative < 0 || c.lymphocyte < 0)
        throw std::invalid_argument("score: negative cell count");
}

// Fraction of stained tumor cells among all tumor cells.
inline ScoreValue ki67_score(const CellCounts& c) {
    check_counts(c);
    const long long denom = c.immunopositive + c.immunonegative;
    if (denom == 0) return {0.0, true};
    return {static_cast<double>(c.immunopositive) / static_cast<double>(denom), false};
}

// Fraction of lymphocytes among all counted cells.
inline ScoreValue til_score(const CellCounts& c) {
    check_counts(c);
    const long long denom = c.lymphocyte + c.immunopositive + c.immunonegative;
    if (denom == 0) return {0.0, true};
    return {static_cast<double>(c.lymphocyte) / static_cast<double>(denom), false};
}

enum class Ki67Band { low, average, high };
enum class TilBand { low, mid, high };

inline const char* to_string(Ki67Band b) {
    switch (b) {
        case Ki67Band::low: return "low";
        case Ki67Band::average: return "average";
        case Ki67Band::high: return "high";
    }
    throw std::invalid_argument("band: bad value");
}

inline const char* to_string(TilBand b) {
    switch (b) {
        case TilBand::low: return "low";
        case TilBand::mid: return "mid";
        case TilBand::high: return "high";
    }
    throw std::invalid_argument("band: bad value");
}

// Proliferation bands: [0, 0.16) low, [0.16, 0.30] average, (0.30, 1] high.
inline Ki67Band ki67_band(double score) {
    if (!(score >= 0.0 && score <= 1.0)) throw std::invalid_argument("band: score outside [0,1]");
    if (score < 0.16) return Ki67Band::low;
    if (score <= 0.30) return Ki67Band::average;
    return Ki67Band::high;
}

// Lymphocyte-infiltration bands: [0, 0.10] low, (0.10, 0.40) mid, [0.40, 1] high.
inline TilBand til_band(double score) {
    if (!(score >= 0.0 && score <= 1.0)) throw std::invalid_argument("band: score outside [0,1]");
    if (score <= 0.10) return TilBand::low;
    if (score < 0.40) return TilBand::mid;
    return TilBand::high;
}

struct ScoreReport {
    ScoreValue ki67;
    ScoreValue til;
    Ki67Band ki67_band = Ki67Band::low;
    TilBand til_band = TilBand::low;
};

inline ScoreReport score_counts(const CellCounts& c) {
    ScoreReport r;
    r.ki67 = ki67_score(c);
    r.til = til_score(c);
    r.ki67_band = ki67_band(r.ki67.value);
    r.til_band = til_band(r.til.value);
    return r;
}

inline double rmse_scores(const std::vector<double>& predicted, const std::vector<double>& truth) {
    if (predicted.size() != truth.size())
        throw std::invalid_argument("rmse: length mismatch");
    if (predicted.empty()) throw std::invalid_argument("rmse: empty lists");
    double acc = 0.0;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        const double d = predicted[i] - truth[i];
        acc += d * d;
    }
    return std::sqrt(acc / static_cast<double>(predicted.size()));
}

struct PatientScore {
    std::string patient;
    CellCounts predicted_counts;
    CellCounts truth_counts;
    ScoreReport predicted;
    ScoreReport truth;
};

struct PatientAggregate {
    std::vector<PatientScore> patients;  // first-appearance order
    double ki67_band_accuracy = 0.0;
    double til_band_accuracy = 0.0;
};

// Per-image counts pooled by patient before any scoring, then band agreement
// measured patient by patient.
inline PatientAggregate aggregate_patient(const std::vector<std::string>& image_patient,
                                          const std::vector<CellCounts>& predicted,
                                          const std::vector<CellCounts>& truth) {
    if (image_patient.size() != predicted.size() || image_patient.size() != truth.size())
        throw std::invalid_argument("aggregate: parallel lists must have equal length");
    std::vector<std::string> order;
    std::map<std::string, std::pair<CellCounts, CellCounts>> pooled;
    for (std::size_t i = 0; i < image_patient.size(); ++i) {
        const std::string& p = image_patient[i];
        if (p.empty())
            throw std::runtime_error("aggregate: image " + std::to_string(i) + " has no patient");
        auto [it, fresh] = pooled.try_emplace(p);
        if (fresh) order.push_back(p);
        it->second.first += predicted[i];
        it->second.second += truth[i];
    }
    PatientAggregate out;
    int ki67_hits = 0, til_hits = 0;
    for (const auto& p : order) {
        const auto& [pc, tc] = pooled.at(p);
        PatientScore ps;
        ps.patient = p;
        ps.predicted_counts = pc;
        ps.truth_counts = tc;
        ps.predicted = score_counts(pc);
        ps.truth = score_counts(tc);
        if (ps.predicted.ki67_band == ps.truth.ki67_band) ++ki67_hits;
        if (ps.predicted.til_band == ps.truth.til_band) ++til_hits;
        out.patients.push_back(std::move(ps));
    }
    if (!out.patients.empty()) {
        out.ki67_band_accuracy = static_cast<double>(ki67_hits) / static_cast<double>(out.patients.size());
        out.til_band_accuracy = static_cast<double>(til_hits) / static_cast<double>(out.patients.size());
    }
    return out;
}

}  // namespace pathonet
