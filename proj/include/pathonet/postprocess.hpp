#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <queue>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "pathonet/annotations.hpp"
#include "pathonet/tensor.hpp"

namespace pathonet {

// Plain 2-d grids for the map-to-coordinates stages. Row-major, y first.
struct GridU8 {
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> v;

    GridU8() = default;
    GridU8(int h, int w) : height(h), width(w), v(static_cast<std::size_t>(h) * w, 0) {
        if (h <= 0 || w <= 0) throw std::invalid_argument("grid: non-positive dimensions");
    }
    std::uint8_t& at(int y, int x) { return v[static_cast<std::size_t>(y) * width + x]; }
    std::uint8_t at(int y, int x) const { return v[static_cast<std::size_t>(y) * width + x]; }
};

struct GridF {
    int height = 0;
    int width = 0;
    std::vector<float> v;

    GridF() = default;
    GridF(int h, int w) : height(h), width(w), v(static_cast<std::size_t>(h) * w, 0.0f) {
        if (h <= 0 || w <= 0) throw std::invalid_argument("grid: non-positive dimensions");
    }
    float& at(int y, int x) { return v[static_cast<std::size_t>(y) * width + x]; }
    float at(int y, int x) const { return v[static_cast<std::size_t>(y) * width + x]; }
};

inline GridF channel_grid(const Tensor& map, int ch) {
    if (map.rank() != 3) throw std::invalid_argument("grid: expected CxHxW tensor");
    if (ch < 0 || ch >= map.dim(0)) throw std::out_of_range("grid: channel index");
    GridF g(map.dim(1), map.dim(2));
    for (int y = 0; y < g.height; ++y)
        for (int x = 0; x < g.width; ++x) g.at(y, x) = map.at3(ch, y, x);
    return g;
}

struct PointXY {
    int x = 0;
    int y = 0;
    friend bool operator==(const PointXY& a, const PointXY& b) { return a.x == b.x && a.y == b.y; }
};

// Relief view of a grid: heights plus a region labeling. Labels 1..region_count
// name catchment regions; 0 is unlabeled, which after a full flood means a
// watershed boundary (or, for the seeded variant, unreached background).
struct Topography {
    GridF heights;
    std::vector<int> labels;
    int region_count = 0;

    int label_at(int y, int x) const {
        return labels[static_cast<std::size_t>(y) * heights.width + x];
    }
};

enum class SeedSource { distance_transform, density_map };

struct PostprocessConfig {
    std::array<float, 3> thresholds = {120.0f, 180.0f, 40.0f};
    int min_separation = 5;
    SeedSource seed_source = SeedSource::distance_transform;

    void validate() const {
        for (float t : thresholds)
            if (!(t >= 0.0f && t <= 255.0f))
                throw std::invalid_argument("postprocess: thresholds must lie in [0,255]");
        if (min_separation < 1)
            throw std::invalid_argument("postprocess: min_separation must be at least 1");
    }
};

inline GridU8 binarize(const GridF& g, float tau) {
    if (!(tau >= 0.0f && tau <= 255.0f))
        throw std::invalid_argument("binarize: threshold must lie in [0,255]");
    GridU8 out(g.height, g.width);
    for (std::size_t i = 0; i < g.v.size(); ++i) out.v[i] = g.v[i] >= tau ? 255 : 0;
    return out;
}

namespace detail {

// One pass of the exact squared-distance transform along a line of parabolas.
inline void edt_pass_1d(const std::vector<double>& f, std::vector<double>& d, int n,
                        std::vector<int>& hull_v, std::vector<double>& hull_z) {
    hull_v.resize(static_cast<std::size_t>(n));
    hull_z.resize(static_cast<std::size_t>(n) + 1);
    int k = 0;
    hull_v[0] = 0;
    hull_z[0] = -std::numeric_limits<double>::infinity();
    hull_z[1] = std::numeric_limits<double>::infinity();
    for (int q = 1; q < n; ++q) {
        double s;
        for (;;) {
            const int p = hull_v[static_cast<std::size_t>(k)];
            s = ((f[static_cast<std::size_t>(q)] + static_cast<double>(q) * q) -
                 (f[static_cast<std::size_t>(p)] + static_cast<double>(p) * p)) /
                (2.0 * q - 2.0 * p);
            if (s > hull_z[static_cast<std::size_t>(k)]) break;
            --k;
        }
        ++k;
        hull_v[static_cast<std::size_t>(k)] = q;
        hull_z[static_cast<std::size_t>(k)] = s;
        hull_z[static_cast<std::size_t>(k) + 1] = std::numeric_limits<double>::infinity();
    }
    k = 0;
    for (int q = 0; q < n; ++q) {
        while (hull_z[static_cast<std::size_t>(k) + 1] < q) ++k;
        const int p = hull_v[static_cast<std::size_t>(k)];
        d[static_cast<std::size_t>(q)] =
            static_cast<double>(q - p) * (q - p) + f[static_cast<std::size_t>(p)];
    }
}

// Large-but-finite stand-in for "no background anywhere on this line"; keeps
// the hull arithmetic free of inf-inf.
inline constexpr double kEdtFar = 1e20;

}  // namespace detail

// Exact Euclidean distance from each foreground pixel to the nearest
// background pixel; background maps to 0. A mask with no background at all
// yields +infinity everywhere.
inline GridF distance_transform(const GridU8& bin) {
    const int h = bin.height, w = bin.width;
    std::vector<double> work(static_cast<std::size_t>(h) * w);
    for (std::size_t i = 0; i < work.size(); ++i)
        work[i] = bin.v[i] ? detail::kEdtFar : 0.0;

    std::vector<double> line(static_cast<std::size_t>(std::max(h, w)));
    std::vector<double> out_line(line.size());
    std::vector<int> hull_v;
    std::vector<double> hull_z;
    for (int x = 0; x < w; ++x) {
        for (int y = 0; y < h; ++y) line[static_cast<std::size_t>(y)] = work[static_cast<std::size_t>(y) * w + x];
        detail::edt_pass_1d(line, out_line, h, hull_v, hull_z);
        for (int y = 0; y < h; ++y) work[static_cast<std::size_t>(y) * w + x] = out_line[static_cast<std::size_t>(y)];
    }
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) line[static_cast<std::size_t>(x)] = work[static_cast<std::size_t>(y) * w + x];
        detail::edt_pass_1d(line, out_line, w, hull_v, hull_z);
        for (int x = 0; x < w; ++x) work[static_cast<std::size_t>(y) * w + x] = out_line[static_cast<std::size_t>(x)];
    }

    GridF out(h, w);
    for (std::size_t i = 0; i < work.size(); ++i)
        out.v[i] = work[i] >= detail::kEdtFar / 2
                       ? std::numeric_limits<float>::infinity()
                       : static_cast<float>(std::sqrt(work[i]));
    return out;
}

// Strict-or-plateau maxima of the 8-neighborhood, each plateau collapsed to
// its (y, x)-smallest pixel, then greedy suppression so survivors keep at
// least min_separation distance. Candidates rank by (height desc, y, x). A
// plateau with no outside neighbor at all (a constant grid) yields nothing.
inline std::vector<PointXY> local_maxima(const GridF& g, int min_separation) {
    if (min_separation < 1) throw std::invalid_argument("maxima: separation must be at least 1");
    const int h = g.height, w = g.width;
    std::vector<char> seen(static_cast<std::size_t>(h) * w, 0);
    struct Candidate {
        float value;
        int y, x;
    };
    std::vector<Candidate> cands;
    std::vector<int> stack, plateau;
    for (int sy = 0; sy < h; ++sy) {
        for (int sx = 0; sx < w; ++sx) {
            const std::size_t si = static_cast<std::size_t>(sy) * w + sx;
            if (seen[si]) continue;
            const float value = g.v[si];
            stack.assign(1, static_cast<int>(si));
            seen[si] = 1;
            plateau.clear();
            bool is_max = true, has_outside = false;
            while (!stack.empty()) {
                const int cur = stack.back();
                stack.pop_back();
                plateau.push_back(cur);
                const int cy = cur / w, cx = cur % w;
                for (int dy = -1; dy <= 1; ++dy) {
                    for (int dx = -1; dx <= 1; ++dx) {
                        if (dy == 0 && dx == 0) continue;
                        const int ny = cy + dy, nx = cx + dx;
                        if (ny < 0 || ny >= h || nx < 0 || nx >= w) continue;
                        const std::size_t ni = static_cast<std::size_t>(ny) * w + nx;
                        if (g.v[ni] == value) {
                            if (!seen[ni]) {
                                seen[ni] = 1;
                                stack.push_back(static_cast<int>(ni));
                            }
                        } else {
                            has_outside = true;
                            if (g.v[ni] > value) is_max = false;
                        }
                    }
                }
            }
            if (is_max && has_outside) {
                int best = plateau[0];
                for (int p : plateau) best = std::min(best, p);
                cands.push_back({value, best / w, best % w});
            }
        }
    }
    std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
        return std::tie(b.value, a.y, a.x) < std::tie(a.value, b.y, b.x);
    });
    std::vector<PointXY> kept;
    const double sep2 = static_cast<double>(min_separation) * min_separation;
    for (const auto& c : cands) {
        bool ok = true;
        for (const auto& k : kept) {
            const double dy = c.y - k.y, dx = c.x - k.x;
            if (dy * dy + dx * dx < sep2) {
                ok = false;
                break;
            }
        }
        if (ok) kept.push_back({c.x, c.y});
    }
    return kept;
}

// Level-by-level flooding: walk intensity levels in ascending order; each
// connected group of new pixels joins the single region it touches, turns
// into boundary when it touches several, and founds a region when it touches
// none. Heights are rounded to whole levels first. 8-connectivity throughout.
inline Topography watershed_basic(const GridF& heights) {
    const int h = heights.height, w = heights.width;
    Topography topo;
    topo.heights = heights;
    topo.labels.assign(static_cast<std::size_t>(h) * w, 0);

    std::vector<std::pair<long long, int>> order(static_cast<std::size_t>(h) * w);
    for (std::size_t i = 0; i < order.size(); ++i) {
        if (!std::isfinite(heights.v[i]))
            throw std::invalid_argument("watershed: non-finite height");
        order[i] = {std::llround(static_cast<double>(heights.v[i])), static_cast<int>(i)};
    }
    std::sort(order.begin(), order.end());

    std::vector<char> in_level(static_cast<std::size_t>(h) * w, 0);
    std::vector<char> visited(static_cast<std::size_t>(h) * w, 0);
    std::vector<int> stack, group, level_px;
    std::size_t pos = 0;
    while (pos < order.size()) {
        const long long level = order[pos].first;
        level_px.clear();
        while (pos < order.size() && order[pos].first == level) {
            level_px.push_back(order[pos].second);
            in_level[static_cast<std::size_t>(order[pos].second)] = 1;
            ++pos;
        }
        for (int start : level_px) {
            if (visited[static_cast<std::size_t>(start)]) continue;
            stack.assign(1, start);
            visited[static_cast<std::size_t>(start)] = 1;
            group.clear();
            int adjacent_region = 0;
            bool several = false;
            while (!stack.empty()) {
                const int cur = stack.back();
                stack.pop_back();
                group.push_back(cur);
                const int cy = cur / w, cx = cur % w;
                for (int dy = -1; dy <= 1; ++dy) {
                    for (int dx = -1; dx <= 1; ++dx) {
                        if (dy == 0 && dx == 0) continue;
                        const int ny = cy + dy, nx = cx + dx;
                        if (ny < 0 || ny >= h || nx < 0 || nx >= w) continue;
                        const std::size_t ni = static_cast<std::size_t>(ny) * w + nx;
                        if (in_level[ni]) {
                            if (!visited[ni]) {
                                visited[ni] = 1;
                                stack.push_back(static_cast<int>(ni));
                            }
                        } else if (topo.labels[ni] > 0) {
                            if (adjacent_region == 0) {
                                adjacent_region = topo.labels[ni];
                            } else if (adjacent_region != topo.labels[ni]) {
                                several = true;
                            }
                        }
                    }
                }
            }
            int assign = 0;
            if (several) {
                assign = 0;  // watershed line
            } else if (adjacent_region > 0) {
                assign = adjacent_region;
            } else {
                assign = ++topo.region_count;
            }
            for (int p : group) topo.labels[static_cast<std::size_t>(p)] = assign;
        }
        for (int p : level_px) in_level[static_cast<std::size_t>(p)] = 0;
    }
    return topo;
}

// Priority flood from numbered seeds: pixels leave a min-heap in (height,
// insertion age) order and claim unlabeled in-mask neighbors for their
// region. mask == nullptr floods everything. Empty seed list is legal and
// returns the all-zero labeling.
inline Topography watershed_seeded(const GridF& heights, const std::vector<PointXY>& seeds,
                                   const GridU8* mask = nullptr) {
    const int h = heights.height, w = heights.width;
    if (mask && (mask->height != h || mask->width != w))
        throw std::invalid_argument("watershed: mask size mismatch");
    Topography topo;
    topo.heights = heights;
    topo.labels.assign(static_cast<std::size_t>(h) * w, 0);
    if (seeds.empty()) return topo;

    struct Entry {
        float height;
        long long age;
        int idx;
        bool operator>(const Entry& o) const {
            return std::tie(height, age) > std::tie(o.height, o.age);
        }
    };
    std::priority_queue<Entry, std::vector<Entry>, std::greater<Entry>> heap;
    long long age = 0;
    for (const auto& s : seeds) {
        if (s.x < 0 || s.x >= w || s.y < 0 || s.y >= h)
            throw std::invalid_argument("watershed: seed out of bounds");
        const std::size_t i = static_cast<std::size_t>(s.y) * w + s.x;
        if (mask && !mask->v[i]) throw std::invalid_argument("watershed: seed on background");
        if (topo.labels[i] != 0) throw std::invalid_argument("watershed: duplicate seed");
        topo.labels[i] = ++topo.region_count;
        heap.push({heights.v[i], age++, static_cast<int>(i)});
    }
    while (!heap.empty()) {
        const Entry e = heap.top();
        heap.pop();
        const int cy = e.idx / w, cx = e.idx % w;
        const int lab = topo.labels[static_cast<std::size_t>(e.idx)];
        for (int dy = -1; dy <= 1; ++dy) {
            for (int dx = -1; dx <= 1; ++dx) {
                if (dy == 0 && dx == 0) continue;
                const int ny = cy + dy, nx = cx + dx;
                if (ny < 0 || ny >= h || nx < 0 || nx >= w) continue;
                const std::size_t ni = static_cast<std::size_t>(ny) * w + nx;
                if (topo.labels[ni] != 0) continue;
                if (mask && !mask->v[ni]) continue;
                topo.labels[ni] = lab;
                heap.push({heights.v[ni], age++, static_cast<int>(ni)});
            }
        }
    }
    return topo;
}

struct ChannelCenter {
    PointXY point;
    float score = 0.0f;  // density value under the center
};

// One channel of the coordinate pipeline: threshold, exact distance
// transform, maxima as seeds, watershed over the negated distances, then one
// center per region at its deepest pixel (ties to the smallest (y, x)).
inline std::vector<ChannelCenter> extract_channel_centers(const GridF& density, float tau,
                                                          int min_separation, SeedSource src) {
    const GridU8 mask = binarize(density, tau);
    const GridF dist = distance_transform(mask);

    std::vector<PointXY> seeds;
    if (src == SeedSource::distance_transform) {
        seeds = local_maxima(dist, min_separation);
    } else {
        for (const auto& p : local_maxima(density, min_separation))
            if (mask.at(p.y, p.x)) seeds.push_back(p);
    }

    GridF negated = dist;
    for (auto& v : negated.v) v = -v;
    const Topography topo = watershed_seeded(negated, seeds, &mask);

    struct Best {
        float depth = -1.0f;
        int y = 0, x = 0;
    };
    std::vector<Best> best(static_cast<std::size_t>(topo.region_count));
    for (int y = 0; y < dist.height; ++y)
        for (int x = 0; x < dist.width; ++x) {
            const int lab = topo.label_at(y, x);
            if (lab <= 0) continue;
            Best& b = best[static_cast<std::size_t>(lab - 1)];
            if (dist.at(y, x) > b.depth) b = {dist.at(y, x), y, x};
        }
    std::vector<ChannelCenter> out;
    out.reserve(best.size());
    for (const auto& b : best) out.push_back({{b.x, b.y}, density.at(b.y, b.x)});
    return out;
}

// Density map to cell centers, channel by channel, each labeled with the
// channel's class and scored with the density value under the center.
inline std::vector<CellAnnotation> extract_cells(const Tensor& map,
                                                 const PostprocessConfig& cfg = {}) {
    cfg.validate();
    if (map.rank() != 3 || map.dim(0) != 3)
        throw std::invalid_argument("extract: expected a 3xHxW density map, got " + map.shape_str());
    std::vector<CellAnnotation> out;
    for (int ch = 0; ch < 3; ++ch) {
        const GridF density = channel_grid(map, ch);
        for (const auto& c : extract_channel_centers(
                 density, cfg.thresholds[static_cast<std::size_t>(ch)], cfg.min_separation,
                 cfg.seed_source)) {
            CellAnnotation a;
            a.x = c.point.x;
            a.y = c.point.y;
            a.cls = static_cast<CellClass>(ch);
            a.score = c.score;
            out.push_back(a);
        }
    }
    return out;
}

}  // namespace pathonet
